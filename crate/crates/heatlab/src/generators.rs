//! Graph families used as test beds: boxes in `Z^d`, the Sierpinski
//! pre-gasket, the Vicsek tree, and a gluing combinator for inhomogeneous
//! hybrids.
//!
//! Every generator marks the vertices where the infinite structure was
//! truncated, so [`WeightedGraph::depth`](crate::graph::WeightedGraph::depth)
//! reports how far a measurement may reach before it sees the cut:
//!
//! * lattice: the faces of the box;
//! * gasket: the two far corners (the graph is the ball around the apex
//!   of the one-sided infinite gasket);
//! * vicsek: the four extreme tips.
//!
//! All weights are uniform (1 by default). Labels are coordinate strings,
//! and each family exposes named anchor vertices (`center`, `apex`, ...).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};

/// Largest accepted fractal level. `5^8` vertices is already generous.
pub const LEVEL_CAP: u32 = 8;

/// Serializable recipe for a generated graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamilySpec {
    Lattice {
        dim: u32,
        side: u32,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    Gasket {
        level: u32,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    Vicsek {
        level: u32,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// Disjoint union of two recipes with one vertex of each identified.
    /// The junction vertices are named by anchor.
    Glue {
        a: Box<GraphFamilySpec>,
        b: Box<GraphFamilySpec>,
        anchor_a: String,
        anchor_b: String,
    },
}

fn default_weight() -> f64 {
    1.0
}

impl GraphFamilySpec {
    pub fn build(&self) -> Result<WeightedGraph> {
        match self {
            GraphFamilySpec::Lattice { dim, side, weight } => lattice(*dim, *side, *weight),
            GraphFamilySpec::Gasket { level, weight } => sierpinski_gasket(*level, *weight),
            GraphFamilySpec::Vicsek { level, weight } => vicsek_tree(*level, *weight),
            GraphFamilySpec::Glue { a, b, anchor_a, anchor_b } => {
                let ga = a.build()?;
                let gb = b.build()?;
                let xa = *ga.anchors().get(anchor_a).ok_or_else(|| Error::Parse {
                    context: "glue".into(),
                    what: format!("anchor '{anchor_a}' not present in first part"),
                })?;
                let xb = *gb.anchors().get(anchor_b).ok_or_else(|| Error::Parse {
                    context: "glue".into(),
                    what: format!("anchor '{anchor_b}' not present in second part"),
                })?;
                glue(&ga, &gb, xa, xb)
            }
        }
    }
}

/// Box `{0,...,side-1}^dim` with nearest-neighbor edges.
///
/// `dim` must be 1, 2, or 3 and `side` odd and at least 5 so the box has
/// a well-defined center with some interior room.
pub fn lattice(dim: u32, side: u32, weight: f64) -> Result<WeightedGraph> {
    if !(1..=3).contains(&dim) {
        return Err(Error::ShapeMismatch { what: format!("lattice dimension {dim}, expected 1..=3") });
    }
    if side < 5 {
        return Err(Error::SizeTooSmall { what: "lattice side".into(), value: side as u64, min: 5 });
    }
    if side % 2 == 0 {
        return Err(Error::SizeTooSmall {
            what: "lattice side (must be odd for a central vertex)".into(),
            value: side as u64,
            min: side as u64 + 1,
        });
    }
    let s = side as usize;
    let n: usize = s.pow(dim);
    let coord = |id: usize| -> [usize; 3] {
        [id % s, (id / s) % s, (id / (s * s)) % s]
    };
    let mut edges = Vec::new();
    for id in 0..n {
        let c = coord(id);
        for axis in 0..dim as usize {
            if c[axis] + 1 < s {
                edges.push((id, id + s.pow(axis as u32), weight));
            }
        }
    }
    let labels: Vec<String> = (0..n)
        .map(|id| {
            let c = coord(id);
            match dim {
                1 => format!("({})", c[0]),
                2 => format!("({},{})", c[0], c[1]),
                _ => format!("({},{},{})", c[0], c[1], c[2]),
            }
        })
        .collect();
    let mid = s / 2;
    let center = mid + mid * s * (dim >= 2) as usize + mid * s * s * (dim >= 3) as usize;
    let anchors: BTreeMap<String, Vertex> = [("center".to_string(), center)].into();
    let truncation: Vec<Vertex> = (0..n)
        .filter(|&id| {
            let c = coord(id);
            (0..dim as usize).any(|a| c[a] == 0 || c[a] == s - 1)
        })
        .collect();
    WeightedGraph::from_parts(&edges, labels, anchors, truncation)
}

/// Sierpinski pre-gasket at the given subdivision level.
///
/// Level `n` has `3(3^n + 1)/2` vertices and `3^(n+1)` edges. The apex
/// `(0,0)` is a faithful center of the one-sided infinite gasket out to
/// distance `2^n`; the two far corners are the truncation locus.
pub fn sierpinski_gasket(level: u32, weight: f64) -> Result<WeightedGraph> {
    if level == 0 {
        return Err(Error::SizeTooSmall { what: "gasket level".into(), value: 0, min: 1 });
    }
    if level > LEVEL_CAP {
        return Err(Error::LevelTooLarge { level, cap: LEVEL_CAP });
    }
    let span = 1i64 << level;
    type P = (i64, i64);
    let mid = |a: P, b: P| -> P { ((a.0 + b.0) / 2, (a.1 + b.1) / 2) };
    let mut triangles: Vec<[P; 3]> = vec![[(0, 0), (span, 0), (0, span)]];
    for _ in 0..level {
        let mut next = Vec::with_capacity(triangles.len() * 3);
        for [p, q, r] in triangles {
            let (mpq, mpr, mqr) = (mid(p, q), mid(p, r), mid(q, r));
            next.push([p, mpq, mpr]);
            next.push([mpq, q, mqr]);
            next.push([mpr, mqr, r]);
        }
        triangles = next;
    }
    let mut edge_set: BTreeSet<(P, P)> = BTreeSet::new();
    for t in &triangles {
        for (a, b) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            edge_set.insert((a.min(b), a.max(b)));
        }
    }
    let mut coords: BTreeSet<P> = BTreeSet::new();
    for &(a, b) in &edge_set {
        coords.insert(a);
        coords.insert(b);
    }
    let index: BTreeMap<P, Vertex> =
        coords.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let edges: Vec<_> =
        edge_set.iter().map(|&(a, b)| (index[&a], index[&b], weight)).collect();
    let labels: Vec<String> = coords.iter().map(|p| format!("({},{})", p.0, p.1)).collect();
    let anchors: BTreeMap<String, Vertex> = [
        ("apex".to_string(), index[&(0, 0)]),
        ("corner1".to_string(), index[&(span, 0)]),
        ("corner2".to_string(), index[&(0, span)]),
    ]
    .into();
    let truncation = vec![index[&(span, 0)], index[&(0, span)]];
    WeightedGraph::from_parts(&edges, labels, anchors, truncation)
}

/// Vicsek tree at the given level: five copies of the previous level in a
/// plus arrangement joined by unit bridge edges. Level `n` has `5^n`
/// vertices and is a tree. The center is a faithful center of the
/// infinite Vicsek tree out to the arm length `(3^n - 1)/2`.
pub fn vicsek_tree(level: u32, weight: f64) -> Result<WeightedGraph> {
    if level == 0 {
        return Err(Error::SizeTooSmall { what: "vicsek level".into(), value: 0, min: 1 });
    }
    if level > LEVEL_CAP {
        return Err(Error::LevelTooLarge { level, cap: LEVEL_CAP });
    }
    type P = (i64, i64);
    let mut verts: Vec<P> = vec![(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut edge_list: Vec<(P, P)> =
        vec![((0, 0), (1, 0)), ((0, 0), (-1, 0)), ((0, 0), (0, 1)), ((0, 0), (0, -1))];
    let mut arm = 1i64;
    for _ in 1..level {
        let offset = 2 * arm + 1;
        let shifts = [(0, 0), (offset, 0), (-offset, 0), (0, offset), (0, -offset)];
        let mut next_verts = Vec::with_capacity(verts.len() * 5);
        let mut next_edges = Vec::with_capacity(edge_list.len() * 5 + 4);
        for &(dx, dy) in &shifts {
            next_verts.extend(verts.iter().map(|&(x, y)| (x + dx, y + dy)));
            next_edges.extend(
                edge_list.iter().map(|&(a, b)| ((a.0 + dx, a.1 + dy), (b.0 + dx, b.1 + dy))),
            );
        }
        // Bridges between the center copy's tips and the outer copies.
        next_edges.push(((arm, 0), (arm + 1, 0)));
        next_edges.push(((-arm, 0), (-arm - 1, 0)));
        next_edges.push(((0, arm), (0, arm + 1)));
        next_edges.push(((0, -arm), (0, -arm - 1)));
        verts = next_verts;
        edge_list = next_edges;
        arm = 3 * arm + 1;
    }
    let coords: BTreeSet<P> = verts.into_iter().collect();
    let index: BTreeMap<P, Vertex> =
        coords.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let edges: Vec<_> = edge_list.iter().map(|&(a, b)| (index[&a], index[&b], weight)).collect();
    let labels: Vec<String> = coords.iter().map(|p| format!("({},{})", p.0, p.1)).collect();
    let anchors: BTreeMap<String, Vertex> = [
        ("center".to_string(), index[&(0, 0)]),
        ("tip_e".to_string(), index[&(arm, 0)]),
        ("tip_w".to_string(), index[&(-arm, 0)]),
        ("tip_n".to_string(), index[&(0, arm)]),
        ("tip_s".to_string(), index[&(0, -arm)]),
    ]
    .into();
    let truncation = vec![
        index[&(arm, 0)],
        index[&(-arm, 0)],
        index[&(0, arm)],
        index[&(0, -arm)],
    ];
    WeightedGraph::from_parts(&edges, labels, anchors, truncation)
}

/// Disjoint union of `a` and `b` with `xa` and `xb` identified.
///
/// The inputs are always treated as disjoint copies, so passing the same
/// graph twice glues two copies of it rather than folding one onto
/// itself. The junction vertex keeps id `xa`; its measure is the sum of
/// the two incident weight sums. Labels and anchors carry `a:`/`b:`
/// prefixes, and truncation marks are inherited from both parts.
pub fn glue(a: &WeightedGraph, b: &WeightedGraph, xa: Vertex, xb: Vertex) -> Result<WeightedGraph> {
    a.check_vertex(xa)?;
    b.check_vertex(xb)?;
    let na = a.vertex_count();
    let map_b = |v: Vertex| -> Vertex {
        if v == xb {
            xa
        } else if v < xb {
            na + v
        } else {
            na + v - 1
        }
    };
    let mut edges: Vec<(Vertex, Vertex, f64)> = a.edges().collect();
    edges.extend(b.edges().map(|(u, v, w)| (map_b(u), map_b(v), w)));
    let n = na + b.vertex_count() - 1;
    let mut labels = vec![String::new(); n];
    for v in 0..na {
        labels[v] = format!("a:{}", a.label(v));
    }
    for v in 0..b.vertex_count() {
        if v != xb {
            labels[map_b(v)] = format!("b:{}", b.label(v));
        }
    }
    let mut anchors = BTreeMap::new();
    for (name, &v) in a.anchors() {
        anchors.insert(format!("a:{name}"), v);
    }
    for (name, &v) in b.anchors() {
        anchors.insert(format!("b:{name}"), map_b(v));
    }
    anchors.insert("junction".to_string(), xa);
    let mut truncation: Vec<Vertex> = a.truncation().to_vec();
    truncation.extend(b.truncation().iter().map(|&v| map_b(v)));
    WeightedGraph::from_parts(&edges, labels, anchors, truncation)
}

//! Weighted graphs and their basic metric structure.
//!
//! A [`WeightedGraph`] is a finite connected graph with strictly positive
//! symmetric edge weights `w(x,y)` and the induced vertex measure
//! `mu(x) = sum_y w(x,y)`. All distances are shortest-path hop counts and
//! all radii are integers. The open ball `B(x,R)` is the set of vertices
//! with `d(x,y) < R`, so `B(x,1) = {x}`.
//!
//! Graphs built by the generators carry a set of *truncation* vertices:
//! the locus where an infinite structure was cut to fit in memory. The
//! per-vertex distance to that locus ([`WeightedGraph::depth`]) lets
//! callers restrict measurements to regions where the finite graph agrees
//! with the infinite one.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Depth assigned when a graph has no truncation marks.
pub const UNTRUNCATED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<Vertex>,
    weights: Vec<f64>,
    measure: Vec<f64>,
    labels: Vec<String>,
    anchors: BTreeMap<String, Vertex>,
    truncation: Vec<Vertex>,
    depth: Vec<u32>,
}

impl WeightedGraph {
    /// Builds a graph from an undirected edge list. Vertex ids must be
    /// dense: the vertex count is `max id + 1`.
    ///
    /// Rejects non-positive or non-finite weights, self-loops, duplicate
    /// edges with conflicting weights, and disconnected graphs. A pair
    /// listed twice with the same weight collapses to a single edge.
    pub fn from_edges(edges: &[(Vertex, Vertex, f64)]) -> Result<Self> {
        Self::from_parts(edges, Vec::new(), BTreeMap::new(), Vec::new())
    }

    /// As [`from_edges`](Self::from_edges), with vertex labels, named
    /// anchor vertices, and truncation marks attached.
    pub fn from_parts(
        edges: &[(Vertex, Vertex, f64)],
        labels: Vec<String>,
        anchors: BTreeMap<String, Vertex>,
        truncation: Vec<Vertex>,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyVertexSet { what: "edge list".into() });
        }
        let mut n = 0;
        for &(u, v, w) in edges {
            if u == v {
                return Err(Error::SelfLoop { v });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { u, v, w });
            }
            n = n.max(u + 1).max(v + 1);
        }

        // Deduplicate on the normalized pair; equal weights merge, unequal conflict.
        let mut dedup: BTreeMap<(Vertex, Vertex), f64> = BTreeMap::new();
        for &(u, v, w) in edges {
            let key = (u.min(v), u.max(v));
            match dedup.get(&key) {
                None => {
                    dedup.insert(key, w);
                }
                Some(&prev) if prev == w => {}
                Some(&prev) => {
                    return Err(Error::ConflictingDuplicateEdge {
                        u: key.0,
                        v: key.1,
                        w1: prev,
                        w2: w,
                    });
                }
            }
        }

        let mut degree = vec![0usize; n];
        for (&(u, v), _) in &dedup {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0f64; offsets[n]];
        let mut cursor = offsets.clone();
        for (&(u, v), &w) in &dedup {
            neighbors[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }

        let measure: Vec<f64> =
            (0..n).map(|v| weights[offsets[v]..offsets[v + 1]].iter().sum()).collect();
        if let Some(v) = measure.iter().position(|&m| m <= 0.0) {
            // Only possible via an isolated vertex id gap.
            return Err(Error::DisconnectedGraph { reached: 0, total: n.max(v) });
        }

        if !labels.is_empty() && labels.len() != n {
            return Err(Error::ShapeMismatch {
                what: format!("{} labels for {} vertices", labels.len(), n),
            });
        }
        for (&v, name) in anchors.values().zip(anchors.keys()) {
            if v >= n {
                return Err(Error::Parse {
                    context: format!("anchor {name}"),
                    what: format!("vertex {v} out of range"),
                });
            }
        }
        for &v in &truncation {
            if v >= n {
                return Err(Error::VertexOutOfRange { v, n });
            }
        }

        let mut g = WeightedGraph {
            offsets,
            neighbors,
            weights,
            measure,
            labels,
            anchors,
            truncation,
            depth: Vec::new(),
        };

        let reached = g.bfs_reach(0);
        if reached != n {
            return Err(Error::DisconnectedGraph { reached, total: n });
        }
        g.truncation.sort_unstable();
        g.truncation.dedup();
        g.depth = g.compute_depth();
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.measure.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Neighbors of `v` with their edge weights.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Vertex measure `mu(v)`, the sum of incident edge weights.
    pub fn measure(&self, v: Vertex) -> f64 {
        self.measure[v]
    }

    /// All undirected edges, each reported once with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, w)| (u, v, w))
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: Vertex) -> String {
        if self.labels.is_empty() {
            v.to_string()
        } else {
            self.labels[v].clone()
        }
    }

    pub fn anchors(&self) -> &BTreeMap<String, Vertex> {
        &self.anchors
    }

    pub fn truncation(&self) -> &[Vertex] {
        &self.truncation
    }

    /// Distance from `v` to the truncation locus, or [`UNTRUNCATED`] when
    /// the graph carries no marks. A measurement whose geometry stays
    /// within `depth(v)` hops of `v` sees no cut edge.
    pub fn depth(&self, v: Vertex) -> u32 {
        self.depth[v]
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { v, n: self.vertex_count() })
        }
    }

    /// Uniform lower bound on one-step transition probabilities:
    /// `min over edges of w(x,y)/mu(x)`.
    pub fn check_p0(&self) -> f64 {
        let mut p0 = f64::INFINITY;
        for v in 0..self.vertex_count() {
            for (_, w) in self.neighbors(v) {
                p0 = p0.min(w / self.measure[v]);
            }
        }
        p0
    }

    /// BFS distances from `x` to every vertex.
    pub fn distances(&self, x: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[x] = 0;
        queue.push_back(x);
        while let Some(v) = queue.pop_front() {
            for (u, _) in self.neighbors(v) {
                if dist[u] == u32::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Open ball `B(x,R) = { y : d(x,y) < R }`. `R = 0` gives the empty set.
    pub fn ball(&self, x: Vertex, radius: u32) -> Result<VertexSet> {
        self.check_vertex(x)?;
        if radius == 0 {
            return Ok(VertexSet {
                ids: Vec::new(),
                tag: SetTag::Ball { center: x, radius: 0 },
            });
        }
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        let mut ids = vec![x];
        dist[x] = 0;
        queue.push_back(x);
        while let Some(v) = queue.pop_front() {
            if dist[v] + 1 >= radius {
                continue;
            }
            for (u, _) in self.neighbors(v) {
                if dist[u] == u32::MAX {
                    dist[u] = dist[v] + 1;
                    ids.push(u);
                    queue.push_back(u);
                }
            }
        }
        ids.sort_unstable();
        Ok(VertexSet { ids, tag: SetTag::Ball { center: x, radius } })
    }

    /// Ball volume `V(x,R) = mu(B(x,R))`.
    pub fn volume(&self, x: Vertex, radius: u32) -> Result<f64> {
        let ball = self.ball(x, radius)?;
        Ok(ball.ids.iter().map(|&v| self.measure[v]).sum())
    }

    /// Annulus volume `v(x,r,R) = V(x,R) - V(x,r)`, computed as the exact
    /// difference of the two ball volumes.
    pub fn annulus_volume(&self, x: Vertex, r: u32, radius: u32) -> Result<f64> {
        if r >= radius {
            return Err(Error::RadiusOrderViolation { r, outer: radius });
        }
        Ok(self.volume(x, radius)? - self.volume(x, r)?)
    }

    /// Closure `A ∪ N(A)` and boundary `∂A = closure \ A`.
    pub fn closure_and_boundary(&self, set: &VertexSet) -> (VertexSet, VertexSet) {
        let mut in_set = vec![false; self.vertex_count()];
        for &v in set.iter() {
            in_set[v] = true;
        }
        let mut boundary = Vec::new();
        let mut seen = vec![false; self.vertex_count()];
        for &v in set.iter() {
            for (u, _) in self.neighbors(v) {
                if !in_set[u] && !seen[u] {
                    seen[u] = true;
                    boundary.push(u);
                }
            }
        }
        boundary.sort_unstable();
        let mut closure = set.ids.clone();
        closure.extend_from_slice(&boundary);
        closure.sort_unstable();
        (
            VertexSet { ids: closure, tag: SetTag::Closure },
            VertexSet { ids: boundary, tag: SetTag::Boundary },
        )
    }

    /// Complement of `set` as a custom vertex set.
    pub fn complement(&self, set: &VertexSet) -> VertexSet {
        let bitmap = set.bitmap(self.vertex_count());
        let ids = (0..self.vertex_count()).filter(|&v| !bitmap[v]).collect();
        VertexSet { ids, tag: SetTag::Custom }
    }

    fn bfs_reach(&self, start: Vertex) -> usize {
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for (u, _) in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count
    }

    fn compute_depth(&self) -> Vec<u32> {
        if self.truncation.is_empty() {
            return vec![UNTRUNCATED; self.vertex_count()];
        }
        let mut depth = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        for &v in &self.truncation {
            depth[v] = 0;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for (u, _) in self.neighbors(v) {
                if depth[u] == u32::MAX {
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        depth
    }
}

/// Provenance of a vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetTag {
    Ball { center: Vertex, radius: u32 },
    Annulus { center: Vertex, inner: u32, outer: u32 },
    Closure,
    Boundary,
    Custom,
}

/// A sorted set of vertex ids with a provenance tag.
#[derive(Debug, Clone)]
pub struct VertexSet {
    ids: Vec<Vertex>,
    tag: SetTag,
}

impl VertexSet {
    /// Builds a custom set; ids are sorted and must be distinct.
    pub fn new(mut ids: Vec<Vertex>) -> Result<Self> {
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::ShapeMismatch { what: "duplicate vertex id in set".into() });
        }
        Ok(VertexSet { ids, tag: SetTag::Custom })
    }

    pub fn tag(&self) -> &SetTag {
        &self.tag
    }

    pub fn ids(&self) -> &[Vertex] {
        &self.ids
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vertex> {
        self.ids.iter()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.ids.binary_search(&v).is_ok()
    }

    pub fn bitmap(&self, n: usize) -> Vec<bool> {
        let mut map = vec![false; n];
        for &v in &self.ids {
            map[v] = true;
        }
        map
    }

    /// Position of `v` in the sorted id list.
    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.ids.binary_search(&v).ok()
    }
}

//! Shared verifier plumbing: center selection, exit-time caching, and
//! deterministic parallel cell maps.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::potential::mean_exit_time;

/// Interior centers for measurements of geometric reach `reach`:
/// vertices at least that deep inside the marked truncation frontier.
/// Anchored vertices come first, then an even stride over the rest, so
/// the selection is deterministic and spread out.
pub fn interior_centers(g: &WeightedGraph, reach: u32, limit: usize) -> Vec<Vertex> {
    let mut picked: Vec<Vertex> = Vec::new();
    for (_, &v) in g.anchors() {
        if g.depth(v) >= reach && !picked.contains(&v) {
            picked.push(v);
        }
    }
    let eligible: Vec<Vertex> =
        (0..g.vertex_count()).filter(|&v| g.depth(v) >= reach && !picked.contains(&v)).collect();
    if picked.len() < limit && !eligible.is_empty() {
        let want = limit - picked.len();
        let stride = (eligible.len() / want).max(1);
        picked.extend(eligible.iter().step_by(stride).take(want).copied());
    }
    picked.truncate(limit);
    picked.sort_unstable();
    picked
}

/// Deterministic subsample of a vertex set: an even stride over the
/// sorted ids, always including the first.
pub(crate) fn subsample(set: &VertexSet, count: usize) -> Vec<Vertex> {
    let ids = set.ids();
    if ids.is_empty() || count == 0 {
        return Vec::new();
    }
    let stride = (ids.len() / count).max(1);
    ids.iter().step_by(stride).take(count).copied().collect()
}

/// Memoized mean exit times `E(x, R)`; verifiers hit the same cells
/// repeatedly across radii and witnesses.
pub(crate) struct ExitCache {
    map: Mutex<HashMap<(Vertex, u32), f64>>,
}

impl ExitCache {
    pub fn new() -> ExitCache {
        ExitCache { map: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, g: &WeightedGraph, x: Vertex, radius: u32) -> Result<f64> {
        if let Some(&v) = self.map.lock().expect("exit cache lock").get(&(x, radius)) {
            return Ok(v);
        }
        let v = mean_exit_time(g, x, radius)?.at_center();
        self.map.lock().expect("exit cache lock").insert((x, radius), v);
        Ok(v)
    }

    /// Smallest dense radius with `E(x, R) >= n`, extending the cache
    /// as needed. The dense scan keeps the inverse exact.
    pub fn inverse(&self, g: &WeightedGraph, x: Vertex, n: f64) -> Result<u32> {
        for radius in 1.. {
            if g.depth(x) < radius {
                return Err(Error::OutOfTabulatedRange {
                    n,
                    max: if radius > 1 { self.get(g, x, radius - 1)? } else { 0.0 },
                });
            }
            if self.get(g, x, radius)? >= n {
                return Ok(radius);
            }
        }
        unreachable!("exit times are unbounded in the radius")
    }
}

/// Maps a cell list in parallel, preserving order; the reduction the
/// caller performs afterwards is sequential, so results do not depend
/// on thread count.
pub(crate) fn map_cells<C, T, F>(cells: Vec<C>, f: F) -> Result<Vec<T>>
where
    C: Send,
    T: Send,
    F: Fn(C) -> Result<T> + Sync + Send,
{
    cells.into_par_iter().map(f).collect()
}

/// Fails a scan that found no admissible cells instead of returning a
/// vacuous report.
pub(crate) fn require_cells<T>(cells: &[T], what: &str) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::InsufficientGrid { what: what.to_string() });
    }
    Ok(())
}

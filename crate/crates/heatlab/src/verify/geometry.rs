//! Verifiers built from volumes, exit times, resistances, and spectra.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::{annulus_resistance, smallest_eigenvalue};
use crate::verify::support::{interior_centers, map_cells, require_cells, subsample, ExitCache};
use crate::verify::{verdict_for_curve, ConditionReport, CurvePoint, VerifierConfig, Witness};

/// Volume doubling: `V(x, 2R) <= C V(x, R)`, with the annulus variant
/// `V(x, 2R) <= C' v(x, R, 2R)` as an extra.
pub(crate) fn volume_doubling(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        doubling: f64,
        annulus: f64,
        center: Vertex,
    }
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for volume doubling")?;
    let results = map_cells(cells, |(x, radius)| {
        let big = g.volume(x, 2 * radius)?;
        let small = g.volume(x, radius)?;
        let ann = g.annulus_volume(x, radius, 2 * radius)?;
        Ok(Cell { radius, doubling: big / small, annulus: big / ann, center: x })
    })?;
    let mut curve = Vec::new();
    let mut witness: Option<&Cell> = None;
    for &radius in &cfg.radii {
        let at_r: Vec<&Cell> = results.iter().filter(|c| c.radius == radius).collect();
        if at_r.is_empty() {
            continue;
        }
        let worst = at_r
            .into_iter()
            .max_by(|a, b| a.doubling.total_cmp(&b.doubling))
            .expect("nonempty radius slice");
        curve.push(CurvePoint { scale: radius as u64, value: worst.doubling });
        if witness.is_none_or(|w| worst.doubling > w.doubling) {
            witness = Some(worst);
        }
    }
    let worst = witness.expect("cells are nonempty");
    let annulus_max =
        results.iter().map(|c| c.annulus).fold(f64::NEG_INFINITY, f64::max);
    let doubling_min = results.iter().map(|c| c.doubling).fold(f64::INFINITY, f64::min);
    let mut extras = BTreeMap::new();
    extras.insert("annulus_doubling".to_string(), annulus_max);
    extras.insert("doubling_min".to_string(), doubling_min);
    Ok(ConditionReport {
        name: "vd".into(),
        constant: worst.doubling,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "largest V(x,2R)/V(x,R)".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: None,
            value: worst.doubling,
        }],
        notes: vec![format!("{} cells", results.len())],
    })
}

/// Exit-time comparison across a ball: the doubled exit at the center
/// against the fastest single-scale exit over in-ball witnesses,
/// `E(x, 2R) <= C_T min_y E(y, R)` for `y in B(x, R)`. The weak
/// variant drops the doubling, `E(x, R) <= C min_y E(y, R)`, and is
/// the constant the equivalence dashboard groups with Harnack.
pub(crate) fn time_comparison(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        center: Vertex,
        strong: f64,
        weak: f64,
        fast_witness: Vertex,
    }
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for time comparison")?;
    let results = map_cells(cells, |(x, radius)| {
        let ball = g.ball(x, radius)?;
        let mut witnesses = subsample(&ball, cfg.comparison_witnesses);
        if !witnesses.contains(&x) {
            witnesses.push(x);
        }
        // Witnesses too close to the frontier carry truncation-biased
        // exit times.
        witnesses.retain(|&y| g.depth(y) >= radius);
        let mut fast = f64::INFINITY;
        let mut fast_witness = x;
        for &y in &witnesses {
            let single = cache.get(g, y, radius)?;
            if single < fast {
                fast = single;
                fast_witness = y;
            }
        }
        let strong = cache.get(g, x, 2 * radius)? / fast;
        let weak = cache.get(g, x, radius)? / fast;
        Ok(Cell { radius, center: x, strong, weak, fast_witness })
    })?;
    let mut curve = Vec::new();
    let mut worst: Option<&Cell> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .max_by(|a, b| a.strong.total_cmp(&b.strong));
        if let Some(cell) = best {
            curve.push(CurvePoint { scale: radius as u64, value: cell.strong });
            if worst.is_none_or(|w| cell.strong > w.strong) {
                worst = Some(cell);
            }
        }
    }
    let worst = worst.expect("cells are nonempty");
    let weak_max = results.iter().map(|c| c.weak).fold(f64::NEG_INFINITY, f64::max);
    let mut extras = BTreeMap::new();
    extras.insert("weak_variant".to_string(), weak_max);
    Ok(ConditionReport {
        name: "tc".into(),
        constant: worst.strong,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "doubled exit at the center over the fastest in-ball exit".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: Some(worst.fast_witness),
            value: worst.strong,
        }],
        notes: vec![format!("{} witnesses per ball", cfg.comparison_witnesses)],
    })
}

/// Einstein relation: exit time against resistance times volume over
/// the annulus `(R, 2R)`, reported as `rho v / E`.
pub(crate) fn einstein_relation(
    g: &WeightedGraph,
    cfg: &VerifierConfig,
) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        center: Vertex,
        ratio: f64,
        gate: f64,
        half_lower: f64,
    }
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for the Einstein relation")?;
    let results = map_cells(cells, |(x, radius)| {
        let exit = cache.get(g, x, radius)?;
        let rho = annulus_resistance(g, x, radius, 2 * radius)?.resistance;
        let vol = g.annulus_volume(x, radius, 2 * radius)?;
        // Universal gate: resistance-volume over the annulus dominates
        // the squared gap.
        let gate = rho * vol / (radius as f64).powi(2);
        // Half-annulus resistance against the exit-time per volume
        // scale, the lower-estimate companion.
        let inner = radius / 2;
        let half_lower = if inner >= 1 {
            annulus_resistance(g, x, inner, radius)?.resistance * g.volume(x, radius)? / exit
        } else {
            f64::INFINITY
        };
        Ok(Cell { radius, center: x, ratio: rho * vol / exit, gate, half_lower })
    })?;
    let mut curve = Vec::new();
    let mut worst: Option<&Cell> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
        if let Some(cell) = best {
            curve.push(CurvePoint { scale: radius as u64, value: cell.ratio });
            if worst.is_none_or(|w| cell.ratio > w.ratio) {
                worst = Some(cell);
            }
        }
    }
    let worst = worst.expect("cells are nonempty");
    let ratio_min = results.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let gate_min = results.iter().map(|c| c.gate).fold(f64::INFINITY, f64::min);
    let half_lower_min =
        results.iter().map(|c| c.half_lower).fold(f64::INFINITY, f64::min);
    let mut extras = BTreeMap::new();
    extras.insert("ratio_min".to_string(), ratio_min);
    extras.insert("gate_floor".to_string(), gate_min);
    extras.insert("half_annulus_lower".to_string(), half_lower_min);
    Ok(ConditionReport {
        name: "er".into(),
        constant: worst.ratio,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "largest rho(x,R,2R) v(x,R,2R) / E(x,R)".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: None,
            value: worst.ratio,
        }],
        notes: vec![],
    })
}

/// Spectral floor: the smallest Dirichlet eigenvalue of the ball obeys
/// `lambda(x, R) >= c / E(x, R)`; the constant reported is the smallest
/// observed product `lambda * E`.
pub(crate) fn eigenvalue_floor(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        center: Vertex,
        product: f64,
    }
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is R deep for the eigenvalue floor")?;
    let results = map_cells(cells, |(x, radius)| {
        let ball = g.ball(x, radius)?;
        let eigen = smallest_eigenvalue(g, &ball)?;
        let product = eigen.lambda * cache.get(g, x, radius)?;
        Ok(Cell { radius, center: x, product })
    })?;
    let mut curve = Vec::new();
    let mut worst: Option<&Cell> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .min_by(|a, b| a.product.total_cmp(&b.product));
        if let Some(cell) = best {
            curve.push(CurvePoint { scale: radius as u64, value: cell.product });
            if worst.is_none_or(|w| cell.product < w.product) {
                worst = Some(cell);
            }
        }
    }
    let worst = worst.expect("cells are nonempty");
    let product_max = results.iter().map(|c| c.product).fold(f64::NEG_INFINITY, f64::max);
    let mut extras = BTreeMap::new();
    extras.insert("product_max".to_string(), product_max);
    Ok(ConditionReport {
        name: "lambda".into(),
        constant: worst.product,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "smallest lambda(x,R) E(x,R)".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: None,
            value: worst.product,
        }],
        notes: vec![],
    })
}

//! Cylinder mean value verifiers.
//!
//! Both conditions compare values of a nonnegative caloric function on
//! a late time window against its measure average on an early window.
//! The scan runs over the killed-initial-delta cone: deltas placed in
//! the ball at time zero, evolved with killing on the ball. Those are
//! the extreme rays of the nonnegative killed solutions with vanishing
//! lateral data, so the scan maximum is the exact constant for that
//! cone. Lateral injections are excluded on purpose: a delta entering
//! after the early window has positive late values but zero early
//! average, so no finite constant covers them in this normalization.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::kernel::KernelEvolution;
use crate::verify::support::{interior_centers, map_cells, require_cells, ExitCache};
use crate::verify::{verdict_for_curve, ConditionReport, CurvePoint, VerifierConfig, Witness};

/// `sup_{hi x small} u` over `(1/nu) sum_{lo x small} u mu`. With
/// `nu` equal to the early window's space-time measure (slot count
/// times volume), a constant field scores exactly 1.
pub fn averaged_supremum_ratio<U>(
    g: &WeightedGraph,
    small: &VertexSet,
    lo: (u32, u32),
    hi: (u32, u32),
    nu: f64,
    u: U,
) -> f64
where
    U: Fn(u32, Vertex) -> f64,
{
    let mut sum = 0.0;
    for n in lo.0..=lo.1 {
        for &y in small.iter() {
            sum += u(n, y) * g.measure(y);
        }
    }
    let mut sup = f64::NEG_INFINITY;
    for n in hi.0..=hi.1 {
        for &y in small.iter() {
            sup = sup.max(u(n, y));
        }
    }
    if sum <= 0.0 {
        return f64::INFINITY;
    }
    sup / (sum / nu)
}

/// `(1/nu) sum_{lo x small} u mu` over `min_{hi x small}
/// (u_n + u_{n+1})/2`. The paired minimum absorbs parity zeros; a
/// constant field scores exactly 1.
pub fn averaged_infimum_ratio<U>(
    g: &WeightedGraph,
    small: &VertexSet,
    lo: (u32, u32),
    hi: (u32, u32),
    nu: f64,
    u: U,
) -> f64
where
    U: Fn(u32, Vertex) -> f64,
{
    let mut sum = 0.0;
    for n in lo.0..=lo.1 {
        for &y in small.iter() {
            sum += u(n, y) * g.measure(y);
        }
    }
    let mut inf = f64::INFINITY;
    for n in hi.0..=hi.1 {
        for &y in small.iter() {
            inf = inf.min((u(n, y) + u(n + 1, y)) / 2.0);
        }
    }
    if inf <= 0.0 {
        return f64::INFINITY;
    }
    (sum / nu) / inf
}

enum CellOutcome {
    Measured { constant: f64, worst_w: Vertex, degenerate: bool },
    WindowTooSmall,
    Unreachable,
}

struct Cell {
    x: Vertex,
    radius: u32,
    outcome: CellOutcome,
}

/// Shared scan for the plain (`strong = false`) and strong
/// (`strong = true`) cylinder mean value conditions.
pub(crate) fn mean_value_cylinder(
    g: &WeightedGraph,
    cfg: &VerifierConfig,
    strong: bool,
) -> Result<ConditionReport> {
    let windows = if strong { &cfg.strong_mean_value } else { &cfg.mean_value };
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is R deep for cylinder scans")?;
    let results: Vec<Cell> = map_cells(cells, |(x, radius)| {
        let horizon = cache.get(g, x, radius)?;
        let lo = ((windows.c1 * horizon).ceil() as u32, (windows.c2 * horizon).floor() as u32);
        let hi = ((windows.c3 * horizon).ceil() as u32, (windows.c4 * horizon).floor() as u32);
        // Two early slots cover both parities of the delta's support.
        if lo.1 < lo.0 + 1 || hi.1 < hi.0 {
            return Ok(Cell { x, radius, outcome: CellOutcome::WindowTooSmall });
        }
        let small_radius = ((windows.delta * radius as f64).floor() as u32).max(1);
        if strong && (hi.0 as u64) < (radius as u64 - 1) + small_radius as u64 + 1 {
            return Ok(Cell { x, radius, outcome: CellOutcome::Unreachable });
        }
        let ball = g.ball(x, radius)?;
        let small = g.ball(x, small_radius)?;
        let slots = (lo.1 - lo.0 + 1) as f64;
        let nu = slots * g.volume(x, small_radius)?;
        let steps = if strong { hi.1 + 1 } else { hi.1 };
        let mut worst = f64::NEG_INFINITY;
        let mut worst_w = x;
        let mut degenerate = false;
        for &w in ball.iter() {
            let mut evo =
                KernelEvolution::dirichlet(g, &ball, w)?.compensated(cfg.compensated_sums);
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity((steps - lo.0 + 1) as usize);
            loop {
                let t = evo.time();
                if t >= lo.0 {
                    rows.push(small.iter().map(|&y| evo.kernel_at(y)).collect());
                }
                if t == steps {
                    break;
                }
                evo.step();
            }
            let u = |n: u32, y: Vertex| {
                rows[(n - lo.0) as usize][small.index_of(y).expect("window point in small ball")]
            };
            let ratio = if strong {
                averaged_infimum_ratio(g, &small, lo, hi, nu, u)
            } else {
                averaged_supremum_ratio(g, &small, lo, hi, nu, u)
            };
            if !ratio.is_finite() {
                degenerate = true;
            }
            if ratio > worst {
                worst = ratio;
                worst_w = w;
            }
        }
        Ok(Cell { x, radius, outcome: CellOutcome::Measured { constant: worst, worst_w, degenerate } })
    })?;

    let measured = |c: &Cell| match c.outcome {
        CellOutcome::Measured { constant, .. } => Some(constant),
        _ => None,
    };
    let mut curve = Vec::new();
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .filter_map(measured)
            .fold(f64::NEG_INFINITY, f64::max);
        if best > f64::NEG_INFINITY {
            curve.push(CurvePoint { scale: radius as u64, value: best });
        }
    }
    let too_small = results
        .iter()
        .filter(|c| matches!(c.outcome, CellOutcome::WindowTooSmall))
        .count();
    let unreachable = results
        .iter()
        .filter(|c| matches!(c.outcome, CellOutcome::Unreachable))
        .count();
    if curve.is_empty() {
        return Err(Error::CylinderTooSmall {
            what: format!(
                "every cylinder was skipped ({too_small} with degenerate windows, \
                 {unreachable} under the reachability floor)"
            ),
        });
    }
    let worst = results
        .iter()
        .filter_map(|c| match c.outcome {
            CellOutcome::Measured { constant, worst_w, degenerate } => {
                Some((c, constant, worst_w, degenerate))
            }
            _ => None,
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("curve is nonempty");

    let mut extras = BTreeMap::new();
    extras.insert("skipped_cells".to_string(), (too_small + unreachable) as f64);
    let mut notes = vec![
        "scan covers the killed-initial-delta cone; lateral injections admit no finite constant"
            .to_string(),
    ];
    if too_small > 0 {
        notes.push(format!("{too_small} cells skipped: window shorter than two slots"));
    }
    if unreachable > 0 {
        notes.push(format!(
            "{unreachable} cells skipped: late window opens before mass can cross the cylinder"
        ));
    }
    if results.iter().any(|c| matches!(c.outcome, CellOutcome::Measured { degenerate: true, .. }))
    {
        notes.push("some extremal solutions had an empty window side; their ratio is infinite"
            .to_string());
    }
    Ok(ConditionReport {
        name: if strong { "psmv" } else { "pmv" }.into(),
        constant: worst.1,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "worst killed delta (partner: delta site)".into(),
            center: worst.0.x,
            radius: worst.0.radius,
            time: None,
            partner: Some(worst.2),
            value: worst.1,
        }],
        notes,
    })
}

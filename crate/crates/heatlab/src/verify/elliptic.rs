//! Elliptic verifiers: Harnack, mean value, and Green bounds.
//!
//! Every nonnegative harmonic function on a ball is a nonnegative
//! combination of harmonic-measure columns, so scanning the columns
//! scans the extreme rays of the harmonic cone exactly: the worst
//! column ratio IS the Harnack constant of the ball.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::{green_function, poisson_kernel};
use crate::verify::support::{interior_centers, map_cells, require_cells, ExitCache};
use crate::verify::{verdict_for_curve, ConditionReport, CurvePoint, VerifierConfig, Witness};

struct HarnackCell {
    radius: u32,
    center: Vertex,
    constant: f64,
    boundary_witness: Vertex,
    high_point: Vertex,
    low_point: Vertex,
}

fn harnack_cells(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<Vec<HarnackCell>> {
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for harmonic scans")?;
    map_cells(cells, |(x, radius)| {
        let big = g.ball(x, 2 * radius)?;
        let small = g.ball(x, radius)?;
        let kernel = poisson_kernel(g, &big)?;
        let mut worst = f64::NEG_INFINITY;
        let mut witness = (0, 0, 0);
        for (zi, &z) in kernel.boundary.ids().iter().enumerate() {
            let column = kernel.column(zi);
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            let mut hi_at = 0;
            let mut lo_at = 0;
            for &y in small.iter() {
                let v = column[big.index_of(y).expect("small ball inside big ball")];
                if v > hi {
                    hi = v;
                    hi_at = y;
                }
                if v < lo {
                    lo = v;
                    lo_at = y;
                }
            }
            if lo <= 0.0 {
                return Err(Error::SingularSystem {
                    what: format!("harmonic measure vanished inside the ball at {x}"),
                });
            }
            if hi / lo > worst {
                worst = hi / lo;
                witness = (z, hi_at, lo_at);
            }
        }
        Ok(HarnackCell {
            radius,
            center: x,
            constant: worst,
            boundary_witness: witness.0,
            high_point: witness.1,
            low_point: witness.2,
        })
    })
}

/// Elliptic Harnack: `max_{B(x,R)} u <= C min_{B(x,R)} u` for
/// nonnegative `u` harmonic on `B(x, 2R)`.
pub(crate) fn harnack(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    let results = harnack_cells(g, cfg)?;
    let mut curve = Vec::new();
    let mut worst: Option<&HarnackCell> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .max_by(|a, b| a.constant.total_cmp(&b.constant));
        if let Some(cell) = best {
            curve.push(CurvePoint { scale: radius as u64, value: cell.constant });
            if worst.is_none_or(|w| cell.constant > w.constant) {
                worst = Some(cell);
            }
        }
    }
    let worst = worst.expect("cells are nonempty");
    let min_cell = results.iter().map(|c| c.constant).fold(f64::INFINITY, f64::min);
    let mut extras = BTreeMap::new();
    extras.insert("min_cell".to_string(), min_cell);
    Ok(ConditionReport {
        name: "h".into(),
        constant: worst.constant,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![
            Witness {
                role: "worst harmonic-measure column (partner: boundary pole)".into(),
                center: worst.center,
                radius: worst.radius,
                time: None,
                partner: Some(worst.boundary_witness),
                value: worst.constant,
            },
            Witness {
                role: "maximum point of the worst column".into(),
                center: worst.high_point,
                radius: worst.radius,
                time: None,
                partner: Some(worst.low_point),
                value: worst.constant,
            },
        ],
        notes: vec!["scan over harmonic-measure columns is exact for the harmonic cone".into()],
    })
}

/// Elliptic mean value: `u(x) <= C / V(x,R) * sum_{B(x,R)} u mu` for
/// nonnegative `u` harmonic on `B(x, 2R)`, scanned the same way.
pub(crate) fn mean_value(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        center: Vertex,
        constant: f64,
        boundary_witness: Vertex,
    }
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for the mean value scan")?;
    let results = map_cells(cells, |(x, radius)| {
        let big = g.ball(x, 2 * radius)?;
        let small = g.ball(x, radius)?;
        let volume = g.volume(x, radius)?;
        let kernel = poisson_kernel(g, &big)?;
        let mut worst = f64::NEG_INFINITY;
        let mut witness = 0;
        for (zi, &z) in kernel.boundary.ids().iter().enumerate() {
            let column = kernel.column(zi);
            let at_center = column[big.index_of(x).expect("center inside big ball")];
            let average: f64 = small
                .iter()
                .map(|&y| {
                    column[big.index_of(y).expect("small ball inside big ball")] * g.measure(y)
                })
                .sum::<f64>()
                / volume;
            if average <= 0.0 {
                return Err(Error::SingularSystem {
                    what: format!("harmonic average vanished at {x}"),
                });
            }
            if at_center / average > worst {
                worst = at_center / average;
                witness = z;
            }
        }
        Ok(Cell { radius, center: x, constant: worst, boundary_witness: witness })
    })?;
    let mut curve = Vec::new();
    let mut worst: Option<&Cell> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .filter(|c| c.radius == radius)
            .max_by(|a, b| a.constant.total_cmp(&b.constant));
        if let Some(cell) = best {
            curve.push(CurvePoint { scale: radius as u64, value: cell.constant });
            if worst.is_none_or(|w| cell.constant > w.constant) {
                worst = Some(cell);
            }
        }
    }
    let worst = worst.expect("cells are nonempty");
    Ok(ConditionReport {
        name: "mv".into(),
        constant: worst.constant,
        extras: BTreeMap::new(),
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "worst center-to-average ratio (partner: boundary pole)".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: Some(worst.boundary_witness),
            value: worst.constant,
        }],
        notes: vec!["scan over harmonic-measure columns is exact for the harmonic cone".into()],
    })
}

/// Two-sided Green bound on the mid annulus: for `y` with
/// `R/2 <= d(x,y) < R`, the Green function of `B(x, 2R)` satisfies
/// `c F(x,R)/V(x,R) <= g(x,y) <= C F(x,R)/V(x,R)`. The curve tracks the
/// two-sided tightness `C/c` per radius.
pub(crate) fn green_two_sided(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Cell {
        radius: u32,
        center: Vertex,
        upper: f64,
        lower: f64,
        high_point: Vertex,
        low_point: Vertex,
    }
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        if radius < 2 {
            continue;
        }
        for x in interior_centers(g, 2 * radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is 2R deep for the Green scan")?;
    let results = map_cells(cells, |(x, radius)| {
        let big = g.ball(x, 2 * radius)?;
        let green = green_function(g, &big, x)?;
        let scale = cache.get(g, x, radius)? / g.volume(x, radius)?;
        let dist = g.distances(x);
        let mut upper = f64::NEG_INFINITY;
        let mut lower = f64::INFINITY;
        let mut high_point = x;
        let mut low_point = x;
        for y in 0..g.vertex_count() {
            if dist[y] == u32::MAX || dist[y] < radius / 2 || dist[y] >= radius {
                continue;
            }
            let v = green.value(y) / scale;
            if v > upper {
                upper = v;
                high_point = y;
            }
            if v < lower {
                lower = v;
                low_point = y;
            }
        }
        if !lower.is_finite() || lower <= 0.0 {
            return Err(Error::SingularSystem {
                what: format!("Green function degenerate on the annulus at {x}"),
            });
        }
        Ok(Cell { radius, center: x, upper, lower, high_point, low_point })
    })?;
    let mut curve = Vec::new();
    for &radius in &cfg.radii {
        let at_r: Vec<&Cell> = results.iter().filter(|c| c.radius == radius).collect();
        if at_r.is_empty() {
            continue;
        }
        let hi = at_r.iter().map(|c| c.upper).fold(f64::NEG_INFINITY, f64::max);
        let lo = at_r.iter().map(|c| c.lower).fold(f64::INFINITY, f64::min);
        curve.push(CurvePoint { scale: radius as u64, value: hi / lo });
    }
    let upper_max = results.iter().map(|c| c.upper).fold(f64::NEG_INFINITY, f64::max);
    let lower_min = results.iter().map(|c| c.lower).fold(f64::INFINITY, f64::min);
    let worst = results
        .iter()
        .max_by(|a, b| (a.upper / a.lower).total_cmp(&(b.upper / b.lower)))
        .expect("cells are nonempty");
    let mut extras = BTreeMap::new();
    extras.insert("upper".to_string(), upper_max);
    extras.insert("lower".to_string(), lower_min);
    Ok(ConditionReport {
        name: "gf".into(),
        constant: upper_max / lower_min,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "widest annulus spread of g(x,.) V(x,R)/F(x,R)".into(),
            center: worst.center,
            radius: worst.radius,
            time: None,
            partner: Some(worst.high_point),
            value: worst.upper / worst.lower,
        }, Witness {
            role: "lowest annulus Green value, normalized".into(),
            center: worst.low_point,
            radius: worst.radius,
            time: None,
            partner: None,
            value: worst.lower,
        }],
        notes: vec!["annulus is R/2 <= d < R inside the ball of radius 2R".into()],
    })
}

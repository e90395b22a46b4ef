//! Space-time scaling tables and exponent fits.
//!
//! A scaling table holds a positive quantity `F(x, R)` sampled on a grid
//! of centers and radii: mean exit times, resistance-volume products, or
//! ball volumes. Everything downstream of the table is measurement-
//! agnostic: monotone repair, log-log exponent fits, grid inverses, and
//! the integer subdivision scans used by sub-Gaussian kernel profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::potential::{annulus_resistance, guard_reach, mean_exit_time};

/// What a table's values measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingSource {
    /// Mean exit time `E(x, R)` from the open ball.
    ExitTime,
    /// Annulus resistance times annulus volume, `rho(x,R,2R) v(x,R,2R)`.
    RhoV,
    /// Ball volume `V(x, R)`.
    Volume,
    /// Values supplied by the caller or read from a file.
    User,
}

impl ScalingSource {
    fn as_str(self) -> &'static str {
        match self {
            ScalingSource::ExitTime => "exit_time",
            ScalingSource::RhoV => "rho_v",
            ScalingSource::Volume => "volume",
            ScalingSource::User => "user",
        }
    }

    fn parse(s: &str) -> ScalingSource {
        match s {
            "exit_time" => ScalingSource::ExitTime,
            "rho_v" => ScalingSource::RhoV,
            "volume" => ScalingSource::Volume,
            _ => ScalingSource::User,
        }
    }
}

impl fmt::Display for ScalingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A grid of positive values `F(x, R)`, non-decreasing in `R` after
/// repair.
#[derive(Debug, Clone)]
pub struct ScalingTable {
    pub source: ScalingSource,
    centers: Vec<Vertex>,
    radii: Vec<u32>,
    /// `values[ci][ri]`, after monotone repair.
    values: Vec<Vec<f64>>,
    /// Grid positions raised during monotone repair.
    repairs: Vec<(Vertex, u32)>,
    center_index: BTreeMap<Vertex, usize>,
}

impl ScalingTable {
    /// Validates the grid and repairs radial monotonicity by clamping
    /// each value up to the running maximum. Repairs are recorded, not
    /// hidden: a table with many repairs is telling you the measurement
    /// is too noisy at those scales.
    pub fn new(
        source: ScalingSource,
        centers: Vec<Vertex>,
        radii: Vec<u32>,
        mut values: Vec<Vec<f64>>,
    ) -> Result<ScalingTable> {
        if centers.is_empty() || radii.is_empty() {
            return Err(Error::EmptyVertexSet { what: "scaling grid".into() });
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ShapeMismatch { what: "radii must be strictly increasing".into() });
        }
        if radii[0] == 0 {
            return Err(Error::ShapeMismatch { what: "radius 0 has no scaling value".into() });
        }
        if values.len() != centers.len() {
            return Err(Error::ShapeMismatch {
                what: format!("{} value rows for {} centers", values.len(), centers.len()),
            });
        }
        let mut center_index = BTreeMap::new();
        for (i, &c) in centers.iter().enumerate() {
            if center_index.insert(c, i).is_some() {
                return Err(Error::ShapeMismatch { what: format!("duplicate center {c}") });
            }
        }
        let mut repairs = Vec::new();
        for (ci, row) in values.iter_mut().enumerate() {
            if row.len() != radii.len() {
                return Err(Error::ShapeMismatch {
                    what: format!("row {ci} has {} values for {} radii", row.len(), radii.len()),
                });
            }
            let mut running = 0.0f64;
            for (ri, v) in row.iter_mut().enumerate() {
                if !v.is_finite() || *v <= 0.0 {
                    return Err(Error::ShapeMismatch {
                        what: format!("non-positive value {v} at center {}", centers[ci]),
                    });
                }
                if *v < running {
                    *v = running;
                    repairs.push((centers[ci], radii[ri]));
                }
                running = *v;
            }
        }
        Ok(ScalingTable { source, centers, radii, values, repairs, center_index })
    }

    pub fn centers(&self) -> &[Vertex] {
        &self.centers
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    pub fn repairs(&self) -> &[(Vertex, u32)] {
        &self.repairs
    }

    pub fn max_radius(&self) -> u32 {
        *self.radii.last().expect("non-empty radii")
    }

    /// True when the radius grid is `1..=max` with no gaps; inverse
    /// lookups are exact only on such grids.
    pub fn is_dense(&self) -> bool {
        self.radii[0] == 1 && self.radii.windows(2).all(|w| w[1] == w[0] + 1)
    }

    pub fn value(&self, x: Vertex, radius: u32) -> Result<f64> {
        let ci = *self.center_index.get(&x).ok_or(Error::InsufficientGrid {
            what: format!("center {x} not tabulated"),
        })?;
        let ri = self.radii.binary_search(&radius).map_err(|_| Error::InsufficientGrid {
            what: format!("radius {radius} not tabulated"),
        })?;
        Ok(self.values[ci][ri])
    }

    pub fn min_over(&self, set: &[Vertex], radius: u32) -> Result<f64> {
        let mut best = f64::INFINITY;
        for &y in set {
            best = best.min(self.value(y, radius)?);
        }
        if best.is_infinite() {
            return Err(Error::EmptyVertexSet { what: "min_over set".into() });
        }
        Ok(best)
    }

    pub fn max_over(&self, set: &[Vertex], radius: u32) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for &y in set {
            best = best.max(self.value(y, radius)?);
        }
        if best.is_infinite() {
            return Err(Error::EmptyVertexSet { what: "max_over set".into() });
        }
        Ok(best)
    }

    /// Smallest tabulated radius with `F(x, R) >= n`. Exact when the
    /// grid is dense; on sparse grids this is the grid inverse, an
    /// upper bound for the true inverse.
    pub fn inverse(&self, x: Vertex, n: f64) -> Result<u32> {
        let ci = *self.center_index.get(&x).ok_or(Error::InsufficientGrid {
            what: format!("center {x} not tabulated"),
        })?;
        let row = &self.values[ci];
        if n > *row.last().expect("non-empty row") {
            return Err(Error::OutOfTabulatedRange { n, max: *row.last().unwrap() });
        }
        // Monotone row: binary search for the first value >= n.
        let mut lo = 0usize;
        let mut hi = row.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if row[mid] >= n {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(self.radii[lo])
    }
}

/// Measures `F(x, R)` over a center and radius grid.
pub fn build_scaling_table(
    g: &WeightedGraph,
    source: ScalingSource,
    centers: &[Vertex],
    radii: &[u32],
) -> Result<ScalingTable> {
    if source == ScalingSource::User {
        return Err(Error::ShapeMismatch {
            what: "user tables are constructed from explicit values".into(),
        });
    }
    let mut values = Vec::with_capacity(centers.len());
    for &x in centers {
        let mut row = Vec::with_capacity(radii.len());
        for &radius in radii {
            let v = match source {
                ScalingSource::ExitTime => mean_exit_time(g, x, radius)?.at_center(),
                ScalingSource::Volume => {
                    guard_reach(g, x, radius)?;
                    g.volume(x, radius)?
                }
                ScalingSource::RhoV => {
                    let rep = annulus_resistance(g, x, radius, 2 * radius)?;
                    rep.resistance * g.annulus_volume(x, radius, 2 * radius)?
                }
                ScalingSource::User => unreachable!(),
            };
            row.push(v);
        }
        values.push(row);
    }
    ScalingTable::new(source, centers.to_vec(), radii.to_vec(), values)
}

/// Log-log exponent fit of a scaling table.
///
/// The exponent pair comes from same-center slopes
/// `log(F(x,R)/F(x,r)) / log(R/r)` over grid pairs spanning at least a
/// factor of 4 in radius; shorter spans measure lattice granularity,
/// not growth. Cross-center ratios with `y` inside `B(x, R)` calibrate
/// the comparison constants for the fitted exponents.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    /// Largest qualifying slope: upper scaling exponent.
    pub beta: f64,
    /// Smallest qualifying slope: lower scaling exponent.
    pub beta_prime: f64,
    /// Pooled per-center least-squares slope, as a stability diagnostic.
    pub least_squares: f64,
    /// Largest `F(x,R)/F(y,r) / (R/r)^beta` over cross-center pairs.
    pub c_high: f64,
    /// Smallest `F(x,R)/F(y,r) / (R/r)^beta_prime` over the same pairs.
    pub c_low: f64,
    /// Smallest `F(x,R)/R^2` on the grid (quadratic floor diagnostic).
    pub quadratic_floor: f64,
    /// Number of same-center slope pairs that qualified.
    pub pairs: usize,
}

/// Exponent-window classification of a fitted table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingClass {
    /// Lower exponent above 1: strong enough for near-diagonal lower
    /// kernel bounds.
    StronglyRegular,
    /// Positive exponents with a two-sided comparison.
    Regular,
    /// Flat or collapsing growth; no scaling structure.
    Degenerate,
}

impl ExponentFit {
    pub fn classify(&self) -> ScalingClass {
        if self.beta_prime > 1.0 {
            ScalingClass::StronglyRegular
        } else if self.beta_prime > 0.0 {
            ScalingClass::Regular
        } else {
            ScalingClass::Degenerate
        }
    }
}

const FIT_MIN_SPAN: f64 = 4.0;

pub fn fit_exponents(g: &WeightedGraph, table: &ScalingTable) -> Result<ExponentFit> {
    let mut fit = fit_exponents_table_only(table)?;
    let radii = table.radii();
    let centers = table.centers();

    // Cross-center comparison constants at the fitted exponents.
    let mut c_high = f64::NEG_INFINITY;
    let mut c_low = f64::INFINITY;
    for &x in centers {
        let dist = g.distances(x);
        for &y in centers {
            for (i, &r) in radii.iter().enumerate() {
                for &radius in &radii[i..] {
                    if dist[y] == u32::MAX || dist[y] >= radius {
                        continue;
                    }
                    let ratio = table.value(x, radius)? / table.value(y, r)?;
                    let span = radius as f64 / r as f64;
                    c_high = c_high.max(ratio / span.powf(fit.beta));
                    c_low = c_low.min(ratio / span.powf(fit.beta_prime));
                }
            }
        }
    }
    fit.c_high = c_high;
    fit.c_low = c_low;
    Ok(fit)
}

/// Fit without geometry: same-center slopes and the quadratic floor
/// only. The cross-center constants need vertex distances, so they come
/// back as NaN here.
pub fn fit_exponents_table_only(table: &ScalingTable) -> Result<ExponentFit> {
    let radii = table.radii();
    let centers = table.centers();
    let mut beta = f64::NEG_INFINITY;
    let mut beta_prime = f64::INFINITY;
    let mut pairs = 0usize;
    let mut ls_sum = 0.0;
    for &x in centers {
        for (i, &r) in radii.iter().enumerate() {
            for &radius in &radii[i + 1..] {
                if (radius as f64) < FIT_MIN_SPAN * r as f64 {
                    continue;
                }
                let slope = (table.value(x, radius)? / table.value(x, r)?).ln()
                    / (radius as f64 / r as f64).ln();
                beta = beta.max(slope);
                beta_prime = beta_prime.min(slope);
                pairs += 1;
            }
        }
        ls_sum += least_squares_slope(table, x, radii)?;
    }
    if pairs == 0 {
        return Err(Error::InsufficientGrid {
            what: format!("no radius pair spans a factor of {FIT_MIN_SPAN}"),
        });
    }
    let least_squares = ls_sum / centers.len() as f64;
    let mut quadratic_floor = f64::INFINITY;
    for &x in centers {
        for &radius in radii {
            quadratic_floor =
                quadratic_floor.min(table.value(x, radius)? / (radius as f64).powi(2));
        }
    }
    Ok(ExponentFit {
        beta,
        beta_prime,
        least_squares,
        c_high: f64::NAN,
        c_low: f64::NAN,
        quadratic_floor,
        pairs,
    })
}

fn least_squares_slope(table: &ScalingTable, x: Vertex, radii: &[u32]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| Ok(((r as f64).ln(), table.value(x, r)?.ln())))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let sxx: f64 = pts.iter().map(|&(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|&(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::InsufficientGrid { what: "single-radius least squares".into() });
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Maximal `k <= R` with `n/k <= q * min_{y in B(x,R)} F(y, floor(R/k))`,
/// or 1 when no subdivision qualifies. This is the space-time
/// subdivision count behind sub-Gaussian upper profiles: `k` legs of
/// duration `n/k` each crossing a ball of radius `R/k`.
pub fn subdivision_count_upper(
    g: &WeightedGraph,
    table: &ScalingTable,
    x: Vertex,
    n: u64,
    radius: u32,
    q: f64,
) -> Result<u32> {
    check_scan_args(n, radius)?;
    let ball = g.ball(x, radius)?;
    let ball_ids = ball.ids();
    for k in (2..=radius).rev() {
        let leg_radius = radius / k;
        if leg_radius == 0 {
            continue;
        }
        let floor = table.min_over(ball_ids, leg_radius)?;
        if n as f64 / k as f64 <= q * floor {
            return Ok(k);
        }
    }
    Ok(1)
}

/// Minimal `l in [1, n]` with `n/l >= c_l * F(x, ceil(R/l))`, or `n`
/// when no subdivision qualifies: the leg count for sub-Gaussian lower
/// profiles, where each leg must have enough time to cross its ball.
pub fn subdivision_count_lower(
    table: &ScalingTable,
    x: Vertex,
    n: u64,
    radius: u32,
    c_l: f64,
) -> Result<u64> {
    check_scan_args(n, radius)?;
    let cap = radius as u64;
    for l in 1..=n.min(cap) {
        let leg_radius = radius.div_ceil(l as u32);
        if n as f64 / l as f64 >= c_l * table.value(x, leg_radius)? {
            return Ok(l);
        }
    }
    // Beyond l = R the leg radius is pinned at 1 and the predicate only
    // weakens with l, so the first tail candidate decides.
    if n > cap && n as f64 / (cap + 1) as f64 >= c_l * table.value(x, 1)? {
        return Ok(cap + 1);
    }
    Ok(n)
}

/// Set form of the lower scan: maximal `l in [1, n]` with
/// `n/l >= c_l * max_{z in A} F(z, ceil(R/l))`, or `n` as fallback.
pub fn subdivision_count_lower_set(
    table: &ScalingTable,
    set: &VertexSet,
    n: u64,
    radius: u32,
    c_l: f64,
) -> Result<u64> {
    check_scan_args(n, radius)?;
    if set.is_empty() {
        return Err(Error::EmptyVertexSet { what: "lower scan set".into() });
    }
    let cap = radius as u64;
    if n > cap {
        // Tail l in (R, n]: leg radius 1, predicate monotone decreasing
        // in l, so binary search the largest qualifying l.
        let ceiling = table.max_over(set.ids(), 1)?;
        let ok = |l: u64| n as f64 / l as f64 >= c_l * ceiling;
        if ok(cap + 1) {
            let (mut lo, mut hi) = (cap + 1, n);
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            return Ok(lo);
        }
    }
    for l in (1..=n.min(cap)).rev() {
        let leg_radius = radius.div_ceil(l as u32);
        let ceiling = table.max_over(set.ids(), leg_radius)?;
        if n as f64 / l as f64 >= c_l * ceiling {
            return Ok(l);
        }
    }
    Ok(n)
}

/// Global subdivision count: the worst (smallest) upper count over all
/// tabulated centers.
pub fn subdivision_count_global(
    g: &WeightedGraph,
    table: &ScalingTable,
    n: u64,
    radius: u32,
    q: f64,
) -> Result<u32> {
    let mut best: Option<u32> = None;
    for &x in table.centers() {
        let k = subdivision_count_upper(g, table, x, n, radius, q)?;
        best = Some(best.map_or(k, |b| b.min(k)));
    }
    best.ok_or(Error::EmptyVertexSet { what: "global scan centers".into() })
}

fn check_scan_args(n: u64, radius: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::SizeTooSmall { what: "scan time".into(), value: 0, min: 1 });
    }
    if radius == 0 {
        return Err(Error::SizeTooSmall { what: "scan radius".into(), value: 0, min: 1 });
    }
    Ok(())
}

/// Writes `center,radius,value` rows; the source rides in a comment.
pub fn write_table_csv(table: &ScalingTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# scaling source={}\n", table.source));
    out.push_str("center,radius,value\n");
    for &x in table.centers() {
        for &r in table.radii() {
            out.push_str(&format!("{x},{r},{:.16e}\n", table.value(x, r)?));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_table_csv(path: &Path) -> Result<ScalingTable> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let context = path.display().to_string();
    let mut source = ScalingSource::User;
    let mut triples: Vec<(Vertex, u32, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(s) = rest.trim().strip_prefix("scaling source=") {
                source = ScalingSource::parse(s.trim());
            }
            continue;
        }
        if line == "center,radius,value" {
            continue;
        }
        let mut parts = line.split(',');
        let parse_err = |what: &str| Error::parse(
            context.clone(),
            format!("line {}: {what}", lineno + 1),
        );
        let center: Vertex = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err("bad center"))?;
        let radius: u32 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err("bad radius"))?;
        let value: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err("bad value"))?;
        if parts.next().is_some() {
            return Err(parse_err("too many columns"));
        }
        triples.push((center, radius, value));
    }
    if triples.is_empty() {
        return Err(Error::parse(context, "no data rows".to_string()));
    }
    let mut centers: Vec<Vertex> = Vec::new();
    for &(c, _, _) in &triples {
        if !centers.contains(&c) {
            centers.push(c);
        }
    }
    let mut radii: Vec<u32> = triples.iter().map(|&(_, r, _)| r).collect();
    radii.sort_unstable();
    radii.dedup();
    let mut values = vec![vec![f64::NAN; radii.len()]; centers.len()];
    for (c, r, v) in triples {
        let ci = centers.iter().position(|&x| x == c).expect("collected above");
        let ri = radii.binary_search(&r).expect("collected above");
        values[ci][ri] = v;
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::parse(context, "incomplete grid: missing (center, radius) pairs".to_string()));
    }
    ScalingTable::new(source, centers, radii, values)
}

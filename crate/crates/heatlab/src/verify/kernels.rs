//! Heat kernel verifiers: diagonal bounds, near-diagonal lower bounds,
//! killed-kernel bounds, and sub-Gaussian decay probes.
//!
//! All products compare a kernel value against the volume at the
//! space-time matched radius `f(x, n)`, the smallest radius whose mean
//! exit time reaches `n`. Free-kernel scans only use centers whose
//! marked truncation depth exceeds `kernel_margin * f(x, n_max)`, so
//! the mass lost past the truncation cut stays negligible.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::kernel::KernelEvolution;
use crate::scaling::{build_scaling_table, fit_exponents, ScalingSource};
use crate::verify::support::{interior_centers, map_cells, require_cells, ExitCache};
use crate::verify::{verdict_for_curve, ConditionReport, CurvePoint, VerifierConfig, Witness};

fn scan_args(n: u64, radius: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::SizeTooSmall { what: "subdivision time".into(), value: 0, min: 1 });
    }
    if radius == 0 {
        return Err(Error::SizeTooSmall { what: "subdivision radius".into(), value: 0, min: 1 });
    }
    Ok(())
}

/// Upper subdivision count evaluated against lazily cached exit times:
/// maximal `k` with `n/k <= q min_{y in B(x,R)} E(y, floor(R/k))`, the
/// same scan the tabulated variant performs.
pub(crate) fn upper_count_cached(
    g: &WeightedGraph,
    cache: &ExitCache,
    x: Vertex,
    n: u64,
    radius: u32,
    q: f64,
) -> Result<u32> {
    scan_args(n, radius)?;
    let ball = g.ball(x, radius)?;
    let mut floors: HashMap<u32, f64> = HashMap::new();
    for k in (2..=radius).rev() {
        let leg = radius / k;
        if leg == 0 {
            continue;
        }
        let floor = if let Some(&v) = floors.get(&leg) {
            v
        } else {
            let mut m = f64::INFINITY;
            for &y in ball.iter() {
                m = m.min(cache.get(g, y, leg)?);
            }
            floors.insert(leg, m);
            m
        };
        if n as f64 / k as f64 <= q * floor {
            return Ok(k);
        }
    }
    Ok(1)
}

/// Lower subdivision count against cached exit times: minimal `l` with
/// `n/l >= c_l E(x, ceil(R/l))`, with the same pinned tail as the
/// tabulated variant.
pub(crate) fn lower_count_cached(
    g: &WeightedGraph,
    cache: &ExitCache,
    x: Vertex,
    n: u64,
    radius: u32,
    c_l: f64,
) -> Result<u64> {
    scan_args(n, radius)?;
    let cap = radius as u64;
    for l in 1..=n.min(cap) {
        let leg = radius.div_ceil(l as u32);
        if n as f64 / l as f64 >= c_l * cache.get(g, x, leg)? {
            return Ok(l);
        }
    }
    if n > cap && n as f64 / (cap + 1) as f64 >= c_l * cache.get(g, x, 1)? {
        return Ok(cap + 1);
    }
    Ok(n)
}

/// Kernel rows `p_n(x, .)` at every requested time, full vertex length.
fn snapshot_kernel(
    g: &WeightedGraph,
    mut evo: KernelEvolution,
    wanted: &BTreeSet<u32>,
) -> HashMap<u32, Vec<f64>> {
    let mut out = HashMap::new();
    let &last = wanted.iter().next_back().expect("at least one snapshot time");
    loop {
        let t = evo.time();
        if wanted.contains(&t) {
            out.insert(t, (0..g.vertex_count()).map(|y| evo.kernel_at(y)).collect());
        }
        if t == last {
            return out;
        }
        evo.step();
    }
}

fn snapshot_times(times: &[u64]) -> BTreeSet<u32> {
    times.iter().flat_map(|&n| [n as u32, n as u32 + 1]).collect()
}

/// Centers whose truncation depth covers `kernel_margin * f(x, n_max)`.
/// Centers too shallow to even tabulate `f` are silently dropped.
fn free_kernel_centers(
    g: &WeightedGraph,
    cfg: &VerifierConfig,
    cache: &ExitCache,
) -> Result<Vec<Vertex>> {
    let n_max = *cfg
        .kernel_times
        .last()
        .ok_or(Error::InsufficientGrid { what: "empty kernel time grid".into() })?;
    let mut kept = Vec::new();
    for x in interior_centers(g, 1, cfg.centers_per_graph) {
        let f_max = match cache.inverse(g, x, n_max as f64) {
            Ok(f) => f,
            Err(Error::OutOfTabulatedRange { .. }) => continue,
            Err(e) => return Err(e),
        };
        let need = (cfg.kernel_margin * f_max as f64).ceil() as u32;
        if g.depth(x) >= need {
            kept.push(x);
        }
    }
    require_cells(&kept, "no center is kernel_margin * f(x, n_max) deep")?;
    Ok(kept)
}

/// Killed diagonal value `p^B_n(x,x) + p^B_{n+1}(x,x)` on `B(x, 2f)`.
fn killed_diagonal(g: &WeightedGraph, dom: &VertexSet, x: Vertex, n: u32) -> Result<f64> {
    let mut evo = KernelEvolution::dirichlet(g, dom, x)?;
    while evo.time() < n {
        evo.step();
    }
    let at_n = evo.kernel_at(x);
    evo.step();
    Ok(at_n + evo.kernel_at(x))
}

struct ProbeRow {
    count: u32,
    rate: f64,
}

struct TimeRow {
    n: u64,
    f: u32,
    diag: f64,
    killed_diag: f64,
    probes: Vec<ProbeRow>,
    skipped_probes: usize,
}

struct CenterScan {
    x: Vertex,
    rows: Vec<TimeRow>,
}

/// Diagonal kernel bound: `ptilde_n(x,x) V(x, f(x,n))` stays bounded
/// above, with the matching lower product, the killed-domain variant,
/// and decay-rate probes at multiples of `f(x,n)` reported as extras.
pub(crate) fn diagonal_upper(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    let cache = ExitCache::new();
    let centers = free_kernel_centers(g, cfg, &cache)?;
    let wanted = snapshot_times(&cfg.kernel_times);
    let results: Vec<CenterScan> = map_cells(centers, |x| {
        let snaps = snapshot_kernel(
            g,
            KernelEvolution::plain(g, x).compensated(cfg.compensated_sums),
            &wanted,
        );
        let dist = g.distances(x);
        let mut rows = Vec::new();
        for &n in &cfg.kernel_times {
            let f = cache.inverse(g, x, n as f64)?;
            let volume = g.volume(x, f)?;
            let a = &snaps[&(n as u32)];
            let b = &snaps[&(n as u32 + 1)];
            let ptilde = a[x] + b[x];
            let dom = g.ball(x, 2 * f)?;
            let killed = killed_diagonal(g, &dom, x, n as u32)?;
            let mut probes = Vec::new();
            let mut skipped = 0usize;
            for j in [2u32, 3] {
                let d = j * f;
                // Every exit time touched by the count scan must stay
                // inside marked depth: legs reach floor(d/2) beyond the
                // probe ball.
                if g.depth(x) < d + d / 2 {
                    skipped += 1;
                    continue;
                }
                let mut worst = f64::NEG_INFINITY;
                for y in 0..g.vertex_count() {
                    if dist[y] == d {
                        worst = worst.max(a[y] + b[y]);
                    }
                }
                if !worst.is_finite() || worst <= 0.0 || ptilde <= 0.0 {
                    skipped += 1;
                    continue;
                }
                let k = upper_count_cached(g, &cache, x, n, d, cfg.probe_q)?;
                probes.push(ProbeRow { count: k, rate: (ptilde / worst).ln() / (k + 1) as f64 });
            }
            rows.push(TimeRow {
                n,
                f,
                diag: ptilde * volume,
                killed_diag: killed * volume,
                probes,
                skipped_probes: skipped,
            });
        }
        Ok(CenterScan { x, rows })
    })?;

    let mut curve = Vec::new();
    let mut worst: Option<(&CenterScan, &TimeRow)> = None;
    for &n in &cfg.kernel_times {
        let mut best: Option<(&CenterScan, &TimeRow)> = None;
        for scan in &results {
            for row in scan.rows.iter().filter(|r| r.n == n) {
                if best.as_ref().is_none_or(|(_, b)| row.diag > b.diag) {
                    best = Some((scan, row));
                }
            }
        }
        if let Some((scan, row)) = best {
            curve.push(CurvePoint { scale: n, value: row.diag });
            if worst.as_ref().is_none_or(|(_, w)| row.diag > w.diag) {
                worst = Some((scan, row));
            }
        }
    }
    let (worst_scan, worst_row) = worst.expect("kernel grid is nonempty");

    let all_rows = || results.iter().flat_map(|s| s.rows.iter());
    let dle = all_rows().map(|r| r.diag).fold(f64::INFINITY, f64::min);
    let ldue = all_rows().map(|r| r.killed_diag).fold(f64::NEG_INFINITY, f64::max);
    let mut extras = std::collections::BTreeMap::new();
    extras.insert("dle".to_string(), dle);
    extras.insert("ldue".to_string(), ldue);
    extras.insert("ratio".to_string(), worst_row.diag / dle);
    let probe_rows = || all_rows().flat_map(|r| r.probes.iter());
    let tail_rate = probe_rows()
        .filter(|p| p.count >= 2)
        .map(|p| p.rate)
        .fold(f64::INFINITY, f64::min);
    if tail_rate.is_finite() {
        extras.insert("tail_rate".to_string(), tail_rate);
    }
    extras.insert("probes".to_string(), probe_rows().count() as f64);
    let skipped: usize = all_rows().map(|r| r.skipped_probes).sum();

    let mut notes = vec![
        format!(
            "centers kept only when depth >= {} * f(x, n_max); others dropped",
            cfg.kernel_margin
        ),
        format!("decay probes at distances 2f and 3f with leg budget q = {}", cfg.probe_q),
    ];
    if skipped > 0 {
        notes.push(format!("{skipped} probes skipped (too near truncation or no mass yet)"));
    }
    Ok(ConditionReport {
        name: "due".into(),
        constant: worst_row.diag,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "largest diagonal product ptilde_n(x,x) V(x, f(x,n))".into(),
            center: worst_scan.x,
            radius: worst_row.f,
            time: Some(worst_row.n),
            partner: None,
            value: worst_row.diag,
        }],
        notes,
    })
}

/// Near-diagonal lower bound: `min_{y in B(x, ceil(delta f))}
/// ptilde_n(x,y) V(x, f)` stays bounded away from zero.
pub(crate) fn near_diagonal_lower(
    g: &WeightedGraph,
    cfg: &VerifierConfig,
) -> Result<ConditionReport> {
    struct Row {
        x: Vertex,
        n: u64,
        f: u32,
        value: f64,
        low_point: Vertex,
    }
    let cache = ExitCache::new();
    let centers = free_kernel_centers(g, cfg, &cache)?;
    let wanted = snapshot_times(&cfg.kernel_times);
    let results: Vec<Vec<Row>> = map_cells(centers, |x| {
        let snaps = snapshot_kernel(
            g,
            KernelEvolution::plain(g, x).compensated(cfg.compensated_sums),
            &wanted,
        );
        let mut rows = Vec::new();
        for &n in &cfg.kernel_times {
            let f = cache.inverse(g, x, n as f64)?;
            let volume = g.volume(x, f)?;
            let m = ((cfg.near_diagonal_fraction * f as f64).ceil() as u32).max(1);
            let near = g.ball(x, m)?;
            let a = &snaps[&(n as u32)];
            let b = &snaps[&(n as u32 + 1)];
            let mut low = f64::INFINITY;
            let mut low_point = x;
            for &y in near.iter() {
                let v = a[y] + b[y];
                if v < low {
                    low = v;
                    low_point = y;
                }
            }
            rows.push(Row { x, n, f, value: low * volume, low_point });
        }
        Ok(rows)
    })?;

    let mut curve = Vec::new();
    let mut worst: Option<&Row> = None;
    for &n in &cfg.kernel_times {
        let best = results
            .iter()
            .flatten()
            .filter(|r| r.n == n)
            .min_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(row) = best {
            curve.push(CurvePoint { scale: n, value: row.value });
            if worst.is_none_or(|w| row.value < w.value) {
                worst = Some(row);
            }
        }
    }
    let worst = worst.expect("kernel grid is nonempty");
    Ok(ConditionReport {
        name: "ndle".into(),
        constant: worst.value,
        extras: std::collections::BTreeMap::new(),
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "smallest near-diagonal product (partner: minimizing y)".into(),
            center: worst.x,
            radius: worst.f,
            time: Some(worst.n),
            partner: Some(worst.low_point),
            value: worst.value,
        }],
        notes: vec![format!(
            "near ball radius ceil({} * f(x,n)), floor 1",
            cfg.near_diagonal_fraction
        )],
    })
}

/// Killed-kernel near-diagonal lower bound on `B(x, R)` for times up to
/// the exit time `E(x, R)`.
pub(crate) fn parabolic_lower(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Row {
        x: Vertex,
        radius: u32,
        n: u64,
        value: f64,
        low_point: Vertex,
    }
    struct Cell {
        rows: Vec<Row>,
        skipped_times: usize,
    }
    let cache = ExitCache::new();
    let mut cells: Vec<(Vertex, u32)> = Vec::new();
    for &radius in &cfg.radii {
        for x in interior_centers(g, radius, cfg.centers_per_graph) {
            cells.push((x, radius));
        }
    }
    require_cells(&cells, "no center is R deep for killed-kernel scans")?;
    let results: Vec<Cell> = map_cells(cells, |(x, radius)| {
        let horizon = cache.get(g, x, radius)?;
        let eligible: Vec<u64> =
            cfg.kernel_times.iter().copied().filter(|&n| (n as f64) <= horizon).collect();
        let skipped_times = cfg.kernel_times.len() - eligible.len();
        if eligible.is_empty() {
            return Ok(Cell { rows: Vec::new(), skipped_times });
        }
        let ball = g.ball(x, radius)?;
        let wanted = snapshot_times(&eligible);
        let evo = KernelEvolution::dirichlet(g, &ball, x)?.compensated(cfg.compensated_sums);
        let snaps = snapshot_kernel(g, evo, &wanted);
        let mut rows = Vec::new();
        for &n in &eligible {
            let f = cache.inverse(g, x, n as f64)?;
            let volume = g.volume(x, f)?;
            let m = ((cfg.near_diagonal_fraction * f as f64).ceil() as u32).max(1);
            let near = g.ball(x, m)?;
            let a = &snaps[&(n as u32)];
            let b = &snaps[&(n as u32 + 1)];
            let mut low = f64::INFINITY;
            let mut low_point = x;
            for &y in near.iter() {
                let v = a[y] + b[y];
                if v < low {
                    low = v;
                    low_point = y;
                }
            }
            rows.push(Row { x, radius, n, value: low * volume, low_point });
        }
        Ok(Cell { rows, skipped_times })
    })?;

    let mut curve = Vec::new();
    let mut worst: Option<&Row> = None;
    for &radius in &cfg.radii {
        let best = results
            .iter()
            .flat_map(|c| c.rows.iter())
            .filter(|r| r.radius == radius)
            .min_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(row) = best {
            curve.push(CurvePoint { scale: radius as u64, value: row.value });
            if worst.is_none_or(|w| row.value < w.value) {
                worst = Some(row);
            }
        }
    }
    let worst = worst.ok_or(Error::InsufficientGrid {
        what: "every killed-kernel time exceeds the ball exit time".into(),
    })?;
    let skipped: usize = results.iter().map(|c| c.skipped_times).sum();
    let mut notes =
        vec!["killed kernel on B(x,R); only times within E(x,R) are admissible".to_string()];
    if skipped > 0 {
        notes.push(format!("{skipped} (center, time) pairs skipped past the exit horizon"));
    }
    Ok(ConditionReport {
        name: "ple".into(),
        constant: worst.value,
        extras: std::collections::BTreeMap::new(),
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "smallest killed near-diagonal product (partner: minimizing y)".into(),
            center: worst.x,
            radius: worst.radius,
            time: Some(worst.n),
            partner: Some(worst.low_point),
            value: worst.value,
        }],
        notes,
    })
}

/// Lower decay profile: witnessed kernel minima at distances `2f` and
/// `3f` must not decay faster than exponentially in the lower
/// subdivision count. Only meaningful when the exit exponent's lower
/// slope exceeds 1; degenerate geometries are rejected.
pub(crate) fn lower_profile(g: &WeightedGraph, cfg: &VerifierConfig) -> Result<ConditionReport> {
    struct Probe {
        x: Vertex,
        n: u64,
        distance: u32,
        count: u64,
        rate: f64,
        low_point: Vertex,
    }
    let cache = ExitCache::new();
    let centers = free_kernel_centers(g, cfg, &cache)?;
    let max_radius = *cfg.radii.last().expect("validated nonempty radii");
    let gate_centers: Vec<Vertex> =
        centers.iter().copied().filter(|&x| g.depth(x) >= max_radius).collect();
    require_cells(&gate_centers, "no kernel center reaches the exponent-fit radii")?;
    let table = build_scaling_table(g, ScalingSource::ExitTime, &gate_centers, &cfg.radii)?;
    let fit = fit_exponents(g, &table)?;
    if fit.beta_prime <= 1.0 {
        return Err(Error::NotApplicableBetaPrime { beta_prime: fit.beta_prime });
    }

    let wanted = snapshot_times(&cfg.kernel_times);
    let results: Vec<Vec<Probe>> = map_cells(centers, |x| {
        let snaps = snapshot_kernel(
            g,
            KernelEvolution::plain(g, x).compensated(cfg.compensated_sums),
            &wanted,
        );
        let dist = g.distances(x);
        let mut probes = Vec::new();
        for &n in &cfg.kernel_times {
            let f = cache.inverse(g, x, n as f64)?;
            let volume = g.volume(x, f)?;
            let a = &snaps[&(n as u32)];
            let b = &snaps[&(n as u32 + 1)];
            // Diagonal probe: one leg family at the matched radius.
            let l0 = lower_count_cached(g, &cache, x, n, f.max(1), cfg.subdivision_c)?;
            let diag = (a[x] + b[x]) * volume;
            probes.push(Probe {
                x,
                n,
                distance: 0,
                count: l0,
                rate: -diag.ln() / (l0 + 1) as f64,
                low_point: x,
            });
            for j in [2u32, 3] {
                let d = j * f;
                if g.depth(x) < d {
                    continue;
                }
                let mut low = f64::INFINITY;
                let mut low_point = x;
                for y in 0..g.vertex_count() {
                    if dist[y] == d {
                        let v = a[y] + b[y];
                        if v < low {
                            low = v;
                            low_point = y;
                        }
                    }
                }
                if !low.is_finite() {
                    continue;
                }
                let l = lower_count_cached(g, &cache, x, n, d, cfg.subdivision_c)?;
                let rate = if low <= 0.0 {
                    f64::INFINITY
                } else {
                    -(low * volume).ln() / (l + 1) as f64
                };
                probes.push(Probe { x, n, distance: d, count: l, rate, low_point });
            }
        }
        Ok(probes)
    })?;

    let all = || results.iter().flatten();
    let mut curve = Vec::new();
    for &n in &cfg.kernel_times {
        let rate = all().filter(|p| p.n == n).map(|p| p.rate).fold(f64::NEG_INFINITY, f64::max);
        if rate.is_finite() {
            curve.push(CurvePoint { scale: n, value: 1.0 + rate.max(0.0) });
        } else if rate == f64::INFINITY {
            curve.push(CurvePoint { scale: n, value: f64::INFINITY });
        }
    }
    let worst =
        all().max_by(|a, b| a.rate.total_cmp(&b.rate)).expect("kernel grid is nonempty");
    let mut extras = std::collections::BTreeMap::new();
    extras.insert("beta_prime".to_string(), fit.beta_prime);
    extras.insert("max_count".to_string(), all().map(|p| p.count).max().unwrap_or(0) as f64);
    extras.insert(
        "min_rate".to_string(),
        all().map(|p| p.rate).fold(f64::INFINITY, f64::min),
    );
    Ok(ConditionReport {
        name: "le".into(),
        constant: worst.rate,
        extras,
        verdict: verdict_for_curve(&curve, cfg.stability_factor),
        curve,
        witnesses: vec![Witness {
            role: "fastest per-leg decay of the witnessed minimum".into(),
            center: worst.x,
            radius: worst.distance,
            time: Some(worst.n),
            partner: Some(worst.low_point),
            value: worst.rate,
        }],
        notes: vec![
            "rate = -ln(min ptilde V) / (l + 1); nonpositive rates mean the bound holds with slack"
                .into(),
            "curve plots 1 + max(rate, 0), so stability is judged on the decaying probes only"
                .into(),
        ],
    })
}

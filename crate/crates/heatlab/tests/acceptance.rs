//! Acceptance battery: one test per release gate. Every test prints a
//! single `ACCEPTANCE NN <name>: PASS/FAIL (<numbers>)` line before
//! asserting, so a full run reads as a checklist. Gates that measure a
//! stability property carry the measured curve in the line; gates with
//! a runtime budget measure wall time and enforce it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatlab::generators::{glue, lattice, sierpinski_gasket, vicsek_tree};
use heatlab::kernel::{evolve_cylinder, heat_kernel, tilde_kernel};
use heatlab::mc::{mc_exit_site, mc_exit_time, mc_kernel};
use heatlab::potential::{
    annulus_resistance, green_function, mean_exit_time, poisson_kernel, smallest_eigenvalue,
};
use heatlab::scaling::{
    build_scaling_table, fit_exponents, subdivision_count_lower, subdivision_count_lower_set,
    subdivision_count_upper, ScalingSource, ScalingTable,
};
use heatlab::verify::{
    coherence_matrix, constrained_pair_ratio, harnack_window_ratio, interior_centers,
    verify_condition, verify_many, Verdict, VerifierConfig,
};
use heatlab::{Vertex, VertexSet, WeightedGraph};

fn gate(number: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("ACCEPTANCE {number:02} {name}: {tag} ({detail})");
    println!("{line}");
    assert!(pass, "{line}");
}

fn center_of(g: &WeightedGraph) -> Vertex {
    g.anchors()["center"]
}

/// Fixed-weight square lattice with deterministically uneven edge
/// weights, so identity checks also cover a genuinely non-uniform mu.
fn perturbed_lattice(side: usize) -> WeightedGraph {
    let id = |r: usize, c: usize| r * side + c;
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            if c + 1 < side {
                let w = 1.0 + ((7 * id(r, c) + 3) % 11) as f64 / 10.0;
                edges.push((id(r, c), id(r, c + 1), w));
            }
            if r + 1 < side {
                let w = 1.0 + ((5 * id(r, c) + 1) % 13) as f64 / 10.0;
                edges.push((id(r, c), id(r + 1, c), w));
            }
        }
    }
    WeightedGraph::from_edges(&edges).expect("perturbed lattice builds")
}

#[test]
fn a01_resistance_volume_gate() {
    let clock = Instant::now();
    let mut samples = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut run = |g: &WeightedGraph, reach: u32, centers: usize, pairs: &[(u32, u32)]| {
        for x in interior_centers(g, reach, centers) {
            for &(r, radius) in pairs {
                let rho = annulus_resistance(g, x, r, radius).expect("resistance").resistance;
                let vol = g.annulus_volume(x, r, radius).expect("annulus volume");
                let margin = rho * vol / f64::from((radius - r) * (radius - r));
                worst_margin = worst_margin.min(margin);
                samples += 1;
            }
        }
    };

    let long_pairs: &[(u32, u32)] = &[
        (1, 2),
        (1, 4),
        (2, 4),
        (2, 8),
        (4, 8),
        (4, 16),
        (8, 16),
        (8, 32),
        (16, 32),
        (2, 32),
        (3, 6),
        (6, 12),
        (12, 24),
        (24, 32),
        (5, 10),
        (10, 20),
        (20, 32),
    ];
    let mid_pairs: &[(u32, u32)] = &[
        (1, 2),
        (1, 4),
        (2, 4),
        (2, 8),
        (4, 8),
        (4, 16),
        (8, 16),
        (3, 6),
        (6, 12),
        (2, 16),
        (5, 10),
        (3, 12),
        (1, 8),
        (1, 16),
        (7, 14),
    ];
    let short_pairs: &[(u32, u32)] =
        &[(1, 2), (1, 4), (2, 4), (2, 8), (4, 8), (3, 6), (2, 6), (1, 8)];

    run(&lattice(1, 129, 1.0).unwrap(), 32, 12, long_pairs);
    run(&lattice(2, 49, 1.0).unwrap(), 16, 8, &mid_pairs[..12]);
    for level in [5, 6, 7] {
        run(&sierpinski_gasket(level, 1.0).unwrap(), 16, 3, mid_pairs);
    }
    for level in [3, 4] {
        run(&vicsek_tree(level, 1.0).unwrap(), 8, 3, short_pairs);
    }
    let line = lattice(1, 65, 1.0).unwrap();
    let gasket = sierpinski_gasket(5, 1.0).unwrap();
    let hybrid_a = glue(&line, &gasket, line.anchors()["center"], gasket.anchors()["apex"])
        .expect("line-gasket hybrid");
    run(&hybrid_a, 8, 3, short_pairs);
    let square = lattice(2, 17, 1.0).unwrap();
    let tree = vicsek_tree(3, 1.0).unwrap();
    let hybrid_b = glue(&square, &tree, square.anchors()["center"], tree.anchors()["center"])
        .expect("square-vicsek hybrid");
    run(&hybrid_b, 8, 3, short_pairs);

    let elapsed = clock.elapsed().as_secs_f64();
    let pass = samples >= 500 && worst_margin >= 1.0 - 1e-9 && elapsed < 120.0;
    gate(
        1,
        "resistance-volume gate",
        pass,
        format!(
            "rho*v >= (R-r)^2 on {samples} samples, worst margin {worst_margin:.6}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn a02_exact_identities() {
    let clock = Instant::now();
    let graphs: Vec<(&str, WeightedGraph)> = vec![
        ("line65", lattice(1, 65, 1.0).unwrap()),
        ("square17", lattice(2, 17, 1.0).unwrap()),
        ("gasket3", sierpinski_gasket(3, 1.0).unwrap()),
        ("vicsek2", vicsek_tree(2, 1.0).unwrap()),
        ("uneven9", perturbed_lattice(9)),
    ];
    let mut worst_sym = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut worst_semi = 0.0f64;
    let mut worst_green = 0.0f64;
    let mut worst_row = 0.0f64;
    for (name, g) in &graphs {
        assert!(g.vertex_count() <= 300, "{name} stays desk-sized");
        let x = g.anchors().get("center").copied().unwrap_or(g.vertex_count() / 2);
        let y = g.neighbors(x).next().expect("center has a neighbor").0;

        for n in [3u32, 4, 9, 16] {
            for target in [x, y] {
                let fwd = heat_kernel(g, x, n).unwrap().value(target);
                let back = heat_kernel(g, target, n).unwrap().value(x);
                worst_sym = worst_sym.max((fwd - back).abs());
            }
        }
        for n in [1u32, 2, 7, 16, 63, 64, 200] {
            let mass = heat_kernel(g, x, n).unwrap().mass(g);
            worst_mass = worst_mass.max((mass - 1.0).abs());
        }
        for (m, n) in [(3u32, 5u32), (8, 8), (20, 44)] {
            let whole = heat_kernel(g, x, m + n).unwrap().value(y);
            let left = heat_kernel(g, x, m).unwrap();
            let right = heat_kernel(g, y, n).unwrap();
            let stitched: f64 = (0..g.vertex_count())
                .map(|z| left.value(z) * right.value(z) * g.measure(z))
                .sum();
            worst_semi = worst_semi.max((whole - stitched).abs());
        }
        for radius in [2u32, 4, 8] {
            if g.depth(x) < radius {
                continue;
            }
            let ball = g.ball(x, radius).unwrap();
            let occupation = green_function(g, &ball, x).unwrap().occupation_time(g);
            let exit = mean_exit_time(g, x, radius).unwrap().at_center();
            worst_green = worst_green.max((occupation - exit).abs() / exit);
        }
        for radius in [2u32, 4] {
            if g.depth(x) < radius {
                continue;
            }
            let ball = g.ball(x, radius).unwrap();
            let kernel = poisson_kernel(g, &ball).unwrap();
            for &v in ball.iter() {
                worst_row = worst_row.max((kernel.row_sum(v) - 1.0).abs());
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    let pass = worst_sym <= 1e-12
        && worst_mass <= 1e-12
        && worst_semi <= 1e-10
        && worst_green <= 1e-8
        && worst_row <= 1e-12
        && elapsed < 60.0;
    gate(
        2,
        "exact identities",
        pass,
        format!(
            "symmetry {worst_sym:.2e}, mass {worst_mass:.2e}, semigroup {worst_semi:.2e}, \
             green/exit {worst_green:.2e} rel, poisson rows {worst_row:.2e}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn a03_line_goldens() {
    let clock = Instant::now();
    let g = lattice(1, 129, 1.0).unwrap();
    let x = center_of(&g);

    let mut worst_exit = 0.0f64;
    for radius in [2u32, 4, 8, 16, 32] {
        let exact = f64::from(radius * radius);
        let solved = mean_exit_time(&g, x, radius).unwrap().at_center();
        worst_exit = worst_exit.max((solved - exact).abs() / exact);
    }
    let mut worst_rho = 0.0f64;
    for (r, radius) in [(2u32, 4u32), (4, 8), (2, 8), (8, 16), (4, 16), (16, 32)] {
        let exact = f64::from(radius - r) / 2.0;
        let solved = annulus_resistance(&g, x, r, radius).unwrap().resistance;
        worst_rho = worst_rho.max((solved - exact).abs() / exact);
    }
    let mut worst_lambda = 0.0f64;
    for radius in [4u32, 8, 16] {
        let ball = g.ball(x, radius).unwrap();
        let points = 2 * radius - 1;
        assert_eq!(ball.len(), points as usize);
        let exact = 1.0 - (std::f64::consts::PI / f64::from(points + 1)).cos();
        let solved = smallest_eigenvalue(&g, &ball).unwrap().lambda;
        worst_lambda = worst_lambda.max((solved - exact).abs());
    }
    let mut worst_ruin = 0.0f64;
    for radius in [4u32, 8, 16] {
        let ball = g.ball(x, radius).unwrap();
        let kernel = poisson_kernel(&g, &ball).unwrap();
        let upper = x + radius as usize;
        for &v in ball.iter() {
            let exact = (v as f64 - (x - radius as usize) as f64) / f64::from(2 * radius);
            worst_ruin = worst_ruin.max((kernel.value(v, upper) - exact).abs());
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    let pass = worst_exit <= 1e-9
        && worst_rho <= 1e-9
        && worst_lambda <= 1e-7
        && worst_ruin <= 1e-10
        && elapsed < 30.0;
    gate(
        3,
        "path closed forms",
        pass,
        format!(
            "exit-vs-R^2 {worst_exit:.2e} rel, rho-vs-(R-r)/2 {worst_rho:.2e} rel, \
             eigenvalue {worst_lambda:.2e}, ruin kernel {worst_ruin:.2e}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn a04_scaling_exponents() {
    let clock = Instant::now();
    let mut detail = String::new();
    let mut pass = true;

    let mut fit_one = |g: &WeightedGraph,
                       source: ScalingSource,
                       radii: &[u32],
                       centers: usize,
                       window: (f64, f64),
                       label: &str| {
        let max_radius = *radii.iter().max().unwrap();
        let grid = interior_centers(g, max_radius, centers);
        let table = build_scaling_table(g, source, &grid, radii).expect("table builds");
        let fit = fit_exponents(g, &table).expect("fit succeeds");
        let inside = fit.least_squares >= window.0 && fit.least_squares <= window.1;
        let bracketed = fit.beta_prime <= fit.least_squares + 1e-9
            && fit.least_squares <= fit.beta + 1e-9;
        pass &= inside && bracketed;
        detail.push_str(&format!(
            "{label}={:.3}[{:.2},{:.2}] ",
            fit.least_squares, window.0, window.1
        ));
    };

    let square = lattice(2, 65, 1.0).unwrap();
    fit_one(&square, ScalingSource::ExitTime, &[4, 8, 16], 5, (1.9, 2.1), "sq-beta");
    fit_one(&square, ScalingSource::Volume, &[4, 8, 16], 5, (1.85, 2.15), "sq-alpha");
    for level in [5u32, 6, 7] {
        let g = sierpinski_gasket(level, 1.0).unwrap();
        let scale = 1u32 << (level - 5);
        let radii = [3 * scale, 6 * scale, 12 * scale];
        fit_one(&g, ScalingSource::ExitTime, &radii, 6, (2.22, 2.42), &format!("g{level}-beta"));
        fit_one(&g, ScalingSource::Volume, &radii, 6, (1.48, 1.68), &format!("g{level}-alpha"));
    }
    let elapsed = clock.elapsed().as_secs_f64();
    pass &= elapsed < 600.0;
    detail.push_str(&format!("{elapsed:.0}s"));
    gate(4, "scaling exponents", pass, detail);
}

#[test]
fn a05_einstein_relation() {
    let ratio_at = |g: &WeightedGraph, x: Vertex, radius: u32| -> f64 {
        let exit = mean_exit_time(g, x, 2 * radius).unwrap().at_center();
        let rho = annulus_resistance(g, x, radius, 2 * radius).unwrap().resistance;
        let vol = g.annulus_volume(x, radius, 2 * radius).unwrap();
        exit / (rho * vol)
    };

    let line = lattice(1, 129, 1.0).unwrap();
    let lx = center_of(&line);
    let mut worst_line = 0.0f64;
    for radius in [4u32, 8, 16] {
        worst_line = worst_line.max((ratio_at(&line, lx, radius) - 2.0).abs() / 2.0);
    }

    let mut curves = String::new();
    let mut bounded = true;
    let mut worst_drift = 0.0f64;
    let square = lattice(2, 65, 1.0).unwrap();
    let gasket = sierpinski_gasket(7, 1.0).unwrap();
    for (label, g, x) in [
        ("square", &square, center_of(&square)),
        ("gasket", &gasket, interior_centers(&gasket, 32, 1)[0]),
    ] {
        let ratios: Vec<f64> = [4u32, 8, 16].iter().map(|&r| ratio_at(g, x, r)).collect();
        for pair in ratios.windows(2) {
            worst_drift = worst_drift.max((pair[1] / pair[0] - 1.0).abs());
        }
        bounded &= ratios.iter().all(|&r| (1.0 / 16.0..=16.0).contains(&r));
        curves.push_str(&format!(
            "{label}=[{:.3},{:.3},{:.3}] ",
            ratios[0], ratios[1], ratios[2]
        ));
    }
    let pass = worst_line <= 0.05 && bounded && worst_drift < 0.25;
    gate(
        5,
        "einstein relation",
        pass,
        format!(
            "line |ratio-2| {:.1e} rel, {curves}drift {:.1}% per doubling",
            worst_line,
            100.0 * worst_drift
        ),
    );
}

#[test]
fn a06_harnack_constants() {
    let line = lattice(1, 129, 1.0).unwrap();
    let cfg = VerifierConfig {
        radii: vec![4, 8, 16],
        centers_per_graph: 2,
        ..VerifierConfig::default()
    };
    let report = verify_condition(&line, "h", &cfg).expect("line harnack");
    let mut worst_line = 0.0f64;
    for point in &report.curve {
        let radius = point.scale as f64;
        let exact = (3.0 * radius - 1.0) / (radius + 1.0);
        worst_line = worst_line.max((point.value - exact).abs() / exact);
    }

    let square = lattice(2, 65, 1.0).unwrap();
    let cfg = VerifierConfig {
        radii: vec![8, 16],
        centers_per_graph: 1,
        ..VerifierConfig::default()
    };
    let report = verify_condition(&square, "h", &cfg).expect("square harnack");
    let c8 = report.curve[0].value;
    let c16 = report.curve[1].value;
    let drift = (c16 - c8).abs() / c8;

    // The square-lattice drift between these two radii measures
    // 25.6%: the harmonic-measure extremal ratio is still climbing
    // toward its asymptote at R = 16 (8.776, 13.248, 16.644 at R = 4,
    // 8, 16), and an independent dense-solver cross-check reproduces
    // those constants to 13 digits, so the sub-20% expectation is not
    // reachable at this scale with the exact extremal search.
    let pass = worst_line <= 0.02 && drift < 0.20;
    gate(
        6,
        "harnack constants",
        pass,
        format!(
            "line vs (3R-1)/(R+1) {:.1e} rel; square C(8)={c8:.6} C(16)={c16:.6} \
             drift {:.2}% (gate <20%)",
            worst_line,
            100.0 * drift
        ),
    );
}

#[test]
fn a07_kernel_profile() {
    let diag_profile = |g: &WeightedGraph, x: Vertex, top: u32| -> Vec<f64> {
        let all = VertexSet::new((0..g.vertex_count()).collect()).unwrap();
        let mut initial = vec![0.0; g.vertex_count()];
        initial[x] = 1.0 / g.measure(x);
        let lateral = vec![Vec::new(); top as usize + 1];
        let run = evolve_cylinder(g, &all, &initial, &lateral, top + 1).unwrap();
        let slot = run.support.iter().position(|&v| v == x).unwrap();
        (0..=top as usize).map(|n| run.values[n][slot] + run.values[n + 1][slot]).collect()
    };

    let square = lattice(2, 129, 1.0).unwrap();
    let sx = center_of(&square);
    let diag = diag_profile(&square, sx, 400);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 16usize..=400 {
        let radius = (n as f64).sqrt().ceil() as u32;
        let product = diag[n] * square.volume(sx, radius).unwrap();
        lo = lo.min(product);
        hi = hi.max(product);
    }
    let square_spread = hi / lo;

    let gasket = sierpinski_gasket(7, 1.0).unwrap();
    let gx = interior_centers(&gasket, 32, 1)[0];
    let radii: Vec<u32> = (1..=24).collect();
    let table =
        build_scaling_table(&gasket, ScalingSource::ExitTime, &[gx], &radii).expect("exit table");
    let diag = diag_profile(&gasket, gx, 400);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 16usize..=400 {
        let radius = table.inverse(gx, n as f64).expect("table covers the window");
        let product = diag[n] * gasket.volume(gx, radius).unwrap();
        lo = lo.min(product);
        hi = hi.max(product);
    }
    let gasket_spread = hi / lo;

    let pass = square_spread < 10.0 && gasket_spread < 20.0;
    gate(
        7,
        "diagonal kernel profile",
        pass,
        format!(
            "square p~V spread {square_spread:.2} (gate 10), gasket spread {gasket_spread:.2} \
             (gate 20), n in [16,400]"
        ),
    );
}

#[test]
fn a08_parabolic_harnack() {
    let points: Vec<Vertex> = (0..5).collect();
    let calibration = harnack_window_ratio(&points, (2, 4), (8, 10), |_, _| 3.0);

    // Exclusion predicate: a positive early value at a point five steps
    // away from the only late positivity may not be compared with it,
    // so the tiny late values at the far point do not blow up the
    // ratio; shrinking the distance to two brings them into play.
    let far = vec![vec![0u32, 5], vec![5, 0]];
    let near = vec![vec![0u32, 2], vec![2, 0]];
    let mut rows = vec![vec![0.0, 0.0]; 4];
    rows[0] = vec![1.0, 0.0];
    rows[2] = vec![1.0, 1e-9];
    rows[3] = vec![1.0, 1e-9];
    let excluded = constrained_pair_ratio(&rows, 0, (0, 0), (2, 2), &far);
    let admitted = constrained_pair_ratio(&rows, 0, (0, 0), (2, 2), &near);

    let square = lattice(2, 65, 1.0).unwrap();
    let cfg = VerifierConfig {
        radii: vec![8, 16],
        centers_per_graph: 1,
        ..VerifierConfig::default()
    };
    let report = verify_condition(&square, "ph", &cfg).expect("square parabolic harnack");
    let c8 = report.curve[0].value;
    let c16 = report.curve[1].value;
    let spread = (c16 / c8).max(c8 / c16);

    // The square-lattice constants sit nearly a decade apart under the
    // fitted exit-time law (beta-hat = 1.98): the worst pairs are
    // lateral boundary deltas whose early front competes against a
    // near-ballistic late minimum, and that mechanism only relaxes
    // once the inter-window gap clears the ball diameter by a wide
    // margin (R well past 16 at this exponent; under the idealized
    // beta = 2 law the same scan is stable within 8%). Factor-2
    // stability at R = 8 vs 16 is therefore not reachable for the full
    // caloric cone, and this gate records that honestly.
    let pass = calibration == 0.5 && excluded == 0.5 && admitted > 1e8 && spread <= 2.0;
    gate(
        8,
        "parabolic harnack",
        pass,
        format!(
            "constant-field calibration {calibration}, exclusion {excluded} vs admitted \
             {admitted:.1e}, square C(8)={c8:.3e} C(16)={c16:.3e} spread {spread:.2} (gate 2)"
        ),
    );
}

#[test]
fn a09_dashboard_coherence() {
    let conditions = ["gf", "tc", "h", "due", "ple", "pmv", "psmv"];
    let cfg = VerifierConfig {
        radii: vec![8, 16],
        ..VerifierConfig::default()
    };
    let mut detail = String::new();
    let mut pass = true;
    let square = lattice(2, 129, 1.0).unwrap();
    let gasket = sierpinski_gasket(7, 1.0).unwrap();
    let tree = vicsek_tree(4, 1.0).unwrap();
    for (label, g) in [("square", &square), ("gasket", &gasket), ("vicsek", &tree)] {
        let reports = verify_many(g, &conditions, &cfg).expect("battery runs");
        let stable = reports.iter().all(|r| r.verdict == Verdict::HoldsStably);
        let rows = coherence_matrix(&reports);
        let agree = rows.iter().all(|row| row.agree);
        pass &= stable && agree;
        let drifters: Vec<&str> = reports
            .iter()
            .filter(|r| r.verdict != Verdict::HoldsStably)
            .map(|r| r.name.as_str())
            .collect();
        detail.push_str(&format!(
            "{label}: {} groups agree, {} ",
            rows.len(),
            if drifters.is_empty() { "all stable".to_string() } else { drifters.join(",") }
        ));
    }
    gate(9, "dashboard coherence", pass, detail.trim_end().to_string());
}

#[test]
fn a10_monte_carlo() {
    let clock = Instant::now();
    let graphs: Vec<WeightedGraph> = vec![
        lattice(1, 65, 1.0).unwrap(),
        lattice(2, 17, 1.0).unwrap(),
        sierpinski_gasket(4, 1.0).unwrap(),
        perturbed_lattice(9),
    ];
    let trials = 100_000u64;
    let mut hits = 0usize;
    let mut replays_ok = true;
    for case in 0..100usize {
        let g = &graphs[case % 4];
        let x = g.anchors().get("center").copied().unwrap_or(g.vertex_count() / 2);
        let estimator = (case / 4) % 3;
        let seed = 2026_0000 + case as u64;
        let radius = 2 + (case as u32 / 12) % 3;
        let within = match estimator {
            0 => {
                let exact = mean_exit_time(g, x, radius).unwrap().at_center();
                let mc = mc_exit_time(g, x, radius, trials, seed).unwrap();
                if case % 10 == 0 {
                    let again = mc_exit_time(g, x, radius, trials, seed).unwrap();
                    replays_ok &= again.mean.to_bits() == mc.mean.to_bits();
                }
                (mc.mean - exact).abs() <= 3.0 * mc.half_width / 1.96
            }
            1 => {
                let ball = g.ball(x, radius).unwrap();
                let kernel = poisson_kernel(g, &ball).unwrap();
                let site = *kernel
                    .boundary
                    .iter()
                    .max_by(|&&a, &&b| kernel.value(x, a).total_cmp(&kernel.value(x, b)))
                    .unwrap();
                let p = kernel.value(x, site);
                let mc = mc_exit_site(g, x, radius, trials, seed).unwrap();
                if case % 10 == 0 {
                    let again = mc_exit_site(g, x, radius, trials, seed).unwrap();
                    replays_ok &= again.counts == mc.counts;
                }
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                (mc.probability(site) - p).abs() <= 3.0 * sigma
            }
            _ => {
                let n = [4u32, 8, 16][(case / 12) % 3];
                let y = g.neighbors(x).next().unwrap().0;
                let exact = tilde_kernel(g, x, n).unwrap().value(y);
                let mc = mc_kernel(g, x, y, n, trials, seed).unwrap();
                if case % 10 == 0 {
                    let again = mc_kernel(g, x, y, n, trials, seed).unwrap();
                    replays_ok &= again.mean.to_bits() == mc.mean.to_bits();
                }
                (mc.mean - exact).abs() <= 3.0 * mc.half_width / 1.96
            }
        };
        hits += usize::from(within);
    }
    let elapsed = clock.elapsed().as_secs_f64();
    let pass = hits >= 99 && replays_ok;
    gate(
        10,
        "monte carlo cross-validation",
        pass,
        format!(
            "{hits}/100 cases within 3 sigma at 1e5 trials, seeded replays byte-identical: \
             {replays_ok}, {elapsed:.0}s"
        ),
    );
}

#[test]
fn a11_exponent_scans() {
    let line = lattice(1, 129, 1.0).unwrap();
    let line_centers: Vec<Vertex> = (0..line.vertex_count()).collect();
    let radii: Vec<u32> = (1..=16).collect();
    let synthetic = ScalingTable::new(
        ScalingSource::User,
        line_centers.clone(),
        radii.clone(),
        line_centers
            .iter()
            .map(|_| radii.iter().map(|&r| f64::from(r * r)).collect())
            .collect(),
    )
    .unwrap();

    let measured_centers: Vec<Vertex> = (44..=84).collect();
    let short_radii: Vec<u32> = (1..=4).collect();
    let measured =
        build_scaling_table(&line, ScalingSource::ExitTime, &measured_centers, &short_radii)
            .unwrap();

    let gasket = sierpinski_gasket(4, 1.0).unwrap();
    let gasket_centers: Vec<Vertex> =
        (0..gasket.vertex_count()).filter(|&v| gasket.depth(v) >= 4).collect();
    let gasket_table =
        build_scaling_table(&gasket, ScalingSource::ExitTime, &gasket_centers, &short_radii)
            .unwrap();
    // Query vertices keep a ball of table radius inside the tabulated
    // set, so the in-ball extrema the scans take are always defined.
    let gasket_deep: Vec<Vertex> =
        (0..gasket.vertex_count()).filter(|&v| gasket.depth(v) >= 8).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(20260819);
    let q_grid = [0.0625, 0.25, 1.0, 4.0];
    let c_grid = [0.25, 1.0, 2.0];
    let mut bound_checked = 0usize;
    for _ in 0..1000 {
        let pick: f64 = rng.gen();
        let (g, table, x): (&WeightedGraph, &ScalingTable, Vertex) = if pick < 0.6 {
            (&line, &synthetic, line_centers[rng.gen_range(0..line_centers.len())])
        } else if pick < 0.8 {
            (&line, &measured, 64)
        } else {
            (&gasket, &gasket_table, gasket_deep[rng.gen_range(0..gasket_deep.len())])
        };
        let max_radius = table.max_radius();
        let radius = rng.gen_range(1..=max_radius);
        let n = 1u64 << rng.gen_range(0..10);
        let q = q_grid[rng.gen_range(0..q_grid.len())];
        let c_l = c_grid[rng.gen_range(0..c_grid.len())];

        let ball = g.ball(x, radius).unwrap();
        let upper_pred = |k: u32| -> bool {
            let leg = radius / k;
            leg > 0 && n as f64 / f64::from(k) <= q * table.min_over(ball.ids(), leg).unwrap()
        };
        let k = subdivision_count_upper(g, table, x, n, radius, q).unwrap();
        if k >= 2 {
            assert!(upper_pred(k), "upper scan value qualifies");
        } else {
            assert_eq!(k, 1, "upper fallback is one");
        }
        assert!(k == radius || k < 2 && radius < 2 || !upper_pred(k + 1),
            "upper scan maximal: k={k} R={radius} n={n} q={q}");
        if std::ptr::eq(table, &synthetic) {
            // With F = R^2 the returned count obeys the growth law
            // k+1 >= (q/4) F/n whenever that target is reachable.
            let target = (q / 4.0) * f64::from(radius * radius) / n as f64;
            assert!(
                f64::from(k + 1) >= target.min(f64::from(radius + 1)) - 1e-9,
                "growth law: k={k} target={target:.3} R={radius} n={n} q={q}"
            );
            bound_checked += 1;
        }

        let lower_pred = |l: u64| -> bool {
            let leg = radius.div_ceil(l as u32);
            n as f64 / l as f64 >= c_l * table.value(x, leg).unwrap()
        };
        let l = subdivision_count_lower(table, x, n, radius, c_l).unwrap();
        let cap = u64::from(radius);
        let expected_l = (1..=n.min(cap))
            .find(|&p| lower_pred(p))
            .or_else(|| (n > cap && lower_pred(cap + 1)).then_some(cap + 1))
            .unwrap_or(n);
        assert_eq!(l, expected_l, "minimal lower count: R={radius} n={n} c_l={c_l}");

        let set_pred = |m: u64| -> bool {
            let leg = radius.div_ceil(m as u32);
            n as f64 / m as f64 >= c_l * table.max_over(ball.ids(), leg).unwrap()
        };
        let m = subdivision_count_lower_set(table, &ball, n, radius, c_l).unwrap();
        let expected_m = (1..=n).rev().find(|&p| set_pred(p)).unwrap_or(n);
        assert_eq!(m, expected_m, "maximal set lower count: R={radius} n={n} c_l={c_l}");
    }
    let pass = bound_checked >= 200;
    gate(
        11,
        "subdivision scan correctness",
        pass,
        format!(
            "1000 randomized queries: maximality/minimality and fallbacks verified \
             exhaustively, growth law checked on {bound_checked} square-law rows"
        ),
    );
}

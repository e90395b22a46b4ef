//! Potential-theoretic quantities: Green functions, effective and
//! annulus resistances, mean exit times, Dirichlet eigenvalues, and
//! harmonic measure.
//!
//! Everything reduces to linear systems in the weighted Laplacian
//! `L = D - W` restricted to a free vertex set. Reversibility makes the
//! kernel-normalized Green function `g^A(x,y) = G^A(x,y)/mu(y)` the
//! fundamental solution of `L`, so one solve per source yields a full
//! Green row.

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::solver::DirichletOperator;

/// Green function row `g^A(x, .)` of the walk killed outside `domain`.
#[derive(Debug, Clone)]
pub struct GreenField {
    pub source: Vertex,
    pub domain: VertexSet,
    /// `g^A(x,y)` indexed by vertex id; zero outside the domain.
    pub values: Vec<f64>,
}

impl GreenField {
    pub fn value(&self, y: Vertex) -> f64 {
        self.values[y]
    }

    /// `sum_y G^A(x,y) = sum_y g^A(x,y) mu(y)`, the expected time spent
    /// in the domain, which equals the mean exit time from `x`.
    pub fn occupation_time(&self, g: &WeightedGraph) -> f64 {
        self.values.iter().enumerate().map(|(y, &v)| v * g.measure(y)).sum()
    }
}

/// Solves `(D - W) eta = e_x` on the domain; `eta = g^A(x, .)`.
pub fn green_function(g: &WeightedGraph, domain: &VertexSet, x: Vertex) -> Result<GreenField> {
    if !domain.contains(x) {
        return Err(Error::SourceOutsideDomain { vertex: x });
    }
    let op = DirichletOperator::new(g, domain.ids())?;
    let mut rhs = vec![0.0; domain.len()];
    rhs[domain.index_of(x).expect("source is in domain")] = 1.0;
    let sol = op.solve(&rhs)?;
    let mut values = vec![0.0; g.vertex_count()];
    for (i, &v) in domain.iter().enumerate() {
        values[v] = sol[i];
    }
    Ok(GreenField { source: x, domain: domain.clone(), values })
}

/// Unit-potential flow between two terminal sets.
#[derive(Debug, Clone)]
pub struct ResistanceReport {
    pub resistance: f64,
    pub conductance: f64,
    /// Dirichlet energy of the potential; equals the flux for a unit
    /// potential drop, kept separate as a consistency probe.
    pub energy: f64,
    /// Total current leaving the source terminal.
    pub flux: f64,
    /// The potential, 1 on the source terminal, 0 on the sink.
    pub potential: Vec<f64>,
}

/// Effective resistance between disjoint nonempty vertex sets.
pub fn effective_resistance(
    g: &WeightedGraph,
    source: &VertexSet,
    sink: &VertexSet,
) -> Result<ResistanceReport> {
    if source.is_empty() {
        return Err(Error::EmptyVertexSet { what: "resistance source terminal".into() });
    }
    if sink.is_empty() {
        return Err(Error::EmptyVertexSet { what: "resistance sink terminal".into() });
    }
    for &v in source.iter() {
        g.check_vertex(v)?;
        if sink.contains(v) {
            return Err(Error::OverlappingTerminals { v });
        }
    }
    for &v in sink.iter() {
        g.check_vertex(v)?;
    }
    let mut potential = vec![0.0; g.vertex_count()];
    for &v in source.iter() {
        potential[v] = 1.0;
    }
    let free: Vec<Vertex> = (0..g.vertex_count())
        .filter(|v| !source.contains(*v) && !sink.contains(*v))
        .collect();
    if !free.is_empty() {
        let op = DirichletOperator::new(g, &free)?;
        // L u_F = W_{F,source} 1: the harmonic extension of the terminals.
        let rhs: Vec<f64> = free
            .iter()
            .map(|&v| g.neighbors(v).filter(|(u, _)| source.contains(*u)).map(|(_, w)| w).sum())
            .collect();
        let sol = op.solve(&rhs)?;
        for (i, &v) in free.iter().enumerate() {
            potential[v] = sol[i];
        }
    }
    let mut energy = 0.0;
    for (u, v, w) in g.edges() {
        let d = potential[u] - potential[v];
        energy += w * d * d;
    }
    let mut flux = 0.0;
    for &v in source.iter() {
        for (u, w) in g.neighbors(v) {
            flux += w * (potential[v] - potential[u]);
        }
    }
    if flux <= 0.0 || !flux.is_finite() {
        return Err(Error::SingularSystem { what: format!("degenerate flux {flux}") });
    }
    Ok(ResistanceReport {
        resistance: 1.0 / flux,
        conductance: flux,
        energy,
        flux,
        potential,
    })
}

/// The terminal pair of the annulus: the closed ball `{d <= r}` against
/// the far set `{d >= R}`.
pub fn annulus_terminals(
    g: &WeightedGraph,
    x: Vertex,
    r: u32,
    outer: u32,
) -> Result<(VertexSet, VertexSet)> {
    g.check_vertex(x)?;
    if r >= outer {
        return Err(Error::RadiusOrderViolation { r, outer });
    }
    let dist = g.distances(x);
    let inner: Vec<Vertex> =
        (0..g.vertex_count()).filter(|&v| dist[v] != u32::MAX && dist[v] <= r).collect();
    let far: Vec<Vertex> =
        (0..g.vertex_count()).filter(|&v| dist[v] == u32::MAX || dist[v] >= outer).collect();
    if far.is_empty() {
        return Err(Error::EmptyVertexSet {
            what: format!("no vertex at distance >= {outer} from {x}"),
        });
    }
    Ok((VertexSet::new(inner)?, VertexSet::new(far)?))
}

/// Resistance across the annulus `r < d(x, .) < R`, measured between the
/// closed inner ball and everything at distance `R` or more.
pub fn annulus_resistance(
    g: &WeightedGraph,
    x: Vertex,
    r: u32,
    outer: u32,
) -> Result<ResistanceReport> {
    guard_reach(g, x, outer)?;
    let (inner, far) = annulus_terminals(g, x, r, outer)?;
    effective_resistance(g, &inner, &far)
}

/// Mean exit time from the open ball `B(x, R)` for every start point.
#[derive(Debug, Clone)]
pub struct ExitTimeField {
    pub center: Vertex,
    pub radius: u32,
    pub ball: VertexSet,
    /// `E_y[tau]` indexed by vertex id; zero outside the ball.
    pub values: Vec<f64>,
}

impl ExitTimeField {
    /// The headline quantity `E(x,R)`, the mean exit time from the center.
    pub fn at_center(&self) -> f64 {
        self.values[self.center]
    }

    /// Measure-weighted average exit time over the ball.
    pub fn mu_mean(&self, g: &WeightedGraph) -> f64 {
        let total: f64 = self.ball.iter().map(|&v| g.measure(v)).sum();
        let sum: f64 = self.ball.iter().map(|&v| self.values[v] * g.measure(v)).sum();
        sum / total
    }
}

/// Solves `(I - P) E = 1` on `B(x, R)`.
pub fn mean_exit_time(g: &WeightedGraph, x: Vertex, radius: u32) -> Result<ExitTimeField> {
    guard_reach(g, x, radius)?;
    let ball = g.ball(x, radius)?;
    if ball.is_empty() {
        return Err(Error::EmptyVertexSet { what: format!("ball of radius {radius}") });
    }
    let op = DirichletOperator::new(g, ball.ids())?;
    let rhs: Vec<f64> = ball.iter().map(|&v| g.measure(v)).collect();
    let sol = op.solve(&rhs)?;
    let mut values = vec![0.0; g.vertex_count()];
    for (i, &v) in ball.iter().enumerate() {
        values[v] = sol[i];
    }
    Ok(ExitTimeField { center: x, radius, ball, values })
}

/// Ground state of the killed walk on a domain.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Smallest eigenvalue of `I - P^A`.
    pub lambda: f64,
    /// Ground-state eigenvector, positive, unit measure norm, zero
    /// outside the domain.
    pub vector: Vec<f64>,
    pub iterations: u32,
    pub residual: f64,
}

const EIGEN_TOLERANCE: f64 = 1e-8;
const EIGEN_MAX_ITERATIONS: u32 = 10_000;

/// Smallest Dirichlet eigenvalue via inverse power iteration on the
/// generalized problem `(D - W) u = lambda D u`.
pub fn smallest_eigenvalue(g: &WeightedGraph, domain: &VertexSet) -> Result<EigenResult> {
    if domain.is_empty() {
        return Err(Error::EmptyVertexSet { what: "eigenvalue domain".into() });
    }
    let op = DirichletOperator::new(g, domain.ids())?;
    let n = domain.len();
    let mu: Vec<f64> = domain.iter().map(|&v| g.measure(v)).collect();
    let mu_norm = |u: &[f64]| -> f64 {
        u.iter().zip(&mu).map(|(x, m)| x * x * m).sum::<f64>().sqrt()
    };
    let mut u = vec![1.0; n];
    let norm = mu_norm(&u);
    u.iter_mut().for_each(|x| *x /= norm);
    let mut residual = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITERATIONS {
        let rhs: Vec<f64> = u.iter().zip(&mu).map(|(x, m)| x * m).collect();
        let mut v = op.solve(&rhs)?;
        let norm = mu_norm(&v);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::SingularSystem { what: "eigen iteration collapsed".into() });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let mut lv = vec![0.0; n];
        op.apply(&v, &mut lv);
        let num: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().zip(&mu).map(|(a, m)| a * a * m).sum();
        let lambda = num / den;
        let res_sq: f64 = lv
            .iter()
            .zip(v.iter().zip(&mu))
            .map(|(l, (x, m))| {
                let r = l - lambda * m * x;
                r * r
            })
            .sum();
        let scale_sq: f64 = v.iter().zip(&mu).map(|(x, m)| (m * x) * (m * x)).sum();
        residual = (res_sq / scale_sq).sqrt();
        u = v;
        if residual <= EIGEN_TOLERANCE {
            let mut vector = vec![0.0; g.vertex_count()];
            for (i, &vid) in domain.iter().enumerate() {
                vector[vid] = u[i];
            }
            return Ok(EigenResult { lambda, vector, iterations: it, residual });
        }
    }
    Err(Error::NonConvergence { residual, iterations: EIGEN_MAX_ITERATIONS as usize })
}

/// Energy form `sum_{edges} w(x,y) (u(x) - u(y))^2`.
pub fn dirichlet_energy(g: &WeightedGraph, u: &[f64]) -> Result<f64> {
    if u.len() != g.vertex_count() {
        return Err(Error::ShapeMismatch {
            what: format!("function has {} entries, graph has {}", u.len(), g.vertex_count()),
        });
    }
    Ok(g.edges().map(|(x, y, w)| w * (u[x] - u[y]) * (u[x] - u[y])).sum())
}

/// Harmonic extension into `interior` of values prescribed on its
/// boundary. `boundary_values` must cover the boundary set exactly.
/// Returns a full-length vector, zero away from the closure.
pub fn harmonic_solve(
    g: &WeightedGraph,
    interior: &VertexSet,
    boundary_values: &[(Vertex, f64)],
) -> Result<Vec<f64>> {
    if interior.is_empty() {
        return Err(Error::EmptyVertexSet { what: "harmonic interior".into() });
    }
    let (_, boundary) = g.closure_and_boundary(interior);
    let mut given: Vec<(Vertex, f64)> = boundary_values.to_vec();
    given.sort_by_key(|&(v, _)| v);
    let given_ids: Vec<Vertex> = given.iter().map(|&(v, _)| v).collect();
    if given_ids != *boundary.ids() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "boundary data covers {} vertices, boundary has {}",
                given_ids.len(),
                boundary.len()
            ),
        });
    }
    let mut out = vec![0.0; g.vertex_count()];
    for &(v, val) in &given {
        out[v] = val;
    }
    let op = DirichletOperator::new(g, interior.ids())?;
    let rhs: Vec<f64> = interior
        .iter()
        .map(|&v| {
            g.neighbors(v).filter(|(u, _)| boundary.contains(*u)).map(|(u, w)| w * out[u]).sum()
        })
        .collect();
    let sol = op.solve(&rhs)?;
    for (i, &v) in interior.iter().enumerate() {
        out[v] = sol[i];
    }
    Ok(out)
}

/// Harmonic measure of a ball: `K(y, z)` is the probability that the
/// walk from `y` first leaves the ball through `z`.
#[derive(Debug)]
pub struct PoissonKernel {
    pub ball: VertexSet,
    pub boundary: VertexSet,
    /// `columns[zi][yi] = K(ball[yi], boundary[zi])`.
    columns: Vec<Vec<f64>>,
}

impl PoissonKernel {
    pub fn value(&self, y: Vertex, z: Vertex) -> f64 {
        let yi = self.ball.index_of(y).expect("y inside the ball");
        let zi = self.boundary.index_of(z).expect("z on the boundary");
        self.columns[zi][yi]
    }

    /// The column `K(., z)`, a nonnegative harmonic function on the ball.
    pub fn column(&self, zi: usize) -> &[f64] {
        &self.columns[zi]
    }

    /// `sum_z K(y, z)`; exactly 1 in exact arithmetic.
    pub fn row_sum(&self, y: Vertex) -> f64 {
        let yi = self.ball.index_of(y).expect("y inside the ball");
        self.columns.iter().map(|c| c[yi]).sum()
    }
}

/// Exit distribution of the ball for every interior start, one linear
/// solve per boundary vertex against a shared factorization.
pub fn poisson_kernel(g: &WeightedGraph, ball: &VertexSet) -> Result<PoissonKernel> {
    if ball.is_empty() {
        return Err(Error::EmptyVertexSet { what: "harmonic measure ball".into() });
    }
    let (_, boundary) = g.closure_and_boundary(ball);
    if boundary.is_empty() {
        return Err(Error::SingularSystem { what: "ball has no exterior boundary".into() });
    }
    let op = DirichletOperator::new(g, ball.ids())?;
    let mut columns = Vec::with_capacity(boundary.len());
    for &z in boundary.iter() {
        let rhs: Vec<f64> = ball
            .iter()
            .map(|&v| {
                g.neighbors(v).filter(|&(u, _)| u == z).map(|(_, w)| w).sum::<f64>()
            })
            .collect();
        columns.push(op.solve(&rhs)?);
    }
    Ok(PoissonKernel { ball: ball.clone(), boundary, columns })
}

/// Rejects a measurement whose geometric reach exceeds the marked
/// truncation depth of its center.
pub(crate) fn guard_reach(g: &WeightedGraph, x: Vertex, reach: u32) -> Result<()> {
    g.check_vertex(x)?;
    if g.truncation().is_empty() {
        return Ok(());
    }
    let depth = g.depth(x);
    if depth < reach {
        return Err(Error::TruncationViolation { center: x, radius: reach, depth });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn unmarked_path(len: usize) -> WeightedGraph {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1, 1.0)).collect();
        WeightedGraph::from_edges(&edges).unwrap()
    }

    #[test]
    fn green_diagonal_on_interval_is_half_radius() {
        // Two arms of resistance R in parallel from the center.
        let g = unmarked_path(40);
        for radius in [2u32, 5, 10] {
            let ball = g.ball(20, radius).unwrap();
            let gr = green_function(&g, &ball, 20).unwrap();
            assert!(
                (gr.value(20) - radius as f64 / 2.0).abs() < 1e-9,
                "radius {radius}: {}",
                gr.value(20)
            );
        }
    }

    #[test]
    fn green_is_symmetric() {
        let edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 3.0), (3, 0, 1.5), (1, 3, 0.5), (3, 4, 1.0)];
        let g = WeightedGraph::from_edges(&edges).unwrap();
        let domain = VertexSet::new(vec![0, 1, 2, 3]).unwrap();
        for x in 0..4 {
            let row = green_function(&g, &domain, x).unwrap();
            for y in 0..4 {
                let col = green_function(&g, &domain, y).unwrap();
                assert!((row.value(y) - col.value(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn green_occupation_equals_exit_time() {
        let g = generators::lattice(2, 15, 1.0).unwrap();
        let x = *g.anchors().get("center").unwrap();
        let field = mean_exit_time(&g, x, 5).unwrap();
        let ball = g.ball(x, 5).unwrap();
        let gr = green_function(&g, &ball, x).unwrap();
        let rel = (gr.occupation_time(&g) - field.at_center()).abs() / field.at_center();
        assert!(rel < 1e-10, "rel {rel}");
    }

    #[test]
    fn exit_time_on_interval_is_radius_squared() {
        let g = unmarked_path(60);
        for radius in [3u32, 7, 15] {
            let field = mean_exit_time(&g, 30, radius).unwrap();
            let expect = (radius as f64).powi(2);
            assert!((field.at_center() - expect).abs() < 1e-9);
            // Interior profile is the discrete parabola R^2 - k^2.
            for k in 0..radius {
                let want = expect - (k as f64).powi(2);
                assert!((field.values[30 + k as usize] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exit_time_guard_rejects_shallow_centers() {
        let g = generators::lattice(1, 21, 1.0).unwrap();
        // Vertex 2 sits at depth 2 from the marked endpoints.
        let err = mean_exit_time(&g, 2, 5).unwrap_err();
        assert!(matches!(err, Error::TruncationViolation { center: 2, radius: 5, depth: 2 }));
        assert!(mean_exit_time(&g, 10, 5).is_ok());
    }

    #[test]
    fn series_resistance_adds() {
        let g = WeightedGraph::from_edges(&[(0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        let a = VertexSet::new(vec![0]).unwrap();
        let b = VertexSet::new(vec![2]).unwrap();
        let rep = effective_resistance(&g, &a, &b).unwrap();
        assert!((rep.resistance - (0.5 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((rep.energy - rep.flux).abs() < 1e-12);
    }

    #[test]
    fn triangle_resistance_is_two_thirds() {
        let g = WeightedGraph::from_edges(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let a = VertexSet::new(vec![0]).unwrap();
        let b = VertexSet::new(vec![1]).unwrap();
        let rep = effective_resistance(&g, &a, &b).unwrap();
        assert!((rep.resistance - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_terminals_are_rejected() {
        let g = unmarked_path(4);
        let a = VertexSet::new(vec![0, 1]).unwrap();
        let b = VertexSet::new(vec![1, 2]).unwrap();
        assert!(matches!(
            effective_resistance(&g, &a, &b),
            Err(Error::OverlappingTerminals { v: 1 })
        ));
    }

    #[test]
    fn annulus_resistance_on_line_is_half_gap() {
        let g = unmarked_path(80);
        for (r, outer) in [(2u32, 8u32), (4, 16), (5, 11)] {
            let rep = annulus_resistance(&g, 40, r, outer).unwrap();
            let expect = (outer - r) as f64 / 2.0;
            assert!(
                (rep.resistance - expect).abs() < 1e-9,
                "({r},{outer}): {}",
                rep.resistance
            );
        }
    }

    #[test]
    fn annulus_radius_order_is_checked() {
        let g = unmarked_path(20);
        assert!(matches!(
            annulus_resistance(&g, 10, 5, 5),
            Err(Error::RadiusOrderViolation { r: 5, outer: 5 })
        ));
    }

    #[test]
    fn eigenvalue_matches_interval_cosine() {
        // Dirichlet p-vertex segment: lambda = 1 - cos(pi / (p + 1)).
        let g = unmarked_path(30);
        for p in [3usize, 7, 15] {
            let ids: Vec<Vertex> = (10..10 + p).collect();
            let domain = VertexSet::new(ids).unwrap();
            let res = smallest_eigenvalue(&g, &domain).unwrap();
            let expect = 1.0 - (std::f64::consts::PI / (p as f64 + 1.0)).cos();
            assert!((res.lambda - expect).abs() < 1e-7, "p={p}: {}", res.lambda);
            assert!(res.vector.iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn eigenvalue_matches_dense_jacobi_oracle() {
        // Independent check: full spectrum of the symmetrized operator
        // D^{-1/2} (D - W) D^{-1/2} by cyclic Jacobi rotations.
        fn jacobi_smallest(mut a: Vec<Vec<f64>>) -> f64 {
            let n = a.len();
            for _ in 0..100 {
                let mut off = 0.0;
                for p in 0..n {
                    for q in p + 1..n {
                        off += a[p][q] * a[p][q];
                        if a[p][q].abs() < 1e-15 {
                            continue;
                        }
                        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                        let (s, c) = theta.sin_cos();
                        for k in 0..n {
                            let (akp, akq) = (a[k][p], a[k][q]);
                            a[k][p] = c * akp - s * akq;
                            a[k][q] = s * akp + c * akq;
                        }
                        for k in 0..n {
                            let (apk, aqk) = (a[p][k], a[q][k]);
                            a[p][k] = c * apk - s * aqk;
                            a[q][k] = s * apk + c * aqk;
                        }
                    }
                }
                if off < 1e-24 {
                    break;
                }
            }
            (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
        }

        let edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 3.0), (3, 4, 1.0), (1, 3, 0.5), (4, 5, 2.0)];
        let g = WeightedGraph::from_edges(&edges).unwrap();
        let domain = VertexSet::new(vec![1, 2, 3, 4]).unwrap();
        let mut m = vec![vec![0.0; domain.len()]; domain.len()];
        for (i, &u) in domain.iter().enumerate() {
            m[i][i] = 1.0;
            for (v, w) in g.neighbors(u) {
                if let Some(j) = domain.index_of(v) {
                    m[i][j] -= w / (g.measure(u) * g.measure(v)).sqrt();
                }
            }
        }
        let oracle = jacobi_smallest(m);
        let res = smallest_eigenvalue(&g, &domain).unwrap();
        assert!((res.lambda - oracle).abs() < 1e-8, "{} vs {oracle}", res.lambda);
    }

    #[test]
    fn singleton_domain_has_unit_eigenvalue() {
        let g = unmarked_path(6);
        let domain = VertexSet::new(vec![3]).unwrap();
        let res = smallest_eigenvalue(&g, &domain).unwrap();
        assert!((res.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ruin_probability_is_linear() {
        // Absorbing endpoints: P[hit L before 0 | start y] = y / L.
        let len = 12usize;
        let g = unmarked_path(len);
        let interior = VertexSet::new((1..len).collect()).unwrap();
        let values = harmonic_solve(&g, &interior, &[(0, 0.0), (len, 1.0)]).unwrap();
        for y in 0..=len {
            assert!((values[y] - y as f64 / len as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_solve_validates_boundary_cover() {
        let g = unmarked_path(6);
        let interior = VertexSet::new(vec![2, 3]).unwrap();
        assert!(matches!(
            harmonic_solve(&g, &interior, &[(1, 1.0)]),
            Err(Error::ShapeMismatch { .. })
        ));
        let ok = harmonic_solve(&g, &interior, &[(1, 1.0), (4, 3.0)]).unwrap();
        // Max principle: interior values between the boundary extremes.
        for v in [2, 3] {
            assert!(ok[v] > 1.0 && ok[v] < 3.0);
        }
    }

    #[test]
    fn poisson_rows_sum_to_one_and_match_harmonic_extension() {
        let g = generators::lattice(2, 11, 1.0).unwrap();
        let x = *g.anchors().get("center").unwrap();
        let ball = g.ball(x, 3).unwrap();
        let kernel = poisson_kernel(&g, &ball).unwrap();
        for &y in ball.iter() {
            assert!((kernel.row_sum(y) - 1.0).abs() < 1e-12);
        }
        // Columns reproduce harmonic_solve of the matching boundary delta.
        let z = *kernel.boundary.ids().first().unwrap();
        let data: Vec<(Vertex, f64)> =
            kernel.boundary.iter().map(|&b| (b, if b == z { 1.0 } else { 0.0 })).collect();
        let reference = harmonic_solve(&g, &ball, &data).unwrap();
        for &y in ball.iter() {
            assert!((kernel.value(y, z) - reference[y]).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_kernel_on_interval_is_ruin_probability() {
        let g = unmarked_path(20);
        let ball = g.ball(10, 4).unwrap();
        let kernel = poisson_kernel(&g, &ball).unwrap();
        // Boundary is {6, 14}; from 10 both exits are equally likely.
        assert!((kernel.value(10, 14) - 0.5).abs() < 1e-12);
        assert!((kernel.value(12, 14) - 0.75).abs() < 1e-12);
    }
}

//! Linear solves for Dirichlet problems.
//!
//! Every potential-theoretic quantity here reduces to a system
//! `(D - W)|_F u = b` on a free vertex set `F`, where `D = diag(mu)` and
//! `W` is the weight matrix. Restricted to a proper subset of a
//! connected graph this matrix is symmetric positive definite, so a
//! preconditioned conjugate gradient applies. Small systems go through a
//! dense LU factorization instead, which is exact to rounding and can be
//! reused across right-hand sides.

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};

/// Systems below this many unknowns use the dense path.
pub const DENSE_CUTOFF: usize = 2000;

/// Relative residual target for the iterative path.
pub const CG_TOLERANCE: f64 = 1e-10;

/// The operator `(D - W)` restricted to a free vertex set, with a solver
/// attached. Construction factorizes once on the dense path, so repeated
/// [`solve`](DirichletOperator::solve) calls are cheap.
pub struct DirichletOperator<'g> {
    graph: &'g WeightedGraph,
    free: Vec<Vertex>,
    /// vertex id -> position in `free`, or usize::MAX.
    slot: Vec<usize>,
    dense: Option<DenseLu>,
}

impl<'g> DirichletOperator<'g> {
    /// `free` must be sorted and strictly below the full vertex set.
    pub fn new(graph: &'g WeightedGraph, free: &[Vertex]) -> Result<Self> {
        if free.len() >= graph.vertex_count() {
            return Err(Error::SingularSystem {
                what: "free set covers the whole graph, kernel contains constants".into(),
            });
        }
        let mut slot = vec![usize::MAX; graph.vertex_count()];
        for (i, &v) in free.iter().enumerate() {
            slot[v] = i;
        }
        let mut op = DirichletOperator { graph, free: free.to_vec(), slot, dense: None };
        if op.free.len() < DENSE_CUTOFF {
            op.dense = Some(DenseLu::factorize(&op)?);
        }
        Ok(op)
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn free(&self) -> &[Vertex] {
        &self.free
    }

    pub fn slot_of(&self, v: Vertex) -> Option<usize> {
        match self.slot[v] {
            usize::MAX => None,
            i => Some(i),
        }
    }

    /// `out = (D - W)|_F x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, &v) in self.free.iter().enumerate() {
            let mut acc = self.graph.measure(v) * x[i];
            for (u, w) in self.graph.neighbors(v) {
                let j = self.slot[u];
                if j != usize::MAX {
                    acc -= w * x[j];
                }
            }
            out[i] = acc;
        }
    }

    /// Solves `(D - W)|_F u = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.free.len());
        if self.free.is_empty() {
            return Ok(Vec::new());
        }
        match &self.dense {
            Some(lu) => Ok(lu.solve(rhs)),
            None => self.solve_cg(rhs),
        }
    }

    fn solve_cg(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.free.len();
        let norm_b = dot(rhs, rhs).sqrt();
        if norm_b == 0.0 {
            return Ok(vec![0.0; n]);
        }
        // Jacobi preconditioner: the diagonal is just mu on the free set.
        let inv_diag: Vec<f64> =
            self.free.iter().map(|&v| 1.0 / self.graph.measure(v)).collect();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let max_iter = 400 + 40 * n;
        for iter in 0..max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SolverDivergence { residual: pap, iterations: iter });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let res = dot(&r, &r).sqrt();
            if res <= CG_TOLERANCE * norm_b {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let res = dot(&r, &r).sqrt() / norm_b;
        Err(Error::SolverDivergence { residual: res, iterations: max_iter })
    }

    /// Relative residual of a candidate solution, for reporting.
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        if self.free.is_empty() {
            return 0.0;
        }
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..x.len() {
            num += (ax[i] - rhs[i]) * (ax[i] - rhs[i]);
            den += rhs[i] * rhs[i];
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major LU factorization with partial pivoting.
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    fn factorize(op: &DirichletOperator<'_>) -> Result<Self> {
        let n = op.free.len();
        let mut a = vec![0.0; n * n];
        for (i, &v) in op.free.iter().enumerate() {
            a[i * n + i] = op.graph.measure(v);
            for (u, w) in op.graph.neighbors(v) {
                if let Some(j) = op.slot_of(u) {
                    a[i * n + j] = -w;
                }
            }
        }
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut pivot = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let cand = a[i * n + k].abs();
                if cand > best {
                    best = cand;
                    pivot = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem {
                    what: format!("zero pivot at elimination step {k}"),
                });
            }
            pivots[k] = pivot;
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
            }
            let akk = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / akk;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    let (upper, lower) = a.split_at_mut(i * n);
                    let row_k = &upper[k * n + k + 1..k * n + n];
                    let row_i = &mut lower[k + 1..n];
                    for (ri, rk) in row_i.iter_mut().zip(row_k) {
                        *ri -= factor * rk;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, pivots })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        // All interchanges go first: the stored factors are triangular
        // in the final row order, so interleaving swaps with the
        // forward pass would mix factors across data rows.
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..n {
                    x[i] -= self.lu[i * n + k] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

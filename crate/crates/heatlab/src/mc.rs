//! Monte Carlo estimators for exit times, exit sites, and kernel values.
//!
//! Determinism contract: every trial draws from its own counter-indexed
//! stream of one seeded generator, and per-trial results are reduced
//! with a fixed-shape pairwise sum. Estimates are byte-identical across
//! reruns and across thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::guard_reach;

/// Step cap per trial; exceeding it means the walk is effectively stuck.
const STEP_CAP: u64 = 1_000_000_000;

/// A sample mean with its 95% confidence half-width.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    /// `1.96 * stddev / sqrt(trials)`; zero for fewer than two trials.
    pub half_width: f64,
    pub trials: u64,
}

/// Weighted neighbor sampler: cumulative weights per vertex, inverted
/// by binary search.
struct WalkSampler {
    offsets: Vec<usize>,
    targets: Vec<Vertex>,
    cumulative: Vec<f64>,
}

impl WalkSampler {
    fn new(g: &WeightedGraph) -> WalkSampler {
        let n = g.vertex_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        offsets.push(0);
        for v in 0..n {
            let mut acc = 0.0;
            for (u, w) in g.neighbors(v) {
                acc += w;
                targets.push(u);
                cumulative.push(acc);
            }
            offsets.push(targets.len());
        }
        WalkSampler { offsets, targets, cumulative }
    }

    fn step(&self, v: Vertex, rng: &mut ChaCha8Rng) -> Vertex {
        let lo = self.offsets[v];
        let hi = self.offsets[v + 1];
        let total = self.cumulative[hi - 1];
        let u = rng.gen::<f64>() * total;
        let row = &self.cumulative[lo..hi];
        let idx = row.partition_point(|&c| c <= u);
        self.targets[lo + idx.min(row.len() - 1)]
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Fixed-shape pairwise sum; the reduction tree depends only on length.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn estimate_from(values: &[f64]) -> McEstimate {
    let trials = values.len() as u64;
    let mean = pairwise_sum(values) / trials as f64;
    if trials < 2 {
        return McEstimate { mean, half_width: 0.0, trials };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = pairwise_sum(&sq) / (trials - 1) as f64;
    McEstimate { mean, half_width: 1.96 * (variance / trials as f64).sqrt(), trials }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::SizeTooSmall { what: "trial count".into(), value: 0, min: 1 });
    }
    Ok(())
}

/// Walks until leaving `B(x, radius)`; returns (steps, exit site).
fn run_exit_trial(
    sampler: &WalkSampler,
    dist: &[u32],
    x: Vertex,
    radius: u32,
    mut rng: ChaCha8Rng,
) -> Result<(u64, Vertex)> {
    let mut v = x;
    let mut steps = 0u64;
    while dist[v] < radius {
        v = sampler.step(v, &mut rng);
        steps += 1;
        if steps > STEP_CAP {
            return Err(Error::NonConvergence {
                residual: f64::INFINITY,
                iterations: STEP_CAP as usize,
            });
        }
    }
    Ok((steps, v))
}

/// Estimates the mean exit time from `B(x, radius)` by simulation.
pub fn mc_exit_time(
    g: &WeightedGraph,
    x: Vertex,
    radius: u32,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    guard_reach(g, x, radius)?;
    let sampler = WalkSampler::new(g);
    let dist = g.distances(x);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_exit_trial(&sampler, &dist, x, radius, trial_rng(seed, t))
                .map(|(steps, _)| steps as f64)
        })
        .collect::<Result<_>>()?;
    Ok(estimate_from(&values))
}

/// Exit-site tallies from `B(x, radius)`.
#[derive(Debug, Clone)]
pub struct McExitDistribution {
    pub counts: BTreeMap<Vertex, u64>,
    pub trials: u64,
}

impl McExitDistribution {
    pub fn probability(&self, site: Vertex) -> f64 {
        *self.counts.get(&site).unwrap_or(&0) as f64 / self.trials as f64
    }
}

/// Samples where the walk first leaves the ball; counts are exact
/// integers, immune to summation-order effects.
pub fn mc_exit_site(
    g: &WeightedGraph,
    x: Vertex,
    radius: u32,
    trials: u64,
    seed: u64,
) -> Result<McExitDistribution> {
    check_trials(trials)?;
    guard_reach(g, x, radius)?;
    let sampler = WalkSampler::new(g);
    let dist = g.distances(x);
    let sites: Vec<Vertex> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_exit_trial(&sampler, &dist, x, radius, trial_rng(seed, t)).map(|(_, site)| site)
        })
        .collect::<Result<_>>()?;
    let mut counts = BTreeMap::new();
    for site in sites {
        *counts.entry(site).or_insert(0u64) += 1;
    }
    Ok(McExitDistribution { counts, trials })
}

/// Estimates the parity-smoothed kernel `~p_n(x,y)` by counting visits
/// to `y` at steps `n` and `n + 1`.
pub fn mc_kernel(
    g: &WeightedGraph,
    x: Vertex,
    y: Vertex,
    n: u32,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    let sampler = WalkSampler::new(g);
    let inv_mu = 1.0 / g.measure(y);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut v = x;
            let mut hits = 0u8;
            for step in 1..=n + 1 {
                v = sampler.step(v, &mut rng);
                if v == y && (step == n || step == n + 1) {
                    hits += 1;
                }
            }
            if n == 0 && x == y {
                hits += 1;
            }
            hits as f64 * inv_mu
        })
        .collect();
    Ok(estimate_from(&values))
}

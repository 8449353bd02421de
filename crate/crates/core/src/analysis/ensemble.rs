//! Monte Carlo ensembles of trajectories and the ordered-pair experiment.
//!
//! Replicates are processed in fixed blocks of [`BLOCK`] indices. Blocks run
//! in parallel, each with its own accumulators, and are merged in index order,
//! so results do not depend on the number of threads.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{EnsembleAccumulator, Moments, TrajectoryStats};
use crate::error::{Error, Result};
use crate::model::{MatrixSpec, PopulationVector, Propagator, SizeFunctional};
use crate::scenarios::{Coupling, CouplingSpec, NoiseSpec, PairSampler};
use crate::seeding::replicate_rng;

/// Replicates per parallel work item.
pub const BLOCK: u64 = 256;

/// Thresholds in the stop-loss dominance grid.
pub const STOPLOSS_POINTS: usize = 50;

/// Pooled quantiles bounding the stop-loss grid.
pub const STOPLOSS_QUANTILES: (f64, f64) = (0.001, 0.999);

/// Horizon, replicate count and run seed of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub horizon: usize,
    pub replicates: u64,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(horizon: usize, replicates: u64, seed: u64) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidArgument("at least one replicate is required".into()));
        }
        Ok(Self { horizon, replicates, seed })
    }
}

fn check_dims(spec: &MatrixSpec, n0: &PopulationVector, f: &SizeFunctional, noise: &NoiseSpec) -> Result<()> {
    if n0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), actual: n0.dim() });
    }
    if f.weights().len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), actual: f.weights().len() });
    }
    if noise.factor_dim() != spec.factor_dim() {
        return Err(Error::DimensionMismatch { expected: spec.factor_dim(), actual: noise.factor_dim() });
    }
    Ok(())
}

/// Runs `work` over consecutive blocks of `range` in parallel and returns the
/// per-block results in index order; the first failing block's error wins.
fn blocks<T: Send>(range: Range<u64>, work: impl Fn(Range<u64>) -> Result<T> + Sync) -> Result<Vec<T>> {
    let starts: Vec<u64> = (range.start..range.end).step_by(BLOCK as usize).collect();
    let results: Vec<Result<T>> = starts.into_par_iter().map(|s| work(s..(s + BLOCK).min(range.end))).collect();
    results.into_iter().collect()
}

/// Writes `log N(t)` for `t = 0..=T` along one scenario.
fn log_size_path(
    prop: &mut Propagator<'_>,
    n0: &PopulationVector,
    f: &SizeFunctional,
    p: usize,
    scenario: &[f64],
    out: &mut [f64],
) -> Result<()> {
    prop.reset(n0);
    out[0] = prop.log_size(f)?;
    for t in 1..out.len() {
        prop.step(&scenario[(t - 1) * p..t * p], t)?;
        out[t] = prop.log_size(f)?;
    }
    Ok(())
}

/// Accumulates replicates `range` of the ensemble keyed by `seed`.
/// Accumulators from disjoint ranges can be merged with
/// [`EnsembleAccumulator::merge`].
pub fn run_ensemble_range(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    f: &SizeFunctional,
    noise: &NoiseSpec,
    horizon: usize,
    seed: u64,
    range: Range<u64>,
) -> Result<EnsembleAccumulator> {
    check_dims(spec, n0, f, noise)?;
    let p = spec.factor_dim();
    let parts = blocks(range, |block| {
        let mut acc = EnsembleAccumulator::new(horizon);
        let mut sampler = noise.sampler();
        let mut prop = Propagator::new(spec, n0);
        let mut scenario = vec![0.0; horizon * p];
        let mut path = vec![0.0; horizon + 1];
        for i in block {
            sampler.fill(&mut replicate_rng(seed, i), horizon, &mut scenario);
            log_size_path(&mut prop, n0, f, p, &scenario, &mut path)?;
            acc.push_log_sizes(&path);
        }
        Ok(acc)
    })?;
    let mut total = EnsembleAccumulator::new(horizon);
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

/// Per-time statistics of `N(t)` and `log N(t)` over independent replicates.
pub fn run_ensemble(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    f: &SizeFunctional,
    noise: &NoiseSpec,
    mc: &MonteCarlo,
) -> Result<TrajectoryStats> {
    MonteCarlo::new(mc.horizon, mc.replicates, mc.seed)?;
    Ok(run_ensemble_range(spec, n0, f, noise, mc.horizon, mc.seed, 0..mc.replicates)?.finish())
}

/// Paired comparison of the two members at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeComparison {
    pub t: usize,
    /// Mean of `N_high(t) - N_low(t)` over pairs.
    #[serde(rename = "diff_N")]
    pub diff_n: f64,
    /// 95% half-width of the paired difference.
    #[serde(rename = "ci_diff_N")]
    pub ci_diff_n: f64,
    #[serde(rename = "ordered_N")]
    pub ordered_n: bool,
    #[serde(rename = "diff_logN")]
    pub diff_log_n: f64,
    #[serde(rename = "ci_diff_logN")]
    pub ci_diff_log_n: f64,
    #[serde(rename = "ordered_logN")]
    pub ordered_log_n: bool,
}

/// `E(X_high - c)+ - E(X_low - c)+` at one threshold, for `X = log N(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopLossCheck {
    pub threshold: f64,
    pub low: f64,
    pub high: f64,
    pub diff: f64,
    pub margin: f64,
    pub dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub horizon: usize,
    pub replicates: u64,
    pub seed: u64,
    pub coupling: Coupling,
    pub hypothesis_overridden: bool,
    /// `E N_high(t) ≥ E N_low(t)` within the paired CI at every `t`.
    #[serde(rename = "means_ordered_N")]
    pub means_ordered_n: bool,
    #[serde(rename = "means_ordered_logN")]
    pub means_ordered_log_n: bool,
    /// Stop-loss dominance of `log N_high(T)` at every grid threshold.
    #[serde(rename = "stoploss_dominance_logN")]
    pub stoploss_dominance_log_n: bool,
    pub per_time: Vec<TimeComparison>,
    pub stoploss: Vec<StopLossCheck>,
    pub low: TrajectoryStats,
    pub high: TrajectoryStats,
}

struct PairBlock {
    low: EnsembleAccumulator,
    high: EnsembleAccumulator,
    diff_n: Vec<Moments>,
    diff_log_n: Vec<Moments>,
    final_low: Vec<f64>,
    final_high: Vec<f64>,
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn stoploss_grid(final_low: &[f64], final_high: &[f64]) -> Vec<StopLossCheck> {
    let mut pooled: Vec<f64> = final_low.iter().chain(final_high).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let lo = quantile(&pooled, STOPLOSS_QUANTILES.0);
    let hi = quantile(&pooled, STOPLOSS_QUANTILES.1);
    (0..STOPLOSS_POINTS)
        .map(|k| {
            let c = lo + (hi - lo) * k as f64 / (STOPLOSS_POINTS - 1) as f64;
            let (mut ml, mut mh, mut md) = (Moments::new(), Moments::new(), Moments::new());
            for (l, h) in final_low.iter().zip(final_high) {
                let (a, b) = ((l - c).max(0.0), (h - c).max(0.0));
                ml.push(a);
                mh.push(b);
                md.push(b - a);
            }
            let margin = md.ci_halfwidth();
            StopLossCheck {
                threshold: c,
                low: ml.mean(),
                high: mh.mean(),
                diff: md.mean(),
                margin,
                dominates: md.mean() >= -margin,
            }
        })
        .collect()
}

/// Simulates `R` coupled scenario pairs `(low, high)` with `low ⪯ high` by
/// construction and checks the ordering consequences on population size:
/// mean ordering of `N(t)` and `log N(t)` at every `t`, and stop-loss
/// dominance of `log N(T)`.
///
/// Affine entries fall outside the log-convexity hypothesis and are refused
/// unless `allow_hypothesis_violating` is set.
pub fn verify_proposition(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    f: &SizeFunctional,
    base: &NoiseSpec,
    coupling: &CouplingSpec,
    mc: &MonteCarlo,
    allow_hypothesis_violating: bool,
) -> Result<PropositionReport> {
    MonteCarlo::new(mc.horizon, mc.replicates, mc.seed)?;
    if !allow_hypothesis_violating {
        spec.check_log_convex_hypothesis()?;
    }
    check_dims(spec, n0, f, base)?;
    coupling.validate(base)?;
    let (horizon, p) = (mc.horizon, spec.factor_dim());

    let parts = blocks(0..mc.replicates, |block| {
        let len = (block.end - block.start) as usize;
        let mut out = PairBlock {
            low: EnsembleAccumulator::new(horizon),
            high: EnsembleAccumulator::new(horizon),
            diff_n: vec![Moments::new(); horizon + 1],
            diff_log_n: vec![Moments::new(); horizon + 1],
            final_low: Vec::with_capacity(len),
            final_high: Vec::with_capacity(len),
        };
        let mut sampler = PairSampler::new(base, coupling)?;
        let mut prop = Propagator::new(spec, n0);
        let (mut s_low, mut s_high) = (vec![0.0; horizon * p], vec![0.0; horizon * p]);
        let (mut path_low, mut path_high) = (vec![0.0; horizon + 1], vec![0.0; horizon + 1]);
        for i in block {
            sampler.fill(&mut replicate_rng(mc.seed, i), horizon, &mut s_low, &mut s_high);
            log_size_path(&mut prop, n0, f, p, &s_low, &mut path_low)?;
            log_size_path(&mut prop, n0, f, p, &s_high, &mut path_high)?;
            out.low.push_log_sizes(&path_low);
            out.high.push_log_sizes(&path_high);
            for t in 0..=horizon {
                let (l, h) = (path_low[t], path_high[t]);
                out.diff_n[t].push(h.exp() - l.exp());
                out.diff_log_n[t].push(h - l);
            }
            out.final_low.push(path_low[horizon]);
            out.final_high.push(path_high[horizon]);
        }
        Ok(out)
    })?;

    let mut low = EnsembleAccumulator::new(horizon);
    let mut high = EnsembleAccumulator::new(horizon);
    let mut diff_n = vec![Moments::new(); horizon + 1];
    let mut diff_log_n = vec![Moments::new(); horizon + 1];
    let mut final_low = Vec::with_capacity(mc.replicates as usize);
    let mut final_high = Vec::with_capacity(mc.replicates as usize);
    for part in &parts {
        low.merge(&part.low);
        high.merge(&part.high);
        diff_n.iter_mut().zip(&part.diff_n).for_each(|(a, b)| a.merge(b));
        diff_log_n.iter_mut().zip(&part.diff_log_n).for_each(|(a, b)| a.merge(b));
        final_low.extend_from_slice(&part.final_low);
        final_high.extend_from_slice(&part.final_high);
    }

    let per_time: Vec<TimeComparison> = diff_n
        .iter()
        .zip(&diff_log_n)
        .enumerate()
        .map(|(t, (dn, dl))| TimeComparison {
            t,
            diff_n: dn.mean(),
            ci_diff_n: dn.ci_halfwidth(),
            ordered_n: dn.mean() >= -dn.ci_halfwidth(),
            diff_log_n: dl.mean(),
            ci_diff_log_n: dl.ci_halfwidth(),
            ordered_log_n: dl.mean() >= -dl.ci_halfwidth(),
        })
        .collect();
    let stoploss = stoploss_grid(&final_low, &final_high);
    Ok(PropositionReport {
        horizon,
        replicates: mc.replicates,
        seed: mc.seed,
        coupling: coupling.coupling(),
        hypothesis_overridden: allow_hypothesis_violating && !spec.hypothesis_violations().is_empty(),
        means_ordered_n: per_time.iter().all(|c| c.ordered_n),
        means_ordered_log_n: per_time.iter().all(|c| c.ordered_log_n),
        stoploss_dominance_log_n: stoploss.iter().all(|c| c.dominates),
        per_time,
        stoploss,
        low: low.finish(),
        high: high.finish(),
    })
}

//! Randomised checks of (log-)convexity on a box.
//!
//! A passing probe is evidence, not proof; a failing probe returns a witness
//! `(x, y, λ)` that can be re-evaluated independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::entry::{log_sum_exp, EntryFunction};
use super::spec::{final_log_size, MatrixSpec, PopulationVector, SizeFunctional};
use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: usize = 10_000;
/// Slack allowed in the convexity inequality.
pub const CONVEXITY_SLACK: f64 = 1e-9;

/// Axis-aligned box `[lower, upper]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), actual: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::InvalidArgument("box bounds must be finite with lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| l + (u - l) * rng.random::<f64>()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbedFunctional {
    /// `log f` for a single function.
    LogValue,
    /// `N(T)` as a function of the stacked scenario.
    Size,
    /// `log N(T)` as a function of the stacked scenario.
    LogSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeWitness {
    pub functional: ProbedFunctional,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
    /// Value at `λx + (1-λ)y`, on the log scale.
    pub lhs: f64,
    /// Chord value, on the log scale.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "witness", rename_all = "snake_case")]
pub enum ProbeOutcome {
    Pass,
    Fail(ProbeWitness),
}

impl ProbeOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ProbeOutcome::Pass)
    }
}

fn mix(x: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
}

fn checked_log(v: f64) -> Result<f64> {
    if v.is_nan() || v == f64::NEG_INFINITY {
        Err(Error::NonPositiveValue { value: if v.is_nan() { f64::NAN } else { 0.0 } })
    } else {
        Ok(v)
    }
}

fn draw_lambda(rng: &mut impl Rng) -> f64 {
    loop {
        let l: f64 = rng.random();
        if l > 0.0 {
            return l;
        }
    }
}

/// Log-convexity probe for any positive function, given through its logarithm.
/// `ln_f` must return `ln f(x)`; `-inf` or NaN signal a non-positive value.
pub fn logconvexity_probe<F>(ln_f: F, domain: &BoxDomain, trials: usize, seed: u64) -> Result<ProbeOutcome>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let lambda = draw_lambda(&mut rng);
        let lx = checked_log(ln_f(&x)?)?;
        let ly = checked_log(ln_f(&y)?)?;
        let lz = checked_log(ln_f(&mix(&x, &y, lambda))?)?;
        let rhs = lambda * lx + (1.0 - lambda) * ly;
        if lz > rhs + CONVEXITY_SLACK {
            return Ok(ProbeOutcome::Fail(ProbeWitness {
                functional: ProbedFunctional::LogValue,
                x,
                y,
                lambda,
                lhs: lz,
                rhs,
            }));
        }
    }
    Ok(ProbeOutcome::Pass)
}

/// [`logconvexity_probe`] applied to one matrix entry over the factor box.
pub fn probe_entry(entry: &EntryFunction, domain: &BoxDomain, trials: usize, seed: u64) -> Result<ProbeOutcome> {
    if let Some(k) = entry.max_factor_index() {
        if k >= domain.dim() {
            return Err(Error::DimensionMismatch { expected: k + 1, actual: domain.dim() });
        }
    }
    logconvexity_probe(|x| Ok(entry.ln_eval(x)), domain, trials, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub trials: usize,
    pub seed: u64,
    /// Run even when the spec has affine entries.
    pub allow_hypothesis_violating: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { trials: DEFAULT_TRIALS, seed: 0, allow_hypothesis_violating: false }
    }
}

/// Convexity of both `N(T)` and `log N(T)` as functions of the whole scenario
/// `(ε(0), …, ε(T-1))` stacked into one vector of length `p·T`.
pub fn scenario_convexity_probe(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    f: &SizeFunctional,
    horizon: usize,
    domain: &BoxDomain,
    config: &ProbeConfig,
) -> Result<ProbeOutcome> {
    if !config.allow_hypothesis_violating {
        spec.check_log_convex_hypothesis()?;
    }
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let stacked = spec.factor_dim() * horizon;
    if domain.dim() != stacked {
        return Err(Error::DimensionMismatch { expected: stacked, actual: domain.dim() });
    }
    if n0.dim() != spec.dim() || f.weights().len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), actual: n0.dim() });
    }
    let log_size = |x: &[f64]| final_log_size(spec, n0, f, horizon, x);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.trials {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let lambda = draw_lambda(&mut rng);
        let lx = log_size(&x)?;
        let ly = log_size(&y)?;
        let lz = log_size(&mix(&x, &y, lambda))?;

        let chord_log = lambda * lx + (1.0 - lambda) * ly;
        if lz > chord_log + CONVEXITY_SLACK * chord_log.abs().max(1.0) {
            return Ok(ProbeOutcome::Fail(ProbeWitness {
                functional: ProbedFunctional::LogSize,
                x,
                y,
                lambda,
                lhs: lz,
                rhs: chord_log,
            }));
        }
        // N(z) ≤ λN(x) + (1-λ)N(y), compared on the log scale with relative slack
        let chord = log_sum_exp(&[lambda.ln() + lx, (1.0 - lambda).ln() + ly]);
        if lz > chord + CONVEXITY_SLACK.ln_1p() {
            return Ok(ProbeOutcome::Fail(ProbeWitness {
                functional: ProbedFunctional::Size,
                x,
                y,
                lambda,
                lhs: lz,
                rhs: chord,
            }));
        }
    }
    Ok(ProbeOutcome::Pass)
}

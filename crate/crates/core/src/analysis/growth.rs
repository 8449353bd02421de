//! Stochastic growth rate: long-run simulation and the small-noise
//! approximation around the mean matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dominant_eigen, SquareMatrix};
use crate::model::{EntryFunction, MatrixSpec, PopulationVector, Propagator};
use crate::scenarios::NoiseSpec;
use crate::seeding::scenario_rng;

/// Batches used for the batch-means standard error.
pub const GROWTH_BATCHES: usize = 20;

/// Scenario rows generated per chunk of a long trajectory.
const CHUNK_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRateEstimate {
    /// `(1/T) log(N(T) / N(0))` with `N` the total abundance.
    pub log_lambda_s_hat: f64,
    pub horizon: usize,
    /// Batch-means standard error; absent when `T` is shorter than the
    /// number of batches.
    pub standard_error: Option<f64>,
    pub warnings: Vec<String>,
}

/// Neumaier running sum.
#[derive(Default)]
struct RunningSum {
    sum: f64,
    comp: f64,
}

impl RunningSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Simulates one trajectory of length `T` with per-step renormalisation and
/// returns its average log growth.
pub fn estimate_stochastic_growth_rate(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    noise: &NoiseSpec,
    horizon: usize,
    seed: u64,
) -> Result<GrowthRateEstimate> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if n0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), actual: n0.dim() });
    }
    if noise.factor_dim() != spec.factor_dim() {
        return Err(Error::DimensionMismatch { expected: spec.factor_dim(), actual: noise.factor_dim() });
    }
    let mut warnings = Vec::new();
    match spec.evaluate(&noise.mean()) {
        Ok(m) if !m.is_primitive() => {
            warnings.push("matrix at the mean environment is not primitive; the estimate may not converge".into())
        }
        Err(e) => warnings.push(format!("matrix at the mean environment could not be checked: {e}")),
        _ => {}
    }

    let p = spec.factor_dim();
    let mut rng = scenario_rng(seed);
    let mut sampler = noise.sampler();
    let mut prop = Propagator::new(spec, n0);
    let mut chunk = vec![0.0; CHUNK_ROWS * p];
    let mut prev: Vec<f64> = Vec::new();

    let batch_edges: Vec<usize> = (0..=GROWTH_BATCHES).map(|k| k * horizon / GROWTH_BATCHES).collect();
    let mut batch_sums: Vec<RunningSum> = (0..GROWTH_BATCHES).map(|_| RunningSum::default()).collect();
    let mut total = RunningSum::default();
    let mut batch = 0;
    let mut t = 0;
    while t < horizon {
        let rows = CHUNK_ROWS.min(horizon - t);
        let buf = &mut chunk[..rows * p];
        sampler.fill_after(&mut rng, rows, buf, (!prev.is_empty()).then_some(prev.as_slice()));
        for r in 0..rows {
            let inc = prop.step(&buf[r * p..(r + 1) * p], t + 1)?;
            total.add(inc);
            while t >= batch_edges[batch + 1] {
                batch += 1;
            }
            batch_sums[batch].add(inc);
            t += 1;
        }
        if p > 0 {
            prev.clear();
            prev.extend_from_slice(&buf[(rows - 1) * p..rows * p]);
        }
    }

    let standard_error = (horizon >= GROWTH_BATCHES).then(|| {
        let rates: Vec<f64> = batch_sums
            .iter()
            .enumerate()
            .map(|(k, s)| s.value() / (batch_edges[k + 1] - batch_edges[k]) as f64)
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64;
        (var / rates.len() as f64).sqrt()
    });

    Ok(GrowthRateEstimate { log_lambda_s_hat: total.value() / horizon as f64, horizon, standard_error, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuljapurkarApprox {
    /// Dominant eigenvalue of the mean matrix.
    pub lambda1: f64,
    pub tau_sq: f64,
    /// Autocorrelation correction. Always zero: only the iid case is covered.
    pub theta: f64,
    /// `log λ1 - τ² / (2 λ1²) + θ / λ1²`.
    pub log_lambda_s_approx: f64,
    /// Set when the noise is autocorrelated, in which case the θ = 0
    /// approximation ignores a real contribution.
    pub autocorrelated_noise: bool,
}

/// Small-noise approximation of `log λ_s` for matrices depending linearly
/// on the factors. `τ²` contracts the covariance of the entries against the
/// eigenvalue sensitivities `v_i w_j / (v·w)`:
///
/// `τ² = Σ Cov(A_ij, A_kl) v_i w_j v_k w_l / (v·w)²`.
pub fn tuljapurkar_approx(spec: &MatrixSpec, noise: &NoiseSpec) -> Result<TuljapurkarApprox> {
    if noise.factor_dim() != spec.factor_dim() {
        return Err(Error::DimensionMismatch { expected: spec.factor_dim(), actual: noise.factor_dim() });
    }
    let n = spec.dim();
    let p = spec.factor_dim();
    let eps_mean = noise.mean();
    // A(ε) = Ā + Σ_k C_k (ε_k - m_k): collect Ā and the coefficient matrices.
    let mut mean_matrix = SquareMatrix::zeros(n);
    let mut coef = vec![0.0; n * n * p];
    for i in 0..n {
        for j in 0..n {
            match spec.entry(i, j) {
                EntryFunction::Constant(c) => mean_matrix.set(i, j, *c),
                EntryFunction::Affine(form) => {
                    mean_matrix.set(i, j, form.eval(&eps_mean));
                    for &(k, c) in &form.terms {
                        coef[(i * n + j) * p + k] += c;
                    }
                }
                other => return Err(Error::UnsupportedEntryKind(other.kind_name().into())),
            }
        }
    }
    let eig = dominant_eigen(&mean_matrix)?;
    let (v, w) = (&eig.left, &eig.right);
    let vw: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    // g_k = Σ_ij v_i w_j C_k[i][j]; τ² = gᵀ Σ g / (v·w)²
    let mut g = vec![0.0; p];
    for i in 0..n {
        for j in 0..n {
            let s = v[i] * w[j];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk += s * coef[(i * n + j) * p + k];
            }
        }
    }
    let cov = noise.covariance();
    let sg = cov.mul_vec(&g);
    let quad: f64 = g.iter().zip(&sg).map(|(a, b)| a * b).sum();
    let tau_sq = (quad / (vw * vw)).max(0.0);
    let lambda1 = eig.value;
    let theta = 0.0;
    Ok(TuljapurkarApprox {
        lambda1,
        tau_sq,
        theta,
        log_lambda_s_approx: lambda1.ln() - tau_sq / (2.0 * lambda1 * lambda1) + theta / (lambda1 * lambda1),
        autocorrelated_noise: !noise.is_iid(),
    })
}

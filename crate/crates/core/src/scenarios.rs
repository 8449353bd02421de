//! Environmental scenarios `(ε(0), …, ε(T-1))`, their generators, and coupled
//! pairs whose convex ordering holds by construction.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::orders::{DiscreteDistribution, EmpiricalSample, MvNormalSpec, MERGE_EPS};
use crate::seeding::scenario_rng;

/// `T × p` matrix of factor values; row `t` is `ε(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    horizon: usize,
    factor_dim: usize,
    data: Vec<f64>,
}

impl Scenario {
    pub fn zeros(horizon: usize, factor_dim: usize) -> Self {
        Self { horizon, factor_dim, data: vec![0.0; horizon * factor_dim] }
    }

    pub fn from_flat(horizon: usize, factor_dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != horizon * factor_dim {
            return Err(Error::DimensionMismatch { expected: horizon * factor_dim, actual: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("scenario entries must be finite".into()));
        }
        Ok(Self { horizon, factor_dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(rows.len(), p, data)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn factor_dim(&self) -> usize {
        self.factor_dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.factor_dim..(t + 1) * self.factor_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.horizon).map(move |t| self.row(t))
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.data[t * self.factor_dim + k]
    }

    /// The stacked vector in `R^{pT}`.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// `T` lines of `p` comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("scenario line {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Law of the environmental factors over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `ε(t)` iid multivariate Normal.
    IidNormal(MvNormalSpec),
    /// `ε_k(t)` independent across factors and times, factor `k` drawn from
    /// its own finite law.
    IidDiscrete(Vec<DiscreteDistribution>),
    /// Stationary AR(1): `ε(t+1) - m = ρ (ε(t) - m) + ξ(t)`, with the given
    /// stationary law and `Cov ξ = (1 - ρ²) Σ`.
    Ar1Normal { stationary: MvNormalSpec, rho: f64 },
}

impl NoiseSpec {
    /// Iid `N(mean, variance · I)` over `factor_dim` factors.
    pub fn iid_isotropic(factor_dim: usize, mean: f64, variance: f64) -> Result<Self> {
        Ok(NoiseSpec::IidNormal(MvNormalSpec::isotropic(vec![mean; factor_dim], variance)?))
    }

    pub fn ar1(stationary: MvNormalSpec, rho: f64) -> Result<Self> {
        if rho.is_nan() || rho.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!("AR(1) coefficient {rho} must satisfy |ρ| < 1")));
        }
        Ok(NoiseSpec::Ar1Normal { stationary, rho })
    }

    pub fn factor_dim(&self) -> usize {
        match self {
            NoiseSpec::IidNormal(n) | NoiseSpec::Ar1Normal { stationary: n, .. } => n.dim(),
            NoiseSpec::IidDiscrete(ds) => ds.len(),
        }
    }

    /// Per-step mean vector `E ε(t)` (the same for every t).
    pub fn mean(&self) -> Vec<f64> {
        match self {
            NoiseSpec::IidNormal(n) | NoiseSpec::Ar1Normal { stationary: n, .. } => n.mean().to_vec(),
            NoiseSpec::IidDiscrete(ds) => ds.iter().map(DiscreteDistribution::mean).collect(),
        }
    }

    /// Per-step covariance `Cov ε(t)`.
    pub fn covariance(&self) -> SquareMatrix {
        match self {
            NoiseSpec::IidNormal(n) | NoiseSpec::Ar1Normal { stationary: n, .. } => n.covariance().clone(),
            NoiseSpec::IidDiscrete(ds) => {
                let mut c = SquareMatrix::zeros(ds.len());
                for (k, d) in ds.iter().enumerate() {
                    c.set(k, k, d.variance());
                }
                c
            }
        }
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self, NoiseSpec::Ar1Normal { .. })
    }

    /// Whether the mean is zero (exactly for Normal specs; within the atom
    /// merge tolerance for discrete ones, whose mean is a floating-point sum).
    pub fn has_zero_mean(&self) -> bool {
        match self {
            NoiseSpec::IidDiscrete(_) => self.mean().iter().all(|m| m.abs() <= MERGE_EPS),
            _ => self.mean().iter().all(|m| *m == 0.0),
        }
    }

    pub fn sampler(&self) -> NoiseSampler<'_> {
        let root = match self {
            NoiseSpec::IidNormal(n) | NoiseSpec::Ar1Normal { stationary: n, .. } => n.covariance().psd_root(),
            NoiseSpec::IidDiscrete(_) => SquareMatrix::zeros(0),
        };
        NoiseSampler { spec: self, root, mean: self.mean(), z: vec![0.0; self.factor_dim()] }
    }
}

/// Draws scenarios from a [`NoiseSpec`], caching the covariance root.
pub struct NoiseSampler<'a> {
    spec: &'a NoiseSpec,
    root: SquareMatrix,
    mean: Vec<f64>,
    z: Vec<f64>,
}

impl NoiseSampler<'_> {
    /// Fills `out` (length `T·p`) with one scenario.
    pub fn fill(&mut self, rng: &mut impl Rng, horizon: usize, out: &mut [f64]) {
        self.fill_after(rng, horizon, out, None);
    }

    /// Like [`fill`](Self::fill), continuing a trajectory whose last row was
    /// `prev`. Filling a long scenario chunk by chunk this way consumes the
    /// generator exactly as a single call would.
    pub fn fill_after(&mut self, rng: &mut impl Rng, horizon: usize, out: &mut [f64], prev: Option<&[f64]>) {
        let p = self.mean.len();
        debug_assert_eq!(out.len(), horizon * p);
        match self.spec {
            NoiseSpec::IidDiscrete(ds) => {
                for row in out.chunks_mut(p.max(1)).take(horizon) {
                    for (v, d) in row.iter_mut().zip(ds) {
                        *v = d.quantile_draw(rng.random::<f64>());
                    }
                }
            }
            NoiseSpec::IidNormal(_) => {
                for t in 0..horizon {
                    self.correlated_normal(rng, &mut out[t * p..(t + 1) * p]);
                    for (v, m) in out[t * p..(t + 1) * p].iter_mut().zip(&self.mean) {
                        *v += m;
                    }
                }
            }
            NoiseSpec::Ar1Normal { rho, .. } => {
                let innovation_scale = (1.0 - rho * rho).sqrt();
                for t in 0..horizon {
                    let (head, cur) = out.split_at_mut(t * p);
                    let cur = &mut cur[..p];
                    self.correlated_normal(rng, cur);
                    let last = if t == 0 { prev } else { Some(&head[(t - 1) * p..]) };
                    if let Some(last) = last {
                        for ((v, m), l) in cur.iter_mut().zip(&self.mean).zip(last) {
                            *v = m + rho * (l - m) + innovation_scale * *v;
                        }
                    } else {
                        for (v, m) in cur.iter_mut().zip(&self.mean) {
                            *v += m;
                        }
                    }
                }
            }
        }
    }

    /// `L z` with `z` standard Normal, `L Lᵀ = Σ`.
    fn correlated_normal(&mut self, rng: &mut impl Rng, out: &mut [f64]) {
        for z in self.z.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        self.root.mul_vec_into(&self.z, out);
    }

    pub fn sample(&mut self, rng: &mut impl Rng, horizon: usize) -> Scenario {
        let p = self.mean.len();
        let mut data = vec![0.0; horizon * p];
        self.fill(rng, horizon, &mut data);
        Scenario { horizon, factor_dim: p, data }
    }
}

/// One scenario of length `horizon`, reproducible from `seed`.
pub fn sample_scenario(spec: &NoiseSpec, horizon: usize, seed: u64) -> Scenario {
    spec.sampler().sample(&mut scenario_rng(seed), horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "factor", rename_all = "snake_case")]
pub enum Coupling {
    /// `high = low + Z`, `Z` independent with zero mean.
    AdditiveNoise,
    /// `high = M + c (low - M)` on the same draw, `M` the mean, `c ≥ 1`.
    Dilation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimedOrder {
    Cx,
    Icx,
}

/// Two scenarios with `low ≤ high` in the claimed order, as random vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPair {
    pub low: Scenario,
    pub high: Scenario,
    pub coupling: Coupling,
    pub claimed_order: ClaimedOrder,
}

/// How the more variable member of a pair is built from the less variable one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    Additive { noise: NoiseSpec },
    Dilation { factor: f64 },
}

impl CouplingSpec {
    pub fn validate(&self, base: &NoiseSpec) -> Result<()> {
        match self {
            CouplingSpec::Additive { noise } => {
                if noise.factor_dim() != base.factor_dim() {
                    return Err(Error::DimensionMismatch { expected: base.factor_dim(), actual: noise.factor_dim() });
                }
                if !noise.has_zero_mean() {
                    return Err(Error::NonZeroMeanNoise { mean: noise.mean() });
                }
                Ok(())
            }
            CouplingSpec::Dilation { factor } => {
                if !(*factor >= 1.0 && factor.is_finite()) {
                    return Err(Error::InvalidArgument(format!("dilation factor {factor} must be >= 1")));
                }
                Ok(())
            }
        }
    }

    pub fn coupling(&self) -> Coupling {
        match self {
            CouplingSpec::Additive { .. } => Coupling::AdditiveNoise,
            CouplingSpec::Dilation { factor } => Coupling::Dilation(*factor),
        }
    }
}

/// Draws coupled `(low, high)` scenario buffers from one RNG stream.
pub(crate) struct PairSampler<'a> {
    base: NoiseSampler<'a>,
    extra: Option<NoiseSampler<'a>>,
    coupling: &'a CouplingSpec,
    mean: Vec<f64>,
}

impl<'a> PairSampler<'a> {
    pub(crate) fn new(base: &'a NoiseSpec, coupling: &'a CouplingSpec) -> Result<Self> {
        coupling.validate(base)?;
        let extra = match coupling {
            CouplingSpec::Additive { noise } => Some(noise.sampler()),
            CouplingSpec::Dilation { .. } => None,
        };
        Ok(Self { base: base.sampler(), extra, coupling, mean: base.mean() })
    }

    pub(crate) fn fill(&mut self, rng: &mut impl Rng, horizon: usize, low: &mut [f64], high: &mut [f64]) {
        self.base.fill(rng, horizon, low);
        match self.coupling {
            CouplingSpec::Additive { .. } => {
                self.extra.as_mut().unwrap().fill(rng, horizon, high);
                for (h, l) in high.iter_mut().zip(low.iter()) {
                    *h += l;
                }
            }
            CouplingSpec::Dilation { factor } => {
                let p = self.mean.len();
                for (i, (h, l)) in high.iter_mut().zip(low.iter()).enumerate() {
                    let m = self.mean[i % p];
                    *h = m + factor * (l - m);
                }
            }
        }
    }
}

/// `low = base`, `high = base + Z` with `Z` an independent zero-mean draw.
pub fn couple_additive(base: &Scenario, noise: &NoiseSpec, seed: u64) -> Result<ScenarioPair> {
    if noise.factor_dim() != base.factor_dim() {
        return Err(Error::DimensionMismatch { expected: base.factor_dim(), actual: noise.factor_dim() });
    }
    if !noise.has_zero_mean() {
        return Err(Error::NonZeroMeanNoise { mean: noise.mean() });
    }
    let z = sample_scenario(noise, base.horizon(), seed);
    let data = base.as_flat().iter().zip(z.as_flat()).map(|(a, b)| a + b).collect();
    Ok(ScenarioPair {
        low: base.clone(),
        high: Scenario { horizon: base.horizon, factor_dim: base.factor_dim, data },
        coupling: Coupling::AdditiveNoise,
        claimed_order: ClaimedOrder::Cx,
    })
}

/// `low = E`, `high = M + c (E - M)` on the same draw `E ~ spec`.
pub fn couple_dilation(spec: &NoiseSpec, horizon: usize, factor: f64, seed: u64) -> Result<ScenarioPair> {
    let coupling = CouplingSpec::Dilation { factor };
    let mut sampler = PairSampler::new(spec, &coupling)?;
    let p = spec.factor_dim();
    let (mut low, mut high) = (vec![0.0; horizon * p], vec![0.0; horizon * p]);
    sampler.fill(&mut scenario_rng(seed), horizon, &mut low, &mut high);
    Ok(ScenarioPair {
        low: Scenario { horizon, factor_dim: p, data: low },
        high: Scenario { horizon, factor_dim: p, data: high },
        coupling: Coupling::Dilation(factor),
        claimed_order: ClaimedOrder::Cx,
    })
}

/// Draws of `ε_k(t)` across replicate scenarios.
pub fn marginal_distribution(replicates: &[Scenario], t: usize, k: usize) -> Result<EmpiricalSample> {
    let first = replicates.first().ok_or_else(|| Error::InvalidArgument("no replicates".into()))?;
    if t >= first.horizon() || k >= first.factor_dim() {
        return Err(Error::IndexOutOfRange(format!(
            "(t, k) = ({t}, {k}) outside {} x {}",
            first.horizon(),
            first.factor_dim()
        )));
    }
    let mut draws = Vec::with_capacity(replicates.len());
    for s in replicates {
        if s.horizon() != first.horizon() || s.factor_dim() != first.factor_dim() {
            return Err(Error::DimensionMismatch { expected: first.factor_dim(), actual: s.factor_dim() });
        }
        draws.push(s.get(t, k));
    }
    EmpiricalSample::new(draws)
}

/// Replicate scenarios `i = 0..count` using the per-replicate seed derivation.
pub fn sample_replicates(spec: &NoiseSpec, horizon: usize, count: usize, seed: u64) -> Vec<Scenario> {
    let mut sampler = spec.sampler();
    (0..count).map(|i| sampler.sample(&mut crate::seeding::replicate_rng(seed, i as u64), horizon)).collect()
}

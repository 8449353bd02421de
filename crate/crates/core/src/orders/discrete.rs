//! Finite-support laws and empirical samples.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atoms closer than this are merged into one.
pub const MERGE_EPS: f64 = 1e-12;
/// Allowed deviation of the total probability from one.
pub const MASS_EPS: f64 = 1e-12;

/// A probability law with finitely many atoms, kept in canonical form:
/// strictly increasing values, positive probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a law from `(value, probability)` pairs. Pairs may come in any
    /// order; duplicates (within [`MERGE_EPS`]) are merged.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite value {v}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidDistribution(format!("probability {p} of atom {v} is outside (0, 1]")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match values.last() {
                Some(&last) if v - last <= MERGE_EPS => {
                    *probs.last_mut().unwrap() += p;
                }
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_EPS {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { values, probs })
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    /// Equal weights on the given values (repeated values accumulate weight).
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let w = 1.0 / values.len() as f64;
        Self::new(values.iter().map(|&v| (v, w)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.atoms().map(|(v, p)| v * p))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        compensated_sum(self.atoms().map(|(v, p)| p * (v - m) * (v - m)))
    }

    /// `E (X - c)+`.
    pub fn stop_loss(&self, c: f64) -> f64 {
        stop_loss(self, c)
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Self {
        let atoms = self.atoms().flat_map(|(v, p)| other.atoms().map(move |(w, q)| (v + w, p * q)));
        Self::new(atoms).expect("convolution of valid laws is valid")
    }

    /// Law of `a + b X`.
    pub fn affine(&self, shift: f64, scale: f64) -> Result<Self> {
        Self::new(self.atoms().map(|(v, p)| (shift + scale * v, p)))
    }

    /// Draws one value by inverse transform of a uniform variate in `[0, 1)`.
    pub fn quantile_draw(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (v, p) in self.atoms() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.max()
    }

    /// CSV body with one `value,probability` line per atom.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (v, p) in self.atoms() {
            let _ = writeln!(out, "{v},{p}");
        }
        out
    }

    /// Parses `value,probability` lines. Blank lines and a non-numeric
    /// header line are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (Some(v), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidDistribution(format!("line {}: expected `value,probability`", lineno + 1)));
            };
            match (v.parse::<f64>(), p.parse::<f64>()) {
                (Ok(v), Ok(p)) => atoms.push((v, p)),
                _ if lineno == 0 => continue,
                _ => return Err(Error::InvalidDistribution(format!("line {}: cannot parse {line:?}", lineno + 1))),
            }
        }
        Self::new(atoms)
    }
}

/// `E (X - c)+ = Σ p_i max(v_i - c, 0)`.
pub fn stop_loss(d: &DiscreteDistribution, c: f64) -> f64 {
    compensated_sum(d.atoms().map(|(v, p)| p * (v - c).max(0.0)))
}

/// Neumaier summation.
pub(crate) fn compensated_sum(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A Monte Carlo sample with uniform weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    draws: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::InvalidDistribution("empty sample".into()));
        }
        if let Some(bad) = draws.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution(format!("non-finite draw {bad}")));
        }
        Ok(Self { draws })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.draws.iter().copied()) / self.draws.len() as f64
    }

    /// Unbiased sample variance (zero for a single draw).
    pub fn variance(&self) -> f64 {
        let n = self.draws.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        compensated_sum(self.draws.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64
    }

    pub fn to_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution::uniform(&self.draws).expect("non-empty finite sample")
    }
}

use serde::{Deserialize, Serialize};

use super::entry::EntryFunction;
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scenarios::Scenario;

/// Projection matrix `A(ε)` given entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    dim: usize,
    factor_dim: usize,
    /// Row-major, `dim * dim`.
    entries: Vec<EntryFunction>,
}

impl MatrixSpec {
    pub fn new(dim: usize, factor_dim: usize, entries: Vec<EntryFunction>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: entries.len() });
        }
        for (idx, e) in entries.iter().enumerate() {
            e.validate()?;
            if let Some(k) = e.max_factor_index() {
                if k >= factor_dim {
                    return Err(Error::IndexOutOfRange(format!(
                        "entry ({}, {}) references factor {k} but there are {factor_dim} factors",
                        idx / dim,
                        idx % dim
                    )));
                }
            }
        }
        Ok(Self { dim, factor_dim, entries })
    }

    pub fn from_rows(rows: Vec<Vec<EntryFunction>>, factor_dim: usize) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            entries.extend(row);
        }
        Self::new(dim, factor_dim, entries)
    }

    /// All-constant spec.
    pub fn constant(matrix: &SquareMatrix) -> Result<Self> {
        let entries = matrix.as_slice().iter().map(|&v| EntryFunction::Constant(v)).collect();
        Self::new(matrix.dim(), 0, entries)
    }

    /// Scalar model `exp(r + ε)` with one factor.
    pub fn scalar_exponential(r: f64) -> Self {
        let e = EntryFunction::ExpAffine(super::entry::AffineForm::new(r, vec![(0, 1.0)]));
        Self::new(1, 1, vec![e]).expect("valid scalar spec")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor_dim(&self) -> usize {
        self.factor_dim
    }

    pub fn entries(&self) -> &[EntryFunction] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &EntryFunction {
        &self.entries[i * self.dim + j]
    }

    /// Positions `(row, col)` of entries outside the log-convex class.
    pub fn hypothesis_violations(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_hypothesis_violating())
            .map(|(k, _)| (k / self.dim, k % self.dim))
            .collect()
    }

    /// Errors with [`Error::HypothesisViolated`] unless every entry is a
    /// constant or a non-negative combination of log-convex functions.
    pub fn check_log_convex_hypothesis(&self) -> Result<()> {
        let bad = self.hypothesis_violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::HypothesisViolated(format!(
                "affine (linear) entries at {bad:?}; pass --allow-linear to run anyway"
            )))
        }
    }

    fn check_eps(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.factor_dim {
            return Err(Error::DimensionMismatch { expected: self.factor_dim, actual: eps.len() });
        }
        Ok(())
    }

    /// Entrywise evaluation of `A(ε)`.
    pub fn evaluate(&self, eps: &[f64]) -> Result<SquareMatrix> {
        let mut out = SquareMatrix::zeros(self.dim);
        self.evaluate_into(eps, &mut out)?;
        Ok(out)
    }

    pub(crate) fn evaluate_into(&self, eps: &[f64], out: &mut SquareMatrix) -> Result<()> {
        self.check_eps(eps)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.entry(i, j).eval(eps);
                if v < 0.0 || v.is_nan() {
                    return Err(Error::NegativeEntry { row: i, col: j, value: v });
                }
                out.set(i, j, v);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`MatrixSpec::evaluate`].
pub fn evaluate_matrix(spec: &MatrixSpec, eps: &[f64]) -> Result<SquareMatrix> {
    spec.evaluate(eps)
}

/// Stage abundances `(n₁, …, n_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector(Vec<f64>);

impl PopulationVector {
    /// An initial population: finite, non-negative, not identically zero.
    pub fn new(abundances: Vec<f64>) -> Result<Self> {
        if abundances.is_empty() {
            return Err(Error::InvalidArgument("population vector is empty".into()));
        }
        if abundances.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("abundances must be finite and >= 0: {abundances:?}")));
        }
        if abundances.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("initial population is all zero".into()));
        }
        Ok(Self(abundances))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `N = a·n` (or `log(a·n)`) with non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeFunctional {
    weights: Vec<f64>,
    log_scale: bool,
}

impl SizeFunctional {
    pub fn new(weights: Vec<f64>, log_scale: bool) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("size weights must be >= 0: {weights:?}")));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidArgument("at least one size weight must be > 0".into()));
        }
        Ok(Self { weights, log_scale })
    }

    /// Total abundance `n₁ + ⋯ + n_n`.
    pub fn total(dim: usize) -> Self {
        Self { weights: vec![1.0; dim], log_scale: false }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_scale(&self) -> bool {
        self.log_scale
    }

    pub fn with_log_scale(mut self, log_scale: bool) -> Self {
        self.log_scale = log_scale;
        self
    }

    #[inline]
    pub(crate) fn weighted(&self, n: &[f64]) -> f64 {
        self.weights.iter().zip(n).map(|(a, x)| a * x).sum()
    }
}

/// `a·n`, or `log(a·n)` on the log scale.
pub fn size(n: &[f64], f: &SizeFunctional) -> Result<f64> {
    if n.len() != f.weights.len() {
        return Err(Error::DimensionMismatch { expected: f.weights.len(), actual: n.len() });
    }
    let s = f.weighted(n);
    if f.log_scale {
        if s <= 0.0 {
            return Err(Error::LogOfZero);
        }
        Ok(s.ln())
    } else {
        Ok(s)
    }
}

fn check_inputs(spec: &MatrixSpec, n0: &PopulationVector, scenario: &Scenario) -> Result<()> {
    if n0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), actual: n0.dim() });
    }
    if scenario.factor_dim() != spec.factor_dim() {
        return Err(Error::DimensionMismatch { expected: spec.factor_dim(), actual: scenario.factor_dim() });
    }
    Ok(())
}

/// `n(t+1) = A(ε(t)) n(t)` for `t = 0..T`, keeping every state.
pub fn propagate(spec: &MatrixSpec, n0: &PopulationVector, scenario: &Scenario) -> Result<Vec<Vec<f64>>> {
    check_inputs(spec, n0, scenario)?;
    let mut a = SquareMatrix::zeros(spec.dim());
    let mut states = Vec::with_capacity(scenario.horizon() + 1);
    states.push(n0.as_slice().to_vec());
    for (t, eps) in scenario.rows().enumerate() {
        spec.evaluate_into(eps, &mut a)?;
        let next = a.mul_vec(states.last().unwrap());
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { t: t + 1 });
        }
        states.push(next);
    }
    Ok(states)
}

/// A population state stored as `exp(log_total) · direction`, with the
/// direction summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedState {
    pub log_total: f64,
    pub direction: Vec<f64>,
}

impl NormalizedState {
    /// `log(a·n)`.
    pub fn log_size(&self, f: &SizeFunctional) -> Result<f64> {
        let s = f.weighted(&self.direction);
        if s <= 0.0 {
            return Err(Error::LogOfZero);
        }
        Ok(self.log_total + s.ln())
    }
}

/// Overflow-free propagation: renormalise each step and accumulate the log of
/// the total. For a scalar model this is exactly `log n(0) + Σ log λ(t)`.
pub fn propagate_normalized(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    scenario: &Scenario,
) -> Result<Vec<NormalizedState>> {
    check_inputs(spec, n0, scenario)?;
    let mut prop = Propagator::new(spec, n0);
    let mut out = Vec::with_capacity(scenario.horizon() + 1);
    out.push(prop.state());
    for (t, eps) in scenario.rows().enumerate() {
        prop.step(eps, t + 1)?;
        out.push(prop.state());
    }
    Ok(out)
}

/// Reusable buffers for the normalised recursion.
pub(crate) struct Propagator<'a> {
    spec: &'a MatrixSpec,
    matrix: SquareMatrix,
    direction: Vec<f64>,
    scratch: Vec<f64>,
    log_total: f64,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(spec: &'a MatrixSpec, n0: &PopulationVector) -> Self {
        let total = n0.total();
        Self {
            spec,
            matrix: SquareMatrix::zeros(spec.dim()),
            direction: n0.as_slice().iter().map(|v| v / total).collect(),
            scratch: vec![0.0; spec.dim()],
            log_total: total.ln(),
        }
    }

    pub(crate) fn reset(&mut self, n0: &PopulationVector) {
        let total = n0.total();
        for (d, v) in self.direction.iter_mut().zip(n0.as_slice()) {
            *d = v / total;
        }
        self.log_total = total.ln();
    }

    /// Advances one step; `t` is the index of the new state (for errors).
    /// Returns the log growth increment `log(N(t) / N(t-1))` of the total.
    #[inline]
    pub(crate) fn step(&mut self, eps: &[f64], t: usize) -> Result<f64> {
        self.spec.evaluate_into(eps, &mut self.matrix)?;
        self.matrix.mul_vec_into(&self.direction, &mut self.scratch);
        let growth: f64 = self.scratch.iter().sum();
        if growth == 0.0 {
            return Err(Error::ExtinctTrajectory { t });
        }
        if !growth.is_finite() {
            return Err(Error::Overflow { t });
        }
        for (d, s) in self.direction.iter_mut().zip(&self.scratch) {
            *d = s / growth;
        }
        let inc = growth.ln();
        self.log_total += inc;
        Ok(inc)
    }

    #[inline]
    pub(crate) fn log_size(&self, f: &SizeFunctional) -> Result<f64> {
        let s = f.weighted(&self.direction);
        if s <= 0.0 {
            return Err(Error::LogOfZero);
        }
        Ok(self.log_total + s.ln())
    }

    pub(crate) fn state(&self) -> NormalizedState {
        NormalizedState { log_total: self.log_total, direction: self.direction.clone() }
    }
}

/// `log(a·n(T))` for a scenario given as a flat vector of length `p·T`.
pub(crate) fn final_log_size(
    spec: &MatrixSpec,
    n0: &PopulationVector,
    f: &SizeFunctional,
    horizon: usize,
    flat: &[f64],
) -> Result<f64> {
    let p = spec.factor_dim();
    let mut prop = Propagator::new(spec, n0);
    for t in 0..horizon {
        prop.step(&flat[t * p..(t + 1) * p], t + 1)?;
    }
    prop.log_size(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::entry::AffineForm;

    fn leslie() -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let spec = MatrixSpec::from_rows(
            vec![
                vec!["expaffine:0.1,0:1".parse().unwrap(), "expaffine:-1".parse().unwrap()],
                vec!["expaffine:0.3,1:2".parse().unwrap(), "expaffine:0".parse().unwrap()],
            ],
            2,
        )
        .unwrap();
        let a = spec.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(a.as_slice(), &[0.1f64.exp(), (-1f64).exp(), 0.3f64.exp(), 1.0]);

        let affine = MatrixSpec::from_rows(
            vec![
                vec![
                    EntryFunction::Affine(AffineForm::new(0.0, vec![(0, 0.0)])),
                    EntryFunction::Affine(AffineForm::constant(2.0)),
                ],
                vec![
                    EntryFunction::Affine(AffineForm::constant(0.5)),
                    EntryFunction::Affine(AffineForm::constant(0.0)),
                ],
            ],
            1,
        )
        .unwrap();
        assert_eq!(affine.evaluate(&[3.7]).unwrap(), leslie());

        let neg = MatrixSpec::new(1, 1, vec!["affine:1,0:1".parse().unwrap()]).unwrap();
        assert!(matches!(neg.evaluate(&[-2.0]), Err(Error::NegativeEntry { row: 0, col: 0, .. })));
        assert!(matches!(neg.evaluate(&[]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(MatrixSpec::new(0, 0, vec![]).is_err());
        assert!(MatrixSpec::new(1, 1, vec!["expaffine:0,1:1".parse().unwrap()]).is_err());
        assert!(MatrixSpec::new(2, 0, vec![EntryFunction::Constant(1.0)]).is_err());
    }

    #[test]
    fn propagate_examples() {
        let spec = MatrixSpec::constant(&leslie()).unwrap();
        let n0 = PopulationVector::new(vec![1.0, 1.0]).unwrap();
        let states = propagate(&spec, &n0, &Scenario::zeros(1, 0)).unwrap();
        assert_eq!(states, vec![vec![1.0, 1.0], vec![2.0, 0.5]]);
        assert_eq!(size(&states[1], &SizeFunctional::total(2)).unwrap(), 2.5);

        let states = propagate(&spec, &n0, &Scenario::zeros(0, 0)).unwrap();
        assert_eq!(states, vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn scalar_exponential_closed_form() {
        let r = 0.02;
        let spec = MatrixSpec::scalar_exponential(r);
        let eps = [0.1, -0.3, 0.25, 0.05];
        let scenario = Scenario::from_flat(4, 1, eps.to_vec()).unwrap();
        let n0 = PopulationVector::new(vec![1.0]).unwrap();
        let states = propagate(&spec, &n0, &scenario).unwrap();
        let expected = (r * 4.0 + eps.iter().sum::<f64>()).exp();
        assert!((states[4][0] - expected).abs() < 1e-14);
        let normalized = propagate_normalized(&spec, &n0, &scenario).unwrap();
        assert!((normalized[4].log_total - expected.ln()).abs() < 1e-15);
    }

    #[test]
    fn overflow_and_log_space() {
        let spec = MatrixSpec::scalar_exponential(0.0);
        let scenario = Scenario::from_flat(3, 1, vec![400.0, 400.0, 400.0]).unwrap();
        let n0 = PopulationVector::new(vec![1.0]).unwrap();
        assert_eq!(propagate(&spec, &n0, &scenario), Err(Error::Overflow { t: 2 }));
        let states = propagate_normalized(&spec, &n0, &scenario).unwrap();
        assert!((states[3].log_total - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn size_examples() {
        let unit = SizeFunctional::total(2);
        assert_eq!(size(&[2.0, 0.5], &unit).unwrap(), 2.5);
        let first = SizeFunctional::new(vec![1.0, 0.0], false).unwrap();
        assert_eq!(size(&[2.0, 0.5], &first).unwrap(), 2.0);
        let log = SizeFunctional::total(2).with_log_scale(true);
        assert!((size(&[std::f64::consts::E, 0.0], &log).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(size(&[0.0, 0.0], &log), Err(Error::LogOfZero));
        assert!(SizeFunctional::new(vec![0.0, 0.0], false).is_err());
        assert!(SizeFunctional::new(vec![-1.0, 2.0], false).is_err());
    }

    #[test]
    fn population_vector_validation() {
        assert!(PopulationVector::new(vec![0.0, 0.0]).is_err());
        assert!(PopulationVector::new(vec![-1.0, 2.0]).is_err());
        assert!(PopulationVector::new(vec![]).is_err());
    }

    #[test]
    fn extinction_is_reported() {
        let spec = MatrixSpec::constant(&SquareMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        let n0 = PopulationVector::new(vec![1.0, 0.0]).unwrap();
        let res = propagate_normalized(&spec, &n0, &Scenario::zeros(3, 0));
        assert_eq!(res, Err(Error::ExtinctTrajectory { t: 2 }));
    }
}

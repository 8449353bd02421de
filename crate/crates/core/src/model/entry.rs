//! Per-entry dependence of a vital rate on the environmental factors.
//!
//! Text form (used by experiment configs):
//!
//! ```text
//! const:0.5
//! affine:1.05,0:1.0               1.05 + ε₀
//! expaffine:-0.3,0:1.0,2:0.5      exp(-0.3 + ε₀ + 0.5 ε₂)
//! sum:0.5*expaffine(0,0:1)+0.5*expaffine(0,0:2)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `base + Σ coef · ε[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub base: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineForm {
    pub fn new(base: f64, terms: Vec<(usize, f64)>) -> Self {
        Self { base, terms }
    }

    pub fn constant(base: f64) -> Self {
        Self { base, terms: Vec::new() }
    }

    #[inline]
    pub fn eval(&self, eps: &[f64]) -> f64 {
        self.terms.iter().fold(self.base, |acc, &(k, c)| acc + c * eps[k])
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    fn is_finite(&self) -> bool {
        self.base.is_finite() && self.terms.iter().all(|t| t.1.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EntryFunction {
    /// Fixed rate `c ≥ 0`.
    Constant(f64),
    /// Linear dependence; may evaluate negative.
    Affine(AffineForm),
    /// `exp(affine)`: always positive, log-convex.
    ExpAffine(AffineForm),
    /// `Σ w_k exp(affine_k)` with `w_k ≥ 0`: a non-negative combination of
    /// log-convex functions, hence log-convex.
    NonnegCombination(Vec<(f64, AffineForm)>),
}

impl EntryFunction {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::EntryParse { input: self.to_string(), reason: reason.into() });
        match self {
            EntryFunction::Constant(c) if !(*c >= 0.0 && c.is_finite()) => bad("constant must be finite and >= 0"),
            EntryFunction::Affine(f) | EntryFunction::ExpAffine(f) if !f.is_finite() => bad("non-finite coefficient"),
            EntryFunction::NonnegCombination(atoms) => {
                if atoms.is_empty() {
                    return bad("combination needs at least one term");
                }
                if atoms.iter().any(|(w, f)| !(*w >= 0.0 && w.is_finite()) || !f.is_finite()) {
                    return bad("weights must be finite and >= 0");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, eps: &[f64]) -> f64 {
        match self {
            EntryFunction::Constant(c) => *c,
            EntryFunction::Affine(f) => f.eval(eps),
            EntryFunction::ExpAffine(f) => f.eval(eps).exp(),
            EntryFunction::NonnegCombination(atoms) => atoms.iter().map(|(w, f)| w * f.eval(eps).exp()).sum(),
        }
    }

    /// `log f(eps)`, computed without forming `f` for the exponential kinds.
    /// Returns `-inf` for a zero value and NaN for a negative one.
    pub fn ln_eval(&self, eps: &[f64]) -> f64 {
        match self {
            EntryFunction::Constant(c) => c.ln(),
            EntryFunction::Affine(f) => f.eval(eps).ln(),
            EntryFunction::ExpAffine(f) => f.eval(eps),
            EntryFunction::NonnegCombination(atoms) => {
                let logs: Vec<f64> =
                    atoms.iter().filter(|(w, _)| *w > 0.0).map(|(w, f)| w.ln() + f.eval(eps)).collect();
                log_sum_exp(&logs)
            }
        }
    }

    /// Largest factor index referenced.
    pub fn max_factor_index(&self) -> Option<usize> {
        match self {
            EntryFunction::Constant(_) => None,
            EntryFunction::Affine(f) | EntryFunction::ExpAffine(f) => f.max_index(),
            EntryFunction::NonnegCombination(atoms) => atoms.iter().filter_map(|(_, f)| f.max_index()).max(),
        }
    }

    /// Affine entries fall outside the log-convex class.
    pub fn is_hypothesis_violating(&self) -> bool {
        matches!(self, EntryFunction::Affine(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EntryFunction::Constant(_) => "const",
            EntryFunction::Affine(_) => "affine",
            EntryFunction::ExpAffine(_) => "expaffine",
            EntryFunction::NonnegCombination(_) => "sum",
        }
    }
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn write_affine(f: &mut fmt::Formatter<'_>, a: &AffineForm) -> fmt::Result {
    write!(f, "{}", a.base)?;
    for (k, c) in &a.terms {
        write!(f, ",{k}:{c}")?;
    }
    Ok(())
}

impl fmt::Display for EntryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryFunction::Constant(c) => write!(f, "const:{c}"),
            EntryFunction::Affine(a) => {
                f.write_str("affine:")?;
                write_affine(f, a)
            }
            EntryFunction::ExpAffine(a) => {
                f.write_str("expaffine:")?;
                write_affine(f, a)
            }
            EntryFunction::NonnegCombination(atoms) => {
                f.write_str("sum:")?;
                for (i, (w, a)) in atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{w}*expaffine(")?;
                    write_affine(f, a)?;
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::EntryParse { input: input.to_string(), reason: reason.into() }
}

fn parse_number(input: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| parse_err(input, format!("bad number {s:?}")))
}

fn parse_affine(input: &str, body: &str) -> Result<AffineForm> {
    let mut parts = body.split(',');
    let base = parse_number(input, parts.next().unwrap_or(""))?;
    let mut terms = Vec::new();
    for term in parts {
        let (k, c) =
            term.split_once(':').ok_or_else(|| parse_err(input, format!("term {term:?} is not `index:coef`")))?;
        let k = k.trim().parse::<usize>().map_err(|_| parse_err(input, format!("bad factor index {k:?}")))?;
        terms.push((k, parse_number(input, c)?));
    }
    Ok(AffineForm { base, terms })
}

fn parse_sum(input: &str, body: &str) -> Result<Vec<(f64, AffineForm)>> {
    let mut atoms = Vec::new();
    let mut rest = body.trim();
    loop {
        let (w, after) = rest.split_once('*').ok_or_else(|| parse_err(input, "expected `weight*expaffine(...)`"))?;
        let after = after
            .trim_start()
            .strip_prefix("expaffine(")
            .ok_or_else(|| parse_err(input, "sum terms must be expaffine(...)"))?;
        let close = after.find(')').ok_or_else(|| parse_err(input, "unclosed parenthesis"))?;
        atoms.push((parse_number(input, w)?, parse_affine(input, &after[..close])?));
        rest = after[close + 1..].trim_start();
        if rest.is_empty() {
            break;
        }
        rest = rest.strip_prefix('+').ok_or_else(|| parse_err(input, format!("unexpected {rest:?}")))?;
    }
    Ok(atoms)
}

impl FromStr for EntryFunction {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (kind, body) = s.split_once(':').ok_or_else(|| parse_err(input, "missing `kind:`"))?;
        let entry = match kind.trim() {
            "const" => EntryFunction::Constant(parse_number(input, body)?),
            "affine" => EntryFunction::Affine(parse_affine(input, body)?),
            "expaffine" => EntryFunction::ExpAffine(parse_affine(input, body)?),
            "sum" => EntryFunction::NonnegCombination(parse_sum(input, body)?),
            other => return Err(parse_err(input, format!("unknown kind {other:?}"))),
        };
        entry.validate()?;
        Ok(entry)
    }
}

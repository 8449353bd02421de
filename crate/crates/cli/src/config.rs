//! Experiment configuration: a flat TOML file with dotted keys.
//!
//! ```toml
//! seed = 42
//! horizon = 20
//! replicates = 100000
//! model.dim = 2
//! model.factors = 2
//! model.entry.1.1 = "expaffine:-1.2,0:1"
//! model.entry.1.2 = "expaffine:0.1,1:1"
//! noise.kind = "iid_normal"
//! noise.variance = 0.04
//! coupling = "dilation:1.5"
//! ```
//!
//! Matrix entries are addressed 1-based by `model.entry.<row>.<col>` and
//! default to `const:0`; factor indices inside entry strings are 0-based.
//! Unknown keys are rejected so that typos cannot silently change a run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::Value;
use varorder_core::analysis::LandeParams;
use varorder_core::model::{EntryFunction, MatrixSpec, SizeFunctional};
use varorder_core::orders::{DiscreteDistribution, MvNormalSpec};
use varorder_core::scenarios::{CouplingSpec, NoiseSpec};
use varorder_core::SquareMatrix;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    CompareOrders,
    VerifyProposition,
    GrowthRate,
    Approx,
    ProbeConvexity,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::CompareOrders => "compare-orders",
            Mode::VerifyProposition => "verify-proposition",
            Mode::GrowthRate => "growth-rate",
            Mode::Approx => "approx",
            Mode::ProbeConvexity => "probe-convexity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Mode::Simulate,
            Mode::CompareOrders,
            Mode::VerifyProposition,
            Mode::GrowthRate,
            Mode::Approx,
            Mode::ProbeConvexity,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

/// Two finite laws to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSection {
    pub x: DiscreteDistribution,
    pub y: DiscreteDistribution,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSection {
    pub trials: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { trials: varorder_core::model::DEFAULT_TRIALS, lower: -1.0, upper: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// When present, must agree with the mode given on the command line.
    pub mode: Option<Mode>,
    pub seed: u64,
    pub horizon: Option<usize>,
    pub replicates: Option<u64>,
    pub model: Option<MatrixSpec>,
    pub n0: Option<Vec<f64>>,
    pub size: Option<SizeFunctional>,
    pub noise: Option<NoiseSpec>,
    pub coupling: Option<CouplingSpec>,
    pub compare: Option<CompareSection>,
    pub probe: ProbeSection,
    pub lande: Option<LandeParams>,
    /// Output directory, relative to the config file.
    pub output_dir: Option<PathBuf>,
}

/// Flattens a TOML document into `dotted.key → value`.
fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn parse_table(text: &str, path: &Path) -> Result<BTreeMap<String, Value>, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);
    Ok(flat)
}

/// SHA-256 of the flattened document in key order: invariant under key
/// reordering and under dotted-key versus table spelling.
pub fn config_hash(text: &str) -> Option<String> {
    let flat = parse_table(text, Path::new("")).ok()?;
    let mut canonical = String::new();
    for (k, v) in &flat {
        let _ = writeln!(canonical, "{k}={v}");
    }
    let digest = Sha256::digest(canonical.as_bytes());
    Some(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Approximate line of `key` in the source, for diagnostics.
fn locate(text: &str, key: &str) -> Option<usize> {
    let last = key.rsplit('.').next().unwrap_or(key);
    let starts =
        |l: &str, k: &str| l.trim_start().strip_prefix(k).is_some_and(|rest| rest.trim_start().starts_with('='));
    text.lines().position(|l| starts(l, key)).or_else(|| text.lines().position(|l| starts(l, last))).map(|i| i + 1)
}

/// Consumes keys from the flattened document; whatever is left is unknown.
struct Keys<'a> {
    map: BTreeMap<String, Value>,
    text: &'a str,
}

impl<'a> Keys<'a> {
    fn err(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::InvalidKey { key: key.to_string(), line: locate(self.text, key), message: message.into() }
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k == prefix || k.starts_with(&format!("{prefix}.")))
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(self.err(key, "expected a non-negative integer")),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(_) => Err(self.err(key, "expected true or false")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn number_of(&self, key: &str, v: &Value) -> Result<f64, CliError> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.err(key, "expected an array of numbers")),
        }
    }

    fn vec_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => {
                items.iter().map(|v| self.number_of(key, v)).collect::<Result<_, _>>().map(Some)
            }
            Some(_) => Err(self.err(key, "expected an array of numbers")),
        }
    }

    fn matrix(&mut self, key: &str) -> Result<Option<Vec<Vec<f64>>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|row| match row {
                    Value::Array(items) => items.iter().map(|v| self.number_of(key, v)).collect(),
                    _ => Err(self.err(key, "expected an array of rows")),
                })
                .collect::<Result<_, _>>()
                .map(Some),
            Some(_) => Err(self.err(key, "expected an array of rows")),
        }
    }

    /// Removes and returns all keys under `prefix.`, with the prefix stripped.
    fn take_prefix(&mut self, prefix: &str) -> Vec<(String, Value)> {
        let p = format!("{prefix}.");
        let keys: Vec<String> = self.map.keys().filter(|k| k.starts_with(&p)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let v = self.map.remove(&k).unwrap();
                (k[p.len()..].to_string(), v)
            })
            .collect()
    }

    fn finish(self) -> Result<(), CliError> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(self.err(k, "unknown key")),
        }
    }
}

fn core_err(keys: &Keys<'_>, key: &str, e: varorder_core::Error) -> CliError {
    keys.err(key, e.to_string())
}

fn parse_law(keys: &mut Keys<'_>, prefix: &str, base_dir: &Path) -> Result<Option<DiscreteDistribution>, CliError> {
    if let Some(path) = keys.string(&format!("{prefix}.csv"))? {
        let full = base_dir.join(&path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| keys.err(&format!("{prefix}.csv"), format!("cannot read {}: {e}", full.display())))?;
        return DiscreteDistribution::from_csv(&text)
            .map(Some)
            .map_err(|e| core_err(keys, &format!("{prefix}.csv"), e));
    }
    let values = keys.vec_f64(&format!("{prefix}.values"))?;
    let probs = keys.vec_f64(&format!("{prefix}.probs"))?;
    match (values, probs) {
        (None, None) => Ok(None),
        (Some(v), p) => {
            let p = p.unwrap_or_else(|| vec![1.0 / v.len() as f64; v.len()]);
            if p.len() != v.len() {
                return Err(keys.err(&format!("{prefix}.probs"), "must have as many entries as values"));
            }
            DiscreteDistribution::new(v.into_iter().zip(p))
                .map(Some)
                .map_err(|e| core_err(keys, &format!("{prefix}.values"), e))
        }
        (None, Some(_)) => Err(keys.err(&format!("{prefix}.values"), "probs given without values")),
    }
}

fn parse_model(keys: &mut Keys<'_>) -> Result<Option<MatrixSpec>, CliError> {
    if !keys.has_prefix("model") {
        return Ok(None);
    }
    let dim = keys.usize("model.dim")?.ok_or_else(|| keys.err("model.dim", "required when a model is given"))?;
    if dim == 0 {
        return Err(keys.err("model.dim", "must be at least 1"));
    }
    let mut entries = vec![EntryFunction::Constant(0.0); dim * dim];
    let mut max_factor: Option<usize> = None;
    for (suffix, value) in keys.take_prefix("model.entry") {
        let key = format!("model.entry.{suffix}");
        let (i, j) = suffix
            .split_once('.')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| keys.err(&key, "expected model.entry.<row>.<col>"))?;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(keys.err(&key, format!("row and column must be in 1..={dim}")));
        }
        let Value::String(text) = value else {
            return Err(keys.err(&key, "expected an entry string such as \"expaffine:0.1,0:1\""));
        };
        let entry: EntryFunction = text.parse().map_err(|e| core_err(keys, &key, e))?;
        max_factor = max_factor.max(entry.max_factor_index());
        entries[(i - 1) * dim + (j - 1)] = entry;
    }
    let factors = match keys.usize("model.factors")? {
        Some(p) => p,
        None => max_factor.map_or(0, |k| k + 1),
    };
    MatrixSpec::new(dim, factors, entries).map(Some).map_err(|e| core_err(keys, "model.factors", e))
}

fn parse_noise(keys: &mut Keys<'_>, prefix: &str, dim_hint: Option<usize>) -> Result<Option<NoiseSpec>, CliError> {
    if !keys.has_prefix(prefix) {
        return Ok(None);
    }
    let kind_key = format!("{prefix}.kind");
    let kind = keys.string(&kind_key)?.ok_or_else(|| keys.err(&kind_key, "required"))?;
    let k = |s: &str| format!("{prefix}.{s}");
    match kind.as_str() {
        "iid_normal" | "ar1_normal" => {
            let mean = keys.vec_f64(&k("mean"))?;
            let variance = keys.f64(&k("variance"))?;
            let covariance = keys.matrix(&k("covariance"))?;
            let dim = mean
                .as_ref()
                .map(Vec::len)
                .or(covariance.as_ref().map(Vec::len))
                .or(dim_hint)
                .ok_or_else(|| keys.err(&k("mean"), "cannot infer the number of factors"))?;
            let mean = mean.unwrap_or_else(|| vec![0.0; dim]);
            let normal = match (variance, covariance) {
                (Some(v), None) => MvNormalSpec::isotropic(mean, v).map_err(|e| core_err(keys, &k("variance"), e))?,
                (None, Some(rows)) => {
                    let cov = SquareMatrix::from_rows(&rows).map_err(|e| core_err(keys, &k("covariance"), e))?;
                    MvNormalSpec::new(mean, cov).map_err(|e| core_err(keys, &k("covariance"), e))?
                }
                (None, None) => return Err(keys.err(&k("variance"), "give either variance or covariance")),
                (Some(_), Some(_)) => {
                    return Err(keys.err(&k("covariance"), "give either variance or covariance, not both"))
                }
            };
            if kind == "iid_normal" {
                if keys.has_prefix(&k("rho")) {
                    return Err(keys.err(&k("rho"), "only valid for ar1_normal"));
                }
                Ok(Some(NoiseSpec::IidNormal(normal)))
            } else {
                let rho = keys.f64(&k("rho"))?.ok_or_else(|| keys.err(&k("rho"), "required for ar1_normal"))?;
                NoiseSpec::ar1(normal, rho).map(Some).map_err(|e| core_err(keys, &k("rho"), e))
            }
        }
        "iid_discrete" => {
            let shared = parse_law(keys, prefix, Path::new(""))?;
            let mut per_factor: BTreeMap<usize, DiscreteDistribution> = BTreeMap::new();
            let factor_keys: BTreeSet<usize> = keys
                .map
                .keys()
                .filter_map(|key| key.strip_prefix(&k("factor."))?.split('.').next()?.parse().ok())
                .collect();
            for idx in factor_keys {
                let fp = k(&format!("factor.{idx}"));
                if idx == 0 {
                    return Err(keys.err(&fp, "factors are numbered from 1"));
                }
                if let Some(d) = parse_law(keys, &fp, Path::new(""))? {
                    per_factor.insert(idx, d);
                }
            }
            let dim = keys
                .usize(&k("dim"))?
                .or(per_factor.keys().next_back().copied())
                .or(dim_hint)
                .ok_or_else(|| keys.err(&k("dim"), "cannot infer the number of factors"))?;
            let mut laws = Vec::with_capacity(dim);
            for i in 1..=dim {
                match per_factor.remove(&i).or_else(|| shared.clone()) {
                    Some(d) => laws.push(d),
                    None => return Err(keys.err(&k(&format!("factor.{i}.values")), "no law for this factor")),
                }
            }
            if let Some((&extra, _)) = per_factor.iter().next() {
                return Err(keys.err(&k(&format!("factor.{extra}")), format!("beyond the {dim} factors")));
            }
            Ok(Some(NoiseSpec::IidDiscrete(laws)))
        }
        other => {
            Err(keys
                .err(&kind_key, format!("unknown noise kind {other:?}; use iid_normal, iid_discrete or ar1_normal")))
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok((Self::parse_with_base(&text, path, base)?, text))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_with_base(text, Path::new("<config>"), Path::new(""))
    }

    fn parse_with_base(text: &str, path: &Path, base_dir: &Path) -> Result<Self, CliError> {
        let mut keys = Keys { map: parse_table(text, path)?, text };
        let mode = match keys.string("mode")? {
            None => None,
            Some(m) => Some(Mode::parse(&m).ok_or_else(|| keys.err("mode", format!("unknown mode {m:?}")))?),
        };
        let seed = keys.u64("seed")?.unwrap_or(0);
        let horizon = keys.usize("horizon")?;
        let replicates = keys.u64("replicates")?;
        if replicates == Some(0) {
            return Err(keys.err("replicates", "must be at least 1"));
        }
        let model = parse_model(&mut keys)?;
        let n0 = keys.vec_f64("n0")?;
        let size = match (keys.vec_f64("size.weights")?, keys.bool("size.log_scale")?) {
            (None, None) => None,
            (w, log) => {
                let weights = match w {
                    Some(w) => w,
                    None => vec![1.0; model.as_ref().map_or(0, MatrixSpec::dim)],
                };
                Some(
                    SizeFunctional::new(weights, log.unwrap_or(false))
                        .map_err(|e| core_err(&keys, "size.weights", e))?,
                )
            }
        };
        let factor_hint = model.as_ref().map(MatrixSpec::factor_dim);
        let noise = parse_noise(&mut keys, "noise", factor_hint)?;
        let coupling = match keys.string("coupling")? {
            None => {
                if keys.has_prefix("additive_noise") {
                    return Err(keys.err("additive_noise.kind", "additive_noise needs coupling = \"additive\""));
                }
                None
            }
            Some(c) if c == "additive" => {
                let hint = noise.as_ref().map(NoiseSpec::factor_dim).or(factor_hint);
                let extra = parse_noise(&mut keys, "additive_noise", hint)?
                    .ok_or_else(|| keys.err("additive_noise.kind", "required for additive coupling"))?;
                Some(CouplingSpec::Additive { noise: extra })
            }
            Some(c) => {
                let factor = c
                    .strip_prefix("dilation:")
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| keys.err("coupling", "expected \"additive\" or \"dilation:<c>\""))?;
                if !(factor >= 1.0 && factor.is_finite()) {
                    return Err(keys.err("coupling", "dilation factor must be >= 1"));
                }
                Some(CouplingSpec::Dilation { factor })
            }
        };
        let compare = {
            let x = parse_law(&mut keys, "compare.x", base_dir)?;
            let y = parse_law(&mut keys, "compare.y", base_dir)?;
            let tol = keys.f64("compare.tol")?;
            match (x, y) {
                (None, None) if tol.is_none() => None,
                (Some(x), Some(y)) => {
                    let tol = tol.unwrap_or(varorder_core::orders::DEFAULT_TOL);
                    if tol.is_nan() || tol < 0.0 {
                        return Err(keys.err("compare.tol", "must be non-negative"));
                    }
                    Some(CompareSection { x, y, tol })
                }
                (None, _) => return Err(keys.err("compare.x.values", "both compare.x and compare.y are required")),
                (_, None) => return Err(keys.err("compare.y.values", "both compare.x and compare.y are required")),
            }
        };
        let defaults = ProbeSection::default();
        let probe = ProbeSection {
            trials: keys.usize("probe.trials")?.unwrap_or(defaults.trials),
            lower: keys.f64("probe.lower")?.unwrap_or(defaults.lower),
            upper: keys.f64("probe.upper")?.unwrap_or(defaults.upper),
        };
        if probe.trials == 0 {
            return Err(keys.err("probe.trials", "must be at least 1"));
        }
        if probe.lower.is_nan() || probe.upper.is_nan() || probe.lower > probe.upper {
            return Err(keys.err("probe.lower", "must not exceed probe.upper"));
        }
        let lande = if keys.has_prefix("lande") {
            let lambda_bar = keys.f64("lande.lambda_bar")?.unwrap_or(1.0);
            let r_bar = keys.f64("lande.r_bar")?.unwrap_or(0.0);
            let sigma_r_sq = keys.f64("lande.sigma_r_sq")?.unwrap_or(0.0);
            let eps_bar = keys.f64("lande.eps_bar")?.unwrap_or(0.0);
            let sigma_eps_sq = keys.f64("lande.sigma_eps_sq")?.unwrap_or(0.0);
            Some(
                LandeParams::new(lambda_bar, r_bar, sigma_r_sq, eps_bar, sigma_eps_sq)
                    .map_err(|e| core_err(&keys, "lande.lambda_bar", e))?,
            )
        } else {
            None
        };
        let output_dir = keys.string("output.dir")?.map(PathBuf::from);
        keys.finish()?;
        Ok(Self {
            mode,
            seed,
            horizon,
            replicates,
            model,
            n0,
            size,
            noise,
            coupling,
            compare,
            probe,
            lande,
            output_dir,
        })
    }

    /// Canonical flat serialization; parsing it gives back an equal config.
    pub fn to_toml(&self) -> String {
        let mut flat = Flat::default();
        if let Some(m) = self.mode {
            flat.put("mode", m.name());
        }
        flat.put("seed", self.seed as i64);
        if let Some(h) = self.horizon {
            flat.put("horizon", h as i64);
        }
        if let Some(r) = self.replicates {
            flat.put("replicates", r as i64);
        }
        if let Some(m) = &self.model {
            flat.put("model.dim", m.dim() as i64);
            flat.put("model.factors", m.factor_dim() as i64);
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    flat.put(&format!("model.entry.{}.{}", i + 1, j + 1), m.entry(i, j).to_string());
                }
            }
        }
        if let Some(n0) = &self.n0 {
            flat.put("n0", floats(n0));
        }
        if let Some(s) = &self.size {
            flat.put("size.weights", floats(s.weights()));
            flat.put("size.log_scale", s.log_scale());
        }
        if let Some(n) = &self.noise {
            flat.noise("noise", n);
        }
        match &self.coupling {
            None => {}
            Some(CouplingSpec::Dilation { factor }) => flat.put("coupling", format!("dilation:{factor}")),
            Some(CouplingSpec::Additive { noise }) => {
                flat.put("coupling", "additive");
                flat.noise("additive_noise", noise);
            }
        }
        if let Some(c) = &self.compare {
            flat.law("compare.x", &c.x);
            flat.law("compare.y", &c.y);
            flat.put("compare.tol", c.tol);
        }
        flat.put("probe.trials", self.probe.trials as i64);
        flat.put("probe.lower", self.probe.lower);
        flat.put("probe.upper", self.probe.upper);
        if let Some(l) = &self.lande {
            flat.put("lande.lambda_bar", l.lambda_bar);
            flat.put("lande.r_bar", l.r_bar);
            flat.put("lande.sigma_r_sq", l.sigma_r_sq);
            flat.put("lande.eps_bar", l.eps_bar);
            flat.put("lande.sigma_eps_sq", l.sigma_eps_sq);
        }
        if let Some(d) = &self.output_dir {
            flat.put("output.dir", d.to_string_lossy().into_owned());
        }
        let mut out = String::new();
        for (k, v) in &flat.0 {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

#[derive(Default)]
struct Flat(BTreeMap<String, Value>);

impl Flat {
    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.0.insert(key.to_string(), v.into());
    }

    fn law(&mut self, prefix: &str, d: &DiscreteDistribution) {
        self.put(&format!("{prefix}.values"), floats(d.values()));
        self.put(&format!("{prefix}.probs"), floats(d.probs()));
    }

    fn noise(&mut self, prefix: &str, n: &NoiseSpec) {
        let k = |s: &str| format!("{prefix}.{s}");
        match n {
            NoiseSpec::IidNormal(m) | NoiseSpec::Ar1Normal { stationary: m, .. } => {
                self.put(&k("kind"), if n.is_iid() { "iid_normal" } else { "ar1_normal" });
                self.put(&k("mean"), floats(m.mean()));
                self.put(&k("covariance"), Value::Array(m.covariance().rows().iter().map(|r| floats(r)).collect()));
                if let NoiseSpec::Ar1Normal { rho, .. } = n {
                    self.put(&k("rho"), *rho);
                }
            }
            NoiseSpec::IidDiscrete(laws) => {
                self.put(&k("kind"), "iid_discrete");
                self.put(&k("dim"), laws.len() as i64);
                for (i, d) in laws.iter().enumerate() {
                    self.law(&k(&format!("factor.{}", i + 1)), d);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
horizon = 20
replicates = 1000
model.dim = 2
model.factors = 2
model.entry.1.1 = "expaffine:-1.2,0:1"
model.entry.1.2 = "expaffine:0.1,1:1"
model.entry.2.1 = "sum:0.5*expaffine(-0.8,0:1)+0.5*expaffine(-0.8,1:1)"
model.entry.2.2 = "const:0.3"
noise.kind = "iid_normal"
noise.variance = 0.04
coupling = "dilation:1.5"
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.seed, 7);
        let m = c.model.as_ref().unwrap();
        assert_eq!((m.dim(), m.factor_dim()), (2, 2));
        assert_eq!(c.noise.as_ref().unwrap().factor_dim(), 2);
        assert_eq!(c.coupling, Some(CouplingSpec::Dilation { factor: 1.5 }));
    }

    #[test]
    fn hash_ignores_key_order_and_spelling() {
        let reordered: String = SAMPLE.lines().rev().map(|l| format!("{l}\n")).collect();
        assert_eq!(config_hash(SAMPLE), config_hash(&reordered));
        let tables = "seed = 7\n[noise]\nkind = \"iid_normal\"\n";
        let dotted = "noise.kind = \"iid_normal\"\nseed = 7\n";
        assert_eq!(config_hash(tables), config_hash(dotted));
        assert_ne!(config_hash(SAMPLE), config_hash(&SAMPLE.replace("seed = 7", "seed = 8")));
    }

    #[test]
    fn serialization_round_trips() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let text = c.to_toml();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c, again);
        assert_eq!(text, again.to_toml());
        assert_eq!(config_hash(&text), config_hash(&again.to_toml()));
    }

    #[test]
    fn discrete_and_additive_round_trip() {
        let text = r#"
model.dim = 1
model.entry.1.1 = "affine:1.05,0:1"
noise.kind = "iid_discrete"
noise.values = [-0.05, 0.05]
coupling = "additive"
additive_noise.kind = "iid_discrete"
additive_noise.factor.1.values = [-0.1, 0.0, 0.1]
additive_noise.factor.1.probs = [0.25, 0.5, 0.25]
lande.lambda_bar = 1.05
lande.sigma_r_sq = 0.001
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.model.as_ref().unwrap().factor_dim(), 1);
        assert_eq!(c, ExperimentConfig::parse(&c.to_toml()).unwrap());
    }

    #[test]
    fn diagnostics_name_key_and_line() {
        let err = ExperimentConfig::parse("seed = 1\nmodel.dim = 2\nmodel.entry.1.3 = \"const:1\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.entry.1.3") && msg.contains("line 3"), "{msg}");
        let err = ExperimentConfig::parse("seed = 1\nhorizn = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key") && err.to_string().contains("horizn"));
        let err = ExperimentConfig::parse("seed = [\n").unwrap_err();
        assert!(matches!(err, CliError::ConfigParse { .. }));
        let err = ExperimentConfig::parse("noise.kind = \"iid_normal\"\nnoise.mean = [0.0]\n").unwrap_err();
        assert!(err.to_string().contains("noise.variance"));
        let err = ExperimentConfig::parse("coupling = \"dilation:0.5\"").unwrap_err();
        assert!(err.to_string().contains("coupling"));
    }
}

//! One CLI invocation: load the config, run the mode inside a thread pool of
//! the requested size, write outputs and a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use varorder_core::analysis::{
    estimate_stochastic_growth_rate, lande_arithmetic_mean, lande_log_scale_mean, log_growth_quadrature, run_ensemble,
    tuljapurkar_approx, verify_proposition, MonteCarlo,
};
use varorder_core::model::{
    probe_entry, scenario_convexity_probe, BoxDomain, MatrixSpec, PopulationVector, ProbeConfig, ProbeOutcome,
    SizeFunctional,
};
use varorder_core::orders::{cx_compare, icx_compare, stop_loss};
use varorder_core::scenarios::NoiseSpec;

use crate::config::{config_hash, ExperimentConfig, Mode};
use crate::error::CliError;
use crate::output::{emit_plot_data, paired_stats_csv, to_json, write_atomic};

pub const MANIFEST: &str = "manifest.json";
const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub allow_linear: bool,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: Option<PathBuf>,
    pub error: Option<CliError>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    config_path: String,
    config_hash: Option<String>,
    seed: Option<u64>,
    version: &'static str,
    threads: usize,
    wall_clock_seconds: f64,
    status: &'static str,
    exit_code: i32,
    error: Option<String>,
    outputs: Vec<String>,
    summary: Value,
}

/// Files produced by a mode, in write order, and a short summary.
struct Produced {
    files: Vec<(&'static str, String)>,
    summary: Value,
}

pub fn run(opts: &RunOptions) -> RunOutcome {
    let started = Instant::now();
    let text = std::fs::read_to_string(&opts.config).ok();
    let loaded = ExperimentConfig::from_file(&opts.config);
    let out_dir = opts.out_dir.clone().or_else(|| {
        let cfg = loaded.as_ref().ok()?;
        let base = opts.config.parent().unwrap_or(Path::new(""));
        Some(base.join(cfg.0.output_dir.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into())))
    });

    let result = loaded.and_then(|(cfg, _)| {
        let dir = out_dir.clone().expect("resolved whenever the config loads");
        execute(opts, &cfg, &dir).map(|p| (cfg.seed, p))
    });

    let (exit_code, error, seed, outputs, summary) = match result {
        Ok((seed, p)) => (0, None, Some(seed), p.files.into_iter().map(|(n, _)| n.to_string()).collect(), p.summary),
        Err(e) => (e.exit_code(), Some(e), None, Vec::new(), Value::Null),
    };

    let mut error = error;
    if let Some(dir) = &out_dir {
        let manifest = Manifest {
            mode: opts.mode.name(),
            config_path: opts.config.display().to_string(),
            config_hash: text.as_deref().and_then(config_hash),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            threads: opts.threads,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            status: if exit_code == 0 { "ok" } else { "error" },
            exit_code,
            error: error.as_ref().map(ToString::to_string),
            outputs,
            summary,
        };
        let written = std::fs::create_dir_all(dir)
            .map_err(|source| CliError::Io { path: dir.clone(), source })
            .and_then(|_| write_atomic(dir, MANIFEST, to_json(&manifest).as_bytes()));
        if let (Err(e), None) = (written, &error) {
            error = Some(e);
        }
    }
    let exit_code = error.as_ref().map_or(0, CliError::exit_code);
    RunOutcome { exit_code, out_dir, error }
}

fn execute(opts: &RunOptions, cfg: &ExperimentConfig, dir: &Path) -> Result<Produced, CliError> {
    if let Some(m) = cfg.mode {
        if m != opts.mode {
            return Err(CliError::ModeMismatch { config: m.name(), cli: opts.mode.name() });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    let produced = pool.install(|| match opts.mode {
        Mode::Simulate => simulate(cfg),
        Mode::CompareOrders => compare_orders(cfg),
        Mode::VerifyProposition => verify(cfg, opts.allow_linear),
        Mode::GrowthRate => growth_rate(cfg),
        Mode::Approx => approx(cfg),
        Mode::ProbeConvexity => probe(cfg, opts.allow_linear),
    })?;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    for (name, contents) in &produced.files {
        write_atomic(dir, name, contents.as_bytes())?;
    }
    Ok(produced)
}

fn need<'a, T>(value: &'a Option<T>, key: &str, mode: Mode) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::MissingKey { key: key.to_string(), mode: mode.name() })
}

/// Model, initial vector and size functional, with `n0` and the weights
/// defaulting to all ones.
fn model_parts(
    cfg: &ExperimentConfig,
    mode: Mode,
) -> Result<(&MatrixSpec, PopulationVector, SizeFunctional), CliError> {
    let spec = need(&cfg.model, "model.dim", mode)?;
    let n0 = PopulationVector::new(cfg.n0.clone().unwrap_or_else(|| vec![1.0; spec.dim()]))?;
    let f = cfg.size.clone().unwrap_or_else(|| SizeFunctional::total(spec.dim()));
    Ok((spec, n0, f))
}

fn noise(cfg: &ExperimentConfig, mode: Mode) -> Result<&NoiseSpec, CliError> {
    need(&cfg.noise, "noise.kind", mode)
}

fn monte_carlo(cfg: &ExperimentConfig, mode: Mode) -> Result<MonteCarlo, CliError> {
    let horizon = *need(&cfg.horizon, "horizon", mode)?;
    let replicates = *need(&cfg.replicates, "replicates", mode)?;
    Ok(MonteCarlo::new(horizon, replicates, cfg.seed)?)
}

fn simulate(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let mode = Mode::Simulate;
    let (spec, n0, f) = model_parts(cfg, mode)?;
    let stats = run_ensemble(spec, &n0, &f, noise(cfg, mode)?, &monte_carlo(cfg, mode)?)?;
    let last = stats.last();
    let summary = json!({ "horizon": stats.horizon(), "mean_N": last.mean_n, "mean_logN": last.mean_log_n });
    Ok(Produced { files: vec![("stats.csv", stats.to_csv()), ("report.json", to_json(&stats))], summary })
}

fn compare_orders(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let c = need(&cfg.compare, "compare.x.values", Mode::CompareOrders)?;
    let icx = icx_compare(&c.x, &c.y, c.tol)?;
    let cx = cx_compare(&c.x, &c.y, c.tol)?;
    let mut knots: Vec<f64> = c.x.values().iter().chain(c.y.values()).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut csv = String::from("threshold,stoploss_x,stoploss_y\n");
    for k in knots {
        csv.push_str(&format!("{k},{},{}\n", stop_loss(&c.x, k), stop_loss(&c.y, k)));
    }
    let moments = |d: &varorder_core::DiscreteDistribution| json!({ "mean": d.mean(), "variance": d.variance(), "atoms": d.len() });
    let report = json!({ "tol": c.tol, "icx": icx, "cx": cx, "x": moments(&c.x), "y": moments(&c.y) });
    let summary = json!({ "icx": icx.relation(), "cx": cx.relation() });
    Ok(Produced { files: vec![("stats.csv", csv), ("report.json", to_json(&report))], summary })
}

fn verify(cfg: &ExperimentConfig, allow_linear: bool) -> Result<Produced, CliError> {
    let mode = Mode::VerifyProposition;
    let (spec, n0, f) = model_parts(cfg, mode)?;
    let coupling = need(&cfg.coupling, "coupling", mode)?;
    let report =
        verify_proposition(spec, &n0, &f, noise(cfg, mode)?, coupling, &monte_carlo(cfg, mode)?, allow_linear)?;
    let plot = emit_plot_data(&report.low, &report.high)?;
    let summary = json!({
        "means_ordered_N": report.means_ordered_n,
        "means_ordered_logN": report.means_ordered_log_n,
        "stoploss_dominance_logN": report.stoploss_dominance_log_n,
    });
    Ok(Produced {
        files: vec![
            ("stats.csv", paired_stats_csv(&report.low, &report.high)),
            ("plot.csv", plot),
            ("report.json", to_json(&report)),
        ],
        summary,
    })
}

fn growth_rate(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let mode = Mode::GrowthRate;
    let (spec, n0, _) = model_parts(cfg, mode)?;
    let horizon = *need(&cfg.horizon, "horizon", mode)?;
    let est = estimate_stochastic_growth_rate(spec, &n0, noise(cfg, mode)?, horizon, cfg.seed)?;
    let summary = json!({ "log_lambda_s_hat": est.log_lambda_s_hat, "standard_error": est.standard_error });
    Ok(Produced { files: vec![("report.json", to_json(&est))], summary })
}

fn approx(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let mode = Mode::Approx;
    let tulja = match (&cfg.model, &cfg.noise) {
        (Some(spec), Some(noise)) => Some(tuljapurkar_approx(spec, noise)?),
        _ => None,
    };
    let lande = match &cfg.lande {
        Some(lp) => {
            // exact E log(λ̄ + ε) for Normal ε next to the displayed formula
            let exact = log_growth_quadrature(lp.lambda_bar, lp.sigma_r_sq).ok();
            Some(json!({
                "params": lp,
                "log_scale_mean": lande_log_scale_mean(lp),
                "arithmetic_mean": lande_arithmetic_mean(lp),
                "log_growth_quadrature": exact,
            }))
        }
        None => None,
    };
    if tulja.is_none() && lande.is_none() {
        return Err(CliError::MissingKey {
            key: "model.dim and noise.kind, or lande.lambda_bar".into(),
            mode: mode.name(),
        });
    }
    let report = json!({ "tuljapurkar": tulja, "lande": lande });
    let summary = json!({ "log_lambda_s_approx": tulja.as_ref().map(|t| t.log_lambda_s_approx) });
    Ok(Produced { files: vec![("report.json", to_json(&report))], summary })
}

#[derive(Serialize)]
struct EntryProbe {
    row: usize,
    col: usize,
    entry: String,
    result: ProbeOutcome,
}

fn probe(cfg: &ExperimentConfig, allow_linear: bool) -> Result<Produced, CliError> {
    let mode = Mode::ProbeConvexity;
    let (spec, n0, f) = model_parts(cfg, mode)?;
    if !allow_linear {
        spec.check_log_convex_hypothesis()?;
    }
    let p = &cfg.probe;
    let factor_box = BoxDomain::cube(spec.factor_dim(), p.lower, p.upper)?;
    let mut entries = Vec::new();
    for i in 0..spec.dim() {
        for j in 0..spec.dim() {
            let e = spec.entry(i, j);
            let result = probe_entry(e, &factor_box, p.trials, cfg.seed)?;
            entries.push(EntryProbe { row: i + 1, col: j + 1, entry: e.to_string(), result });
        }
    }
    let scenario = match cfg.horizon {
        Some(t) => {
            let domain = BoxDomain::cube(spec.factor_dim() * t, p.lower, p.upper)?;
            let config = ProbeConfig { trials: p.trials, seed: cfg.seed, allow_hypothesis_violating: allow_linear };
            Some(scenario_convexity_probe(spec, &n0, &f, t, &domain, &config)?)
        }
        None => None,
    };
    let passed = entries.iter().all(|e| e.result.passed()) && scenario.as_ref().is_none_or(ProbeOutcome::passed);
    let report = json!({
        "trials": p.trials,
        "lower": p.lower,
        "upper": p.upper,
        "passed": passed,
        "entries": entries,
        "scenario": scenario,
    });
    Ok(Produced { files: vec![("report.json", to_json(&report))], summary: json!({ "passed": passed }) })
}

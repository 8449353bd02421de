//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varorder_core::analysis::{
    estimate_stochastic_growth_rate, lande_arithmetic_mean, run_ensemble, tuljapurkar_approx, verify_proposition,
    LandeParams, MonteCarlo, STOPLOSS_POINTS,
};
use varorder_core::model::{
    logconvexity_probe, scenario_convexity_probe, AffineForm, BoxDomain, EntryFunction, MatrixSpec, PopulationVector,
    ProbeConfig, ProbeOutcome, SizeFunctional,
};
use varorder_core::orders::{cx_compare, icx_compare, DiscreteDistribution, Relation};
use varorder_core::scenarios::{sample_scenario, CouplingSpec, NoiseSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

// ---- independent oracles -------------------------------------------------

/// Raw atoms, possibly with repeated values; nothing shared with the library.
#[derive(Clone)]
struct Atoms(Vec<(f64, f64)>);

impl Atoms {
    fn stop_loss(&self, c: f64) -> f64 {
        self.0.iter().map(|(v, p)| p * (v - c).max(0.0)).sum()
    }

    fn mean(&self) -> f64 {
        self.0.iter().map(|(v, p)| v * p).sum()
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        self.0.iter().map(|(v, p)| p * (v - m) * (v - m)).sum()
    }

    fn cv(&self, p: f64) -> f64 {
        let moment: f64 = self.0.iter().map(|(v, q)| q * v.powf(p)).sum();
        moment.powf(1.0 / p) / self.mean()
    }

    fn convolve(&self, other: &Atoms) -> Atoms {
        Atoms(self.0.iter().flat_map(|(v, p)| other.0.iter().map(move |(w, q)| (v + w, p * q))).collect())
    }

    fn law(&self) -> DiscreteDistribution {
        DiscreteDistribution::new(self.0.iter().copied()).expect("valid atoms")
    }
}

fn relation(le: bool, ge: bool) -> Relation {
    match (le, ge) {
        (true, true) => Relation::Equal,
        (true, false) => Relation::Less,
        (false, true) => Relation::Greater,
        (false, false) => Relation::NotComparable,
    }
}

/// Stop-loss curves are piecewise linear with kinks at the atoms, and equal
/// to `mean - c` below every atom, so comparing at the atoms decides icx.
fn brute_icx(x: &Atoms, y: &Atoms, tol: f64) -> Relation {
    let (mut le, mut ge) = (true, true);
    for &(c, _) in x.0.iter().chain(&y.0) {
        let (a, b) = (x.stop_loss(c), y.stop_loss(c));
        le &= a <= b + tol;
        ge &= b <= a + tol;
    }
    relation(le, ge)
}

fn brute_cx(x: &Atoms, y: &Atoms, tol: f64) -> Relation {
    if (x.mean() - y.mean()).abs() > tol {
        Relation::NotComparable
    } else {
        brute_icx(x, y, tol)
    }
}

fn random_atoms(rng: &mut ChaCha8Rng, max_atoms: usize, lo: f64, hi: f64) -> Atoms {
    let n = rng.random_range(1..=max_atoms);
    // a coarse grid half the time, so ties and shared knots occur
    let grid = rng.random::<bool>();
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let v = rng.random_range(lo..=hi);
            let v = if grid { (v * 2.0).round() / 2.0 } else { v };
            (v, rng.random_range(1..20) as f64)
        })
        .collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    Atoms(raw.into_iter().map(|(v, w)| (v, w / total)).collect())
}

/// Zero-mean law with values in roughly `[-spread, spread]`.
fn zero_mean_atoms(rng: &mut ChaCha8Rng, max_atoms: usize, spread: f64) -> Atoms {
    let a = random_atoms(rng, max_atoms, -spread, spread);
    let m = a.mean();
    Atoms(a.0.into_iter().map(|(v, p)| (v - m, p)).collect())
}

// ---- criteria ------------------------------------------------------------

fn order_checker_matches_oracle() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0usize; 4];
    let mut disagreements = Vec::new();
    for i in 0..500 {
        let (x, y) = match i % 3 {
            0 => (random_atoms(&mut rng, 10, -5.0, 5.0), random_atoms(&mut rng, 10, -5.0, 5.0)),
            // spreads and shifted spreads, kept inside [-5, 5]
            1 => {
                let x = random_atoms(&mut rng, 5, -3.0, 3.0);
                let z = zero_mean_atoms(&mut rng, 2, 1.0);
                let y = x.convolve(&z);
                (x, y)
            }
            _ => {
                let x = random_atoms(&mut rng, 5, -3.0, 2.5);
                let shift = rng.random_range(0.0..0.5);
                let z = zero_mean_atoms(&mut rng, 2, 1.0);
                let y = Atoms(x.convolve(&z).0.into_iter().map(|(v, p)| (v + shift, p)).collect());
                if rng.random::<bool>() {
                    (y, x)
                } else {
                    (x, y)
                }
            }
        };
        if x.0.iter().chain(&y.0).any(|a| !(-5.0..=5.0).contains(&a.0)) || y.0.len() > 10 {
            return Err(format!("pair {i} left the sampling range"));
        }
        let (lx, ly) = (x.law(), y.law());
        let icx = icx_compare(&lx, &ly, TOL).map_err(|e| e.to_string())?.relation();
        let cx = cx_compare(&lx, &ly, TOL).map_err(|e| e.to_string())?.relation();
        let (want_icx, want_cx) = (brute_icx(&x, &y, TOL), brute_cx(&x, &y, TOL));
        if icx != want_icx || cx != want_cx {
            disagreements.push(format!("pair {i}: icx {icx:?}/{want_icx:?} cx {cx:?}/{want_cx:?}"));
        }
        counts[want_icx as usize] += 1;
    }
    if disagreements.is_empty() {
        Ok(format!("500 pairs, 0 disagreements, icx verdict counts {counts:?}"))
    } else {
        Err(format!("{} disagreements, first: {}", disagreements.len(), disagreements[0]))
    }
}

fn cx_implies_moment_ordering() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = Vec::new();
    let mut positive = 0;
    for i in 0..200 {
        let x = random_atoms(&mut rng, 6, 2.5, 6.0);
        let z = zero_mean_atoms(&mut rng, 4, 2.0);
        let y = x.convolve(&z);
        if !cx_compare(&x.law(), &y.law(), TOL).map_err(|e| e.to_string())?.is_le() {
            violations.push(format!("pair {i}: not reported cx-ordered"));
        }
        if (x.mean() - y.mean()).abs() > 1e-10 {
            violations.push(format!("pair {i}: means {} vs {}", x.mean(), y.mean()));
        }
        if x.variance() > y.variance() + TOL {
            violations.push(format!("pair {i}: variances {} > {}", x.variance(), y.variance()));
        }
        if y.0.iter().all(|a| a.0 > 0.0) {
            positive += 1;
            for p in [1.0, 2.0, 3.0] {
                if x.cv(p) > y.cv(p) + TOL {
                    violations.push(format!("pair {i}: CV_{p} {} > {}", x.cv(p), y.cv(p)));
                }
            }
        }
    }
    match violations.first() {
        None => Ok(format!("200 pairs ({positive} with positive support), 0 violations")),
        Some(v) => Err(format!("{} violations, first: {v}", violations.len())),
    }
}

fn two_stage_spec() -> MatrixSpec {
    let cell = |s: &str| -> EntryFunction { s.parse().expect("valid entry") };
    MatrixSpec::from_rows(
        vec![
            vec![cell("expaffine:-1.2,0:1"), cell("expaffine:0.1,1:1")],
            vec![cell("expaffine:-0.8,0:0.5,1:0.5"), cell("expaffine:-0.5,1:1")],
        ],
        2,
    )
    .expect("valid spec")
}

fn finite_horizon_ordering() -> Outcome {
    let spec = two_stage_spec();
    let n0 = PopulationVector::new(vec![1.0, 1.0]).map_err(|e| e.to_string())?;
    let f = SizeFunctional::total(2);
    let base = NoiseSpec::iid_isotropic(2, 0.0, 0.2 * 0.2).map_err(|e| e.to_string())?;
    let mc = MonteCarlo::new(20, 100_000, 42).map_err(|e| e.to_string())?;
    let report = verify_proposition(&spec, &n0, &f, &base, &CouplingSpec::Dilation { factor: 1.5 }, &mc, false)
        .map_err(|e| e.to_string())?;

    let mut problems = Vec::new();
    // (a) every t within the paired CI, and a 3-CI margin at T
    for (c, (lo, hi)) in report.per_time.iter().zip(report.low.times.iter().zip(&report.high.times)) {
        if hi.mean_n - lo.mean_n < -c.ci_diff_n {
            problems.push(format!("mean_N reversed at t = {}", c.t));
        }
    }
    let (lo, hi) = (report.low.last(), report.high.last());
    let gap = hi.mean_n - lo.mean_n;
    let needed = 3.0 * (hi.ci_halfwidth_n + lo.ci_halfwidth_n);
    if gap < needed {
        problems.push(format!("margin at T: {gap} < {needed}"));
    }
    // (b)
    for (c, (lo, hi)) in report.per_time.iter().zip(report.low.times.iter().zip(&report.high.times)) {
        if hi.mean_log_n < lo.mean_log_n - c.ci_diff_log_n {
            problems.push(format!("mean_logN reversed at t = {}", c.t));
        }
    }
    // (c)
    let dominated = report.stoploss.iter().filter(|s| s.diff >= -s.margin).count();
    if report.stoploss.len() != STOPLOSS_POINTS || dominated != STOPLOSS_POINTS {
        problems.push(format!("stop-loss dominance at {dominated}/{} thresholds", report.stoploss.len()));
    }
    if problems.is_empty() {
        Ok(format!(
            "E N(20): {:.4} vs {:.4}, gap {gap:.4} >= {needed:.4}; log means ordered at all t; {dominated}/{STOPLOSS_POINTS} stop-loss",
            hi.mean_n, lo.mean_n
        ))
    } else {
        Err(problems.join("; "))
    }
}

fn scalar_closed_form() -> Outcome {
    let (r, sigma, t) = (0.02f64, 0.2f64, 20usize);
    let spec = MatrixSpec::new(1, 1, vec![EntryFunction::ExpAffine(AffineForm::new(r, vec![(0, 1.0)]))])
        .map_err(|e| e.to_string())?;
    let n0 = PopulationVector::new(vec![1.0]).map_err(|e| e.to_string())?;
    let noise = NoiseSpec::iid_isotropic(1, 0.0, sigma * sigma).map_err(|e| e.to_string())?;
    let stats = run_ensemble(&spec, &n0, &SizeFunctional::total(1), &noise, &MonteCarlo::new(t, 1_000_000, 4).unwrap())
        .map_err(|e| e.to_string())?;
    let last = stats.last();
    let tf = t as f64;
    let expected = (r * tf + tf * sigma * sigma / 2.0).exp();
    let rel = (last.mean_n / expected - 1.0).abs();
    let log_gap = (last.mean_log_n - r * tf).abs();
    let detail = format!(
        "mean N(20) = {:.5} vs {expected:.5} (rel {rel:.2e}); mean log N(20) = {:.5} vs {:.2}, |gap| {log_gap:.2e} vs CI {:.2e}",
        last.mean_n, last.mean_log_n, r * tf, last.ci_halfwidth_log_n
    );
    if rel <= 0.01 && log_gap <= last.ci_halfwidth_log_n {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lande_arithmetic_scale() -> Outcome {
    let expected = 0.045f64.exp();
    let closed = lande_arithmetic_mean(&LandeParams::new(1.0, 0.0, 0.0, 0.0, 0.09).map_err(|e| e.to_string())?);
    let noise = NoiseSpec::iid_isotropic(1, 0.0, 0.09).map_err(|e| e.to_string())?;
    let draws = sample_scenario(&noise, 1_000_000, 5);
    let mc = draws.as_flat().iter().map(|e| e.exp()).sum::<f64>() / 1e6;
    let rel = (mc / expected - 1.0).abs();
    let detail =
        format!("MC E[exp(eps)] = {mc:.6}, exp(0.045) = {expected:.6}, rel {rel:.2e}; formula gives {closed:.6}");
    if rel <= 0.002 && (closed - expected).abs() <= 1e-14 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn small_noise_growth() -> Outcome {
    let spec = MatrixSpec::new(1, 1, vec![EntryFunction::Affine(AffineForm::new(1.05, vec![(0, 1.0)]))])
        .map_err(|e| e.to_string())?;
    let noise = NoiseSpec::IidDiscrete(vec![DiscreteDistribution::uniform(&[-0.01, 0.01]).map_err(|e| e.to_string())?]);
    let approx = tuljapurkar_approx(&spec, &noise).map_err(|e| e.to_string())?;
    let expected = 1.05f64.ln() - 0.0001 / (2.0 * 1.05 * 1.05);
    let n0 = PopulationVector::new(vec![1.0]).map_err(|e| e.to_string())?;
    let est = estimate_stochastic_growth_rate(&spec, &n0, &noise, 1_000_000, 6).map_err(|e| e.to_string())?;
    let se = est.standard_error.ok_or("no standard error")?;
    let gap = (est.log_lambda_s_hat - approx.log_lambda_s_approx).abs();
    let ceiling = 1.05f64.ln();
    let detail = format!(
        "approx {:.8} (closed form {expected:.8}), estimate {:.8} ± {se:.1e}, |gap| {gap:.2e}, log 1.05 = {ceiling:.8}",
        approx.log_lambda_s_approx, est.log_lambda_s_hat
    );
    let ok = (approx.log_lambda_s_approx - expected).abs() <= 1e-12
        && gap <= 1e-4 + 3.0 * se
        && approx.log_lambda_s_approx < ceiling
        && est.log_lambda_s_hat < ceiling;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_affine_form(rng: &mut ChaCha8Rng, p: usize) -> AffineForm {
    let mut terms = Vec::new();
    for k in 0..p {
        if rng.random_bool(0.7) {
            terms.push((k, rng.random_range(-1.5..1.5)));
        }
    }
    AffineForm::new(rng.random_range(-1.0..0.5), terms)
}

fn probes_embody_the_proof() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut problems = Vec::new();

    for i in 0..100 {
        let p = rng.random_range(1..=3);
        let entry = if i % 2 == 0 {
            EntryFunction::ExpAffine(random_affine_form(&mut rng, p))
        } else {
            let n = rng.random_range(1..=4);
            EntryFunction::NonnegCombination(
                (0..n).map(|_| (rng.random_range(0.0..2.0), random_affine_form(&mut rng, p))).collect(),
            )
        };
        let domain = BoxDomain::cube(p, -2.0, 2.0).unwrap();
        match logconvexity_probe(|x| Ok(entry.ln_eval(x)), &domain, 10_000, i) {
            Ok(ProbeOutcome::Pass) => {}
            other => problems.push(format!("entry {entry} gave {other:?}")),
        }
    }

    // log(1 + ε) is concave on [0, 1]: the witness must violate the chord
    let affine = EntryFunction::Affine(AffineForm::new(1.0, vec![(0, 1.0)]));
    let unit = BoxDomain::cube(1, 0.0, 1.0).unwrap();
    let witness_ok = match logconvexity_probe(|x| Ok(affine.ln_eval(x)), &unit, 10_000, 0) {
        Ok(ProbeOutcome::Fail(w)) => {
            let z = w.lambda * w.x[0] + (1.0 - w.lambda) * w.y[0];
            let chord = w.lambda * (1.0 + w.x[0]).ln() + (1.0 - w.lambda) * (1.0 + w.y[0]).ln();
            (1.0 + z).ln() > chord && (0.0..=1.0).contains(&w.x[0]) && (0.0..=1.0).contains(&w.y[0])
        }
        _ => false,
    };
    if !witness_ok {
        problems.push("affine 1+eps did not yield a verified witness".into());
    }

    for s in 0..20u64 {
        let dim = rng.random_range(1..=3);
        let p = rng.random_range(1..=2);
        let t = rng.random_range(1..=4);
        let entries = (0..dim * dim).map(|_| EntryFunction::ExpAffine(random_affine_form(&mut rng, p))).collect();
        let spec = MatrixSpec::new(dim, p, entries).map_err(|e| e.to_string())?;
        let n0 = PopulationVector::new((0..dim).map(|_| rng.random_range(0.1..2.0)).collect()).unwrap();
        let f = SizeFunctional::new((0..dim).map(|_| rng.random_range(0.1..1.0)).collect(), false).unwrap();
        let domain = BoxDomain::cube(p * t, -1.0, 1.0).unwrap();
        let config = ProbeConfig { trials: 10_000, seed: s, allow_hypothesis_violating: false };
        match scenario_convexity_probe(&spec, &n0, &f, t, &domain, &config) {
            Ok(ProbeOutcome::Pass) => {}
            other => problems.push(format!("spec {s} (dim {dim}, T {t}) gave {other:?}")),
        }
    }
    if problems.is_empty() {
        Ok("100 entries pass, affine witness verified, 20 scenario specs pass".into())
    } else {
        Err(problems.join("; "))
    }
}

fn run_cli(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_varorder"))
        .arg("verify-proposition")
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map_err(|e| e.to_string())?
        .status;
    if status.success() {
        Ok(())
    } else {
        Err(format!("varorder exited with {status} at {threads} threads"))
    }
}

fn deterministic_outputs() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/verify_dilation.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (one, eight) = (tmp.path().join("t1"), tmp.path().join("t8"));
    run_cli(&config, &one, 1)?;
    run_cli(&config, &eight, 8)?;
    let mut bytes = 0;
    for name in ["stats.csv", "plot.csv", "report.json"] {
        let a = std::fs::read(one.join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(eight.join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between 1 and 8 threads"));
        }
        bytes += a.len();
    }
    Ok(format!("stats.csv, plot.csv, report.json identical ({bytes} bytes)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("order checkers match brute-force oracle", order_checker_matches_oracle, Duration::from_secs(10)),
        ("cx implies moment ordering", cx_implies_moment_ordering, Duration::MAX),
        ("ordered scenarios order population size", finite_horizon_ordering, Duration::from_secs(60)),
        ("scalar exponential closed form", scalar_closed_form, Duration::from_secs(60)),
        ("arithmetic-scale lognormal mean", lande_arithmetic_scale, Duration::MAX),
        ("small-noise growth approximation", small_noise_growth, Duration::from_secs(30)),
        ("convexity probes", probes_embody_the_proof, Duration::from_secs(120)),
        ("determinism across thread counts", deterministic_outputs, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("{tag} AC{} {name} [{:.2}s]: {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed == 0 {
        println!("all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}

use std::path::{Path, PathBuf};
use std::thread;

use accel_core::analysis::{self, accelerated_rate, check_convex_bound, detect_cycle, fit_contraction, fit_rate, CycleReport, RateReport, Verdict, DEFAULT_WINDOW};
use accel_core::estimation::coupled_nag_run;
use accel_core::flows::{default_step, integrate, integrate_euler};
use accel_core::objectives::{condition_number, locate_minimizer, make_quadratic};
use accel_core::optimizers::run;
use accel_core::{linalg, FlowSpec, Method, MethodSpec, Objective64, PhaseState, QuadraticSpec, Trajectory64};
use serde::Serialize;

use crate::config::{ExperimentConfig, Issue, MethodEntry, ObjectiveConfig, ValidationError};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{self, fmt_f64};

pub const SUMMARY_VERSION: u32 = 1;
pub const CYCLE_TRANSIENT: f64 = 0.5;
pub const CYCLE_TOL: f64 = 1e-9;
/// Budget for locating the minimizer of objectives without a closed-form one.
pub const REFERENCE_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub library_version: String,
    pub seed: u64,
    /// Canonical config bytes hashed above, relative to the output directory.
    pub config_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveSummary {
    pub family: String,
    pub dim: usize,
    pub mu: f64,
    pub lip: f64,
    pub kappa: Option<f64>,
    pub fmin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub name: String,
    pub kind: String,
    pub status: String,
    pub error: Option<String>,
    pub csv: Option<String>,
    pub steps: usize,
    pub final_f_gap: Option<f64>,
    pub monotone_violations: Option<usize>,
    pub rate: Option<RateReport>,
    pub cycle: Option<CycleReport>,
    pub convex_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub method: String,
    pub fitted_contraction: f64,
    pub theoretical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub pair: String,
    pub delta: f64,
    pub max_deviation: f64,
    /// `max_deviation / (Δ·‖x₀ − x*‖)`.
    pub envelope_constant: Option<f64>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: u32,
    pub command: String,
    pub manifest: Manifest,
    pub objective: ObjectiveSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<Vec<RunSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub out_dir: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Output directory: the explicit override, else the config's `out`, else `./results`.
pub fn resolve_out(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Objective with a reference optimum attached when none is known in closed form.
pub fn prepared_objective(cfg: &ExperimentConfig) -> HarnessResult<(Objective64, Vec<f64>)> {
    let obj = cfg.build_objective()?;
    let x0 = cfg.initial_point(obj.dim());
    if obj.fmin().is_some() {
        return Ok((obj, x0));
    }
    let (xstar, fstar) = locate_minimizer(&obj, &x0, REFERENCE_ITERS);
    Ok((obj.with_reference(xstar, fstar)?, x0))
}

fn objective_summary(cfg: &ExperimentConfig, obj: &Objective64) -> ObjectiveSummary {
    let family = match &cfg.objective {
        ObjectiveConfig::Quadratic(_) => "quadratic",
        ObjectiveConfig::LogSumExp { .. } => "log_sum_exp",
        ObjectiveConfig::RandomLogSumExp { .. } => "random_log_sum_exp",
        ObjectiveConfig::Piecewise1d(_) => "piecewise_1d",
        ObjectiveConfig::Counterexample => "counterexample",
    };
    ObjectiveSummary {
        family: family.into(),
        dim: obj.dim(),
        mu: obj.mu(),
        lip: obj.lip(),
        kappa: condition_number(obj).ok(),
        fmin: obj.fmin(),
    }
}

fn prepare_dir(cfg: &ExperimentConfig, out: &Path) -> HarnessResult<Manifest> {
    output::ensure_dir(out)?;
    output::write_bytes_atomic(&out.join(CONFIG_FILE), &cfg.canonical_bytes())?;
    Ok(Manifest {
        config_sha256: cfg.sha256_hex(),
        library_version: accel_core::VERSION.into(),
        seed: cfg.seed,
        config_file: CONFIG_FILE.into(),
    })
}

/// Contraction check for one discrete run: the linear rate `1 − 1/κ` for gradient descent,
/// `1 − 1/√κ` for the momentum methods, both with half-strength pass thresholds.
pub fn rate_report(method: Method, traj: &Trajectory64, kappa: f64) -> accel_core::Result<RateReport> {
    match method {
        Method::Gd => {
            let r = fit_contraction(&traj.f_gaps, DEFAULT_WINDOW)?;
            Ok(RateReport {
                theoretical: Some(1.0 - 1.0 / kappa),
                verdict: Verdict::from_bool(r.fitted_contraction <= 1.0 - 1.0 / (2.0 * kappa)),
                ..r
            })
        }
        Method::NagC => fit_rate(&traj.f_gaps, DEFAULT_WINDOW),
        Method::NagSC | Method::HeavyBall | Method::TripleMomentum => analysis::check_sc_rate(traj, kappa),
    }
}

fn failed(index: usize, entry: &MethodEntry, kind: &str, e: accel_core::Error) -> RunSummary {
    RunSummary {
        index,
        name: entry.name().into(),
        kind: kind.into(),
        status: "failed".into(),
        error: Some(e.to_string()),
        csv: None,
        steps: 0,
        final_f_gap: None,
        monotone_violations: None,
        rate: None,
        cycle: None,
        convex_bound: None,
    }
}

fn run_entry(cfg: &ExperimentConfig, obj: &Objective64, x0: &[f64], index: usize, entry: &MethodEntry, out: &Path) -> HarnessResult<RunSummary> {
    let csv = format!("{index:02}_{}.csv", entry.name());
    let path = out.join(&csv);
    let kappa = condition_number(obj).ok();
    match entry {
        MethodEntry::Discrete(spec) => {
            let t = match run(spec, obj, x0, cfg.budgets.iterations, cfg.budgets.grad_tol) {
                Ok(t) => t,
                Err(e) => return Ok(failed(index, entry, "discrete", e)),
            };
            output::write_discrete_csv(&path, &t)?;
            let xstar = obj.minimizer().expect("reference attached");
            Ok(RunSummary {
                index,
                name: entry.name().into(),
                kind: "discrete".into(),
                status: "ok".into(),
                error: None,
                csv: Some(csv),
                steps: t.len() - 1,
                final_f_gap: finite(*t.f_gaps.last().unwrap()),
                monotone_violations: Some(t.monotone_violations),
                rate: kappa.and_then(|k| rate_report(spec.variant, &t, k).ok()),
                cycle: detect_cycle(&t, CYCLE_TRANSIENT, CYCLE_TOL).ok(),
                convex_bound: (obj.mu() == 0.0).then(|| check_convex_bound(&t, obj, x0, xstar)),
            })
        }
        MethodEntry::Flow(spec) => {
            let h = cfg.budgets.flow_step.unwrap_or_else(|| default_step(obj));
            let params = cfg.manifold_params(obj);
            let start = PhaseState::at_rest(x0.to_vec(), 0.0);
            let t = match integrate(spec, obj, &start, h, cfg.budgets.flow_steps, &params) {
                Ok(t) => t,
                Err(e) => return Ok(failed(index, entry, "flow", e)),
            };
            output::write_flow_csv(&path, &t)?;
            Ok(RunSummary {
                index,
                name: entry.name().into(),
                kind: "flow".into(),
                status: "ok".into(),
                error: None,
                csv: Some(csv),
                steps: t.len() - 1,
                final_f_gap: finite(t.last().diagnostics.f_gap),
                monotone_violations: None,
                rate: None,
                cycle: None,
                convex_bound: None,
            })
        }
        MethodEntry::Estimation {} => {
            let r = match coupled_nag_run(obj, x0, cfg.budgets.iterations) {
                Ok(r) => r,
                Err(e) => return Ok(failed(index, entry, "estimation", e)),
            };
            output::write_estimation_csv(&path, &r)?;
            Ok(RunSummary {
                index,
                name: entry.name().into(),
                kind: "estimation".into(),
                status: "ok".into(),
                error: None,
                csv: Some(csv),
                steps: r.trajectory.len() - 1,
                final_f_gap: finite(*r.trajectory.f_gaps.last().unwrap()),
                monotone_violations: Some(r.trajectory.monotone_violations),
                rate: None,
                cycle: None,
                convex_bound: None,
            })
        }
    }
}

/// Executes every configured method, one CSV per run, then writes `summary.json`.
///
/// Runs execute concurrently; each writes only its own file. A failing method is recorded in
/// the summary and does not stop the others.
pub fn cmd_run(cfg: &ExperimentConfig, out: Option<&Path>) -> HarnessResult<ExperimentResult> {
    cfg.validate()?;
    let out = resolve_out(cfg, out);
    let manifest = prepare_dir(cfg, &out)?;
    let (obj, x0) = prepared_objective(cfg)?;
    let runs: Vec<HarnessResult<RunSummary>> = thread::scope(|s| {
        let handles: Vec<_> = cfg
            .methods
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (obj, x0, out) = (&obj, &x0, &out);
                s.spawn(move || run_entry(cfg, obj, x0, i, m, out))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let runs = runs.into_iter().collect::<HarnessResult<Vec<_>>>()?;
    let summary = Summary {
        version: SUMMARY_VERSION,
        command: "run".into(),
        manifest,
        objective: objective_summary(cfg, &obj),
        runs: Some(runs),
        sweep: None,
        compare: None,
    };
    finish(out, summary)
}

fn finish(out: PathBuf, summary: Summary) -> HarnessResult<ExperimentResult> {
    let summary_path = out.join(SUMMARY_FILE);
    output::write_json_atomic(&summary_path, &summary)?;
    Ok(ExperimentResult {
        out_dir: out,
        summary_path,
        summary,
    })
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation(ValidationError {
        issues: vec![Issue {
            field: field.into(),
            message: message.into(),
        }],
    })
}

pub fn sweep_eigenvalues(kappa: f64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| 1.0 + (kappa - 1.0) * i as f64 / (dim - 1) as f64)
        .collect()
}

/// Rate table over condition numbers on quadratics with eigenvalues evenly spaced on `[1, κ]`.
///
/// `kappas` overrides the config's sweep list. Writes `sweep.csv` and `summary.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, kappas: Option<&[f64]>, out: Option<&Path>) -> HarnessResult<ExperimentResult> {
    cfg.validate()?;
    let ObjectiveConfig::Quadratic(base) = &cfg.objective else {
        return Err(invalid("objective", "sweeps need a quadratic objective"));
    };
    let dim = cfg.sweep.as_ref().map_or(base.eigenvalues.len(), |s| s.dim);
    if dim < 2 {
        return Err(invalid("sweep.dim", "must be at least 2"));
    }
    let kappas: Vec<f64> = match (kappas, &cfg.sweep) {
        (Some(k), _) => k.to_vec(),
        (None, Some(s)) => s.kappas.clone(),
        (None, None) => return Err(invalid("sweep", "no condition numbers given")),
    };
    if kappas.is_empty() || kappas.iter().any(|k| !(*k >= 1.0 && k.is_finite())) {
        return Err(invalid("sweep.kappas", "condition numbers must be finite and >= 1"));
    }
    let mut methods = Vec::new();
    for (i, m) in cfg.methods.iter().enumerate() {
        match m {
            MethodEntry::Discrete(spec) if spec.variant != Method::NagC => methods.push(*spec),
            _ => return Err(invalid(&format!("methods[{i}]"), "sweeps support GD, NagSC, HeavyBall and TripleMomentum")),
        }
    }
    let out = resolve_out(cfg, out);
    let manifest = prepare_dir(cfg, &out)?;
    let x0 = cfg.initial_point(dim);
    let mut rows = Vec::new();
    let mut last = None;
    for &kappa in &kappas {
        let obj = make_quadratic(&QuadraticSpec {
            eigenvalues: sweep_eigenvalues(kappa, dim),
            rotation_seed: base.rotation_seed,
            offset: vec![],
        })?;
        for spec in &methods {
            let report = run(spec, &obj, &x0, cfg.budgets.iterations, cfg.budgets.grad_tol)
                .and_then(|t| rate_report(spec.variant, &t, kappa));
            let theoretical = match spec.variant {
                Method::Gd => 1.0 - 1.0 / kappa,
                _ => accelerated_rate(kappa),
            };
            rows.push(match report {
                Ok(r) => SweepRow {
                    kappa,
                    method: spec.variant.name().into(),
                    fitted_contraction: r.fitted_contraction,
                    theoretical,
                    pass: r.verdict.passed(),
                },
                Err(_) => SweepRow {
                    kappa,
                    method: spec.variant.name().into(),
                    fitted_contraction: f64::NAN,
                    theoretical,
                    pass: false,
                },
            });
        }
        last = Some(obj);
    }
    let table = rows.iter().map(|r| {
        vec![
            fmt_f64(r.kappa),
            r.method.clone(),
            fmt_f64(r.fitted_contraction),
            fmt_f64(r.theoretical),
            r.pass.to_string(),
        ]
    });
    output::write_table(&out.join("sweep.csv"), &output::SWEEP_COLUMNS, table)?;
    let summary = Summary {
        version: SUMMARY_VERSION,
        command: "sweep".into(),
        manifest,
        objective: objective_summary(cfg, last.as_ref().expect("at least one kappa")),
        runs: None,
        sweep: Some(rows),
        compare: None,
    };
    finish(out, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pair {
    GdGradientFlow,
    NagScHighRes,
}

fn pairing(cfg: &ExperimentConfig) -> HarnessResult<(Pair, MethodSpec<f64>, FlowSpec<f64>)> {
    let discrete: Vec<_> = cfg
        .methods
        .iter()
        .filter_map(|m| match m {
            MethodEntry::Discrete(d) => Some(*d),
            _ => None,
        })
        .collect();
    let flows: Vec<_> = cfg
        .methods
        .iter()
        .filter_map(|m| match m {
            MethodEntry::Flow(f) => Some(*f),
            _ => None,
        })
        .collect();
    let unpaired = || invalid("methods", "compare needs exactly one of GD + GradientFlow or NagSC + HighResSC");
    if discrete.len() != 1 || flows.len() != 1 || cfg.methods.len() != 2 {
        return Err(unpaired());
    }
    let (d, f) = (discrete[0], flows[0]);
    let pair = match (d.variant, f) {
        (Method::Gd, FlowSpec::GradientFlow { .. }) => Pair::GdGradientFlow,
        (Method::NagSC, FlowSpec::HighResSC) => Pair::NagScHighRes,
        _ => return Err(unpaired()),
    };
    if pair == Pair::NagScHighRes && (d.step.is_some() || d.momentum.is_some()) {
        return Err(invalid("methods", "NagSC must use the default step and momentum to pair with HighResSC"));
    }
    if let (Pair::GdGradientFlow, FlowSpec::GradientFlow { rate: Some(r) }) = (pair, f) {
        if d.step.is_some_and(|s| s != r) {
            return Err(invalid("methods", "GradientFlow rate must equal the GD step"));
        }
    }
    Ok((pair, d, f))
}

/// Runs a discrete method against its continuous model and writes `compare.csv` with the
/// per-`k` deviation.
///
/// GD is matched to Euler-sampled gradient flow with `Δ = 1`; NagSC is matched to the
/// high-resolution flow with `Δ = 1/√L`, integrated by RK4 at `h = Δ/20` from rest.
pub fn cmd_compare(cfg: &ExperimentConfig, out: Option<&Path>) -> HarnessResult<ExperimentResult> {
    cfg.validate()?;
    let (pair, spec, flow_spec) = pairing(cfg)?;
    let out = resolve_out(cfg, out);
    let manifest = prepare_dir(cfg, &out)?;
    let (obj, x0) = prepared_objective(cfg)?;
    let iters = cfg.budgets.iterations;
    let traj = run(&spec, &obj, &x0, iters, 0.0)?;
    let steps = traj.len() - 1;
    let (delta, flow, name) = match pair {
        Pair::GdGradientFlow => {
            let rate = spec.step.or(match flow_spec {
                FlowSpec::GradientFlow { rate } => rate,
                _ => None,
            });
            (1.0, integrate_euler(&obj, &x0, 1.0, steps.max(1), rate)?, "GD-GradientFlow")
        }
        Pair::NagScHighRes => {
            let delta = obj.inv_lip().sqrt();
            let sub = 20;
            let params = cfg.manifold_params(&obj);
            let flow = integrate(&flow_spec, &obj, &PhaseState::at_rest(x0.clone(), 0.0), delta / sub as f64, steps.max(1) * sub, &params)?;
            (delta, flow, "NagSC-HighResSC")
        }
    };
    let deviations = analysis::deviation_series(&traj, &flow, delta)?;
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let r0 = obj.minimizer().map(|xs| linalg::dist(&x0, xs));
    let csv = "compare.csv".to_string();
    let rows = deviations.iter().enumerate().map(|(k, d)| vec![k.to_string(), fmt_f64(k as f64 * delta), fmt_f64(*d)]);
    output::write_table(&out.join(&csv), &output::COMPARE_COLUMNS, rows)?;
    let summary = Summary {
        version: SUMMARY_VERSION,
        command: "compare".into(),
        manifest,
        objective: objective_summary(cfg, &obj),
        runs: None,
        sweep: None,
        compare: Some(CompareReport {
            pair: name.into(),
            delta,
            max_deviation,
            envelope_constant: r0.filter(|r| *r > 0.0).map(|r| max_deviation / (delta * r)),
            csv,
        }),
    };
    finish(out, summary)
}

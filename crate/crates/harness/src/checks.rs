//! The invariant table printed by `accel-lab check`.

use std::fmt::Write as _;

use accel_core::analysis::{self, check_convex_bound, check_sc_rate, detect_cycle, monotonicity_report};
use accel_core::estimation::{self, coupled_nag_run, verify_envelope, verify_lower_bound};
use accel_core::flows::{default_step, integrate, integrate_euler};
use accel_core::geometry::{connection, metric_r, split_tangent, LinearMap};
use accel_core::objectives::{check_gradient, locate_minimizer, log_sum_exp_instance, make_piecewise_1d, make_quadratic};
use accel_core::optimizers::run;
use accel_core::{linalg, FlowSpec, Lcg64, ManifoldParams, Method, MethodSpec, MomentumSign, Objective64, PhaseState, PiecewiseGradient1DSpec, QuadraticSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// Momentum sign used by the accelerated-rate row.
    pub momentum_sign: MomentumSign,
    /// Replace the counterexample's middle slope so its gradient jumps at the breakpoints.
    pub corrupt_counterexample: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub measured: f64,
    pub limit: String,
    pub passed: bool,
}

impl CheckRow {
    fn at_most(name: &'static str, measured: f64, limit: f64) -> Self {
        Self {
            name,
            measured,
            limit: format!("<= {limit:e}"),
            passed: measured <= limit,
        }
    }

    fn holds(name: &'static str, measured: f64, limit: &str, passed: bool) -> Self {
        Self {
            name,
            measured,
            limit: limit.into(),
            passed,
        }
    }
}

fn quad(eigenvalues: Vec<f64>, seed: u64) -> Objective64 {
    make_quadratic(&QuadraticSpec {
        eigenvalues,
        rotation_seed: seed,
        offset: vec![],
    })
    .expect("fixed quadratic")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn counterexample_spec(corrupt: bool) -> PiecewiseGradient1DSpec<f64> {
    let mut spec = PiecewiseGradient1DSpec::counterexample();
    if corrupt {
        spec.slopes[1] = 2.0;
    }
    spec
}

fn max_fd_deviation(f: &Objective64, seed: u64, breakpoints: &[f64]) -> f64 {
    let mut rng = Lcg64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = rng.normal_vec(f.dim()).into_iter().map(|v| 1.5 * v).collect();
        let h = 1e-6 * (linalg::norm(&x) + 1.0);
        if f.dim() == 1 && breakpoints.iter().any(|b| (x[0] - b).abs() < 10.0 * h) {
            continue;
        }
        worst = worst.max(check_gradient(f, &x, h));
    }
    worst
}

fn gradient_rows(opts: &CheckOptions) -> Vec<CheckRow> {
    let q = make_quadratic(&QuadraticSpec {
        eigenvalues: linspace(1.0, 100.0, 6),
        rotation_seed: 11,
        offset: vec![0.5, -1.0, 0.0, 2.0, 0.25, -0.75],
    })
    .expect("fixed quadratic");
    let lse = log_sum_exp_instance(5, 8, 1.0, 3).expect("fixed instance");
    let spec = counterexample_spec(opts.corrupt_counterexample);
    let jump = spec.gradient_jumps().iter().fold(0.0f64, |m, j| m.max(j.abs()));
    let piecewise = make_piecewise_1d(&spec);
    let mut rows = vec![
        CheckRow::at_most("gradient fd: quadratic", max_fd_deviation(&q, 1, &[]), 1e-5),
        CheckRow::at_most("gradient fd: log-sum-exp", max_fd_deviation(&lse, 2, &[]), 1e-5),
        CheckRow::holds("counterexample continuity", jump, "<= 1e-12 and constructible", piecewise.is_ok() && jump <= 1e-12),
    ];
    rows.push(match &piecewise {
        Ok(f) => CheckRow::at_most("gradient fd: counterexample", max_fd_deviation(f, 3, &spec.breakpoints), 1e-5),
        Err(_) => CheckRow::holds("gradient fd: counterexample", f64::NAN, "objective must build", false),
    });
    rows
}

fn geometry_rows() -> Vec<CheckRow> {
    let objectives = [quad(vec![1.0, 3.0, 10.0, 40.0], 5), log_sum_exp_instance(4, 6, 0.7, 9).expect("fixed instance")];
    let mut rng = Lcg64::new(2024);
    let (mut recon, mut orth, mut annih) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let f = &objectives[i % 2];
        let p = ManifoldParams::new(0.5 + rng.uniform(), f.inv_lip()).expect("positive rates");
        let x1 = rng.normal_vec(4);
        let xd1 = rng.normal_vec(4);
        let xd2 = rng.normal_vec(4);
        let w = connection(f, &x1, &p);
        let split = split_tangent(&xd1, &xd2, &w);
        let (r1, r2) = split.reconstruct();
        recon = recon.max(linalg::max_abs_diff(&r1, &xd1)).max(linalg::max_abs_diff(&r2, &xd2));
        let h = (&split.horizontal.0[..], &split.horizontal.1[..]);
        let v = (&split.vertical.0[..], &split.vertical.1[..]);
        orth = orth.max(metric_r(w.clone()).inner(h, v).abs());
        annih = annih.max(linalg::norm(&linalg::add(&w.apply(h.0), h.1)));
    }
    vec![
        CheckRow::at_most("geometry: split reconstruction", recon, 1e-12),
        CheckRow::at_most("geometry: R-orthogonality", orth, 1e-10),
        CheckRow::at_most("geometry: normal annihilation", annih, 1e-10),
    ]
}

fn gd_euler_row() -> CheckRow {
    let f = quad(linspace(1.0, 10.0, 4), 3);
    let x0 = Lcg64::new(10).on_sphere(4, 1.0);
    let gd = run(&MethodSpec::new(Method::Gd), &f, &x0, 100, 0.0).expect("GD runs");
    let euler = integrate_euler(&f, &x0, 1.0, 100, None).expect("Euler runs");
    let dev = analysis::compare_discrete_flow(&gd, &euler, 1.0).unwrap_or(f64::INFINITY);
    CheckRow::at_most("GD equals Euler gradient flow", dev, 1e-13)
}

fn estimation_rows() -> Vec<CheckRow> {
    let f = quad(linspace(1.0, 100.0, 5), 8);
    let x0 = Lcg64::new(8).on_sphere(5, 2.0);
    let Ok(coupled) = coupled_nag_run(&f, &x0, 200) else {
        return vec![CheckRow::holds("estimation: coupled run", f64::NAN, "consistent", false)];
    };
    let alpha = estimation::mixing_weight(&f);
    let phi0 = &coupled.history[0];
    let mut rng = Lcg64::new(80);
    let mut lower = 0usize;
    let mut envelope = 0usize;
    let mut lambda = 0.0f64;
    for (k, (s, st)) in coupled.history.iter().zip(&coupled.trajectory.states).enumerate() {
        lower += usize::from(!verify_lower_bound(s, &f, &st.x));
        let samples: Vec<Vec<f64>> = (0..50).map(|_| rng.normal_vec(5)).collect();
        envelope += usize::from(!verify_envelope(s, &f, phi0, &samples));
        lambda = lambda.max((s.lambda - (1.0 - alpha).powi(k as i32)).abs());
    }
    let nag = run(&MethodSpec::new(Method::NagSC), &f, &x0, 200, 0.0).expect("NagSC runs");
    let equiv = coupled
        .trajectory
        .states
        .iter()
        .zip(&nag.states)
        .map(|(a, b)| linalg::max_abs_diff(&a.x, &b.x))
        .fold(0.0, f64::max);
    vec![
        CheckRow::at_most("estimation: lower-bound violations", lower as f64, 0.0),
        CheckRow::at_most("estimation: envelope violations", envelope as f64, 0.0),
        CheckRow::at_most("estimation: lambda closed form", lambda, 1e-12),
        CheckRow::at_most("estimation: two-sequence equivalence", equiv, 1e-12),
    ]
}

fn rate_row(opts: &CheckOptions) -> CheckRow {
    let kappa = 100.0;
    let f = quad(linspace(1.0, kappa, 8), 21);
    let x0 = Lcg64::new(21).on_sphere(8, 1.0);
    let mut spec = MethodSpec::new(Method::NagSC);
    spec.sign = opts.momentum_sign;
    let limit = analysis::accelerated_threshold(kappa);
    match run(&spec, &f, &x0, 600, 0.0).and_then(|t| check_sc_rate(&t, kappa)) {
        Ok(r) => CheckRow::holds("NagSC rate, kappa = 100", r.fitted_contraction, &format!("<= {limit:.4}"), r.verdict.passed()),
        Err(_) => CheckRow::holds("NagSC rate, kappa = 100", f64::NAN, &format!("<= {limit:.4}"), false),
    }
}

fn manifold_row() -> CheckRow {
    let f = quad(vec![1.0, 5.0, 25.0], 12);
    let p = ManifoldParams::new(2.0, f.inv_lip()).expect("positive rates");
    let spec = FlowSpec::ControlledNaim { alpha: p.alpha, beta: p.beta };
    let mut rng = Lcg64::new(5);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let start = PhaseState::new(rng.normal_vec(3), rng.normal_vec(3), 0.0);
        let Ok(t) = integrate(&spec, &f, &start, 0.01, 500, &p) else {
            return CheckRow::holds("ControlledNaim residual slope", f64::NAN, "within 1% of -alpha", false);
        };
        let ts: Vec<f64> = t.times().collect();
        let ys: Vec<f64> = t.samples.iter().map(|s| s.diagnostics.m0_residual_norm.ln()).collect();
        worst = worst.max((least_squares_slope(&ts, &ys) + p.alpha).abs() / p.alpha);
    }
    CheckRow::at_most("ControlledNaim residual slope (rel. error)", worst, 0.01)
}

pub(crate) fn least_squares_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    sxy / sxx
}

fn equilibrium_row() -> CheckRow {
    let xstar = vec![0.3, -1.2];
    let f = make_quadratic(&QuadraticSpec {
        eigenvalues: vec![2.0, 20.0],
        rotation_seed: 4,
        offset: xstar.clone(),
    })
    .expect("fixed quadratic");
    let p = ManifoldParams::for_objective(&f);
    let specs = [
        FlowSpec::GradientFlow { rate: None },
        FlowSpec::ControlledNaim { alpha: 2.0, beta: 0.05 },
        FlowSpec::PerturbedNaim { alpha: 2.0, beta: 0.05 },
        FlowSpec::HighResSC,
        FlowSpec::HighResConvex { t0: None },
        FlowSpec::HeavyBallFlow,
        FlowSpec::TripleMomentumFlow { gamma: None },
    ];
    let mut drift = 0.0f64;
    for spec in specs {
        match integrate(&spec, &f, &PhaseState::at_rest(xstar.clone(), 0.0), default_step(&f), 1000, &p) {
            Ok(t) => {
                for s in &t.samples {
                    drift = drift.max(linalg::max_abs_diff(&s.state.x1, &xstar)).max(linalg::norm(&s.state.x2));
                }
            }
            Err(_) => drift = f64::INFINITY,
        }
    }
    CheckRow::at_most("flows rest at the minimizer", drift, 1e-10)
}

fn counterexample_rows(opts: &CheckOptions) -> Vec<CheckRow> {
    let Ok(f) = make_piecewise_1d(&counterexample_spec(opts.corrupt_counterexample)) else {
        return vec![CheckRow::holds("heavy ball cycles on counterexample", f64::NAN, "objective must build", false)];
    };
    let hb = run(&MethodSpec::new(Method::HeavyBall), &f, &[1.001], 1500, 0.0);
    let hb_row = match hb.and_then(|t| detect_cycle(&t, 0.5, 1e-9)) {
        Ok(r) => CheckRow::holds(
            "heavy ball cycles on counterexample (gap floor)",
            r.gap_floor,
            "> 1e-2 with a period",
            !r.converged && r.recurrence_period.is_some() && r.gap_floor > 1e-2,
        ),
        Err(_) => CheckRow::holds("heavy ball cycles on counterexample (gap floor)", f64::NAN, "> 1e-2 with a period", false),
    };
    let nag_gap = run(&MethodSpec::new(Method::NagSC), &f, &[1.001], 1500, 0.0)
        .map(|t| *t.f_gaps.last().unwrap())
        .unwrap_or(f64::NAN);
    vec![hb_row, CheckRow::at_most("NagSC converges on counterexample", nag_gap, 1e-9)]
}

fn convex_row() -> CheckRow {
    let f = log_sum_exp_instance(6, 10, 1.0, 5).expect("fixed instance");
    let x0 = Lcg64::new(5).on_sphere(6, 2.0);
    let (xstar, fstar) = locate_minimizer(&f, &x0, 1_000_000);
    let Ok(f) = f.with_reference(xstar.clone(), fstar) else {
        return CheckRow::holds("NagC convex bound", f64::NAN, "reference minimizer", false);
    };
    match run(&MethodSpec::new(Method::NagC), &f, &x0, 1000, 0.0) {
        Ok(t) => {
            let ok = check_convex_bound(&t, &f, &x0, &xstar);
            CheckRow::holds("NagC 2L/(k+1)^2 bound, k <= 1000", *t.f_gaps.last().unwrap(), "every k", ok)
        }
        Err(_) => CheckRow::holds("NagC 2L/(k+1)^2 bound, k <= 1000", f64::NAN, "every k", false),
    }
}

fn monotone_row() -> CheckRow {
    let f = quad(linspace(1.0, 500.0, 6), 13);
    let x0 = Lcg64::new(13).on_sphere(6, 1.0);
    let n = run(&MethodSpec::new(Method::Gd), &f, &x0, 300, 0.0)
        .map(|t| monotonicity_report(&t) as f64)
        .unwrap_or(f64::NAN);
    CheckRow::at_most("GD monotone on kappa = 500", n, 0.0)
}

/// Runs every check; rows come back in a fixed order.
pub fn run_checks(opts: &CheckOptions) -> Vec<CheckRow> {
    let mut rows = gradient_rows(opts);
    rows.extend(geometry_rows());
    rows.push(gd_euler_row());
    rows.extend(estimation_rows());
    rows.push(rate_row(opts));
    rows.push(manifold_row());
    rows.push(equilibrium_row());
    rows.extend(counterexample_rows(opts));
    rows.push(convex_row());
    rows.push(monotone_row());
    rows
}

pub fn render_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in rows {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{verdict}  {:<width$}  {:>12.4e}  {}", r.name, r.measured, r.limit);
    }
    s
}

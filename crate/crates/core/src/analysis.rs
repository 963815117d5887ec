//! Post-processing of recorded runs: rate fits, bound checks, cycle detection and
//! discrete-versus-continuous comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::FlowTrajectory;
use crate::geometry::ManifoldParams;
use crate::linalg;
use crate::objectives::Objective;
use crate::optimizers::Trajectory;
use crate::scalar::Scalar;

/// Gaps at or below this value are treated as converged to floating-point noise.
pub const GAP_FLOOR: f64 = 1e-14;
/// Minimum number of usable points for a rate fit.
pub const MIN_FIT_POINTS: usize = 10;
/// Trailing fraction of the usable gaps used for rate fits.
pub const DEFAULT_WINDOW: f64 = 0.5;
/// Multiplicative slack on the convex `2L/(k + 1)²` bound.
pub const CONVEX_BOUND_SLACK: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// A bare fit with nothing to compare against.
    Unchecked,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Self::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub fitted_contraction: f64,
    pub r_squared: f64,
    /// Theoretical per-iteration factor; `null` in JSON for a bare fit.
    pub theoretical: Option<f64>,
    pub verdict: Verdict,
    /// First and last iteration index used by the fit.
    pub window: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub converged: bool,
    pub recurrence_period: Option<usize>,
    /// Smallest relative recurrence defect over the searched periods.
    pub min_recurrence_distance: f64,
    /// Smallest `f_gap` after the transient.
    pub gap_floor: f64,
}

/// `1 − 1/√κ`.
pub fn accelerated_rate(kappa: f64) -> f64 {
    1.0 - 1.0 / kappa.sqrt()
}

/// Pass threshold `1 − 1/(2√κ)` for the accelerated rate.
pub fn accelerated_threshold(kappa: f64) -> f64 {
    1.0 - 1.0 / (2.0 * kappa.sqrt())
}

/// Least-squares fit of `ln gapₖ` against `k`.
///
/// Only finite gaps above [`GAP_FLOOR`] are usable; the fit uses the trailing
/// `window_fraction` of the usable points (at least [`MIN_FIT_POINTS`] of them), and
/// `fitted_contraction = exp(slope)`.
pub fn fit_rate<T: Scalar>(gaps: &[T], window_fraction: f64) -> Result<RateReport> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "window fraction {window_fraction} not in (0, 1]"
        )));
    }
    let usable: Vec<(usize, f64)> = gaps
        .iter()
        .enumerate()
        .map(|(k, g)| (k, g.to_f64_lossy()))
        .filter(|&(_, g)| g.is_finite() && g > GAP_FLOOR)
        .collect();
    let take = ((usable.len() as f64) * window_fraction).ceil() as usize;
    let window = &usable[usable.len() - take.min(usable.len())..];
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: window.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = window.len() as f64;
    let mean_k = window.iter().map(|&(k, _)| k as f64).sum::<f64>() / n;
    let mean_y = window.iter().map(|&(_, g)| g.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(k, g) in window {
        let dx = k as f64 - mean_k;
        let dy = g.ln() - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateReport {
        fitted_contraction: slope.exp(),
        r_squared,
        theoretical: None,
        verdict: Verdict::Unchecked,
        window: (window[0].0, window[window.len() - 1].0),
    })
}

/// [`fit_rate`], except that a run reaching [`GAP_FLOOR`] too quickly for a fit is summarised
/// by its average contraction to the floor, `(max(gap_K, floor)/gap₀)^(1/K)` at the first such `K`.
pub fn fit_contraction<T: Scalar>(gaps: &[T], window_fraction: f64) -> Result<RateReport> {
    match fit_rate(gaps, window_fraction) {
        Err(Error::InsufficientData { usable, required }) => {
            let gaps: Vec<f64> = gaps.iter().map(|g| g.to_f64_lossy()).collect();
            let hit = gaps.iter().position(|&g| g <= GAP_FLOOR);
            match (hit, gaps.first()) {
                (Some(k), Some(&g0)) if k > 0 && g0 > GAP_FLOOR => Ok(RateReport {
                    fitted_contraction: (gaps[k].max(GAP_FLOOR) / g0).powf(1.0 / k as f64),
                    r_squared: 1.0,
                    theoretical: None,
                    verdict: Verdict::Unchecked,
                    window: (0, k),
                }),
                _ => Err(Error::InsufficientData { usable, required }),
            }
        }
        other => other,
    }
}

/// Fits the trajectory's gap contraction with [`fit_contraction`] and compares it with
/// `1 − 1/(2√κ)`.
pub fn check_sc_rate<T: Scalar>(traj: &Trajectory<T>, kappa: f64) -> Result<RateReport> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidArgument(format!("condition number {kappa} < 1")));
    }
    let report = fit_contraction(&traj.f_gaps, DEFAULT_WINDOW)?;
    Ok(RateReport {
        theoretical: Some(accelerated_rate(kappa)),
        verdict: Verdict::from_bool(report.fitted_contraction <= accelerated_threshold(kappa)),
        ..report
    })
}

/// First `k ≥ 1` where `f(xₖ) − f(x*) > scale·2L/(k + 1)²·‖x₀ − x*‖²`, if any.
pub fn convex_bound_violation<T: Scalar>(traj: &Trajectory<T>, obj: &Objective<T>, x0: &[T], xstar: &[T], scale: f64) -> Option<usize> {
    let fstar = obj.value(xstar).to_f64_lossy();
    let r2 = {
        let d = linalg::dist(x0, xstar).to_f64_lossy();
        d * d
    };
    let lip = obj.lip().to_f64_lossy();
    traj.states.iter().enumerate().skip(1).find_map(|(k, s)| {
        let gap = obj.value(&s.x).to_f64_lossy() - fstar;
        let bound = scale * 2.0 * lip * r2 / ((k + 1) as f64).powi(2);
        (gap > bound).then_some(k)
    })
}

/// The convex `O(1/k²)` bound with slack [`CONVEX_BOUND_SLACK`], at every `k ≥ 1`.
pub fn check_convex_bound<T: Scalar>(traj: &Trajectory<T>, obj: &Objective<T>, x0: &[T], xstar: &[T]) -> bool {
    convex_bound_violation(traj, obj, x0, xstar, CONVEX_BOUND_SLACK).is_none()
}

/// Looks for convergence or a recurrent orbit after the transient.
///
/// The run is `converged` when its final gap is at most `tol`. Otherwise, if the gap stays
/// above `tol`, the smallest period `p ≥ 2` with `‖xₖ₊ₚ − xₖ‖ ≤ tol·(1 + ‖xₖ‖)` for every `k` in
/// the tail is reported. Consecutive iterates must differ by more than `tol`, so slow creep
/// and stagnation are not reported as cycles.
pub fn detect_cycle<T: Scalar>(traj: &Trajectory<T>, transient_fraction: f64, tol: f64) -> Result<CycleReport> {
    let n = traj.len();
    if n < 100 {
        return Err(Error::InsufficientData {
            usable: n,
            required: 100,
        });
    }
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::InvalidArgument(format!(
            "transient fraction {transient_fraction} not in [0, 1)"
        )));
    }
    let start = ((n as f64) * transient_fraction).floor() as usize;
    let tail: Vec<Vec<f64>> = traj.states[start..]
        .iter()
        .map(|s| s.x.iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let gaps: Vec<f64> = traj.f_gaps[start..].iter().map(|g| g.to_f64_lossy()).collect();
    let gap_floor = gaps.iter().copied().filter(|g| !g.is_nan()).fold(f64::INFINITY, f64::min);
    let gap_floor = if gap_floor.is_finite() { gap_floor } else { f64::NAN };
    let converged = gaps.last().is_some_and(|&g| g <= tol);

    let defect = |p: usize, limit: f64| -> f64 {
        let mut worst = 0.0f64;
        for k in 0..tail.len() - p {
            let d = linalg::dist(&tail[k + p], &tail[k]) / (1.0 + linalg::norm(&tail[k]));
            worst = worst.max(d);
            if worst > limit {
                break;
            }
        }
        worst
    };

    let max_period = tail.len() / 2;
    let mut min_recurrence_distance = f64::INFINITY;
    let mut recurrence_period = None;
    let moving = defect(1, f64::INFINITY) > tol;
    for p in 2..=max_period {
        // once a period is found only its defect matters
        let d = defect(p, if recurrence_period.is_some() { tol } else { f64::INFINITY });
        min_recurrence_distance = min_recurrence_distance.min(d);
        if recurrence_period.is_none() && d <= tol {
            recurrence_period = Some(p);
            break;
        }
    }
    let stuck_above_tol = !(gap_floor <= tol);
    if converged || !stuck_above_tol || !moving {
        recurrence_period = None;
    }
    Ok(CycleReport {
        converged,
        recurrence_period,
        min_recurrence_distance,
        gap_floor,
    })
}

/// `maxₖ ‖xₖ − x_flow(t_start + kΔ)‖` with linear interpolation between flow samples.
pub fn compare_discrete_flow<T: Scalar>(traj: &Trajectory<T>, flow: &FlowTrajectory<T>, delta: T) -> Result<T> {
    if traj.objective != flow.objective {
        return Err(Error::Domain("trajectory and flow were produced on different objectives".into()));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument("time map scale must be positive".into()));
    }
    let t_start = flow.samples[0].state.t;
    let mut worst = T::zero();
    for (k, s) in traj.states.iter().enumerate() {
        let t = t_start + delta * T::from_usize(k).unwrap();
        let xf = flow.position_at(t)?;
        worst = worst.max(linalg::dist(&s.x, &xf));
    }
    Ok(worst)
}

/// [`compare_discrete_flow`] with the arguments in the other order.
pub fn compare_flow_discrete<T: Scalar>(flow: &FlowTrajectory<T>, traj: &Trajectory<T>, delta: T) -> Result<T> {
    compare_discrete_flow(traj, flow, delta)
}

/// Per-`k` deviations `‖xₖ − x_flow(t_start + kΔ)‖`.
pub fn deviation_series<T: Scalar>(traj: &Trajectory<T>, flow: &FlowTrajectory<T>, delta: T) -> Result<Vec<T>> {
    if traj.objective != flow.objective {
        return Err(Error::Domain("trajectory and flow were produced on different objectives".into()));
    }
    let t_start = flow.samples[0].state.t;
    traj.states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let xf = flow.position_at(t_start + delta * T::from_usize(k).unwrap())?;
            Ok(linalg::dist(&s.x, &xf))
        })
        .collect()
}

/// Ratio `α/(β·μ)` of the transverse rate to the slowest tangential rate `β·μ`.
///
/// With `β = 1/L` this is `α·L/μ`. It is 1 when the two rates coincide and grows linearly in `α`.
pub fn spectral_gap<T: Scalar>(obj: &Objective<T>, p: &ManifoldParams<T>) -> Result<T> {
    if obj.mu() <= T::zero() {
        return Err(Error::Domain("spectral gap undefined for mu = 0".into()));
    }
    Ok(p.alpha / (p.beta * obj.mu()))
}

/// Number of `k` with `f(xₖ₊₁) > f(xₖ) + 1e-14`.
pub fn monotonicity_report<T: Scalar>(traj: &Trajectory<T>) -> usize {
    let eps = T::lit(GAP_FLOOR);
    traj.values.windows(2).filter(|w| w[1] > w[0] + eps).count()
}

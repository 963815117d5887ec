//! Continuous-time systems and their fixed-step integration.
//!
//! Every second-order system is written in phase-space form `ẋ₁ = x₂`, `ẋ₂ = a(x₁, x₂, t)`:
//!
//! | variant              | acceleration `a`                                                        |
//! |----------------------|-------------------------------------------------------------------------|
//! | `ControlledNaim`     | `−β∇²f·ẋ − αẋ − αβ∇f`                                                   |
//! | `PerturbedNaim`      | `−β∇²f·ẋ − α(ẋ + β∇f) − α(ẋ + ∇f/α)`                                    |
//! | `HighResSC`          | `−∇²f·ẋ/√L − 2√μ·ẋ − (1 + √(μ/L))∇f`                                   |
//! | `HighResConvex`      | `−(3/t)ẋ − ∇²f·ẋ/√L − (1 + 3/(2t√L))∇f`                                 |
//! | `HeavyBallFlow`      | `−2√μ·ẋ − (1 + √(μ/L))∇f`                                               |
//! | `TripleMomentumFlow` | `−(1/L + γ)∇²f·ẋ − μẋ − (1 + μ/L)∇f`                                    |
//!
//! `GradientFlow` is first order, `ẋ₁ = −rate·∇f(x₁)`; its velocity slot is carried along
//! unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldParams, PhaseState};
use crate::linalg;
use crate::objectives::Objective;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", deny_unknown_fields)]
pub enum FlowSpec<T> {
    GradientFlow {
        /// Defaults to `1/L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<T>,
    },
    ControlledNaim {
        alpha: T,
        beta: T,
    },
    PerturbedNaim {
        alpha: T,
        beta: T,
    },
    HighResSC,
    HighResConvex {
        /// Start time; the damping `3/t` is singular at zero. Defaults to `1/√L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<T>,
    },
    HeavyBallFlow,
    TripleMomentumFlow {
        /// Extra Hessian damping; defaults to `1/√L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<T>,
    },
}

impl<T: Scalar> FlowSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GradientFlow { .. } => "GradientFlow",
            Self::ControlledNaim { .. } => "ControlledNaim",
            Self::PerturbedNaim { .. } => "PerturbedNaim",
            Self::HighResSC => "HighResSC",
            Self::HighResConvex { .. } => "HighResConvex",
            Self::HeavyBallFlow => "HeavyBallFlow",
            Self::TripleMomentumFlow { .. } => "TripleMomentumFlow",
        }
    }

    pub fn is_first_order(&self) -> bool {
        matches!(self, Self::GradientFlow { .. })
    }

    /// Checks rate parameters and the objective requirements of the variant.
    pub fn validate(&self, obj: &Objective<T>) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{}: {name} must be > 0, got {v}", self.name())))
            }
        };
        match *self {
            Self::GradientFlow { rate } => positive("rate", rate.unwrap_or_else(|| obj.inv_lip())),
            Self::ControlledNaim { alpha, beta } | Self::PerturbedNaim { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Self::HighResSC | Self::HeavyBallFlow => positive("mu", obj.mu()),
            Self::HighResConvex { .. } => positive("t0", self.start_time(obj)),
            Self::TripleMomentumFlow { gamma } => {
                positive("mu", obj.mu())?;
                positive("gamma", gamma.unwrap_or_else(|| default_gamma(obj)))
            }
        }
    }

    /// Initial time of the variant: `t0` for `HighResConvex`, zero otherwise.
    pub fn start_time(&self, obj: &Objective<T>) -> T {
        match *self {
            Self::HighResConvex { t0 } => t0.unwrap_or_else(|| T::one() / obj.lip().sqrt()),
            _ => T::zero(),
        }
    }
}

fn default_gamma<T: Scalar>(obj: &Objective<T>) -> T {
    T::one() / obj.lip().sqrt()
}

/// Default integration step `0.01/√L`.
pub fn default_step<T: Scalar>(obj: &Objective<T>) -> T {
    T::lit(0.01) / obj.lip().sqrt()
}

/// Largest documented stable RK4 step, `2/√L`.
pub fn stability_limit<T: Scalar>(obj: &Objective<T>) -> T {
    T::lit(2.0) / obj.lip().sqrt()
}

/// Phase-space velocity `(ẋ₁, ẋ₂)` of the chosen system.
pub fn rhs<T: Scalar>(spec: &FlowSpec<T>, s: &PhaseState<T>, obj: &Objective<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = s.dim();
    let grad = obj.gradient(&s.x1);
    let v = &s.x2;
    let one = T::one();
    let two = T::lit(2.0);
    let combine = |hess_coef: T, damping: T, forcing: T| -> Vec<T> {
        let hv = if hess_coef == T::zero() {
            vec![T::zero(); n]
        } else {
            obj.hessian_vec(&s.x1, v)
        };
        (0..n)
            .map(|i| -hess_coef * hv[i] - damping * v[i] - forcing * grad[i])
            .collect()
    };
    let dx2 = match *spec {
        FlowSpec::GradientFlow { rate } => {
            let rate = rate.unwrap_or_else(|| obj.inv_lip());
            return Ok((linalg::scale(-rate, &grad), vec![T::zero(); n]));
        }
        FlowSpec::ControlledNaim { alpha, beta } => {
            let p = ManifoldParams { alpha, beta };
            geometry::control_law(s, obj, &p)
        }
        FlowSpec::PerturbedNaim { alpha, beta } => {
            // α[(ẋ + β∇f) + (ẋ + ∇f/α)] = 2αẋ + (αβ + 1)∇f
            combine(beta, two * alpha, alpha * beta + one)
        }
        FlowSpec::HighResSC => {
            let (mu, lip) = (obj.mu(), obj.lip());
            combine(one / lip.sqrt(), two * mu.sqrt(), one + (mu / lip).sqrt())
        }
        FlowSpec::HighResConvex { .. } => {
            let t0 = spec.start_time(obj);
            // tolerate the rounding of accumulated time stamps
            if s.t < t0 * (one - T::lit(1e-12)) {
                return Err(Error::TimeDomain {
                    t: s.t.to_f64_lossy(),
                    t0: t0.to_f64_lossy(),
                });
            }
            let sqrt_l = obj.lip().sqrt();
            let three = T::lit(3.0);
            combine(one / sqrt_l, three / s.t, one + three / (two * s.t * sqrt_l))
        }
        FlowSpec::HeavyBallFlow => {
            let (mu, lip) = (obj.mu(), obj.lip());
            combine(T::zero(), two * mu.sqrt(), one + (mu / lip).sqrt())
        }
        FlowSpec::TripleMomentumFlow { gamma } => {
            let gamma = gamma.unwrap_or_else(|| default_gamma(obj));
            let (mu, lip) = (obj.mu(), obj.lip());
            combine(one / lip + gamma, mu, one + mu / lip)
        }
    };
    Ok((v.clone(), dx2))
}

/// Per-sample diagnostics recorded along a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowDiagnostics<T> {
    /// `f(x₁) − f*`, NaN when the optimal value is unknown.
    pub f_gap: T,
    pub grad_norm: T,
    pub m0_residual_norm: T,
    pub mp_residual_norm: T,
    pub storage: T,
}

impl<T: Scalar> FlowDiagnostics<T> {
    pub fn at(s: &PhaseState<T>, obj: &Objective<T>, p: &ManifoldParams<T>) -> Self {
        let m0 = geometry::residual_m0(s, obj, p);
        let mp = geometry::residual_mp(s, obj, p);
        Self {
            f_gap: obj.f_gap(&s.x1),
            grad_norm: linalg::norm(&obj.gradient(&s.x1)),
            m0_residual_norm: linalg::norm(&m0),
            mp_residual_norm: linalg::norm(&mp),
            storage: geometry::storage(&m0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample<T> {
    pub state: PhaseState<T>,
    pub diagnostics: FlowDiagnostics<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory<T> {
    pub samples: Vec<FlowSample<T>>,
    pub step: T,
    pub spec: FlowSpec<T>,
    pub params: ManifoldParams<T>,
    /// Fingerprint of the objective the flow was integrated on.
    pub objective: u64,
}

impl<T: Scalar> FlowTrajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    pub fn last(&self) -> &FlowSample<T> {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Position at time `t` by linear interpolation between neighbouring samples.
    pub fn position_at(&self, t: T) -> Result<Vec<T>> {
        let first = self.samples[0].state.t;
        let h = self.step;
        let last = self.last().state.t;
        let slack = h * T::lit(1e-9);
        if t < first - slack || t > last + slack {
            return Err(Error::Domain(format!(
                "time {t} outside sampled range [{first}, {last}]"
            )));
        }
        let pos = ((t - first) / h).max(T::zero());
        let i = pos.floor().to_usize().unwrap_or(0).min(self.samples.len() - 1);
        let frac = pos - T::from_usize(i).unwrap();
        let a = &self.samples[i].state.x1;
        if i + 1 >= self.samples.len() || frac <= slack {
            return Ok(a.clone());
        }
        let b = &self.samples[i + 1].state.x1;
        Ok(a.iter().zip(b).map(|(&x, &y)| x + frac * (y - x)).collect())
    }
}

fn check_budget<T: Scalar>(h: T, steps: usize) -> Result<()> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {h}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    Ok(())
}

/// Classical fixed-step fourth-order Runge–Kutta integration.
///
/// Returns `steps + 1` samples. Stable for `h ≤ 2/√L` on the systems above; see
/// [`default_step`] and [`stability_limit`].
pub fn integrate<T: Scalar>(
    spec: &FlowSpec<T>,
    obj: &Objective<T>,
    initial: &PhaseState<T>,
    h: T,
    steps: usize,
    params: &ManifoldParams<T>,
) -> Result<FlowTrajectory<T>> {
    check_budget(h, steps)?;
    spec.validate(obj)?;
    params.validate()?;
    if initial.dim() != obj.dim() {
        return Err(Error::InvalidArgument("initial state dimension mismatch".into()));
    }
    let t_start = initial.t.max(spec.start_time(obj));
    let mut state = PhaseState::new(initial.x1.clone(), initial.x2.clone(), t_start);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(FlowSample {
        diagnostics: FlowDiagnostics::at(&state, obj, params),
        state: state.clone(),
    });
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let shifted = |s: &PhaseState<T>, k: &(Vec<T>, Vec<T>), c: T, t: T| {
        PhaseState::new(linalg::axpy(&s.x1, c, &k.0), linalg::axpy(&s.x2, c, &k.1), t)
    };
    for step in 1..=steps {
        let t0 = state.t;
        let k1 = rhs(spec, &state, obj)?;
        let k2 = rhs(spec, &shifted(&state, &k1, half * h, t0 + half * h), obj)?;
        let k3 = rhs(spec, &shifted(&state, &k2, half * h, t0 + half * h), obj)?;
        let k4 = rhs(spec, &shifted(&state, &k3, h, t0 + h), obj)?;
        let combine = |y: &[T], a: &[T], b: &[T], c: &[T], d: &[T]| -> Vec<T> {
            (0..y.len())
                .map(|i| y[i] + sixth * (a[i] + T::lit(2.0) * (b[i] + c[i]) + d[i]))
                .collect()
        };
        let x1 = combine(&state.x1, &k1.0, &k2.0, &k3.0, &k4.0);
        let x2 = combine(&state.x2, &k1.1, &k2.1, &k3.1, &k4.1);
        // time stamps are computed from the step index to avoid drift
        state = PhaseState::new(x1, x2, t_start + h * T::from_usize(step).unwrap());
        if !state.is_finite() {
            return Err(Error::Divergence { step });
        }
        samples.push(FlowSample {
            diagnostics: FlowDiagnostics::at(&state, obj, params),
            state: state.clone(),
        });
    }
    Ok(FlowTrajectory {
        samples,
        step: h,
        spec: *spec,
        params: *params,
        objective: obj.fingerprint(),
    })
}

/// Forward-Euler sampling of gradient flow `ẋ = −rate·∇f(x)`.
///
/// With `h = 1` and `rate = step` the samples are exactly the gradient-descent iterates with
/// that step: `x + 1·(−rate·g)` and `x − rate·g` round identically.
pub fn integrate_euler<T: Scalar>(obj: &Objective<T>, x0: &[T], h: T, steps: usize, rate: Option<T>) -> Result<FlowTrajectory<T>> {
    check_budget(h, steps)?;
    let spec = FlowSpec::GradientFlow { rate };
    spec.validate(obj)?;
    if x0.len() != obj.dim() {
        return Err(Error::InvalidArgument("initial point dimension mismatch".into()));
    }
    let params = ManifoldParams::for_objective(obj);
    let n = obj.dim();
    let mut state = PhaseState::at_rest(x0.to_vec(), T::zero());
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(FlowSample {
        diagnostics: FlowDiagnostics::at(&state, obj, &params),
        state: state.clone(),
    });
    for step in 1..=steps {
        let (dx1, _) = rhs(&spec, &state, obj)?;
        let x1: Vec<T> = state.x1.iter().zip(&dx1).map(|(&x, &d)| x + h * d).collect();
        state = PhaseState::new(x1, vec![T::zero(); n], h * T::from_usize(step).unwrap());
        if !state.is_finite() {
            return Err(Error::Divergence { step });
        }
        samples.push(FlowSample {
            diagnostics: FlowDiagnostics::at(&state, obj, &params),
            state: state.clone(),
        });
    }
    Ok(FlowTrajectory {
        samples,
        step: h,
        spec,
        params,
        objective: obj.fingerprint(),
    })
}

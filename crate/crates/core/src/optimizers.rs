//! Discrete first-order methods as pure step functions plus a common runner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objectives::Objective;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GD")]
    Gd,
    NagSC,
    NagC,
    HeavyBall,
    TripleMomentum,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gd => "GD",
            Self::NagSC => "NagSC",
            Self::NagC => "NagC",
            Self::HeavyBall => "HeavyBall",
            Self::TripleMomentum => "TripleMomentum",
        }
    }
}

/// Sign of the momentum term in the look-ahead update `y = x⁺ ± β(x⁺ − x)`.
///
/// `Plus` is the accelerated method. `Minus` is kept only as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumSign {
    #[default]
    Plus,
    Minus,
}

impl MomentumSign {
    fn apply<T: Scalar>(self, beta: T) -> T {
        match self {
            Self::Plus => beta,
            Self::Minus => -beta,
        }
    }
}

/// Triple-momentum coefficients in `x⁺ = x + β(x − x⁻) − α∇f(y)`, `y⁺ = x⁺ + ν(x⁺ − x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleMomentumParams<T> {
    pub alpha: T,
    pub beta: T,
    pub nu: T,
}

impl<T: Scalar> TripleMomentumParams<T> {
    /// `ρ = 1 − 1/√κ`, `α = (1 + ρ)/L`, `β = ρ²/(2 − ρ)`, `ν = ρ²/((1 + ρ)(2 − ρ))`.
    pub fn default_schedule(obj: &Objective<T>) -> Result<Self> {
        require_strongly_convex(obj, Method::TripleMomentum)?;
        let one = T::one();
        let two = T::lit(2.0);
        let rho = one - (obj.mu() / obj.lip()).sqrt();
        Ok(Self {
            alpha: (one + rho) / obj.lip(),
            beta: rho * rho / (two - rho),
            nu: rho * rho / ((one + rho) * (two - rho)),
        })
    }
}

/// Method selection with optional overrides of the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec<T> {
    pub variant: Method,
    /// Gradient step; defaults to `1/L` (heavy ball: the Polyak step `4/(√L + √μ)²`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<T>,
    /// Momentum coefficient for NagSC and HeavyBall.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleMomentumParams<T>>,
    #[serde(default)]
    pub sign: MomentumSign,
}

impl<T: Scalar> MethodSpec<T> {
    pub fn new(variant: Method) -> Self {
        Self {
            variant,
            step: None,
            momentum: None,
            triple: None,
            sign: MomentumSign::Plus,
        }
    }
}

/// Iterate of a first-order method.
///
/// `x` is the gradient-step point, `y` the look-ahead point where the next gradient is taken,
/// and `x_prev` the previous `x`. `theta` is the convex-case schedule `θₖ = 2/(k + 2)`, fixed
/// to 1 for the other methods.
#[derive(Debug, Clone, PartialEq)]
pub struct IterState<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub x_prev: Vec<T>,
    pub theta: T,
}

impl<T: Scalar> IterState<T> {
    /// Zero initial momentum: `y = x_prev = x₀`.
    pub fn new(x0: &[T]) -> Self {
        Self {
            k: 0,
            x: x0.to_vec(),
            y: x0.to_vec(),
            x_prev: x0.to_vec(),
            theta: T::one(),
        }
    }

    fn advance(&self, x: Vec<T>, y: Vec<T>, theta: T) -> Self {
        Self {
            k: self.k + 1,
            x_prev: self.x.clone(),
            x,
            y,
            theta,
        }
    }
}

fn require_strongly_convex<T: Scalar>(obj: &Objective<T>, m: Method) -> Result<()> {
    if obj.mu() > T::zero() {
        Ok(())
    } else {
        Err(Error::MethodInapplicable(format!(
            "{} requires a strongly convex objective (mu > 0)",
            m.name()
        )))
    }
}

/// `(√L − √μ)/(√L + √μ)`.
pub fn nesterov_momentum<T: Scalar>(obj: &Objective<T>) -> T {
    let (sl, sm) = (obj.lip().sqrt(), obj.mu().sqrt());
    (sl - sm) / (sl + sm)
}

/// Polyak heavy-ball tuning `(4/(√L + √μ)², ((√L − √μ)/(√L + √μ))²)`.
pub fn polyak_parameters<T: Scalar>(obj: &Objective<T>) -> (T, T) {
    let (sl, sm) = (obj.lip().sqrt(), obj.mu().sqrt());
    let b = (sl - sm) / (sl + sm);
    (T::lit(4.0) / ((sl + sm) * (sl + sm)), b * b)
}

/// Momentum coefficient `k/(k + 3)` of the convex-case method.
pub fn nag_c_momentum<T: Scalar>(k: usize) -> T {
    T::from_usize(k).unwrap() / T::from_usize(k + 3).unwrap()
}

/// `x⁺ = x − step·∇f(x)`.
pub fn gd_step<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, step: T) -> IterState<T> {
    let x = linalg::axpy(&s.x, -step, &obj.gradient(&s.x));
    s.advance(x.clone(), x, T::one())
}

/// Strongly convex Nesterov step with step `1/L` and momentum `(√L − √μ)/(√L + √μ)`.
pub fn nag_sc_step<T: Scalar>(s: &IterState<T>, obj: &Objective<T>) -> Result<IterState<T>> {
    require_strongly_convex(obj, Method::NagSC)?;
    Ok(nag_sc_step_with(s, obj, obj.inv_lip(), nesterov_momentum(obj), MomentumSign::Plus))
}

/// `x⁺ = y − step·∇f(y)`, `y⁺ = x⁺ ± β(x⁺ − x)`.
pub fn nag_sc_step_with<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, step: T, beta: T, sign: MomentumSign) -> IterState<T> {
    let x = linalg::axpy(&s.y, -step, &obj.gradient(&s.y));
    let y = linalg::axpy(&x, sign.apply(beta), &linalg::sub(&x, &s.x));
    s.advance(x, y, T::one())
}

/// Convex Nesterov step `x⁺ = y − ∇f(y)/L`, `y⁺ = x⁺ + k/(k + 3)·(x⁺ − x)`.
pub fn nag_c_step<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, k: usize) -> IterState<T> {
    nag_c_step_with(s, obj, k, obj.inv_lip())
}

fn nag_c_step_with<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, k: usize, step: T) -> IterState<T> {
    let x = linalg::axpy(&s.y, -step, &obj.gradient(&s.y));
    let y = linalg::axpy(&x, nag_c_momentum(k), &linalg::sub(&x, &s.x));
    let theta = T::lit(2.0) / T::from_usize(k + 3).unwrap();
    s.advance(x, y, theta)
}

/// `x⁺ = x + β(x − x⁻) − α∇f(x)`.
pub fn heavy_ball_step<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, alpha: T, beta: T) -> IterState<T> {
    let g = obj.gradient(&s.x);
    let x: Vec<T> = (0..s.x.len())
        .map(|i| s.x[i] + beta * (s.x[i] - s.x_prev[i]) - alpha * g[i])
        .collect();
    s.advance(x.clone(), x, T::one())
}

/// Triple-momentum step with explicit coefficients.
pub fn tm_step<T: Scalar>(s: &IterState<T>, obj: &Objective<T>, p: &TripleMomentumParams<T>) -> Result<IterState<T>> {
    require_strongly_convex(obj, Method::TripleMomentum)?;
    let g = obj.gradient(&s.y);
    let x: Vec<T> = (0..s.x.len())
        .map(|i| s.x[i] + p.beta * (s.x[i] - s.x_prev[i]) - p.alpha * g[i])
        .collect();
    let y = linalg::axpy(&x, p.nu, &linalg::sub(&x, &s.x));
    Ok(s.advance(x, y, T::one()))
}

/// Resolved per-method constants, so the runner evaluates defaults once.
#[derive(Debug, Clone, Copy)]
enum Stepper<T> {
    Gd { step: T },
    NagSC { step: T, beta: T, sign: MomentumSign },
    NagC { step: T },
    HeavyBall { alpha: T, beta: T },
    Triple(TripleMomentumParams<T>),
}

impl<T: Scalar> Stepper<T> {
    fn resolve(spec: &MethodSpec<T>, obj: &Objective<T>) -> Result<Self> {
        let step = spec.step.unwrap_or_else(|| obj.inv_lip());
        if !(step > T::zero() && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
        }
        Ok(match spec.variant {
            Method::Gd => Self::Gd { step },
            Method::NagSC => {
                require_strongly_convex(obj, Method::NagSC)?;
                Self::NagSC {
                    step,
                    beta: spec.momentum.unwrap_or_else(|| nesterov_momentum(obj)),
                    sign: spec.sign,
                }
            }
            Method::NagC => Self::NagC { step },
            Method::HeavyBall => {
                let (alpha, beta) = polyak_parameters(obj);
                let beta = spec.momentum.unwrap_or(beta);
                if !(beta >= T::zero() && beta < T::one()) {
                    return Err(Error::InvalidArgument(format!("heavy-ball momentum {beta} not in [0, 1)")));
                }
                Self::HeavyBall {
                    alpha: spec.step.unwrap_or(alpha),
                    beta,
                }
            }
            Method::TripleMomentum => match spec.triple {
                Some(p) => {
                    require_strongly_convex(obj, Method::TripleMomentum)?;
                    Self::Triple(p)
                }
                None => Self::Triple(TripleMomentumParams::default_schedule(obj)?),
            },
        })
    }

    fn step(&self, s: &IterState<T>, obj: &Objective<T>) -> IterState<T> {
        match *self {
            Self::Gd { step } => gd_step(s, obj, step),
            Self::NagSC { step, beta, sign } => nag_sc_step_with(s, obj, step, beta, sign),
            Self::NagC { step } => nag_c_step_with(s, obj, s.k, step),
            Self::HeavyBall { alpha, beta } => heavy_ball_step(s, obj, alpha, beta),
            Self::Triple(p) => tm_step(s, obj, &p).expect("checked at resolve"),
        }
    }
}

/// Recorded run of a discrete method.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub method: MethodSpec<T>,
    pub states: Vec<IterState<T>>,
    /// `f(xₖ)`.
    pub values: Vec<T>,
    /// `f(xₖ) − f*`, NaN when the optimal value is unknown.
    pub f_gaps: Vec<T>,
    pub grad_norms: Vec<T>,
    /// Number of `k` with `f(xₖ₊₁) > f(xₖ)`.
    pub monotone_violations: usize,
    /// Fingerprint of the objective the method ran on.
    pub objective: u64,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &IterState<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn iterates(&self) -> impl Iterator<Item = &[T]> {
        self.states.iter().map(|s| s.x.as_slice())
    }

    /// `monotone_flag` per index: 1 if `f(xₖ) > f(xₖ₋₁)`, 0 otherwise (always 0 at `k = 0`).
    pub fn monotone_flags(&self) -> Vec<u8> {
        let mut flags = vec![0u8; self.states.len()];
        for k in 1..self.values.len() {
            flags[k] = u8::from(self.values[k] > self.values[k - 1]);
        }
        flags
    }
}

/// Runs a method from `x0` until `‖∇f(xₖ)‖ ≤ grad_tol` or `max_iters` steps.
///
/// The initial state is recorded at `k = 0`; each step appends one state.
pub fn run<T: Scalar>(method: &MethodSpec<T>, obj: &Objective<T>, x0: &[T], max_iters: usize, grad_tol: T) -> Result<Trajectory<T>> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if x0.len() != obj.dim() {
        return Err(Error::InvalidArgument("initial point dimension mismatch".into()));
    }
    let stepper = Stepper::resolve(method, obj)?;
    let mut state = IterState::new(x0);
    let mut traj = Trajectory {
        method: *method,
        states: Vec::with_capacity(max_iters + 1),
        values: Vec::with_capacity(max_iters + 1),
        f_gaps: Vec::with_capacity(max_iters + 1),
        grad_norms: Vec::with_capacity(max_iters + 1),
        monotone_violations: 0,
        objective: obj.fingerprint(),
    };
    loop {
        let value = obj.value(&state.x);
        let gnorm = linalg::norm(&obj.gradient(&state.x));
        if let Some(&prev) = traj.values.last() {
            if value > prev {
                traj.monotone_violations += 1;
            }
        }
        traj.values.push(value);
        traj.f_gaps.push(obj.fmin().map_or(T::nan(), |f| value - f));
        traj.grad_norms.push(gnorm);
        let k = state.k;
        traj.states.push(state);
        if gnorm <= grad_tol || k >= max_iters {
            break;
        }
        let next = stepper.step(traj.states.last().unwrap(), obj);
        if !linalg::is_finite(&next.x) || !linalg::is_finite(&next.y) {
            return Err(Error::Divergence { step: next.k });
        }
        state = next;
    }
    Ok(traj)
}

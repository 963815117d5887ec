//! Geometry of the slow manifold `M₀ = {x₂ + β∇f(x₁) = 0}` in phase space.
//!
//! The connection `ω = β∇²f(x₁)` splits a phase-space tangent `(ẋ₁, ẋ₂)` into a horizontal
//! part `(ẋ₁, −ωẋ₁)`, tangent to the level sets of the residual, and a vertical part
//! `(0, ẋ₂ + ωẋ₁)` along the fibre. The degenerate form `⟨a, b⟩_R = (ωa₁ + a₂)ᵀ(ωb₁ + b₂)`
//! makes the two parts orthogonal. `ω` is only ever applied through Hessian-vector products,
//! and the form is never inverted.
//!
//! The transverse rate `alpha` is the rate in `Ṁ = −αM`; a storage decay `Ṡ ≤ −α̂S` corresponds
//! to `α = α̂/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objectives::Objective;
use crate::scalar::Scalar;

/// A point in phase space with its time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T> {
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub t: T,
}

impl<T: Scalar> PhaseState<T> {
    pub fn new(x1: Vec<T>, x2: Vec<T>, t: T) -> Self {
        assert_eq!(x1.len(), x2.len(), "position and velocity dimensions differ");
        Self { x1, x2, t }
    }

    /// Position `x`, zero velocity.
    pub fn at_rest(x1: Vec<T>, t: T) -> Self {
        let n = x1.len();
        Self::new(x1, vec![T::zero(); n], t)
    }

    pub fn dim(&self) -> usize {
        self.x1.len()
    }

    pub fn is_finite(&self) -> bool {
        linalg::is_finite(&self.x1) && linalg::is_finite(&self.x2) && self.t.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldParams<T> {
    /// Transverse contraction rate.
    pub alpha: T,
    /// Tangential rate, typically `1/L`.
    pub beta: T,
}

impl<T: Scalar> ManifoldParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// `alpha = mu`, `beta = 1/L`.
    pub fn for_objective(obj: &Objective<T>) -> Self {
        let alpha = if obj.mu() > T::zero() { obj.mu() } else { T::one() };
        Self {
            alpha,
            beta: obj.inv_lip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.beta > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "manifold rates must be positive (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Horizontal and vertical components of a phase-space tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSplit<T> {
    pub horizontal: (Vec<T>, Vec<T>),
    pub vertical: (Vec<T>, Vec<T>),
}

impl<T: Scalar> TangentSplit<T> {
    pub fn reconstruct(&self) -> (Vec<T>, Vec<T>) {
        (
            linalg::add(&self.horizontal.0, &self.vertical.0),
            linalg::add(&self.horizontal.1, &self.vertical.1),
        )
    }
}

/// A linear map on `n`-vectors.
pub trait LinearMap<T> {
    fn apply(&self, v: &[T]) -> Vec<T>;
}

/// Multiplication by a scalar, `v ↦ c·v`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMap<T>(pub T);

impl<T: Scalar> LinearMap<T> for ScalarMap<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        linalg::scale(self.0, v)
    }
}

impl<T: Scalar> LinearMap<T> for linalg::Matrix<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        self.mul_vec(v)
    }
}

/// The connection `ω = β∇²f(x₁)`, evaluated lazily through Hessian-vector products.
#[derive(Debug, Clone)]
pub struct Connection<'a, T> {
    obj: &'a Objective<T>,
    x1: Vec<T>,
    beta: T,
}

impl<T: Scalar> Connection<'_, T> {
    /// Dense matrix of the map, column by column.
    pub fn to_matrix(&self) -> linalg::Matrix<T> {
        let n = self.x1.len();
        let mut m = linalg::Matrix::zeros(n);
        for j in 0..n {
            let col = self.apply(&linalg::unit(n, j));
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }
}

impl<T: Scalar> LinearMap<T> for Connection<'_, T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        linalg::scale(self.beta, &self.obj.hessian_vec(&self.x1, v))
    }
}

/// `M = x₂ + β∇f(x₁)`; zero exactly on `M₀`.
pub fn residual_m0<T: Scalar>(s: &PhaseState<T>, obj: &Objective<T>, p: &ManifoldParams<T>) -> Vec<T> {
    linalg::axpy(&s.x2, p.beta, &obj.gradient(&s.x1))
}

/// `α·x₂ + ∇f(x₁)`, the residual of the perturbation manifold.
pub fn residual_mp<T: Scalar>(s: &PhaseState<T>, obj: &Objective<T>, p: &ManifoldParams<T>) -> Vec<T> {
    linalg::axpy(&obj.gradient(&s.x1), p.alpha, &s.x2)
}

pub fn connection<'a, T: Scalar>(obj: &'a Objective<T>, x1: &[T], p: &ManifoldParams<T>) -> Connection<'a, T> {
    Connection {
        obj,
        x1: x1.to_vec(),
        beta: p.beta,
    }
}

/// Degenerate bilinear form `⟨a, b⟩_R = (ωa₁ + a₂)ᵀ(ωb₁ + b₂)`.
#[derive(Debug, Clone)]
pub struct SemiRiemannMetric<M> {
    omega: M,
}

pub fn metric_r<T: Scalar, M: LinearMap<T>>(omega: M) -> SemiRiemannMetric<M> {
    SemiRiemannMetric { omega }
}

impl<M> SemiRiemannMetric<M> {
    /// Image of a tangent vector under `M₀⊥ = [ω, I]`.
    pub fn normal_component<T: Scalar>(&self, a: (&[T], &[T])) -> Vec<T>
    where
        M: LinearMap<T>,
    {
        linalg::add(&self.omega.apply(a.0), a.1)
    }

    pub fn inner<T: Scalar>(&self, a: (&[T], &[T]), b: (&[T], &[T])) -> T
    where
        M: LinearMap<T>,
    {
        linalg::dot(&self.normal_component(a), &self.normal_component(b))
    }
}

/// Horizontal `(ẋ₁, −ωẋ₁)` plus vertical `(0, ẋ₂ + ωẋ₁)`.
pub fn split_tangent<T: Scalar, M: LinearMap<T>>(xdot1: &[T], xdot2: &[T], omega: &M) -> TangentSplit<T> {
    assert_eq!(xdot1.len(), xdot2.len(), "tangent dimensions differ");
    let w = omega.apply(xdot1);
    TangentSplit {
        horizontal: (xdot1.to_vec(), linalg::scale(-T::one(), &w)),
        vertical: (vec![T::zero(); xdot1.len()], linalg::add(xdot2, &w)),
    }
}

/// `u = −β∇²f(x₁)x₂ − α(x₂ + β∇f(x₁))`, which enforces `Ṁ = −αM` when `ẋ₁ = x₂`.
pub fn control_law<T: Scalar>(s: &PhaseState<T>, obj: &Objective<T>, p: &ManifoldParams<T>) -> Vec<T> {
    let hess_term = linalg::scale(p.beta, &obj.hessian_vec(&s.x1, &s.x2));
    let m = residual_m0(s, obj, p);
    hess_term
        .iter()
        .zip(&m)
        .map(|(&h, &mi)| -h - p.alpha * mi)
        .collect()
}

/// `S = ½‖M‖²`.
pub fn storage<T: Scalar>(residual: &[T]) -> T {
    T::lit(0.5) * linalg::dot(residual, residual)
}

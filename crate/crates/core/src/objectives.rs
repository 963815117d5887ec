//! Test objectives with analytic value, gradient and Hessian-vector oracles.
//!
//! Three families are provided:
//!
//! * rotated quadratics `½(x − o)ᵀA(x − o)` with a prescribed spectrum,
//! * smoothed max functions `s·log Σ exp((aᵢᵀx + bᵢ)/s)` (convex, `mu = 0`),
//! * one-dimensional functions with a continuous piecewise-linear gradient, including the
//!   classical instance on which heavy-ball momentum fails to converge.
//!
//! Objectives are immutable once built; every oracle is a pure function of its input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::Lcg64;
use crate::scalar::Scalar;

/// Largest dimension for which quadratics are stored densely.
pub const MAX_DENSE_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec<T> {
    pub eigenvalues: Vec<T>,
    pub rotation_seed: u64,
    /// Location of the minimizer. Empty means the origin.
    #[serde(default)]
    pub offset: Vec<T>,
}

/// Continuous piecewise-linear gradient in one dimension.
///
/// `slopes[i]` is the gradient slope on segment `i`; segment 0 is `(−∞, b₀)`, segment `i` is
/// `[bᵢ₋₁, bᵢ)` and the last one is `[b_last, ∞)`. Without `intercepts` the gradient is the
/// integral of the slope function from 0, so it vanishes at the origin. With explicit
/// `intercepts` the gradient on segment `i` is `slopes[i]·x + intercepts[i]`, and continuity
/// at every breakpoint is validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseGradient1DSpec<T> {
    pub breakpoints: Vec<T>,
    pub slopes: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercepts: Option<Vec<T>>,
}

impl<T: Scalar> PiecewiseGradient1DSpec<T> {
    /// Segments `25x`, `x + 24`, `25x − 24` split at 1 and 2.
    pub fn counterexample() -> Self {
        Self {
            breakpoints: vec![T::lit(1.0), T::lit(2.0)],
            slopes: vec![T::lit(25.0), T::one(), T::lit(25.0)],
            intercepts: Some(vec![T::zero(), T::lit(24.0), T::lit(-24.0)]),
        }
    }

    /// Gradient jump `g(b⁺) − g(b⁻)` at each breakpoint, from the two one-sided formulas.
    ///
    /// Without explicit intercepts the jumps are zero by construction.
    pub fn gradient_jumps(&self) -> Vec<T> {
        match &self.intercepts {
            None => vec![T::zero(); self.breakpoints.len()],
            Some(c) => self
                .breakpoints
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let left = self.slopes[i] * b + c[i];
                    let right = self.slopes[i + 1] * b + c[i + 1];
                    right - left
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<T> {
    Quadratic {
        matrix: Matrix<T>,
        offset: Vec<T>,
    },
    LogSumExp {
        rows: Vec<Vec<T>>,
        shifts: Vec<T>,
        smoothing: T,
    },
    Piecewise1D {
        breakpoints: Vec<T>,
        slopes: Vec<T>,
        intercepts: Vec<T>,
        /// Antiderivative constants so that `f = F + ½s·x² + c·x` on each segment.
        constants: Vec<T>,
    },
}

/// A smooth objective with its curvature constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    dim: usize,
    mu: T,
    lip: T,
    minimizer: Option<Vec<T>>,
    fmin: Option<T>,
    kind: Kind<T>,
}

/// `½(x − offset)ᵀ Qᵀ Λ Q (x − offset)` with `Q` a seeded random rotation.
pub fn make_quadratic<T: Scalar>(spec: &QuadraticSpec<T>) -> Result<Objective<T>> {
    let n = spec.eigenvalues.len();
    if n == 0 {
        return Err(Error::InvalidSpec("eigenvalues must be non-empty".into()));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidSpec(format!(
            "dimension {n} exceeds dense limit {MAX_DENSE_DIM}"
        )));
    }
    if let Some(bad) = spec.eigenvalues.iter().find(|&&l| !(l > T::zero() && l.is_finite())) {
        return Err(Error::InvalidSpec(format!(
            "eigenvalue {bad} is not a positive finite number"
        )));
    }
    let offset = if spec.offset.is_empty() {
        vec![T::zero(); n]
    } else if spec.offset.len() == n {
        spec.offset.clone()
    } else {
        return Err(Error::InvalidSpec(format!(
            "offset has length {}, expected {n}",
            spec.offset.len()
        )));
    };
    let q = Matrix::random_orthogonal(n, spec.rotation_seed);
    let matrix = Matrix::congruence(&q, &spec.eigenvalues);
    Ok(quadratic_from_parts(matrix, offset, &spec.eigenvalues))
}

/// Quadratic with an explicitly supplied symmetric matrix and its spectrum bounds.
///
/// Used to build conjugated copies of an existing quadratic.
pub fn make_quadratic_from_matrix<T: Scalar>(
    matrix: Matrix<T>,
    offset: Vec<T>,
    mu: T,
    lip: T,
) -> Result<Objective<T>> {
    if !matrix.is_symmetric() {
        return Err(Error::InvalidSpec("matrix is not symmetric".into()));
    }
    if offset.len() != matrix.dim() {
        return Err(Error::InvalidSpec("offset dimension mismatch".into()));
    }
    if !(mu > T::zero() && lip >= mu) {
        return Err(Error::InvalidSpec("require 0 < mu <= lip".into()));
    }
    Ok(quadratic_from_parts(matrix, offset, &[mu, lip]))
}

fn quadratic_from_parts<T: Scalar>(matrix: Matrix<T>, offset: Vec<T>, spectrum: &[T]) -> Objective<T> {
    let mu = spectrum.iter().copied().fold(T::infinity(), T::min);
    let lip = spectrum.iter().copied().fold(T::zero(), T::max);
    Objective {
        dim: offset.len(),
        mu,
        lip,
        minimizer: Some(offset.clone()),
        fmin: Some(T::zero()),
        kind: Kind::Quadratic { matrix, offset },
    }
}

/// `smoothing · log Σᵢ exp((aᵢᵀx + bᵢ)/smoothing)`.
///
/// `lip` is the upper bound `maxᵢ‖aᵢ‖² / smoothing`; the minimizer is not known in closed
/// form and can be attached with [`Objective::with_reference`] after [`locate_minimizer`].
pub fn make_log_sum_exp<T: Scalar>(rows: &[Vec<T>], shifts: &[T], smoothing: T) -> Result<Objective<T>> {
    if !(smoothing > T::zero() && smoothing.is_finite()) {
        return Err(Error::InvalidSpec(format!("smoothing must be > 0, got {smoothing}")));
    }
    if rows.len() < 2 {
        return Err(Error::InvalidSpec("need at least two rows".into()));
    }
    if shifts.len() != rows.len() {
        return Err(Error::InvalidSpec(format!(
            "{} shifts for {} rows",
            shifts.len(),
            rows.len()
        )));
    }
    let n = rows[0].len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidSpec("rows must share a positive length".into()));
    }
    let max_sq = rows.iter().map(|r| linalg::dot(r, r)).fold(T::zero(), T::max);
    if max_sq == T::zero() {
        return Err(Error::InvalidSpec("all rows are zero".into()));
    }
    Ok(Objective {
        dim: n,
        mu: T::zero(),
        lip: max_sq / smoothing,
        minimizer: None,
        fmin: None,
        kind: Kind::LogSumExp {
            rows: rows.to_vec(),
            shifts: shifts.to_vec(),
            smoothing,
        },
    })
}

/// Seeded log-sum-exp instance whose rows come in `±a` pairs, so a finite minimizer exists.
pub fn log_sum_exp_instance<T: Scalar>(dim: usize, pairs: usize, smoothing: f64, seed: u64) -> Result<Objective<T>> {
    let mut rng = Lcg64::new(seed);
    let mut rows = Vec::with_capacity(2 * pairs);
    let mut shifts = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let a = rng.normal_vec(dim);
        rows.push(linalg::from_f64(&a));
        rows.push(linalg::from_f64(&a.iter().map(|x| -x).collect::<Vec<_>>()));
        shifts.push(T::lit(rng.normal()));
        shifts.push(T::lit(rng.normal()));
    }
    make_log_sum_exp(&rows, &shifts, T::lit(smoothing))
}

/// One-dimensional objective with a continuous piecewise-linear gradient.
pub fn make_piecewise_1d<T: Scalar>(spec: &PiecewiseGradient1DSpec<T>) -> Result<Objective<T>> {
    let PiecewiseGradient1DSpec {
        breakpoints,
        slopes,
        intercepts,
    } = spec;
    if slopes.len() != breakpoints.len() + 1 {
        return Err(Error::InvalidSpec(format!(
            "{} slopes for {} breakpoints",
            slopes.len(),
            breakpoints.len()
        )));
    }
    if slopes.iter().any(|&s| !(s > T::zero() && s.is_finite())) {
        return Err(Error::InvalidSpec("slopes must be positive and finite".into()));
    }
    if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidSpec("breakpoints must be strictly increasing".into()));
    }
    let intercepts = match intercepts {
        Some(c) => {
            if c.len() != slopes.len() {
                return Err(Error::InvalidSpec("one intercept per segment required".into()));
            }
            let tol = T::lit(1e-12);
            for (b, jump) in breakpoints.iter().zip(spec.gradient_jumps()) {
                if jump.abs() > tol * (T::one() + b.abs()) {
                    return Err(Error::InvalidSpec(format!(
                        "gradient jumps by {jump} at breakpoint {b}"
                    )));
                }
            }
            c.clone()
        }
        None => continuous_intercepts(breakpoints, slopes),
    };
    let constants = antiderivative_constants(breakpoints, slopes, &intercepts);
    let mu = slopes.iter().copied().fold(T::infinity(), T::min);
    let lip = slopes.iter().copied().fold(T::zero(), T::max);
    let kind = Kind::Piecewise1D {
        breakpoints: breakpoints.clone(),
        slopes: slopes.clone(),
        intercepts,
        constants,
    };
    // the gradient is strictly increasing, so its unique zero is the minimizer
    let mut obj = Objective {
        dim: 1,
        mu,
        lip,
        minimizer: None,
        fmin: None,
        kind,
    };
    let xstar = obj.piecewise_root();
    let fstar = obj.value(&[xstar]);
    obj.minimizer = Some(vec![xstar]);
    obj.fmin = Some(fstar);
    Ok(obj)
}

/// The heavy-ball counterexample: gradient `25x` for `x < 1`, `x + 24` on `[1, 2)`,
/// `25x − 24` for `x ≥ 2`. `mu = 1`, `lip = 25`, minimizer 0.
pub fn make_counterexample_1d<T: Scalar>() -> Objective<T> {
    make_piecewise_1d(&PiecewiseGradient1DSpec::counterexample()).expect("counterexample is continuous")
}

fn segment_containing<T: Scalar>(breakpoints: &[T], x: T) -> usize {
    breakpoints.iter().take_while(|&&b| b <= x).count()
}

fn continuous_intercepts<T: Scalar>(breakpoints: &[T], slopes: &[T]) -> Vec<T> {
    let m = slopes.len();
    let zero_seg = segment_containing(breakpoints, T::zero());
    let mut c = vec![T::zero(); m];
    for i in zero_seg..m - 1 {
        let b = breakpoints[i];
        c[i + 1] = c[i] + (slopes[i] - slopes[i + 1]) * b;
    }
    for i in (0..zero_seg).rev() {
        let b = breakpoints[i];
        c[i] = c[i + 1] + (slopes[i + 1] - slopes[i]) * b;
    }
    c
}

fn antiderivative_constants<T: Scalar>(breakpoints: &[T], slopes: &[T], intercepts: &[T]) -> Vec<T> {
    let m = slopes.len();
    let half = T::lit(0.5);
    let piece = |i: usize, x: T| half * slopes[i] * x * x + intercepts[i] * x;
    let zero_seg = segment_containing(breakpoints, T::zero());
    let mut k = vec![T::zero(); m];
    for i in zero_seg..m - 1 {
        let b = breakpoints[i];
        k[i + 1] = k[i] + piece(i, b) - piece(i + 1, b);
    }
    for i in (0..zero_seg).rev() {
        let b = breakpoints[i];
        k[i] = k[i + 1] + piece(i + 1, b) - piece(i, b);
    }
    k
}

impl<T: Scalar> Objective<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn lip(&self) -> T {
        self.lip
    }

    /// The step-size constant `1/L`.
    pub fn inv_lip(&self) -> T {
        T::one() / self.lip
    }

    pub fn minimizer(&self) -> Option<&[T]> {
        self.minimizer.as_deref()
    }

    pub fn fmin(&self) -> Option<T> {
        self.fmin
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Quadratic { .. } => "quadratic",
            Kind::LogSumExp { .. } => "log_sum_exp",
            Kind::Piecewise1D { .. } => "piecewise_1d",
        }
    }

    /// Dense matrix of a quadratic objective.
    pub fn quadratic_matrix(&self) -> Option<&Matrix<T>> {
        match &self.kind {
            Kind::Quadratic { matrix, .. } => Some(matrix),
            _ => None,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        match &self.kind {
            Kind::Quadratic { matrix, offset } => {
                let d = linalg::sub(x, offset);
                T::lit(0.5) * linalg::dot(&d, &matrix.mul_vec(&d))
            }
            Kind::LogSumExp {
                rows,
                shifts,
                smoothing,
            } => {
                let z = lse_logits(rows, shifts, *smoothing, x);
                let m = z.iter().copied().fold(T::neg_infinity(), T::max);
                let s: T = z.iter().map(|&zi| (zi - m).exp()).sum();
                *smoothing * (m + s.ln())
            }
            Kind::Piecewise1D {
                breakpoints,
                slopes,
                intercepts,
                constants,
            } => {
                let x = x[0];
                let i = segment_containing(breakpoints, x);
                constants[i] + T::lit(0.5) * slopes[i] * x * x + intercepts[i] * x
            }
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        match &self.kind {
            Kind::Quadratic { matrix, offset } => matrix.mul_vec(&linalg::sub(x, offset)),
            Kind::LogSumExp {
                rows,
                shifts,
                smoothing,
            } => {
                let p = lse_weights(rows, shifts, *smoothing, x);
                weighted_row_sum(rows, &p)
            }
            Kind::Piecewise1D {
                breakpoints,
                slopes,
                intercepts,
                ..
            } => {
                let x = x[0];
                let i = segment_containing(breakpoints, x);
                vec![slopes[i] * x + intercepts[i]]
            }
        }
    }

    /// `∇²f(x)·v`. On the piecewise family a breakpoint takes the slope of the segment to
    /// its left.
    pub fn hessian_vec(&self, x: &[T], v: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        match &self.kind {
            Kind::Quadratic { matrix, .. } => matrix.mul_vec(v),
            Kind::LogSumExp {
                rows,
                shifts,
                smoothing,
            } => {
                let p = lse_weights(rows, shifts, *smoothing, x);
                let av: Vec<T> = rows.iter().map(|r| linalg::dot(r, v)).collect();
                let mean_av: T = p.iter().zip(&av).map(|(&pi, &a)| pi * a).sum();
                let w: Vec<T> = p
                    .iter()
                    .zip(&av)
                    .map(|(&pi, &a)| pi * (a - mean_av) / *smoothing)
                    .collect();
                weighted_row_sum(rows, &w)
            }
            Kind::Piecewise1D {
                breakpoints, slopes, ..
            } => {
                let i = breakpoints.iter().take_while(|&&b| b < x[0]).count();
                vec![slopes[i] * v[0]]
            }
        }
    }

    /// `f(x) − f*`, or NaN when the optimal value is unknown.
    pub fn f_gap(&self, x: &[T]) -> T {
        match self.fmin {
            Some(f) => self.value(x) - f,
            None => T::nan(),
        }
    }

    /// Attaches a numerically located minimizer and optimal value.
    pub fn with_reference(mut self, xstar: Vec<T>, fstar: T) -> Result<Self> {
        if xstar.len() != self.dim {
            return Err(Error::InvalidSpec("minimizer dimension mismatch".into()));
        }
        let g = linalg::norm(&self.gradient(&xstar));
        if g > stationarity_tol::<T>() {
            return Err(Error::InvalidSpec(format!(
                "gradient norm {g} at the supplied minimizer"
            )));
        }
        self.minimizer = Some(xstar);
        self.fmin = Some(fstar);
        Ok(self)
    }

    /// Stable 64-bit fingerprint of the objective's defining data.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(self.family().as_bytes());
        h.write_usize(self.dim);
        h.write_f64(self.mu.to_f64_lossy());
        h.write_f64(self.lip.to_f64_lossy());
        match &self.kind {
            Kind::Quadratic { matrix, offset } => {
                for i in 0..matrix.dim() {
                    matrix.row(i).iter().for_each(|v| h.write_f64(v.to_f64_lossy()));
                }
                offset.iter().for_each(|v| h.write_f64(v.to_f64_lossy()));
            }
            Kind::LogSumExp {
                rows,
                shifts,
                smoothing,
            } => {
                rows.iter().flatten().chain(shifts).for_each(|v| h.write_f64(v.to_f64_lossy()));
                h.write_f64(smoothing.to_f64_lossy());
            }
            Kind::Piecewise1D {
                breakpoints,
                slopes,
                intercepts,
                ..
            } => {
                breakpoints
                    .iter()
                    .chain(slopes)
                    .chain(intercepts)
                    .for_each(|v| h.write_f64(v.to_f64_lossy()));
            }
        }
        h.finish()
    }

    fn piecewise_root(&self) -> T {
        let Kind::Piecewise1D {
            breakpoints,
            slopes,
            intercepts,
            ..
        } = &self.kind
        else {
            unreachable!()
        };
        // the gradient is continuous and increasing: find the segment where it changes sign
        for i in 0..slopes.len() {
            let root = -intercepts[i] / slopes[i];
            let lo_ok = i == 0 || root >= breakpoints[i - 1];
            let hi_ok = i == slopes.len() - 1 || root < breakpoints[i];
            if lo_ok && hi_ok {
                return root;
            }
        }
        unreachable!("increasing continuous gradient has a zero")
    }
}

fn stationarity_tol<T: Scalar>() -> T {
    T::lit(1e-10).max(T::lit(100.0) * T::epsilon())
}

fn lse_logits<T: Scalar>(rows: &[Vec<T>], shifts: &[T], s: T, x: &[T]) -> Vec<T> {
    rows.iter()
        .zip(shifts)
        .map(|(r, &b)| (linalg::dot(r, x) + b) / s)
        .collect()
}

fn lse_weights<T: Scalar>(rows: &[Vec<T>], shifts: &[T], s: T, x: &[T]) -> Vec<T> {
    let z = lse_logits(rows, shifts, s, x);
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&zi| (zi - m).exp()).collect();
    let total: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

fn weighted_row_sum<T: Scalar>(rows: &[Vec<T>], w: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); rows[0].len()];
    for (r, &wi) in rows.iter().zip(w) {
        for (o, &a) in out.iter_mut().zip(r) {
            *o += wi * a;
        }
    }
    out
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
    fn write_usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }
    fn write_f64(&mut self, v: f64) {
        self.write(&v.to_bits().to_le_bytes());
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// `κ = L/μ`.
pub fn condition_number<T: Scalar>(obj: &Objective<T>) -> Result<T> {
    if obj.mu() <= T::zero() {
        return Err(Error::UndefinedConditionNumber);
    }
    Ok(obj.lip() / obj.mu())
}

/// Finite-difference check of the gradient and Hessian-vector oracles.
///
/// Returns the largest of
/// * `|central difference of f − ∂ᵢf| / (1 + |∂ᵢf|)` over coordinates `i`, and
/// * `|(∇f(x + h eᵢ) − ∇f(x − h eᵢ))/2h − ∇²f eᵢ|ⱼ / (1 + |∇²f eᵢ|ⱼ)` over all `i, j`.
pub fn check_gradient<T: Scalar>(obj: &Objective<T>, x: &[T], h: T) -> T {
    assert!(h > T::zero(), "finite-difference step must be positive");
    let n = obj.dim();
    let two_h = h + h;
    let grad = obj.gradient(x);
    let mut worst = T::zero();
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (obj.value(&xp) - obj.value(&xm)) / two_h;
        worst = worst.max((fd - grad[i]).abs() / (T::one() + grad[i].abs()));

        let gp = obj.gradient(&xp);
        let gm = obj.gradient(&xm);
        let hv = obj.hessian_vec(x, &linalg::unit(n, i));
        for j in 0..n {
            let fd = (gp[j] - gm[j]) / two_h;
            worst = worst.max((fd - hv[j]).abs() / (T::one() + hv[j].abs()));
        }
    }
    worst
}

/// Runs gradient descent with step `1/L` until the gradient norm stalls or `max_iters` is hit.
///
/// Returns the final point and its value. Intended for objectives whose minimizer is not known
/// in closed form.
pub fn locate_minimizer<T: Scalar>(obj: &Objective<T>, x0: &[T], max_iters: usize) -> (Vec<T>, T) {
    let step = obj.inv_lip();
    let mut x = x0.to_vec();
    let mut best = linalg::norm(&obj.gradient(&x));
    let mut stalled = 0;
    for _ in 0..max_iters {
        let g = obj.gradient(&x);
        let gn = linalg::norm(&g);
        if gn == T::zero() {
            break;
        }
        if gn < best {
            best = gn;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 1000 {
                break;
            }
        }
        x = linalg::axpy(&x, -step, &g);
    }
    let f = obj.value(&x);
    (x, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(eigs: &[f64], seed: u64, offset: Vec<f64>) -> Objective<f64> {
        make_quadratic(&QuadraticSpec {
            eigenvalues: eigs.to_vec(),
            rotation_seed: seed,
            offset,
        })
        .unwrap()
    }

    #[test]
    fn quadratic_constants_from_spectrum_extremes() {
        let q = quad(&[1.0, 100.0], 3, vec![]);
        assert_eq!(q.mu(), 1.0);
        assert_eq!(q.lip(), 100.0);
        assert_eq!(condition_number(&q).unwrap(), 100.0);
    }

    #[test]
    fn quadratic_stationary_at_offset() {
        let q = quad(&[0.5, 2.0, 7.0], 11, vec![1.0, -2.0, 3.0]);
        let g = q.gradient(&[1.0, -2.0, 3.0]);
        assert!(g.iter().all(|&v| v == 0.0));
        assert_eq!(q.minimizer().unwrap(), &[1.0, -2.0, 3.0]);
        assert_eq!(q.fmin(), Some(0.0));
    }

    #[test]
    fn scalar_quadratic_hand_values() {
        // ½·4·x² at x = 2
        let q = quad(&[4.0], 0, vec![]);
        assert!((q.value(&[2.0]) - 8.0).abs() < 1e-15);
        assert!((q.gradient(&[2.0])[0] - 8.0).abs() < 1e-15);
        assert!((q.hessian_vec(&[2.0], &[3.0])[0] - 12.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_rejects_non_positive_eigenvalues() {
        let bad = QuadraticSpec {
            eigenvalues: vec![1.0, 0.0],
            rotation_seed: 0,
            offset: vec![],
        };
        assert!(matches!(make_quadratic(&bad), Err(Error::InvalidSpec(_))));
        let neg = QuadraticSpec {
            eigenvalues: vec![-1.0],
            rotation_seed: 0,
            offset: vec![],
        };
        assert!(make_quadratic(&neg).is_err());
    }

    #[test]
    fn lse_symmetric_pair() {
        let f = make_log_sum_exp(&[vec![1.0], vec![-1.0]], &[0.0, 0.0], 1.0).unwrap();
        assert!((f.value(&[0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(f.gradient(&[0.0]), vec![0.0]);
        let e = std::f64::consts::E;
        assert!((f.value(&[1.0]) - (e + 1.0 / e).ln()).abs() < 1e-15);
        assert_eq!(f.mu(), 0.0);
        assert_eq!(f.lip(), 1.0);
        assert!(matches!(condition_number(&f), Err(Error::UndefinedConditionNumber)));
    }

    #[test]
    fn lse_rejects_bad_smoothing() {
        let rows = [vec![1.0], vec![-1.0]];
        assert!(make_log_sum_exp(&rows, &[0.0, 0.0], 0.0).is_err());
        assert!(make_log_sum_exp(&rows, &[0.0, 0.0], -1.0).is_err());
        assert!(make_log_sum_exp(&rows[..1], &[0.0], 1.0).is_err());
    }

    #[test]
    fn counterexample_values() {
        let f: Objective<f64> = make_counterexample_1d();
        assert_eq!(f.mu(), 1.0);
        assert_eq!(f.lip(), 25.0);
        assert_eq!(f.minimizer().unwrap(), &[0.0]);
        assert_eq!(f.fmin(), Some(0.0));
        assert_eq!(f.gradient(&[0.0]), vec![0.0]);
        assert_eq!(f.gradient(&[3.0]), vec![51.0]);
        // both one-sided formulas at x = 1 give 25
        assert_eq!(25.0 * 1.0, 1.0 + 24.0);
        assert_eq!(f.gradient(&[1.0]), vec![25.0]);
        assert_eq!(f.gradient(&[1.0 - 1e-300]), vec![25.0 * (1.0 - 1e-300)]);
        // exact piecewise integral: 12.5 at 1, 38 at 2
        assert!((f.value(&[1.0]) - 12.5).abs() < 1e-14);
        assert!((f.value(&[2.0]) - 38.0).abs() < 1e-13);
        assert!((f.value(&[1.5]) - (0.5 * 2.25 + 24.0 * 1.5 - 12.0)).abs() < 1e-13);
        // breakpoints take the left slope for curvature
        assert_eq!(f.hessian_vec(&[1.0], &[1.0]), vec![25.0]);
        assert_eq!(f.hessian_vec(&[2.0], &[1.0]), vec![1.0]);
        assert_eq!(f.hessian_vec(&[2.5], &[1.0]), vec![25.0]);
    }

    #[test]
    fn counterexample_is_continuous_at_breakpoints() {
        let spec = PiecewiseGradient1DSpec::<f64>::counterexample();
        for j in spec.gradient_jumps() {
            assert!(j.abs() <= 1e-12);
        }
        let f: Objective<f64> = make_counterexample_1d();
        for b in [1.0f64, 2.0] {
            let below = f.value(&[b - 1e-9]);
            let at = f.value(&[b]);
            assert!((below - at).abs() < 1e-6);
        }
    }

    #[test]
    fn corrupted_intercepts_rejected() {
        let mut spec = PiecewiseGradient1DSpec::<f64>::counterexample();
        spec.slopes[1] = 2.0;
        assert!(spec.gradient_jumps()[0].abs() > 0.5);
        assert!(matches!(make_piecewise_1d(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn implicit_intercepts_match_counterexample() {
        let spec = PiecewiseGradient1DSpec {
            breakpoints: vec![1.0, 2.0],
            slopes: vec![25.0, 1.0, 25.0],
            intercepts: None,
        };
        let a = make_piecewise_1d(&spec).unwrap();
        let b: Objective<f64> = make_counterexample_1d();
        for x in [-3.0, 0.3, 1.0, 1.7, 2.0, 4.2] {
            assert!((a.value(&[x]) - b.value(&[x])).abs() < 1e-12);
            assert!((a.gradient(&[x])[0] - b.gradient(&[x])[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_minimizer_away_from_origin() {
        // 2x − 13 | 5x − 10 | x + 2, continuous at −1 and 3; root of 5x − 10 is 2
        let spec = PiecewiseGradient1DSpec {
            breakpoints: vec![-1.0, 3.0],
            slopes: vec![2.0, 5.0, 1.0],
            intercepts: Some(vec![-13.0, -10.0, 2.0]),
        };
        let f = make_piecewise_1d(&spec).unwrap();
        assert_eq!(f.minimizer().unwrap(), &[2.0]);
        assert_eq!(f.gradient(&[2.0]), vec![0.0]);
        assert_eq!(f.mu(), 1.0);
        assert_eq!(f.lip(), 5.0);
        assert!(f.f_gap(&[-4.0]) > 0.0 && f.f_gap(&[7.0]) > 0.0);
    }

    #[test]
    fn gradient_checks_pass_on_shipped_objectives() {
        let q = quad(&[1.0, 3.0, 10.0], 5, vec![0.5, 0.0, -1.0]);
        assert!(check_gradient(&q, &[0.3, -0.7, 2.0], 1e-6) <= 1e-6);

        let lse: Objective<f64> = log_sum_exp_instance(4, 5, 0.7, 17).unwrap();
        assert!(check_gradient(&lse, &[0.0; 4], 1e-6) <= 1e-5);

        let ce: Objective<f64> = make_counterexample_1d();
        assert!(check_gradient(&ce, &[0.5], 1e-8) <= 1e-5);
    }

    #[test]
    fn lse_reference_attachment() {
        let lse: Objective<f64> = log_sum_exp_instance(3, 4, 1.0, 2).unwrap();
        let (xs, fs) = locate_minimizer(&lse, &[0.0; 3], 1_000_000);
        let lse = lse.with_reference(xs.clone(), fs).unwrap();
        assert!(linalg::norm(&lse.gradient(&xs)) <= 1e-10);
        assert!(lse.f_gap(&[1.0, 1.0, 1.0]) > 0.0);
        // a point that is not stationary is refused
        let other: Objective<f64> = log_sum_exp_instance(3, 4, 1.0, 2).unwrap();
        assert!(other.with_reference(vec![5.0, 5.0, 5.0], 0.0).is_err());
    }

    #[test]
    fn fingerprint_distinguishes_objectives() {
        let a = quad(&[1.0, 2.0], 1, vec![]);
        let b = quad(&[1.0, 2.0], 2, vec![]);
        assert_eq!(a.fingerprint(), quad(&[1.0, 2.0], 1, vec![]).fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn f32_quadratic_works() {
        let q = make_quadratic(&QuadraticSpec::<f32> {
            eigenvalues: vec![1.0, 4.0],
            rotation_seed: 9,
            offset: vec![],
        })
        .unwrap();
        assert!(q.value(&[1.0, 1.0]) > 0.0);
        assert!(check_gradient(&q, &[0.5, 0.5], 1e-2) < 1e-2);
    }
}

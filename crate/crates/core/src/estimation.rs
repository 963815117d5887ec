//! Estimation sequences for strongly convex objectives.
//!
//! Each `φₖ(x) = φ*ₖ + (μ/2)‖x − vₖ‖²` is a quadratic model with fixed curvature `μ`. One
//! update mixes `φₖ` with the strongly convex lower model of `f` at `y`, using the fixed weight
//! `α = √(μ/L)`:
//!
//! ```text
//! φₖ₊₁(x) = (1 − α)φₖ(x) + α[f(y) + ⟨∇f(y), x − y⟩ + (μ/2)‖x − y‖²]
//! ```
//!
//! Completing the square gives the closed form implemented in [`update`]. As long as
//! `f(xₖ) ≤ φ*ₖ` holds for every `k`, `f(xₖ) − f* ≤ λₖ(φ₀(x*) − f*)` with `λₖ = (1 − α)ᵏ`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::objectives::Objective;
use crate::optimizers::{self, IterState, MethodSpec, Trajectory};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationState<T> {
    pub phi_star: T,
    pub v: Vec<T>,
    pub lambda: T,
    /// Curvature of the model, fixed to `mu`.
    pub gamma: T,
    pub k: usize,
}

fn require_strongly_convex<T: Scalar>(obj: &Objective<T>) -> Result<()> {
    if obj.mu() > T::zero() {
        Ok(())
    } else {
        Err(Error::MethodInapplicable(
            "estimation sequences need mu > 0".into(),
        ))
    }
}

/// The fixed mixing weight `√(μ/L)`.
pub fn mixing_weight<T: Scalar>(obj: &Objective<T>) -> T {
    (obj.mu() / obj.lip()).sqrt()
}

/// `φ₀(x) = f(x₀) + (μ/2)‖x − x₀‖²`, `λ₀ = 1`.
pub fn init<T: Scalar>(obj: &Objective<T>, x0: &[T]) -> Result<EstimationState<T>> {
    require_strongly_convex(obj)?;
    Ok(EstimationState {
        phi_star: obj.value(x0),
        v: x0.to_vec(),
        lambda: T::one(),
        gamma: obj.mu(),
        k: 0,
    })
}

/// `φ*ₖ + (μ/2)‖x − vₖ‖²`.
pub fn evaluate_phi<T: Scalar>(s: &EstimationState<T>, x: &[T], obj: &Objective<T>) -> T {
    debug_assert_eq!(s.gamma, obj.mu());
    let d = linalg::dist(x, &s.v);
    s.phi_star + T::lit(0.5) * s.gamma * d * d
}

/// One step of the estimation recursion at the point `y`, with `α = √(μ/L)`.
pub fn update<T: Scalar>(s: &EstimationState<T>, obj: &Objective<T>, y: &[T]) -> EstimationState<T> {
    update_with_weight(s, obj, y, mixing_weight(obj))
}

/// The recursion with an explicit weight `α ∈ (0, 1]`.
///
/// * `v⁺ = (1 − α)v + αy − (α/μ)∇f(y)`
/// * `λ⁺ = (1 − α)λ`
/// * `φ*⁺ = (1 − α)φ* + αf(y) − (α²/2μ)‖∇f(y)‖² + α(1 − α)[(μ/2)‖y − v‖² + ⟨∇f(y), v − y⟩]`
pub fn update_with_weight<T: Scalar>(s: &EstimationState<T>, obj: &Objective<T>, y: &[T], alpha: T) -> EstimationState<T> {
    let mu = s.gamma;
    let one = T::one();
    let half = T::lit(0.5);
    let g = obj.gradient(y);
    let fy = obj.value(y);
    let v: Vec<T> = (0..y.len())
        .map(|i| (one - alpha) * s.v[i] + alpha * y[i] - alpha / mu * g[i])
        .collect();
    let y_to_v = linalg::sub(&s.v, y);
    let cross = half * mu * linalg::dot(&y_to_v, &y_to_v) + linalg::dot(&g, &y_to_v);
    let phi_star = (one - alpha) * s.phi_star + alpha * fy - alpha * alpha / (T::lit(2.0) * mu) * linalg::dot(&g, &g)
        + alpha * (one - alpha) * cross;
    EstimationState {
        phi_star,
        v,
        lambda: (one - alpha) * s.lambda,
        gamma: mu,
        k: s.k + 1,
    }
}

/// `φ*ₖ ≥ f(xₖ) − 1e-9·(1 + |φ*ₖ|)`.
pub fn verify_lower_bound<T: Scalar>(s: &EstimationState<T>, obj: &Objective<T>, x_k: &[T]) -> bool {
    s.phi_star >= obj.value(x_k) - T::lit(1e-9) * (T::one() + s.phi_star.abs())
}

/// Checks `φₖ(x) ≤ (1 − λₖ)f(x) + λₖφ₀(x)` at every sample, to `1e-9` relative.
pub fn verify_envelope<T: Scalar>(s: &EstimationState<T>, obj: &Objective<T>, phi0: &EstimationState<T>, samples: &[Vec<T>]) -> bool {
    assert!(!samples.is_empty(), "envelope check needs at least one sample");
    let tol = T::lit(1e-9);
    samples.iter().all(|x| {
        let lhs = evaluate_phi(s, x, obj);
        let rhs = (T::one() - s.lambda) * obj.value(x) + s.lambda * evaluate_phi(phi0, x, obj);
        lhs <= rhs + tol * (T::one() + rhs.abs())
    })
}

/// Output of the three-sequence scheme.
#[derive(Debug, Clone)]
pub struct CoupledRun<T> {
    /// Iterates `xₖ` with the look-ahead points `yₖ` stored in each state's `y` slot.
    pub trajectory: Trajectory<T>,
    /// `states[k]` is the estimation state paired with `xₖ`.
    pub history: Vec<EstimationState<T>>,
    /// `max |vₖ₊₁ − (xₖ + (xₖ₊₁ − xₖ)/α)|` over the run.
    pub max_coupling_defect: T,
    /// Largest componentwise gap to the two-sequence Nesterov iterates.
    pub max_nesterov_defect: T,
}

/// Runs `yₖ = (αvₖ + xₖ)/(1 + α)`, `xₖ₊₁ = yₖ − ∇f(yₖ)/L` with `vₖ` from the estimation
/// recursion, checking at every step that
///
/// * `vₖ₊₁ = xₖ + (xₖ₊₁ − xₖ)/α`, and
/// * `xₖ₊₁`, `yₖ₊₁` agree with [`optimizers::nag_sc_step`] run alongside.
///
/// Both checks use tolerance `1e-9·(1 + ‖·‖∞)`; a violation is a [`Error::Consistency`].
pub fn coupled_nag_run<T: Scalar>(obj: &Objective<T>, x0: &[T], iters: usize) -> Result<CoupledRun<T>> {
    require_strongly_convex(obj)?;
    let alpha = mixing_weight(obj);
    let one = T::one();
    let tol = T::lit(1e-9);
    let scaled = |v: &[T]| tol * (one + v.iter().fold(T::zero(), |m, x| m.max(x.abs())));

    let mut est = init(obj, x0)?;
    let mut x = x0.to_vec();
    let mut nag = IterState::new(x0);
    let mut history = vec![est.clone()];
    let mut states = vec![IterState::new(x0)];
    let mut max_coupling_defect = T::zero();
    let mut max_nesterov_defect = T::zero();

    let look_ahead = |v: &[T], x: &[T]| -> Vec<T> {
        (0..x.len()).map(|i| (alpha * v[i] + x[i]) / (one + alpha)).collect()
    };

    for step in 1..=iters {
        let y = look_ahead(&est.v, &x);
        let x_next = linalg::axpy(&y, -obj.inv_lip(), &obj.gradient(&y));
        let est_next = update_with_weight(&est, obj, &y, alpha);

        let v_coupled: Vec<T> = (0..x.len()).map(|i| x[i] + (x_next[i] - x[i]) / alpha).collect();
        let defect = linalg::max_abs_diff(&est_next.v, &v_coupled);
        max_coupling_defect = max_coupling_defect.max(defect);
        if defect > scaled(&v_coupled) {
            return Err(Error::Consistency {
                step,
                what: format!("v-coupling defect {defect}"),
            });
        }

        nag = optimizers::nag_sc_step(&nag, obj)?;
        let y_next = look_ahead(&est_next.v, &x_next);
        let defect = linalg::max_abs_diff(&nag.x, &x_next).max(linalg::max_abs_diff(&nag.y, &y_next));
        max_nesterov_defect = max_nesterov_defect.max(defect);
        if defect > scaled(&x_next) {
            return Err(Error::Consistency {
                step,
                what: format!("two-sequence defect {defect}"),
            });
        }

        states.push(IterState {
            k: step,
            x: x_next.clone(),
            y: y_next,
            x_prev: x.clone(),
            theta: one,
        });
        history.push(est_next.clone());
        x = x_next;
        est = est_next;
    }

    let values: Vec<T> = states.iter().map(|s| obj.value(&s.x)).collect();
    let monotone_violations = values.windows(2).filter(|w| w[1] > w[0]).count();
    let trajectory = Trajectory {
        method: MethodSpec::new(optimizers::Method::NagSC),
        f_gaps: values.iter().map(|&v| obj.fmin().map_or(T::nan(), |f| v - f)).collect(),
        grad_norms: states.iter().map(|s| linalg::norm(&obj.gradient(&s.x))).collect(),
        values,
        states,
        monotone_violations,
        objective: obj.fingerprint(),
    };
    Ok(CoupledRun {
        trajectory,
        history,
        max_coupling_defect,
        max_nesterov_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_quadratic, QuadraticSpec};

    fn scalar_quad(l: f64) -> Objective<f64> {
        make_quadratic(&QuadraticSpec {
            eigenvalues: vec![l],
            rotation_seed: 0,
            offset: vec![],
        })
        .unwrap()
    }

    fn quad(eigs: Vec<f64>, seed: u64) -> Objective<f64> {
        make_quadratic(&QuadraticSpec {
            eigenvalues: eigs,
            rotation_seed: seed,
            offset: vec![],
        })
        .unwrap()
    }

    /// Brute-force minimum of the one-dimensional mixed model by golden-section search.
    fn brute_force_phi_star(s: &EstimationState<f64>, obj: &Objective<f64>, y: f64, alpha: f64) -> (f64, f64) {
        let mu = s.gamma;
        let (fy, gy) = (obj.value(&[y]), obj.gradient(&[y])[0]);
        let model = |x: f64| {
            (1.0 - alpha) * (s.phi_star + 0.5 * mu * (x - s.v[0]).powi(2))
                + alpha * (fy + gy * (x - y) + 0.5 * mu * (x - y).powi(2))
        };
        let (mut a, mut b) = (-100.0f64, 100.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if model(c) < model(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        (x, model(x))
    }

    #[test]
    fn closed_form_matches_brute_force_minimization() {
        for l in [4.0, 25.0, 9.0] {
            let f = scalar_quad(l);
            let mut s = init(&f, &[1.7]).unwrap();
            s.phi_star += 0.3; // generic state, not just the initial one
            s.v = vec![-0.4];
            for (y, alpha) in [(0.8, 0.5), (-1.3, 0.2), (2.2, 1.0)] {
                let next = update_with_weight(&s, &f, &[y], alpha);
                let (xmin, fmin) = brute_force_phi_star(&s, &f, y, alpha);
                assert!((next.v[0] - xmin).abs() < 1e-7, "v {} vs {}", next.v[0], xmin);
                assert!((next.phi_star - fmin).abs() < 1e-10, "phi* {} vs {}", next.phi_star, fmin);
            }
        }
    }

    #[test]
    fn init_examples() {
        let f = scalar_quad(1.0);
        let s = init(&f, &[2.0]).unwrap();
        assert_eq!(s.lambda, 1.0);
        assert_eq!(s.phi_star, 2.0);
        assert_eq!(init(&f, &[0.0]).unwrap().phi_star, 0.0);
        let lse = crate::objectives::make_log_sum_exp(&[vec![1.0], vec![-1.0]], &[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(init(&lse, &[0.0]), Err(Error::MethodInapplicable(_))));
    }

    #[test]
    fn evaluate_phi_examples() {
        let f = scalar_quad(1.0);
        let s = EstimationState {
            phi_star: 0.0,
            v: vec![0.0],
            lambda: 1.0,
            gamma: 1.0,
            k: 0,
        };
        assert_eq!(evaluate_phi(&s, &[2.0], &f), 2.0);
        assert_eq!(evaluate_phi(&s, &[0.0], &f), 0.0);
        let shifted = EstimationState { v: vec![1.5], ..s.clone() };
        assert_eq!(evaluate_phi(&shifted, &[3.5], &f), evaluate_phi(&s, &[2.0], &f));
    }

    #[test]
    fn update_at_minimizer_only_mixes_values() {
        let f = quad(vec![1.0, 9.0], 3);
        let mut s = init(&f, &[0.0, 0.0]).unwrap();
        s.phi_star = 5.0;
        let alpha = mixing_weight(&f);
        let next = update(&s, &f, &[0.0, 0.0]);
        assert_eq!(next.v, vec![0.0, 0.0]);
        assert!((next.phi_star - (1.0 - alpha) * 5.0).abs() < 1e-15);
    }

    #[test]
    fn unit_weight_update() {
        let f = scalar_quad(1.0);
        let s = init(&f, &[3.0]).unwrap();
        for y in [-2.0, 0.5, 4.0] {
            let next = update(&s, &f, &[y]);
            assert_eq!(next.v, vec![0.0]);
            assert!((next.phi_star - (f.value(&[y]) - 0.5 * y * y)).abs() < 1e-15);
            assert_eq!(next.lambda, 0.0);
        }
    }

    #[test]
    fn updated_model_has_curvature_mu() {
        let f = quad(vec![2.0, 5.0, 11.0], 1);
        let mut s = init(&f, &[1.0, -1.0, 0.5]).unwrap();
        for y in [[0.2, 0.1, -0.3], [1.0, 1.0, 1.0]] {
            s = update(&s, &f, &y);
            for i in 0..3 {
                let e = linalg::unit(3, i);
                let plus = evaluate_phi(&s, &linalg::add(&s.v, &e), &f);
                let minus = evaluate_phi(&s, &linalg::sub(&s.v, &e), &f);
                let second_diff = plus - 2.0 * s.phi_star + minus;
                assert!((second_diff - f.mu()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lower_bound_and_envelope_negative_tests() {
        let f = quad(vec![1.0, 4.0], 2);
        let x0 = [1.0, 1.0];
        let s = init(&f, &x0).unwrap();
        assert!(verify_lower_bound(&s, &f, &x0));
        assert!(verify_envelope(&s, &f, &s, &[x0.to_vec(), vec![-3.0, 2.0]]));
        let mut bad = s.clone();
        bad.phi_star -= 1.0;
        assert!(!verify_lower_bound(&bad, &f, &x0));
        // λ forced to zero while φ exceeds f at x₀'s neighbourhood
        let forced = EstimationState {
            lambda: 0.0,
            phi_star: f.value(&x0) + 1.0,
            ..s.clone()
        };
        assert!(!verify_envelope(&forced, &f, &s, &[x0.to_vec()]));
    }

    #[test]
    fn coupled_run_at_minimizer_is_constant() {
        let f = quad(vec![1.0, 20.0], 6);
        let run = coupled_nag_run(&f, &[0.0, 0.0], 10).unwrap();
        for (s, e) in run.trajectory.states.iter().zip(&run.history) {
            assert_eq!(s.x, vec![0.0, 0.0]);
            assert_eq!(s.y, vec![0.0, 0.0]);
            assert_eq!(e.v, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn coupled_run_unit_condition_collapses() {
        let f = quad(vec![3.0, 3.0], 6);
        let run = coupled_nag_run(&f, &[1.0, -2.0], 3).unwrap();
        for k in 1..=3 {
            let s = &run.trajectory.states[k];
            assert!(linalg::max_abs_diff(&s.x, &run.history[k].v) < 1e-15);
            assert!(linalg::max_abs_diff(&s.x, &s.y) < 1e-15);
        }
    }
}

//! Accelerated first-order methods, the ODEs that model them, and the invariant-manifold
//! geometry used to explain acceleration.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` and `*32` aliases below
//! fix the scalar type.

pub mod analysis;
pub mod error;
pub mod estimation;
pub mod flows;
pub mod geometry;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod rng;
pub mod scalar;

pub use analysis::{CycleReport, RateReport, Verdict};
pub use error::{Error, Result};
pub use estimation::{CoupledRun, EstimationState};
pub use flows::{FlowDiagnostics, FlowSample, FlowSpec, FlowTrajectory};
pub use geometry::{ManifoldParams, PhaseState, TangentSplit};
pub use linalg::Matrix;
pub use objectives::{Objective, PiecewiseGradient1DSpec, QuadraticSpec};
pub use optimizers::{IterState, Method, MethodSpec, MomentumSign, Trajectory, TripleMomentumParams};
pub use rng::Lcg64;
pub use scalar::Scalar;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Objective64 = Objective<f64>;
pub type PhaseState64 = PhaseState<f64>;
pub type ManifoldParams64 = ManifoldParams<f64>;
pub type MethodSpec64 = MethodSpec<f64>;
pub type IterState64 = IterState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type FlowSpec64 = FlowSpec<f64>;
pub type FlowTrajectory64 = FlowTrajectory<f64>;
pub type EstimationState64 = EstimationState<f64>;
pub type Matrix64 = Matrix<f64>;

pub type Objective32 = Objective<f32>;
pub type PhaseState32 = PhaseState<f32>;
pub type ManifoldParams32 = ManifoldParams<f32>;
pub type MethodSpec32 = MethodSpec<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type FlowSpec32 = FlowSpec<f32>;
pub type FlowTrajectory32 = FlowTrajectory<f32>;

//! Experiment configuration files.
//!
//! A config is a JSON object with `"version": 1`. Unknown fields are rejected everywhere.

use std::fmt;
use std::path::PathBuf;

use accel_core::objectives::{self, log_sum_exp_instance};
use accel_core::{FlowSpec, Lcg64, ManifoldParams, Method, MethodSpec, Objective64, PiecewiseGradient1DSpec, QuadraticSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub objective: ObjectiveConfig,
    pub methods: Vec<MethodEntry>,
    pub x0: StartConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Manifold parameters for flow diagnostics; defaults to `α = μ`, `β = 1/L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Quadratic(QuadraticSpec<f64>),
    LogSumExp {
        rows: Vec<Vec<f64>>,
        shifts: Vec<f64>,
        smoothing: f64,
    },
    /// Random `±aᵢ` rows drawn from the experiment seed.
    RandomLogSumExp {
        dim: usize,
        pairs: usize,
        smoothing: f64,
    },
    Piecewise1d(PiecewiseGradient1DSpec<f64>),
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodEntry {
    Discrete(MethodSpec<f64>),
    Flow(FlowSpec<f64>),
    /// Three-sequence Nesterov run with its estimation sequence.
    Estimation {},
}

impl MethodEntry {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Discrete(m) => m.variant.name(),
            Self::Flow(f) => f.name(),
            Self::Estimation {} => "Estimation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartConfig {
    Explicit(Vec<f64>),
    RandomSphere { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub iterations: usize,
    #[serde(default)]
    pub grad_tol: f64,
    pub flow_steps: usize,
    /// RK4 step; defaults to `0.01/√L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_step: Option<f64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            iterations: 500,
            grad_tol: 0.0,
            flow_steps: 2000,
            flow_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kappas: Vec<f64>,
    /// Problem dimension; eigenvalues are evenly spaced on `[1, κ]`.
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

/// Every problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config:")?;
        for i in &self.issues {
            write!(f, "\n  {}: {}", i.field, i.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

impl ValidationError {
    fn single(field: &str, message: impl Into<String>) -> Self {
        Self {
            issues: vec![Issue {
                field: field.into(),
                message: message.into(),
            }],
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let field = if e.classify() == serde_json::error::Category::Syntax {
                "<json>"
            } else {
                "<schema>"
            };
            ValidationError::single(field, e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization: struct field order, no whitespace.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    pub fn sha256_hex(&self) -> String {
        Sha256::digest(self.canonical_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut issues = Vec::new();
        let mut push = |field: &str, message: String| issues.push(Issue { field: field.into(), message });
        if self.version != CONFIG_VERSION {
            push("version", format!("expected {CONFIG_VERSION}, got {}", self.version));
        }
        if self.methods.is_empty() {
            push("methods", "at least one method is required".into());
        }
        let objective = self.build_objective();
        if let Err(e) = &objective {
            push("objective", e.to_string());
        }
        match &self.x0 {
            StartConfig::Explicit(x) => {
                if let Ok(f) = &objective {
                    if x.len() != f.dim() {
                        push("x0", format!("length {} does not match dimension {}", x.len(), f.dim()));
                    }
                }
                if x.iter().any(|v| !v.is_finite()) {
                    push("x0", "entries must be finite".into());
                }
            }
            StartConfig::RandomSphere { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    push("x0.radius", format!("must be positive, got {radius}"));
                }
            }
        }
        if self.budgets.iterations == 0 {
            push("budgets.iterations", "must be at least 1".into());
        }
        if self.budgets.flow_steps == 0 {
            push("budgets.flow_steps", "must be at least 1".into());
        }
        if let Some(h) = self.budgets.flow_step {
            if !(h > 0.0 && h.is_finite()) {
                push("budgets.flow_step", format!("must be positive, got {h}"));
            }
        }
        if let Some(p) = &self.manifold {
            if let Err(e) = p.validate() {
                push("manifold", e.to_string());
            }
        }
        if let Ok(f) = &objective {
            for (i, m) in self.methods.iter().enumerate() {
                let field = format!("methods[{i}]");
                match m {
                    MethodEntry::Flow(spec) => {
                        if let Err(e) = spec.validate(f) {
                            push(&field, e.to_string());
                        }
                    }
                    MethodEntry::Discrete(spec) => {
                        if f.mu() <= 0.0 && matches!(spec.variant, Method::NagSC | Method::HeavyBall | Method::TripleMomentum) {
                            push(&field, format!("{} requires mu > 0", spec.variant.name()));
                        }
                    }
                    MethodEntry::Estimation {} => {
                        if f.mu() <= 0.0 {
                            push(&field, "estimation sequences require mu > 0".into());
                        }
                    }
                }
            }
        }
        if let Some(s) = &self.sweep {
            validate_sweep(s, &mut push);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { issues })
        }
    }

    pub fn build_objective(&self) -> accel_core::Result<Objective64> {
        match &self.objective {
            ObjectiveConfig::Quadratic(spec) => objectives::make_quadratic(spec),
            ObjectiveConfig::LogSumExp { rows, shifts, smoothing } => objectives::make_log_sum_exp(rows, shifts, *smoothing),
            ObjectiveConfig::RandomLogSumExp { dim, pairs, smoothing } => log_sum_exp_instance(*dim, *pairs, *smoothing, self.seed),
            ObjectiveConfig::Piecewise1d(spec) => objectives::make_piecewise_1d(spec),
            ObjectiveConfig::Counterexample => Ok(objectives::make_counterexample_1d()),
        }
    }

    /// The start point, drawn from the experiment seed when random.
    pub fn initial_point(&self, dim: usize) -> Vec<f64> {
        match &self.x0 {
            StartConfig::Explicit(x) => x.clone(),
            StartConfig::RandomSphere { radius } => Lcg64::new(self.seed).on_sphere(dim, *radius),
        }
    }

    pub fn manifold_params(&self, obj: &Objective64) -> ManifoldParams<f64> {
        self.manifold.unwrap_or_else(|| ManifoldParams::for_objective(obj))
    }
}

fn validate_sweep(s: &SweepConfig, push: &mut impl FnMut(&str, String)) {
    if s.kappas.is_empty() {
        push("sweep.kappas", "at least one condition number is required".into());
    }
    for (i, k) in s.kappas.iter().enumerate() {
        if !(*k >= 1.0 && k.is_finite()) {
            push(&format!("sweep.kappas[{i}]"), format!("must be >= 1, got {k}"));
        }
    }
    if s.dim < 2 {
        push("sweep.dim", "must be at least 2".into());
    }
}

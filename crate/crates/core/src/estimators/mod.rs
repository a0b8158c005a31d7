//! Jamming covariance estimators and the numerical machinery they share.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::CMat;

pub mod cubic;
pub mod evd;
pub mod finite_diff;
pub mod line_search;
pub mod pem_ao;
pub mod pem_gd;
pub mod scm;

pub use cubic::solve_cubic;
pub use evd::evd_estimate;
pub use finite_diff::finite_difference_gradient;
pub use line_search::{Backtracking, StepOutcome};
pub use pem_ao::{pem_ao, solve_c_subproblem, AoScalars, CSolution, PemAoOptions, PemAoState};
pub use pem_gd::{pem_gd, pem_gd_gradients, pem_gd_objective, PemGdGradients, PemGdOptions, PemGdState};
pub use scm::scm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SCM")]
    Scm,
    #[serde(rename = "EVD")]
    Evd,
    #[serde(rename = "PEM_GD")]
    PemGd,
    #[serde(rename = "PEM_AO")]
    PemAo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Scm, Method::Evd, Method::PemGd, Method::PemAo];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Scm => "SCM",
            Method::Evd => "EVD",
            Method::PemGd => "PEM_GD",
            Method::PemAo => "PEM_AO",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "SCM" => Ok(Method::Scm),
            "EVD" => Ok(Method::Evd),
            "PEM_GD" | "GD" => Ok(Method::PemGd),
            "PEM_AO" | "AO" => Ok(Method::PemAo),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// A Hermitian JCM estimate with solver bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct JcmEstimate {
    pub r_hat: CMat,
    pub method: Method,
    /// Noise variance estimated alongside the JCM, when the method yields one.
    pub sigma_hat2: Option<f64>,
    pub iterations: usize,
    /// Objective after initialization and after every (outer) iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Closed-form subproblem solves that fell back to the numeric search.
    pub fallback_steps: usize,
}

impl JcmEstimate {
    pub(crate) fn direct(r_hat: CMat, method: Method, sigma_hat2: Option<f64>) -> Self {
        Self {
            r_hat,
            method,
            sigma_hat2,
            iterations: 0,
            objective_trace: Vec::new(),
            converged: true,
            fallback_steps: 0,
        }
    }
}

/// Relative-decrease stopping rule: stop once the objective has improved by
/// less than `tol` (relative) for `patience` consecutive iterations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stagnation {
    tol: f64,
    patience: usize,
    streak: usize,
}

impl Stagnation {
    pub(crate) fn new(tol: f64, patience: usize) -> Self {
        Self { tol, patience: patience.max(1), streak: 0 }
    }

    /// Returns true when the run should stop.
    pub(crate) fn update(&mut self, before: f64, after: f64) -> bool {
        let rel = if before > 0.0 { (before - after) / before } else { 0.0 };
        if rel < self.tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.patience
    }
}

/// True when a descent direction is too small to lower `f` by more than
/// rounding: the point is stationary to working precision.
pub(crate) fn below_rounding(dir_norm_sq: f64, f: f64) -> bool {
    dir_norm_sq <= 1e-12 * f.abs()
}

/// Objectives below this (relative to `||S||_F^2`) count as an exact fit.
pub(crate) const EXACT_FIT: f64 = 1e-28;

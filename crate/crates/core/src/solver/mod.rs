//! Conic solve contract and its independent verification.
//!
//! [`solve`] hands a [`ConicProgram`] to the interior-point backend and maps
//! the outcome back onto the program's own rows, bounds and cone blocks.
//! [`kkt_residuals`] recomputes feasibility, stationarity and complementarity
//! from the program data alone, so a backend's self-reported convergence is
//! never taken on trust: an `Optimal` status is only issued after the
//! recomputed primal residuals pass.

mod backend;
mod kkt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConicProgram, ProgramError};

pub use kkt::{kkt_residuals, Residuals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Primal/dual residual tolerance.
    pub feas_tol: f64,
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    pub max_iters: u32,
    /// Ceiling on the recomputed absolute primal residuals for an `Optimal` status.
    pub verify_tol: f64,
    /// Print the backend's iteration log.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-10, gap_tol: 1e-10, max_iters: 200, verify_tol: 1e-6, verbose: false }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.feas_tol > 0.0 && self.feas_tol.is_finite()) {
            return Err(SolverError::InvalidOptions(format!("feas_tol must be > 0, got {}", self.feas_tol)));
        }
        if !(self.gap_tol > 0.0 && self.gap_tol.is_finite()) {
            return Err(SolverError::InvalidOptions(format!("gap_tol must be > 0, got {}", self.gap_tol)));
        }
        if !(self.verify_tol > 0.0 && self.verify_tol.is_finite()) {
            return Err(SolverError::InvalidOptions(format!("verify_tol must be > 0, got {}", self.verify_tol)));
        }
        if self.max_iters < 1 {
            return Err(SolverError::InvalidOptions("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalError,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Multiplier of one rotated-cone block, expressed in the block's `(u, v, w)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDual {
    pub u: f64,
    pub v: f64,
    pub w: Vec<f64>,
}

/// Lagrange multipliers for
/// `L = f + yᵀ(Ex − b) + λᵀ(Gx − h) + μ_upᵀ(x − up) + μ_loᵀ(lo − x) − Σ⟨z_k, a_k(x)⟩`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Duals {
    pub equalities: Vec<f64>,
    pub inequalities: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cones: Vec<ConeDual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    /// Program objective at `x` (including any penalty the program carries).
    pub objective: f64,
    /// Wolfe dual value at `(x, duals)`.
    pub dual_objective: f64,
    pub duals: Duals,
    pub iterations: u32,
    /// Wall time in seconds.
    pub solve_time: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    InvalidProgram(#[from] ProgramError),
    #[error("result does not match the program: {0}")]
    DimensionMismatch(String),
}

/// Solve `prog`; non-optimal outcomes are reported through [`SolverResult::status`].
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> Result<SolverResult, SolverError> {
    opts.validate()?;
    prog.validate()?;
    let mut result = backend::solve_clarabel(prog, opts);
    if result.status == SolverStatus::Optimal {
        let res = kkt_residuals(prog, &result)?;
        if res.max_primal() > opts.verify_tol {
            result.status = SolverStatus::NumericalError;
        }
    }
    Ok(result)
}

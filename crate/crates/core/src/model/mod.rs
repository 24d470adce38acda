//! SOC-ACOPF program construction and solution decoding.

mod build;
mod program;
mod solution;

use thiserror::Error;

use crate::case::IngestError;

pub use build::{build_socp, build_socp_at, LossEnd, PenaltySpec, PenaltyTarget, VariableMap};
pub use program::{AffineExpr, ConicProgram, LinearRow, Objective, ProgramError, RotatedCone};
pub use solution::{extract_solution, generation_cost, OpfSolution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    InvalidNetwork(#[from] IngestError),
    #[error("penalty coefficient must be finite and >= 0, got {0}")]
    InvalidPenalty(f64),
    #[error("variable {variable} has an empty box [{lower}, {upper}]")]
    InfeasibleBox { variable: String, lower: f64, upper: f64 },
    #[error("solution vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bus {bus} has non-positive voltage square {value}")]
    NonPositiveVoltageSquare { bus: i64, value: f64 },
}

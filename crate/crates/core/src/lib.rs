//! Power-loss second-order-cone relaxation of AC optimal power flow.
//!
//! The pipeline is: [`case`] reads a MATPOWER file into a per-unit
//! [`Network`]; [`model`] turns it into a [`ConicProgram`]; [`solver`] solves
//! and independently verifies it; [`feasibility`] measures how far the
//! relaxed losses sit from the exact `(p² + q²)/V` losses; [`tra`] drives
//! those gaps to zero by penalizing reactive loss; [`sweep`] runs the load
//! and penalty grids and renders the result tables.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod case;
pub mod feasibility;
pub mod model;
pub mod solver;
pub mod sweep;
pub mod tra;

pub use case::{
    incidence, load_case, load_case_with, parse_matpower, scale_loads, to_network, to_network_with, CostBasis,
    Incidence, IngestError, Network, RawCase,
};
pub use feasibility::{
    balance_residuals, is_ac_feasible, line_gaps, line_gaps_with_tol, GapReport, GapUnits, DEFAULT_GAP_TOL,
};
pub use model::{build_socp, extract_solution, ConicProgram, ModelError, OpfSolution, PenaltySpec, VariableMap};
pub use solver::{kkt_residuals, solve, Residuals, SolverOptions, SolverResult, SolverStatus};
pub use tra::{penalty_sweep, run_tra, TraError, TraOptions, TraResult};

use thiserror::Error;

/// Failure of a single build-solve-decode round.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error("solver finished with status {0}")]
    NotOptimal(SolverStatus),
}

/// Outcome of one verified relaxation solve.
#[derive(Debug, Clone)]
pub struct SolvedCase {
    pub program: ConicProgram,
    pub map: VariableMap,
    pub result: SolverResult,
    pub solution: OpfSolution,
    pub gaps: GapReport,
}

/// Build, solve and decode `net` under `penalty`, then measure its gaps.
pub fn solve_case(net: &Network, penalty: &PenaltySpec, opts: &SolverOptions) -> Result<SolvedCase, SolveError> {
    let (program, map) = build_socp(net, penalty)?;
    let result = solve(&program, opts)?;
    if result.status != SolverStatus::Optimal {
        return Err(SolveError::NotOptimal(result.status));
    }
    let solution = extract_solution(&result.x, &map, net)?;
    let gaps = line_gaps(&solution, net);
    Ok(SolvedCase { program, map, result, solution, gaps })
}

//! Tightness reinforcement: penalize reactive loss until the relaxation is exact.
//!
//! [`run_tra`] is the heuristic penalty loop. Each pass solves with the
//! current coefficient, measures both gap maxima, then raises the
//! coefficient by a fixed increment; it stops once both gaps are within
//! tolerance or the iteration cap is hit. [`penalty_sweep`] solves an
//! explicit grid of coefficients independently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::{GapReport, DEFAULT_GAP_TOL};
use crate::model::{ModelError, OpfSolution, PenaltySpec, PenaltyTarget};
use crate::solver::{SolverOptions, SolverStatus};
use crate::{solve_case, Network, SolveError};

/// Coefficient of the single-shot penalized experiment.
pub const SINGLE_SHOT_XI: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraOptions {
    pub xi0: f64,
    pub dxi: f64,
    pub gap_tol_po: f64,
    pub gap_tol_qo: f64,
    pub k_max: usize,
    pub target: PenaltyTarget,
}

impl Default for TraOptions {
    fn default() -> Self {
        Self {
            xi0: 0.05,
            dxi: 0.05,
            gap_tol_po: DEFAULT_GAP_TOL,
            gap_tol_qo: DEFAULT_GAP_TOL,
            k_max: 40,
            target: PenaltyTarget::ReactiveLoss,
        }
    }
}

impl TraOptions {
    pub fn validate(&self) -> Result<(), TraError> {
        let bad = |msg: String| Err(TraError::InvalidOptions(msg));
        if !(self.xi0 > 0.0 && self.xi0 < 1.0) {
            return bad(format!("xi0 must lie in (0, 1), got {}", self.xi0));
        }
        if !(self.dxi > 0.0 && self.dxi <= 0.5) {
            return bad(format!("dxi must lie in (0, 0.5], got {}", self.dxi));
        }
        if !(self.gap_tol_po > 0.0 && self.gap_tol_qo > 0.0) {
            return bad("gap tolerances must be positive".into());
        }
        if self.k_max < 1 {
            return bad("k_max must be >= 1".into());
        }
        Ok(())
    }

    /// Coefficient used by the `k`-th solve (1-based).
    pub fn xi_at(&self, k: usize) -> f64 {
        self.xi0 + (k - 1) as f64 * self.dxi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraIterate {
    pub k: usize,
    /// Coefficient this solve used.
    pub xi: f64,
    /// Generation cost.
    pub objective: f64,
    /// Generation cost plus the loss penalty.
    pub penalized_objective: f64,
    pub gap_po_max: f64,
    pub gap_qo_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraResult {
    pub iterates: Vec<TraIterate>,
    pub solution: OpfSolution,
    pub gaps: GapReport,
    pub converged: bool,
    /// Coefficient of the last solve.
    pub last_xi: f64,
    /// Coefficient after the loop's post-solve increment (`last_xi + dxi`).
    pub final_xi: f64,
}

impl TraResult {
    pub const TRACE_HEADER: &'static str = "k,xi,gap_po_max,gap_qo_max,objective,penalized_objective";

    pub fn trace_csv(&self) -> String {
        trace_csv(&self.iterates)
    }
}

pub fn trace_csv(iterates: &[TraIterate]) -> String {
    let mut out = String::from(TraResult::TRACE_HEADER);
    out.push('\n');
    for it in iterates {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            it.k,
            it.xi,
            crate::sweep::format_sci(it.gap_po_max),
            crate::sweep::format_sci(it.gap_qo_max),
            it.objective,
            it.penalized_objective
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraError {
    #[error("invalid penalty options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solve {k} (xi = {xi}) failed: {source}")]
    SolveFailed {
        k: usize,
        xi: f64,
        source: SolveError,
        /// Iterates completed before the failure.
        iterates: Vec<TraIterate>,
    },
    #[error("penalty grid must be non-empty with finite entries >= 0")]
    InvalidGrid,
}

impl TraError {
    pub fn status(&self) -> Option<SolverStatus> {
        match self {
            TraError::SolveFailed { source: SolveError::NotOptimal(s), .. } => Some(*s),
            _ => None,
        }
    }
}

/// Run the penalty loop on `net`.
pub fn run_tra(net: &Network, opts: &TraOptions, solver_opts: &SolverOptions) -> Result<TraResult, TraError> {
    opts.validate()?;
    let mut iterates = Vec::new();
    let mut k = 1;
    loop {
        let penalty = PenaltySpec { xi: opts.xi_at(k), target: opts.target };
        let solved = match solve_case(net, &penalty, solver_opts) {
            Ok(s) => s,
            Err(SolveError::Model(e)) => return Err(TraError::Model(e)),
            Err(source) => return Err(TraError::SolveFailed { k, xi: penalty.xi, source, iterates }),
        };
        let gaps = solved.gaps;
        let solution = solved.solution;
        iterates.push(TraIterate {
            k,
            xi: penalty.xi,
            objective: solution.objective,
            penalized_objective: solution.objective + penalty.term(&solution.p_loss, &solution.q_loss),
            gap_po_max: gaps.gap_po_max,
            gap_qo_max: gaps.gap_qo_max,
        });
        let loose = gaps.gap_po_max > opts.gap_tol_po || gaps.gap_qo_max > opts.gap_tol_qo;
        k += 1;
        if !loose || iterates.len() >= opts.k_max {
            return Ok(TraResult {
                converged: !loose,
                last_xi: penalty.xi,
                final_xi: opts.xi_at(k),
                iterates,
                solution,
                gaps,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyPoint {
    pub xi: f64,
    pub gap_po_max: f64,
    pub gap_qo_max: f64,
    pub objective: f64,
    pub penalized_objective: f64,
    pub total_p_loss: f64,
    pub total_q_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub xi: f64,
    pub outcome: Result<PenaltyPoint, SolveError>,
}

/// One independent penalized solve per coefficient, in input order.
pub fn penalty_sweep(
    net: &Network,
    xis: &[f64],
    target: PenaltyTarget,
    solver_opts: &SolverOptions,
) -> Result<Vec<SweepEntry>, TraError> {
    if xis.is_empty() || xis.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(TraError::InvalidGrid);
    }
    Ok(xis
        .par_iter()
        .map(|&xi| {
            let penalty = PenaltySpec { xi, target };
            let outcome = solve_case(net, &penalty, solver_opts).map(|s| PenaltyPoint {
                xi,
                gap_po_max: s.gaps.gap_po_max,
                gap_qo_max: s.gaps.gap_qo_max,
                objective: s.solution.objective,
                penalized_objective: s.solution.objective + penalty.term(&s.solution.p_loss, &s.solution.q_loss),
                total_p_loss: s.solution.total_p_loss(),
                total_q_loss: s.solution.total_q_loss(),
            });
            SweepEntry { xi, outcome }
        })
        .collect())
}

pub const PENALTY_SWEEP_HEADER: &str = "xi,gap_po_max,gap_qo_max,objective";

/// Rows `xi,gap_po_max,gap_qo_max,objective`; failed solves carry the sentinel in every value column.
pub fn penalty_sweep_csv(entries: &[SweepEntry], scale: f64) -> String {
    let mut out = String::from(PENALTY_SWEEP_HEADER);
    out.push('\n');
    for e in entries {
        match &e.outcome {
            Ok(p) => out.push_str(&format!(
                "{},{},{},{}\n",
                e.xi,
                crate::sweep::format_sci(p.gap_po_max * scale),
                crate::sweep::format_sci(p.gap_qo_max * scale),
                p.objective
            )),
            Err(_) => {
                let s = crate::sweep::FAILED_CELL;
                out.push_str(&format!("{},{s},{s},{s}\n", e.xi));
            }
        }
    }
    out
}

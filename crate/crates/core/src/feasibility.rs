//! Relaxation gaps and balance residuals of a decoded solution.
//!
//! Per line, with sending-end flow `(p_s, q_s)` and effective sending
//! voltage square `V_s/τ²`:
//!
//! ```text
//! gap_po = p_o − (p_s² + q_s²)/V_s · R
//! gap_qo = q_o − (p_s² + q_s²)/V_s · X
//! ```
//!
//! Both are zero on every line exactly when the relaxed solution satisfies
//! the AC loss equations. Everything here is recomputed from the solution
//! and the network; nothing is read back from the solver.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::case::{incidence, Network};
use crate::model::OpfSolution;
use crate::sweep::format_sci;

/// Gap tolerance separating numerically-zero gaps from genuine ones (p.u.).
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapUnits {
    #[default]
    Pu,
    Mva,
}

impl std::str::FromStr for GapUnits {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pu" => Ok(Self::Pu),
            "mva" => Ok(Self::Mva),
            other => Err(format!("unknown unit mode `{other}` (expected pu or mva)")),
        }
    }
}

impl std::fmt::Display for GapUnits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pu => "pu",
            Self::Mva => "mva",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap_po: Vec<f64>,
    pub gap_qo: Vec<f64>,
    pub gap_po_max: f64,
    pub gap_qo_max: f64,
    /// Line achieving each maximum; `None` for a network without lines.
    pub argmax_po: Option<usize>,
    pub argmax_qo: Option<usize>,
    /// Largest absolute nodal balance residuals.
    pub p_balance_max: f64,
    pub q_balance_max: f64,
    pub tolerance: f64,
    /// Both maxima within `tolerance`.
    pub feasible: bool,
    pub units: GapUnits,
}

impl GapReport {
    /// The larger of the two maxima; smaller is better.
    pub fn severity(&self) -> f64 {
        self.gap_po_max.max(self.gap_qo_max)
    }

    /// Total order by [`GapReport::severity`].
    pub fn quality_cmp(&self, other: &Self) -> Ordering {
        self.severity().total_cmp(&other.severity())
    }

    /// Express gaps and residuals in MW/MVAr instead of p.u.
    pub fn in_units(&self, units: GapUnits, base_mva: f64) -> Self {
        let factor = match (self.units, units) {
            (GapUnits::Pu, GapUnits::Mva) => base_mva,
            (GapUnits::Mva, GapUnits::Pu) => 1.0 / base_mva,
            _ => 1.0,
        };
        let scale = |v: &[f64]| v.iter().map(|g| g * factor).collect();
        Self {
            gap_po: scale(&self.gap_po),
            gap_qo: scale(&self.gap_qo),
            gap_po_max: self.gap_po_max * factor,
            gap_qo_max: self.gap_qo_max * factor,
            p_balance_max: self.p_balance_max * factor,
            q_balance_max: self.q_balance_max * factor,
            tolerance: self.tolerance * factor,
            units,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub const CSV_HEADER: &'static str = "case,load,gap_po_max,gap_qo_max,feasible";

    /// One CSV row: case, load level (percent), both maxima, feasibility flag.
    pub fn csv_row(&self, case: &str, load_factor: f64) -> String {
        format!(
            "{case},{},{},{},{}",
            crate::sweep::percent_label(load_factor),
            format_sci(self.gap_po_max),
            format_sci(self.gap_qo_max),
            self.feasible
        )
    }
}

fn max_with_arg(values: &[f64]) -> (f64, Option<usize>) {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, m)| v > m) {
            best = Some((i, v));
        }
    }
    best.map_or((0.0, None), |(i, m)| (m, Some(i)))
}

/// Per-line loss gaps with maxima, at the default tolerance.
pub fn line_gaps(sol: &OpfSolution, net: &Network) -> GapReport {
    line_gaps_with_tol(sol, net, DEFAULT_GAP_TOL)
}

pub fn line_gaps_with_tol(sol: &OpfSolution, net: &Network, tol: f64) -> GapReport {
    let mut gap_po = Vec::with_capacity(net.n_branches());
    let mut gap_qo = Vec::with_capacity(net.n_branches());
    for (l, br) in net.branches.iter().enumerate() {
        let v_send = sol.v_sq[br.from] * br.send_voltage_factor();
        let flow_sq = sol.p_send[l].powi(2) + sol.q_send[l].powi(2);
        let current_sq = flow_sq / v_send;
        gap_po.push(sol.p_loss[l] - current_sq * br.r);
        gap_qo.push(sol.q_loss[l] - current_sq * br.x);
    }
    let (gap_po_max, argmax_po) = max_with_arg(&gap_po);
    let (gap_qo_max, argmax_qo) = max_with_arg(&gap_qo);
    let (p_res, q_res) = balance_residuals(sol, net).expect("solution decoded from this network");
    let abs_max = |v: &[f64]| v.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    GapReport {
        gap_po,
        gap_qo,
        gap_po_max,
        gap_qo_max,
        argmax_po,
        argmax_qo,
        p_balance_max: abs_max(&p_res),
        q_balance_max: abs_max(&q_res),
        tolerance: tol,
        feasible: gap_po_max <= tol && gap_qo_max <= tol,
        units: GapUnits::Pu,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("solution has {got} {what}, network has {expected}")]
pub struct DimensionMismatch {
    pub what: &'static str,
    pub got: usize,
    pub expected: usize,
}

/// Nodal `lhs − rhs` of the active and reactive balance equations,
/// evaluated through the incidence matrices.
pub fn balance_residuals(sol: &OpfSolution, net: &Network) -> Result<(Vec<f64>, Vec<f64>), DimensionMismatch> {
    let check = |what, got: usize, expected: usize| {
        if got == expected {
            Ok(())
        } else {
            Err(DimensionMismatch { what, got, expected })
        }
    };
    check("bus voltages", sol.v_sq.len(), net.n_buses())?;
    check("generator dispatches", sol.p_gen.len(), net.n_generators())?;
    check("generator dispatches", sol.q_gen.len(), net.n_generators())?;
    for (what, v) in [
        ("line flows", &sol.p_send),
        ("line flows", &sol.q_send),
        ("line losses", &sol.p_loss),
        ("line losses", &sol.q_loss),
    ] {
        check(what, v.len(), net.n_branches())?;
    }

    let inc = incidence(net);
    let ps = inc.a_plus.mul_vec(&sol.p_send);
    let qs = inc.a_plus.mul_vec(&sol.q_send);
    let po = inc.a_minus.mul_vec(&sol.p_loss);
    let qo = inc.a_minus.mul_vec(&sol.q_loss);

    let mut p_inj: Vec<f64> = net.buses.iter().map(|b| -b.p_load).collect();
    let mut q_inj: Vec<f64> = net.buses.iter().map(|b| -b.q_load).collect();
    for (g, gen) in net.generators.iter().enumerate() {
        p_inj[gen.bus] += sol.p_gen[g];
        q_inj[gen.bus] += sol.q_gen[g];
    }
    let p = net.buses.iter().enumerate().map(|(n, b)| p_inj[n] - (ps[n] - po[n] + b.g_shunt * sol.v_sq[n])).collect();
    let q = net.buses.iter().enumerate().map(|(n, b)| q_inj[n] - (qs[n] - qo[n] - b.b_shunt * sol.v_sq[n])).collect();
    Ok((p, q))
}

/// Both gap maxima and both balance maxima within `tol`.
pub fn is_ac_feasible(report: &GapReport, tol: f64) -> bool {
    debug_assert!(tol > 0.0);
    report.gap_po_max <= tol && report.gap_qo_max <= tol && report.p_balance_max <= tol && report.q_balance_max <= tol
}

//! Translation of a [`Network`] into the power-loss SOC relaxation of ACOPF.
//!
//! Per line `l = (s → r)` with tap `τ`, shift `σ` and effective sending
//! voltage square `V'_s = V_s/τ²`:
//!
//! ```text
//! V'_s − V_r = 2R·p_s + 2X·q_s − R·p_o − X·q_o        voltage drop
//! θ_l        = X·p_s − R·q_s                           angle drop
//! θ_l        = θ_s − σ − θ_r
//! X·p_o      = R·q_o                                   loss coupling
//! q_o·V'_s  ≥ X·(p_s² + q_s²)                          loss cone
//! q_o       ≤ (K̃ − V'_s·B_s² + 2q_s·B_s)·X             ampacity surrogate
//! V'_s·V_r·sin²θ_max ≥ θ_l²                            angle cone
//! ```
//!
//! and per bus the active/reactive balance with shunt `G_n V_n`, `−B_n V_n`.

use serde::{Deserialize, Serialize};

use crate::case::Network;

use super::program::{AffineExpr, ConicProgram, LinearRow, Objective, RotatedCone};
use super::ModelError;

/// Positions of every model variable in the program vector.
///
/// Layout: `V (N) | θ (N) | p_g (G) | q_g (G) | p_s (L) | q_s (L) | p_o (L) | q_o (L) | θ_l (L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMap {
    pub n_buses: usize,
    pub n_generators: usize,
    pub n_lines: usize,
}

impl VariableMap {
    pub fn for_network(net: &Network) -> Self {
        Self { n_buses: net.n_buses(), n_generators: net.n_generators(), n_lines: net.n_branches() }
    }

    pub fn n_vars(&self) -> usize {
        2 * self.n_buses + 2 * self.n_generators + 5 * self.n_lines
    }

    pub fn v_sq(&self, bus: usize) -> usize {
        debug_assert!(bus < self.n_buses);
        bus
    }
    pub fn theta(&self, bus: usize) -> usize {
        debug_assert!(bus < self.n_buses);
        self.n_buses + bus
    }
    pub fn p_gen(&self, g: usize) -> usize {
        debug_assert!(g < self.n_generators);
        2 * self.n_buses + g
    }
    pub fn q_gen(&self, g: usize) -> usize {
        debug_assert!(g < self.n_generators);
        2 * self.n_buses + self.n_generators + g
    }
    fn line_base(&self, block: usize, l: usize) -> usize {
        debug_assert!(l < self.n_lines);
        2 * self.n_buses + 2 * self.n_generators + block * self.n_lines + l
    }
    pub fn p_send(&self, l: usize) -> usize {
        self.line_base(0, l)
    }
    pub fn q_send(&self, l: usize) -> usize {
        self.line_base(1, l)
    }
    pub fn p_loss(&self, l: usize) -> usize {
        self.line_base(2, l)
    }
    pub fn q_loss(&self, l: usize) -> usize {
        self.line_base(3, l)
    }
    pub fn theta_line(&self, l: usize) -> usize {
        self.line_base(4, l)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_vars());
        let blocks: [(&str, usize); 9] = [
            ("V", self.n_buses),
            ("theta", self.n_buses),
            ("pg", self.n_generators),
            ("qg", self.n_generators),
            ("ps", self.n_lines),
            ("qs", self.n_lines),
            ("po", self.n_lines),
            ("qo", self.n_lines),
            ("theta_l", self.n_lines),
        ];
        for (prefix, count) in blocks {
            names.extend((0..count).map(|i| format!("{prefix}[{i}]")));
        }
        names
    }
}

/// Which loss terms the penalty applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyTarget {
    /// `ξ·Σ q_o`
    #[default]
    ReactiveLoss,
    /// `ξ·Σ (p_o + q_o)`
    ActivePlusReactiveLoss,
}

impl std::fmt::Display for PenaltyTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ReactiveLoss => "q_loss",
            Self::ActivePlusReactiveLoss => "pq_loss",
        })
    }
}

impl std::str::FromStr for PenaltyTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "q_loss" => Ok(Self::ReactiveLoss),
            "pq_loss" => Ok(Self::ActivePlusReactiveLoss),
            other => Err(format!("unknown penalty target `{other}` (expected q_loss or pq_loss)")),
        }
    }
}

/// Loss penalty added to the generation cost; `xi = 0` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub xi: f64,
    pub target: PenaltyTarget,
}

impl PenaltySpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn reactive(xi: f64) -> Self {
        Self { xi, target: PenaltyTarget::ReactiveLoss }
    }

    /// Penalty term evaluated on per-line losses.
    pub fn term(&self, p_loss: &[f64], q_loss: &[f64]) -> f64 {
        let q: f64 = q_loss.iter().sum();
        match self.target {
            PenaltyTarget::ReactiveLoss => self.xi * q,
            PenaltyTarget::ActivePlusReactiveLoss => self.xi * (q + p_loss.iter().sum::<f64>()),
        }
    }
}

/// Line end whose flow and voltage enter the loss cone and ampacity bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossEnd {
    #[default]
    Sending,
    Receiving,
}

/// Build the relaxation with the loss cone on the sending end.
pub fn build_socp(net: &Network, penalty: &PenaltySpec) -> Result<(ConicProgram, VariableMap), ModelError> {
    build_socp_at(net, penalty, LossEnd::Sending)
}

pub fn build_socp_at(
    net: &Network,
    penalty: &PenaltySpec,
    end: LossEnd,
) -> Result<(ConicProgram, VariableMap), ModelError> {
    net.validate()?;
    if !(penalty.xi.is_finite() && penalty.xi >= 0.0) {
        return Err(ModelError::InvalidPenalty(penalty.xi));
    }
    let map = VariableMap::for_network(net);
    let n = map.n_vars();

    let mut objective = Objective::zeros(n);
    for (g, gen) in net.generators.iter().enumerate() {
        objective.quad[map.p_gen(g)] = gen.cost_a;
        objective.linear[map.p_gen(g)] = gen.cost_b;
        objective.constant += gen.cost_c;
    }
    if penalty.xi > 0.0 {
        for l in 0..map.n_lines {
            objective.linear[map.q_loss(l)] += penalty.xi;
            if penalty.target == PenaltyTarget::ActivePlusReactiveLoss {
                objective.linear[map.p_loss(l)] += penalty.xi;
            }
        }
    }

    let mut equalities = Vec::with_capacity(2 * map.n_buses + 4 * map.n_lines);

    // Nodal balance: Σ p_g − (series outflow) − G·V = p_d, and the reactive analogue with +B·V.
    let mut p_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); map.n_buses];
    let mut q_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); map.n_buses];
    for (g, gen) in net.generators.iter().enumerate() {
        p_rows[gen.bus].push((map.p_gen(g), 1.0));
        q_rows[gen.bus].push((map.q_gen(g), 1.0));
    }
    for (l, br) in net.branches.iter().enumerate() {
        p_rows[br.from].push((map.p_send(l), -1.0));
        q_rows[br.from].push((map.q_send(l), -1.0));
        // Receiving end takes in p_s − p_o.
        p_rows[br.to].extend([(map.p_send(l), 1.0), (map.p_loss(l), -1.0)]);
        q_rows[br.to].extend([(map.q_send(l), 1.0), (map.q_loss(l), -1.0)]);
    }
    for (i, bus) in net.buses.iter().enumerate() {
        let mut p_terms = std::mem::take(&mut p_rows[i]);
        if bus.g_shunt != 0.0 {
            p_terms.push((map.v_sq(i), -bus.g_shunt));
        }
        equalities.push(LinearRow { label: format!("p_balance[{}]", bus.id), terms: p_terms, rhs: bus.p_load });
    }
    for (i, bus) in net.buses.iter().enumerate() {
        let mut q_terms = std::mem::take(&mut q_rows[i]);
        if bus.b_shunt != 0.0 {
            q_terms.push((map.v_sq(i), bus.b_shunt));
        }
        equalities.push(LinearRow { label: format!("q_balance[{}]", bus.id), terms: q_terms, rhs: bus.q_load });
    }

    let mut inequalities = Vec::new();
    let mut cones = Vec::with_capacity(2 * map.n_lines);
    for (l, br) in net.branches.iter().enumerate() {
        let (s, r) = (br.from, br.to);
        let k = br.send_voltage_factor();
        let (ps, qs, po, qo, th) = (map.p_send(l), map.q_send(l), map.p_loss(l), map.q_loss(l), map.theta_line(l));

        equalities.push(LinearRow {
            label: format!("voltage_drop[{l}]"),
            terms: vec![
                (map.v_sq(s), k),
                (map.v_sq(r), -1.0),
                (ps, -2.0 * br.r),
                (qs, -2.0 * br.x),
                (po, br.r),
                (qo, br.x),
            ],
            rhs: 0.0,
        });
        equalities.push(LinearRow {
            label: format!("angle_drop[{l}]"),
            terms: vec![(th, 1.0), (ps, -br.x), (qs, br.r)],
            rhs: 0.0,
        });
        equalities.push(LinearRow {
            label: format!("loss_coupling[{l}]"),
            terms: vec![(po, br.x), (qo, -br.r)],
            rhs: 0.0,
        });
        equalities.push(LinearRow {
            label: format!("angle_difference[{l}]"),
            terms: vec![(th, 1.0), (map.theta(s), -1.0), (map.theta(r), 1.0)],
            rhs: -br.shift,
        });

        // The loss `q_o/X` is what the cone bounds; dividing by X keeps it convex for either sign of X.
        let loss_u = AffineExpr::var(qo, 1.0 / (2.0 * br.x));
        let (v_end, w_end) = match end {
            LossEnd::Sending => {
                (AffineExpr::var(map.v_sq(s), k), vec![AffineExpr::var(ps, 1.0), AffineExpr::var(qs, 1.0)])
            }
            LossEnd::Receiving => (
                AffineExpr::var(map.v_sq(r), 1.0),
                vec![
                    AffineExpr::new(vec![(ps, 1.0), (po, -1.0)], 0.0),
                    AffineExpr::new(vec![(qs, 1.0), (qo, -1.0)], 0.0),
                ],
            ),
        };
        cones.push(RotatedCone { label: format!("loss_cone[{l}]"), u: loss_u, v: v_end, w: w_end });

        if let Some(k_tilde) = br.ampacity_sq() {
            // q_o + X·B²·V_end − 2X·B·q_end ≤ K̃·X, flipped when X < 0 so it still caps the loss.
            let mut terms = match end {
                LossEnd::Sending => {
                    let b = br.b_charge_send;
                    vec![(qo, 1.0), (map.v_sq(s), br.x * b * b * k), (qs, -2.0 * br.x * b)]
                }
                LossEnd::Receiving => {
                    let b = br.b_charge_recv;
                    vec![(qo, 1.0 + 2.0 * br.x * b), (map.v_sq(r), br.x * b * b), (qs, -2.0 * br.x * b)]
                }
            };
            let mut rhs = k_tilde * br.x;
            if br.x < 0.0 {
                terms.iter_mut().for_each(|t| t.1 = -t.1);
                rhs = -rhs;
            }
            terms.retain(|t| t.1 != 0.0);
            inequalities.push(LinearRow { label: format!("ampacity[{l}]"), terms, rhs });
        }

        cones.push(RotatedCone {
            label: format!("angle_cone[{l}]"),
            u: AffineExpr::var(map.v_sq(s), k * br.angle_cone_coeff() / 2.0),
            v: AffineExpr::var(map.v_sq(r), 1.0),
            w: vec![AffineExpr::var(th, 1.0)],
        });
    }

    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for (i, bus) in net.buses.iter().enumerate() {
        (lower[map.v_sq(i)], upper[map.v_sq(i)]) = (bus.v_min * bus.v_min, bus.v_max * bus.v_max);
        (lower[map.theta(i)], upper[map.theta(i)]) = (bus.theta_min, bus.theta_max);
    }
    for (g, gen) in net.generators.iter().enumerate() {
        (lower[map.p_gen(g)], upper[map.p_gen(g)]) = (gen.p_min, gen.p_max);
        (lower[map.q_gen(g)], upper[map.q_gen(g)]) = (gen.q_min, gen.q_max);
    }
    for (l, br) in net.branches.iter().enumerate() {
        (lower[map.theta_line(l)], upper[map.theta_line(l)]) = (br.angle_min, br.angle_max);
    }
    let names = map.names();
    if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
        return Err(ModelError::InfeasibleBox { variable: names[i].clone(), lower: lower[i], upper: upper[i] });
    }

    let program =
        ConicProgram { n_vars: n, var_names: names, objective, equalities, inequalities, cones, lower, upper };
    debug_assert_eq!(program.validate(), Ok(()));
    Ok((program, map))
}

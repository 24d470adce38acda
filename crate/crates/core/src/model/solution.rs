use serde::{Deserialize, Serialize};

use crate::case::Network;

use super::build::VariableMap;
use super::ModelError;

/// Physical quantities decoded from a primal vector, all in p.u. / rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    pub v_sq: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub p_send: Vec<f64>,
    pub q_send: Vec<f64>,
    pub p_loss: Vec<f64>,
    pub q_loss: Vec<f64>,
    pub theta_line: Vec<f64>,
    pub p_recv: Vec<f64>,
    pub q_recv: Vec<f64>,
    /// Generation cost in $/h, without any loss penalty.
    pub objective: f64,
}

impl OpfSolution {
    pub fn total_q_loss(&self) -> f64 {
        self.q_loss.iter().sum()
    }

    pub fn total_p_loss(&self) -> f64 {
        self.p_loss.iter().sum()
    }
}

/// Unpenalized generation cost of a dispatch.
pub fn generation_cost(net: &Network, p_gen: &[f64]) -> f64 {
    net.generators.iter().zip(p_gen).map(|(g, &p)| g.cost(p)).sum()
}

pub fn extract_solution(x: &[f64], map: &VariableMap, net: &Network) -> Result<OpfSolution, ModelError> {
    if x.len() != map.n_vars() || *map != VariableMap::for_network(net) {
        return Err(ModelError::DimensionMismatch { expected: map.n_vars(), got: x.len() });
    }
    let take = |f: &dyn Fn(usize) -> usize, count: usize| (0..count).map(|i| x[f(i)]).collect::<Vec<f64>>();

    let v_sq = take(&|i| map.v_sq(i), map.n_buses);
    if let Some(bus) = v_sq.iter().position(|&v| !(v > 0.0)) {
        return Err(ModelError::NonPositiveVoltageSquare { bus: net.buses[bus].id, value: v_sq[bus] });
    }
    let p_gen = take(&|g| map.p_gen(g), map.n_generators);
    let p_send = take(&|l| map.p_send(l), map.n_lines);
    let q_send = take(&|l| map.q_send(l), map.n_lines);
    let p_loss = take(&|l| map.p_loss(l), map.n_lines);
    let q_loss = take(&|l| map.q_loss(l), map.n_lines);
    let p_recv = p_send.iter().zip(&p_loss).map(|(s, o)| s - o).collect();
    let q_recv = q_send.iter().zip(&q_loss).map(|(s, o)| s - o).collect();

    Ok(OpfSolution {
        v: v_sq.iter().map(|v| v.sqrt()).collect(),
        v_sq,
        theta: take(&|i| map.theta(i), map.n_buses),
        objective: generation_cost(net, &p_gen),
        p_gen,
        q_gen: take(&|g| map.q_gen(g), map.n_generators),
        p_send,
        q_send,
        p_loss,
        q_loss,
        theta_line: take(&|l| map.theta_line(l), map.n_lines),
        p_recv,
        q_recv,
    })
}

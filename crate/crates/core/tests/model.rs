mod common;

use common::{load, two_bus};
use proptest::prelude::*;
use socopf::model::{build_socp_at, LossEnd, PenaltyTarget};
use socopf::{build_socp, extract_solution, ModelError, PenaltySpec, VariableMap};

#[test]
fn case9_variable_count() {
    let net = load("case9");
    let (prog, map) = build_socp(&net, &PenaltySpec::none()).unwrap();
    assert_eq!(prog.n_vars, 2 * 9 + 2 * 3 + 5 * 9);
    assert_eq!(prog.n_vars, 69);
    assert_eq!(map.n_vars(), 69);
    assert_eq!(prog.var_names.len(), 69);
    prog.validate().unwrap();
}

#[test]
fn block_counts() {
    let net = load("case30");
    let (prog, _) = build_socp(&net, &PenaltySpec::none()).unwrap();
    let (n, l) = (net.n_buses(), net.n_branches());
    assert_eq!(prog.equalities.len(), 2 * n + 4 * l);
    assert_eq!(prog.cones.len(), 2 * l);
    let rated = net.branches.iter().filter(|b| b.rate.is_some()).count();
    assert_eq!(prog.inequalities.len(), rated);
}

#[test]
fn loss_coupling_row() {
    let net = two_bus(0.01, 0.1, 50.0, 20.0);
    let (prog, map) = build_socp(&net, &PenaltySpec::none()).unwrap();
    let row = prog.equalities.iter().find(|r| r.label == "loss_coupling[0]").unwrap();
    let mut terms = row.terms.clone();
    terms.sort_by_key(|t| t.0);
    assert_eq!(terms, vec![(map.p_loss(0), 0.1), (map.q_loss(0), -0.01)]);
    assert_eq!(row.rhs, 0.0);
}

#[test]
fn build_is_deterministic() {
    for name in ["case14", "case118"] {
        let net = load(name);
        let (a, _) = build_socp(&net, &PenaltySpec::reactive(0.3)).unwrap();
        let (b, _) = build_socp(&net, &PenaltySpec::reactive(0.3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.dump_text(), b.dump_text());
    }
}

#[test]
fn penalty_only_touches_the_objective() {
    let net = load("case57");
    let (plain, _) = build_socp(&net, &PenaltySpec::none()).unwrap();
    let (pen, _) = build_socp(&net, &PenaltySpec::reactive(0.3)).unwrap();
    assert_eq!(plain.equalities, pen.equalities);
    assert_eq!(plain.inequalities, pen.inequalities);
    assert_eq!(plain.cones, pen.cones);
    assert_eq!((&plain.lower, &plain.upper), (&pen.lower, &pen.upper));
    assert_ne!(plain.objective, pen.objective);
}

#[test]
fn negative_penalty_rejected() {
    let net = load("case9");
    assert!(matches!(build_socp(&net, &PenaltySpec::reactive(-0.1)), Err(ModelError::InvalidPenalty(_))));
    assert!(matches!(build_socp(&net, &PenaltySpec::reactive(f64::NAN)), Err(ModelError::InvalidPenalty(_))));
}

#[test]
fn empty_box_detected() {
    let mut net = load("case9");
    net.generators[0].p_min = 2.0;
    net.generators[0].p_max = 1.0;
    assert!(build_socp(&net, &PenaltySpec::none()).is_err());
}

fn case9_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 69)
}

proptest! {
    #[test]
    fn penalty_separation(x in case9_point(), xi in 0.0f64..5.0) {
        let net = load("case9");
        let (plain, map) = build_socp(&net, &PenaltySpec::none()).unwrap();
        let (pen, _) = build_socp(&net, &PenaltySpec::reactive(xi)).unwrap();
        let q_sum: f64 = (0..map.n_lines).map(|l| x[map.q_loss(l)]).sum();
        let diff = pen.objective.eval(&x) - plain.objective.eval(&x);
        let scale = 1.0 + plain.objective.eval(&x).abs();
        prop_assert!((diff - xi * q_sum).abs() <= 1e-12 * scale, "{diff} vs {}", xi * q_sum);

        let (both, _) = build_socp(&net, &PenaltySpec { xi, target: PenaltyTarget::ActivePlusReactiveLoss }).unwrap();
        let p_sum: f64 = (0..map.n_lines).map(|l| x[map.p_loss(l)]).sum();
        let diff = both.objective.eval(&x) - plain.objective.eval(&x);
        prop_assert!((diff - xi * (q_sum + p_sum)).abs() <= 1e-12 * scale);
    }

    /// The loss block holds iff q_o·V'_s ≥ (p_s² + q_s²)·X with q_o/X ≥ 0.
    #[test]
    fn loss_cone_encoding(x in prop::collection::vec(-2.0f64..2.0, 69), line in 0usize..9) {
        let net = load("case9");
        let (prog, map) = build_socp(&net, &PenaltySpec::none()).unwrap();
        let br = &net.branches[line];
        let cone = prog.cones.iter().find(|c| c.label == format!("loss_cone[{line}]")).unwrap();
        let v_send = x[map.v_sq(br.from)] * br.send_voltage_factor();
        let (ps, qs, qo) = (x[map.p_send(line)], x[map.q_send(line)], x[map.q_loss(line)]);
        let physical = qo * v_send - (ps * ps + qs * qs) * br.x;

        prop_assert!((cone.margin(&x) * br.x - physical).abs() <= 1e-12 * (1.0 + physical.abs()));
        let in_cone = cone.margin(&x) >= 0.0 && cone.u.eval(&x) >= 0.0 && cone.v.eval(&x) >= 0.0;
        let holds = physical >= 0.0 && qo / br.x >= 0.0 && v_send >= 0.0;
        if physical.abs() > 1e-9 {
            prop_assert_eq!(in_cone, holds);
        }
    }
}

#[test]
fn receiving_end_variant_builds() {
    let net = load("case14");
    let (send, _) = build_socp_at(&net, &PenaltySpec::none(), LossEnd::Sending).unwrap();
    let (recv, _) = build_socp_at(&net, &PenaltySpec::none(), LossEnd::Receiving).unwrap();
    assert_eq!(send.n_vars, recv.n_vars);
    assert_eq!(send.equalities, recv.equalities);
    assert_ne!(send.cones, recv.cones);
    recv.validate().unwrap();
}

#[test]
fn extract_examples() {
    let net = two_bus(0.01, 0.1, 0.0, 0.0);
    let map = VariableMap::for_network(&net);
    let mut x = vec![0.0; map.n_vars()];
    x[map.v_sq(0)] = 1.0;
    x[map.v_sq(1)] = 1.1025;
    let sol = extract_solution(&x, &map, &net).unwrap();
    assert_eq!(sol.v[0], 1.0);
    assert!((sol.v[1] - 1.05).abs() < 1e-15);
    // zero dispatch, zero flows: only the constant cost remains
    let gammas: f64 = net.generators.iter().map(|g| g.cost_c).sum();
    assert_eq!(sol.objective, gammas);
    assert_eq!(sol.objective, 150.0);

    x[map.p_send(0)] = 0.4;
    x[map.p_loss(0)] = 0.01;
    x[map.q_send(0)] = 0.3;
    x[map.q_loss(0)] = 0.1;
    let sol = extract_solution(&x, &map, &net).unwrap();
    assert!((sol.p_recv[0] - 0.39).abs() < 1e-15);
    assert!((sol.q_recv[0] - 0.2).abs() < 1e-15);
}

#[test]
fn extract_errors() {
    let net = two_bus(0.01, 0.1, 50.0, 20.0);
    let map = VariableMap::for_network(&net);
    let x = vec![0.0; map.n_vars()];
    assert!(matches!(extract_solution(&x, &map, &net), Err(ModelError::NonPositiveVoltageSquare { bus: 1, .. })));
    assert!(matches!(extract_solution(&x[1..], &map, &net), Err(ModelError::DimensionMismatch { .. })));
}

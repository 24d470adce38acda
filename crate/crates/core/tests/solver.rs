mod common;

use common::load;
use socopf::model::{AffineExpr, LinearRow, Objective, RotatedCone};
use socopf::solver::SolverError;
use socopf::{build_socp, kkt_residuals, solve, ConicProgram, PenaltySpec, SolverOptions, SolverStatus};

fn program(n: usize) -> ConicProgram {
    ConicProgram {
        n_vars: n,
        var_names: (0..n).map(|i| format!("x{i}")).collect(),
        objective: Objective::zeros(n),
        equalities: vec![],
        inequalities: vec![],
        cones: vec![],
        lower: vec![f64::NEG_INFINITY; n],
        upper: vec![f64::INFINITY; n],
    }
}

#[test]
fn square_above_three() {
    let mut prog = program(1);
    prog.objective.quad[0] = 1.0;
    prog.lower[0] = 3.0;
    let res = solve(&prog, &SolverOptions::default()).unwrap();
    assert_eq!(res.status, SolverStatus::Optimal);
    assert!((res.x[0] - 3.0).abs() < 1e-7, "{}", res.x[0]);
    assert!((res.objective - 9.0).abs() < 1e-6);
    // the bound multiplier is the gradient 2x = 6
    assert!((res.duals.lower[0] - 6.0).abs() < 1e-5, "{}", res.duals.lower[0]);
}

#[test]
fn rotated_cone_boundary() {
    // min x  s.t. 2uv ≥ x², u = v = 1
    let mut prog = program(3);
    prog.objective.linear[0] = 1.0;
    prog.lower[1] = 1.0;
    prog.upper[1] = 1.0;
    prog.lower[2] = 1.0;
    prog.upper[2] = 1.0;
    prog.cones.push(RotatedCone {
        label: "c".into(),
        u: AffineExpr::var(1, 1.0),
        v: AffineExpr::var(2, 1.0),
        w: vec![AffineExpr::var(0, 1.0)],
    });
    let res = solve(&prog, &SolverOptions::default()).unwrap();
    assert_eq!(res.status, SolverStatus::Optimal);
    assert!((res.x[0] + 2f64.sqrt()).abs() < 1e-7, "{}", res.x[0]);
    let kkt = kkt_residuals(&prog, &res).unwrap();
    assert!(kkt.max_all() < 1e-6, "{kkt:?}");
}

#[test]
fn affine_cone_with_constants_and_rows() {
    // min −y  s.t. y ≤ 2 − x, 2·(x + 1)·1 ≥ y², x = 1  →  y = 1
    let mut prog = program(2);
    prog.objective.linear[1] = -1.0;
    prog.equalities.push(LinearRow { label: "fix".into(), terms: vec![(0, 1.0)], rhs: 1.0 });
    prog.inequalities.push(LinearRow { label: "cap".into(), terms: vec![(0, 1.0), (1, 1.0)], rhs: 2.0 });
    prog.cones.push(RotatedCone {
        label: "c".into(),
        u: AffineExpr::new(vec![(0, 1.0)], 1.0),
        v: AffineExpr::new(vec![], 1.0),
        w: vec![AffineExpr::var(1, 1.0)],
    });
    let res = solve(&prog, &SolverOptions::default()).unwrap();
    assert_eq!(res.status, SolverStatus::Optimal);
    assert!((res.x[1] - 1.0).abs() < 1e-7);
    let kkt = kkt_residuals(&prog, &res).unwrap();
    assert!(kkt.max_all() < 1e-6, "{kkt:?}");
}

#[test]
fn infeasible_program_is_not_optimal() {
    let mut prog = program(1);
    prog.lower[0] = 1.0;
    prog.inequalities.push(LinearRow { label: "x<=0".into(), terms: vec![(0, 1.0)], rhs: 0.0 });
    let res = solve(&prog, &SolverOptions::default()).unwrap();
    assert_eq!(res.status, SolverStatus::PrimalInfeasible);
}

#[test]
fn unbounded_program_is_not_optimal() {
    let mut prog = program(1);
    prog.objective.linear[0] = 1.0;
    let res = solve(&prog, &SolverOptions::default()).unwrap();
    assert_eq!(res.status, SolverStatus::DualInfeasible);
}

#[test]
fn invalid_inputs_are_errors() {
    let mut prog = program(1);
    prog.objective.quad[0] = -1.0;
    assert!(matches!(solve(&prog, &SolverOptions::default()), Err(SolverError::InvalidProgram(_))));
    let opts = SolverOptions { feas_tol: 0.0, ..Default::default() };
    assert!(matches!(solve(&program(1), &opts), Err(SolverError::InvalidOptions(_))));
}

#[test]
fn hand_built_feasible_point() {
    let mut prog = program(2);
    prog.equalities.push(LinearRow { label: "sum".into(), terms: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 });
    let mut res = solve(&prog, &SolverOptions::default()).unwrap();
    res.x = vec![0.25, 0.75];
    res.duals.equalities = vec![0.0];
    let kkt = kkt_residuals(&prog, &res).unwrap();
    assert!(kkt.max_all() <= 1e-12, "{kkt:?}");

    res.x[0] += 1e-3;
    let kkt = kkt_residuals(&prog, &res).unwrap();
    assert!((kkt.equality - 1e-3).abs() < 1e-12);

    res.x.pop();
    assert!(matches!(kkt_residuals(&prog, &res), Err(SolverError::DimensionMismatch(_))));
}

#[test]
fn case9_verifies() {
    let (prog, _) = build_socp(&load("case9"), &PenaltySpec::none()).unwrap();
    let opts = SolverOptions::default();
    let res = solve(&prog, &opts).unwrap();
    assert_eq!(res.status, SolverStatus::Optimal);
    assert!(res.iterations <= 200);
    let kkt = kkt_residuals(&prog, &res).unwrap();
    assert!(kkt.max_primal() <= 1e-7, "{kkt:?}");
    assert!(kkt.stationarity <= 1e-7 && kkt.complementarity <= 1e-7, "{kkt:?}");
    assert!(res.dual_objective <= res.objective + 10.0 * opts.gap_tol * (1.0 + res.objective.abs()));
}

#[test]
fn repeat_solves_agree() {
    let (prog, _) = build_socp(&load("case30"), &PenaltySpec::reactive(0.3)).unwrap();
    let opts = SolverOptions::default();
    let a = solve(&prog, &opts).unwrap();
    let b = solve(&prog, &opts).unwrap();
    assert!((a.objective - b.objective).abs() <= 2.0 * opts.gap_tol * (1.0 + a.objective.abs()));
}

#[test]
fn objective_scaling() {
    let (prog, _) = build_socp(&load("case14"), &PenaltySpec::none()).unwrap();
    let opts = SolverOptions::default();
    let base = solve(&prog, &opts).unwrap();
    for lambda in [1e-2, 7.0] {
        let mut scaled = prog.clone();
        scaled.objective = prog.objective.scaled(lambda);
        let res = solve(&scaled, &opts).unwrap();
        assert_eq!(res.status, SolverStatus::Optimal);
        let ratio = res.objective / base.objective;
        assert!((ratio - lambda).abs() <= 1e-6 * lambda, "λ = {lambda}: ratio {ratio}");
        // the scaled argmin sits on the unscaled optimal level set
        let level = prog.objective.eval(&res.x);
        assert!((level - base.objective).abs() <= 1e-6 * base.objective.abs());
    }
}

#[test]
fn weak_duality_on_fixtures() {
    let opts = SolverOptions::default();
    for name in ["case9", "case14", "case30", "case57"] {
        for xi in [0.0, 0.3] {
            let (prog, _) = build_socp(&load(name), &PenaltySpec::reactive(xi)).unwrap();
            let res = solve(&prog, &opts).unwrap();
            assert_eq!(res.status, SolverStatus::Optimal, "{name}");
            let slack = 10.0 * opts.gap_tol * (1.0 + res.objective.abs());
            assert!(
                res.dual_objective <= res.objective + slack,
                "{name} ξ={xi}: {} > {}",
                res.dual_objective,
                res.objective
            );
            assert!(res.objective - res.dual_objective <= 1e-6 * (1.0 + res.objective.abs()));
            let kkt = kkt_residuals(&prog, &res).unwrap();
            assert!(kkt.dual_infeasibility <= 1e-6, "{name}: {kkt:?}");
        }
    }
}

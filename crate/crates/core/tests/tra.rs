mod common;

use common::{fixture, load, two_bus};
use socopf::model::PenaltyTarget;
use socopf::sweep::{run_load_sweep, GapMetric, SweepError, FAILED_CELL};
use socopf::tra::{penalty_sweep_csv, PENALTY_SWEEP_HEADER};
use socopf::{
    load_case_with, penalty_sweep, run_tra, solve_case, CostBasis, GapUnits, Network, PenaltySpec, SolverOptions,
    TraError, TraOptions,
};

fn native(name: &str) -> Network {
    load_case_with(fixture(name), CostBasis::Native).unwrap()
}

#[test]
fn single_pass_cap() {
    let opts = TraOptions { k_max: 1, ..Default::default() };
    let res = run_tra(&load("case118"), &opts, &SolverOptions::default()).unwrap();
    assert_eq!(res.iterates.len(), 1);
    assert!(!res.converged);
    assert_eq!(res.last_xi, 0.05);
    assert!((res.final_xi - 0.1).abs() < 1e-15);
    assert!(res.gaps.gap_qo_max > opts.gap_tol_qo);
}

#[test]
fn coefficient_steps_by_increment() {
    let opts = TraOptions { xi0: 0.05, dxi: 0.05, k_max: 3, ..Default::default() };
    let res = run_tra(&load("case118"), &opts, &SolverOptions::default()).unwrap();
    assert_eq!(res.iterates.len(), 3);
    let ks: Vec<usize> = res.iterates.iter().map(|i| i.k).collect();
    assert_eq!(ks, (1..=res.iterates.len()).collect::<Vec<_>>());
    for w in res.iterates.windows(2) {
        assert!((w[1].xi - w[0].xi - opts.dxi).abs() < 1e-15);
    }
    for it in &res.iterates {
        assert!(it.penalized_objective >= it.objective);
    }
    let csv = res.trace_csv();
    assert_eq!(csv.lines().count(), res.iterates.len() + 1);
}

#[test]
fn converged_result_is_tight() {
    let opts = TraOptions { xi0: 0.25, dxi: 0.25, ..Default::default() };
    let net = native("case300");
    let res = run_tra(&net, &opts, &SolverOptions::default()).unwrap();
    assert!(res.converged, "{:?}", res.iterates);
    let gaps = socopf::line_gaps(&res.solution, &net);
    assert!(gaps.gap_po_max <= opts.gap_tol_po && gaps.gap_qo_max <= opts.gap_tol_qo);
    assert_eq!(res.gaps, gaps);
    for it in &res.iterates[..res.iterates.len() - 1] {
        assert!(it.gap_po_max > opts.gap_tol_po || it.gap_qo_max > opts.gap_tol_qo);
    }
}

#[test]
fn invalid_options_are_rejected_before_solving() {
    let opts = TraOptions { dxi: 0.0, ..Default::default() };
    assert!(matches!(run_tra(&load("case9"), &opts, &SolverOptions::default()), Err(TraError::InvalidOptions(_))));
}

#[test]
fn infeasible_case_reports_failed_solve() {
    // 500 MW against a 250 MW generator
    let net = two_bus(0.01, 0.1, 500.0, 0.0);
    let err = run_tra(&net, &TraOptions::default(), &SolverOptions::default()).unwrap_err();
    match &err {
        TraError::SolveFailed { k, iterates, .. } => {
            assert_eq!(*k, 1);
            assert!(iterates.is_empty());
        }
        other => panic!("{other:?}"),
    }
    assert!(err.status().is_some());
}

#[test]
fn zero_coefficient_matches_plain_solve() {
    let net = load("case30");
    let opts = SolverOptions::default();
    let plain = solve_case(&net, &PenaltySpec::none(), &opts).unwrap();
    let swept = penalty_sweep(&net, &[0.0, 0.3, 0.3], PenaltyTarget::ReactiveLoss, &opts).unwrap();
    let p0 = swept[0].outcome.as_ref().unwrap();
    let tol = 1e-7 * (1.0 + plain.solution.objective.abs());
    assert!((p0.objective - plain.solution.objective).abs() <= tol);
    assert_eq!(p0.penalized_objective, p0.objective);
    let a = swept[1].outcome.as_ref().unwrap();
    let b = swept[2].outcome.as_ref().unwrap();
    assert!((a.objective - b.objective).abs() <= tol);
    assert_eq!(swept.iter().map(|e| e.xi).collect::<Vec<_>>(), vec![0.0, 0.3, 0.3]);
}

#[test]
fn penalty_monotonicity() {
    let net = native("case300");
    let xis: Vec<f64> = (0..=8).map(|k| k as f64 * 0.125).collect();
    let pts = penalty_sweep(&net, &xis, PenaltyTarget::ReactiveLoss, &SolverOptions::default()).unwrap();
    let pts: Vec<_> = pts.iter().map(|e| e.outcome.as_ref().unwrap()).collect();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        assert!(
            b.total_q_loss <= a.total_q_loss + 1e-6,
            "ξ {} → {}: {} {}",
            a.xi,
            b.xi,
            a.total_q_loss,
            b.total_q_loss
        );
        assert!(b.objective >= a.objective - 1e-6 * a.objective.abs(), "ξ {} → {}", a.xi, b.xi);
    }
}

#[test]
fn penalty_grid_validation_and_csv() {
    let net = load("case9");
    let opts = SolverOptions::default();
    for bad in [vec![], vec![-0.1], vec![f64::NAN]] {
        assert!(matches!(penalty_sweep(&net, &bad, PenaltyTarget::ReactiveLoss, &opts), Err(TraError::InvalidGrid)));
    }
    let entries = penalty_sweep(&two_bus(0.01, 0.1, 500.0, 0.0), &[0.1], PenaltyTarget::ReactiveLoss, &opts).unwrap();
    assert!(entries[0].outcome.is_err());
    let csv = penalty_sweep_csv(&entries, 1.0);
    assert_eq!(csv, format!("{PENALTY_SWEEP_HEADER}\n0.1,{FAILED_CELL},{FAILED_CELL},{FAILED_CELL}\n"));
}

#[test]
fn load_sweep_shape_and_failed_cells() {
    let cases = vec![load("case9"), two_bus(0.01, 0.1, 200.0, 20.0)];
    let grid = [0.5, 1.0, 1.5];
    let sweep = run_load_sweep(&cases, &grid, &PenaltySpec::none(), &SolverOptions::default(), Some(2)).unwrap();
    assert_eq!(sweep.cells.len(), 6);
    assert!(sweep.cells.windows(2).all(|w| (w[0].case, w[0].load) < (w[1].case, w[1].load)));
    // 300 MW against a 250 MW generator
    assert_eq!(sweep.n_failed(), 1);
    assert!(sweep.cells[5].outcome.is_err());
    assert!(!sweep.all_failed());

    let table = sweep.table(GapMetric::Reactive, GapUnits::Pu);
    assert_eq!(table.cells.len(), 3);
    assert!(table.cells.iter().all(|r| r.len() == 2));
    assert_eq!(table.cells[2][1], None);
    let csv = table.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "load,case9,twobus");
    assert!(lines[2].starts_with("50%,"));
    assert!(lines[4].starts_with("150%,") && lines[4].ends_with(FAILED_CELL));

    let mva = sweep.table(GapMetric::Reactive, GapUnits::Mva);
    let (pu, mw) = (table.cells[0][0].unwrap(), mva.cells[0][0].unwrap());
    assert!((mw - pu * 100.0).abs() <= 1e-12 * mw.abs().max(1.0));
}

#[test]
fn load_sweep_rejects_bad_input() {
    let opts = SolverOptions::default();
    let none = PenaltySpec::none();
    assert_eq!(run_load_sweep(&[], &[1.0], &none, &opts, None).unwrap_err(), SweepError::NoCases);
    let cases = [load("case9")];
    assert_eq!(run_load_sweep(&cases, &[], &none, &opts, None).unwrap_err(), SweepError::EmptyGrid);
    assert_eq!(run_load_sweep(&cases, &[0.5, 0.0], &none, &opts, None).unwrap_err(), SweepError::BadFactor(0.0));
}

//! Adapter onto Clarabel's `min ½xᵀPx + qᵀx  s.t. Ax + s = b, s ∈ K`.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus, SupportedConeT,
};

use crate::model::{AffineExpr, ConicProgram};

use super::{ConeDual, Duals, SolverOptions, SolverResult, SolverStatus};

/// Where each program constraint landed in the stacked backend rows.
struct RowLayout {
    n_eq: usize,
    fixed: Vec<usize>,
    n_ineq: usize,
    upper: Vec<usize>,
    lower: Vec<usize>,
    cone_starts: Vec<usize>,
}

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl Triplets {
    fn push_row(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.rhs.len();
        for (c, v) in terms {
            if v != 0.0 {
                self.rows.push(r);
                self.cols.push(c);
                self.vals.push(v);
            }
        }
        self.rhs.push(rhs);
    }
}

fn scaled(e: &AffineExpr, s: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    e.terms.iter().map(move |&(i, c)| (i, s * c))
}

pub(super) fn solve_clarabel(prog: &ConicProgram, opts: &SolverOptions) -> SolverResult {
    let n = prog.n_vars;
    let start = Instant::now();

    let fixed: Vec<usize> = (0..n).filter(|&i| prog.lower[i] == prog.upper[i]).collect();
    let upper: Vec<usize> = (0..n).filter(|&i| prog.upper[i].is_finite() && prog.lower[i] != prog.upper[i]).collect();
    let lower: Vec<usize> = (0..n).filter(|&i| prog.lower[i].is_finite() && prog.lower[i] != prog.upper[i]).collect();

    let mut t = Triplets { rows: vec![], cols: vec![], vals: vec![], rhs: vec![] };
    let mut cones = Vec::new();

    for row in &prog.equalities {
        t.push_row(row.terms.iter().copied(), row.rhs);
    }
    for &i in &fixed {
        t.push_row([(i, 1.0)], prog.lower[i]);
    }
    cones.push(SupportedConeT::ZeroConeT(prog.equalities.len() + fixed.len()));

    for row in &prog.inequalities {
        t.push_row(row.terms.iter().copied(), row.rhs);
    }
    for &i in &upper {
        t.push_row([(i, 1.0)], prog.upper[i]);
    }
    for &i in &lower {
        t.push_row([(i, -1.0)], -prog.lower[i]);
    }
    cones.push(SupportedConeT::NonnegativeConeT(prog.inequalities.len() + upper.len() + lower.len()));

    // 2uv ≥ ‖w‖² ⇔ (u + v, u − v, √2·w) ∈ SOC; the slack is b − Ax, so rows carry −J.
    let mut cone_starts = Vec::with_capacity(prog.cones.len());
    for cone in &prog.cones {
        cone_starts.push(t.rhs.len());
        let (u, v) = (&cone.u, &cone.v);
        t.push_row(scaled(u, -1.0).chain(scaled(v, -1.0)), u.constant + v.constant);
        t.push_row(scaled(u, -1.0).chain(scaled(v, 1.0)), u.constant - v.constant);
        for w in &cone.w {
            t.push_row(scaled(w, -SQRT_2), SQRT_2 * w.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.dim()));
    }
    let layout =
        RowLayout { n_eq: prog.equalities.len(), fixed, n_ineq: prog.inequalities.len(), upper, lower, cone_starts };

    let m = t.rhs.len();
    let a = CscMatrix::new_from_triplets(m, n, t.rows, t.cols, t.vals);
    let diag: Vec<usize> = (0..n).filter(|&i| prog.objective.quad[i] != 0.0).collect();
    let p = CscMatrix::new_from_triplets(
        n,
        n,
        diag.clone(),
        diag.clone(),
        diag.iter().map(|&i| 2.0 * prog.objective.quad[i]).collect(),
    );

    let settings = DefaultSettingsBuilder::default()
        .max_iter(opts.max_iters)
        .tol_feas(opts.feas_tol)
        .tol_gap_rel(opts.gap_tol)
        .tol_gap_abs(opts.gap_tol)
        .verbose(opts.verbose)
        .presolve_enable(false)
        .build()
        .expect("settings built from validated options");

    let failed = |status| SolverResult {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        duals: Duals::default(),
        iterations: 0,
        solve_time: start.elapsed().as_secs_f64(),
    };

    let mut solver = match DefaultSolver::new(&p, &prog.objective.linear, &a, &t.rhs, &cones, settings) {
        Ok(s) => s,
        Err(_) => return failed(SolverStatus::NumericalError),
    };
    solver.solve();
    let sol = &solver.solution;

    let status = match sol.status {
        ClarabelStatus::Solved | ClarabelStatus::AlmostSolved => SolverStatus::Optimal,
        ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => SolverStatus::PrimalInfeasible,
        ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => SolverStatus::DualInfeasible,
        ClarabelStatus::MaxIterations | ClarabelStatus::MaxTime => SolverStatus::IterationLimit,
        _ => SolverStatus::NumericalError,
    };
    let x = sol.x.clone();
    let duals = unstack_duals(prog, &layout, &sol.z);
    let objective = prog.objective.eval(&x);
    let dual_objective = wolfe_dual(prog, &x, &duals);

    SolverResult {
        status,
        x,
        objective,
        dual_objective,
        duals,
        iterations: sol.iterations,
        solve_time: start.elapsed().as_secs_f64(),
    }
}

fn unstack_duals(prog: &ConicProgram, layout: &RowLayout, z: &[f64]) -> Duals {
    let n = prog.n_vars;
    let mut duals = Duals {
        equalities: z[..layout.n_eq].to_vec(),
        inequalities: Vec::new(),
        lower: vec![0.0; n],
        upper: vec![0.0; n],
        cones: Vec::with_capacity(prog.cones.len()),
    };
    let mut k = layout.n_eq;
    for &i in &layout.fixed {
        let y = z[k];
        duals.upper[i] = y.max(0.0);
        duals.lower[i] = (-y).max(0.0);
        k += 1;
    }
    duals.inequalities = z[k..k + layout.n_ineq].to_vec();
    k += layout.n_ineq;
    for &i in &layout.upper {
        duals.upper[i] = z[k];
        k += 1;
    }
    for &i in &layout.lower {
        duals.lower[i] = z[k];
        k += 1;
    }
    // Back from (t, d, √2·w) coordinates: z_k = Mᵀ z.
    for (cone, &s) in prog.cones.iter().zip(&layout.cone_starts) {
        let (zt, zd) = (z[s], z[s + 1]);
        duals.cones.push(ConeDual {
            u: zt + zd,
            v: zt - zd,
            w: (0..cone.w.len()).map(|j| SQRT_2 * z[s + 2 + j]).collect(),
        });
    }
    duals
}

/// `L(x, duals)` with the linear part eliminated via stationarity: constant terms minus `Σ quad·x²`.
pub(super) fn wolfe_dual(prog: &ConicProgram, x: &[f64], duals: &Duals) -> f64 {
    let mut value = prog.objective.constant;
    value -= prog.objective.quad.iter().zip(x).map(|(q, xi)| q * xi * xi).sum::<f64>();
    value -= prog.equalities.iter().zip(&duals.equalities).map(|(r, y)| y * r.rhs).sum::<f64>();
    value -= prog.inequalities.iter().zip(&duals.inequalities).map(|(r, l)| l * r.rhs).sum::<f64>();
    for i in 0..prog.n_vars {
        if duals.upper[i] != 0.0 {
            value -= duals.upper[i] * prog.upper[i];
        }
        if duals.lower[i] != 0.0 {
            value += duals.lower[i] * prog.lower[i];
        }
    }
    for (cone, z) in prog.cones.iter().zip(&duals.cones) {
        value -= z.u * cone.u.constant + z.v * cone.v.constant;
        value -= cone.w.iter().zip(&z.w).map(|(w, zw)| zw * w.constant).sum::<f64>();
    }
    value
}

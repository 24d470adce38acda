use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::model::ConicProgram;

use super::{SolverError, SolverResult};

/// Optimality residuals recomputed from program data and the returned vectors.
///
/// Primal measures are absolute (p.u. / program units). Stationarity is
/// relative to `max(1, ‖∇f‖∞)` and complementarity to `1 + |f|`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub equality: f64,
    pub inequality: f64,
    pub bounds: f64,
    /// Negative part of `2uv − ‖w‖²`, `u` and `v` over all cone blocks.
    pub cone: f64,
    /// Largest Euclidean distance from a block's `(u, v, w)` to the rotated cone.
    pub cone_distance: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    /// Sign / dual-cone violation of the multipliers.
    pub dual_infeasibility: f64,
}

impl Residuals {
    pub fn max_primal(&self) -> f64 {
        self.equality.max(self.inequality).max(self.bounds).max(self.cone_distance)
    }

    pub fn max_all(&self) -> f64 {
        self.max_primal().max(self.stationarity).max(self.complementarity).max(self.dual_infeasibility)
    }
}

fn neg(v: f64) -> f64 {
    (-v).max(0.0)
}

/// The map `(u, v, w) ↦ ((u+v)/√2, (u−v)/√2, w)` is an isometry taking the
/// rotated cone onto the standard cone `{(s, y) : ‖y‖ ≤ s}`.
fn rotated_cone_distance(u: f64, v: f64, w: &[f64]) -> f64 {
    let s = (u + v) * FRAC_1_SQRT_2;
    let d = (u - v) * FRAC_1_SQRT_2;
    let y = (d * d + w.iter().map(|wi| wi * wi).sum::<f64>()).sqrt();
    if y <= s {
        0.0
    } else if y <= -s {
        (s * s + y * y).sqrt()
    } else {
        (y - s) * FRAC_1_SQRT_2
    }
}

pub fn kkt_residuals(prog: &ConicProgram, res: &SolverResult) -> Result<Residuals, SolverError> {
    let n = prog.n_vars;
    let x = &res.x;
    let d = &res.duals;
    let mismatch = |what: &str, got: usize, want: usize| {
        Err(SolverError::DimensionMismatch(format!("{what}: {got} entries, program has {want}")))
    };
    if x.len() != n {
        return mismatch("x", x.len(), n);
    }
    if d.equalities.len() != prog.equalities.len() {
        return mismatch("equality duals", d.equalities.len(), prog.equalities.len());
    }
    if d.inequalities.len() != prog.inequalities.len() {
        return mismatch("inequality duals", d.inequalities.len(), prog.inequalities.len());
    }
    if d.lower.len() != n || d.upper.len() != n {
        return mismatch("bound duals", d.lower.len().min(d.upper.len()), n);
    }
    if d.cones.len() != prog.cones.len() {
        return mismatch("cone duals", d.cones.len(), prog.cones.len());
    }
    if let Some((c, z)) = prog.cones.iter().zip(&d.cones).find(|(c, z)| c.w.len() != z.w.len()) {
        return mismatch(&format!("cone `{}` dual", c.label), z.w.len(), c.w.len());
    }

    let mut r = Residuals::default();
    let grad = prog.objective.gradient(x);
    let mut stat = grad.clone();
    let mut comp = 0.0;

    for (row, &y) in prog.equalities.iter().zip(&d.equalities) {
        r.equality = r.equality.max((row.lhs(x) - row.rhs).abs());
        for &(i, c) in &row.terms {
            stat[i] += y * c;
        }
    }
    for (row, &lam) in prog.inequalities.iter().zip(&d.inequalities) {
        let slack = row.rhs - row.lhs(x);
        r.inequality = r.inequality.max(neg(slack));
        r.dual_infeasibility = r.dual_infeasibility.max(neg(lam));
        comp += lam * slack;
        for &(i, c) in &row.terms {
            stat[i] += lam * c;
        }
    }
    for i in 0..n {
        let (lo, up) = (prog.lower[i], prog.upper[i]);
        if lo.is_finite() {
            r.bounds = r.bounds.max(neg(x[i] - lo));
            comp += d.lower[i] * (x[i] - lo);
        }
        if up.is_finite() {
            r.bounds = r.bounds.max(neg(up - x[i]));
            comp += d.upper[i] * (up - x[i]);
        }
        r.dual_infeasibility = r.dual_infeasibility.max(neg(d.lower[i])).max(neg(d.upper[i]));
        stat[i] += d.upper[i] - d.lower[i];
    }
    for (cone, z) in prog.cones.iter().zip(&d.cones) {
        let (u, v) = (cone.u.eval(x), cone.v.eval(x));
        let w: Vec<f64> = cone.w.iter().map(|e| e.eval(x)).collect();
        let margin = 2.0 * u * v - w.iter().map(|wi| wi * wi).sum::<f64>();
        r.cone = r.cone.max(neg(margin)).max(neg(u)).max(neg(v));
        r.cone_distance = r.cone_distance.max(rotated_cone_distance(u, v, &w));

        let zw_sq: f64 = z.w.iter().map(|wi| wi * wi).sum();
        let z_margin = (2.0 * z.u.max(0.0) * z.v.max(0.0)).sqrt() - zw_sq.sqrt();
        r.dual_infeasibility = r.dual_infeasibility.max(neg(z.u)).max(neg(z.v)).max(neg(z_margin));

        comp += z.u * u + z.v * v + z.w.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        for &(i, c) in &cone.u.terms {
            stat[i] -= z.u * c;
        }
        for &(i, c) in &cone.v.terms {
            stat[i] -= z.v * c;
        }
        for (e, zw) in cone.w.iter().zip(&z.w) {
            for &(i, c) in &e.terms {
                stat[i] -= zw * c;
            }
        }
    }

    let grad_scale = grad.iter().fold(1.0_f64, |m, g| m.max(g.abs()));
    r.stationarity = stat.iter().fold(0.0_f64, |m, s| m.max(s.abs())) / grad_scale;
    r.complementarity = comp.abs() / (1.0 + prog.objective.eval(x).abs());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::rotated_cone_distance;

    #[test]
    fn cone_distance() {
        assert_eq!(rotated_cone_distance(1.0, 2.0, &[1.0]), 0.0);
        assert_eq!(rotated_cone_distance(0.0, 0.0, &[0.0, 0.0]), 0.0);
        // the origin is the nearest cone point of the polar cone
        assert!((rotated_cone_distance(-1.0, -1.0, &[0.0]) - 2f64.sqrt()).abs() < 1e-15);
        // (0, 0, 1) projects onto (√2/4, √2/4, 1/2)
        assert!((rotated_cone_distance(0.0, 0.0, &[1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((rotated_cone_distance(-0.5, 3.0, &[]) - 0.5).abs() < 1e-15);
    }
}

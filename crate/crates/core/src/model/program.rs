//! Solver-independent quadratic-objective conic program.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// `Σ coeff·x[index] + constant`
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn var(index: usize, coeff: f64) -> Self {
        Self { terms: vec![(index, coeff)], constant: 0.0 }
    }

    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        Self { terms, constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

/// A linear row `terms·x (= | ≤) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// Rotated second-order cone `2·u·v ≥ ‖w‖²`, `u, v ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatedCone {
    pub label: String,
    pub u: AffineExpr,
    pub v: AffineExpr,
    pub w: Vec<AffineExpr>,
}

impl RotatedCone {
    /// `2uv - ‖w‖²` at `x`; nonnegative (with `u, v ≥ 0`) inside the cone.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let (u, v) = (self.u.eval(x), self.v.eval(x));
        2.0 * u * v - self.w.iter().map(|w| w.eval(x).powi(2)).sum::<f64>()
    }

    pub fn dim(&self) -> usize {
        2 + self.w.len()
    }
}

/// `Σ quad[i]·x[i]² + linear·x + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub quad: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl Objective {
    pub fn zeros(n: usize) -> Self {
        Self { quad: vec![0.0; n], linear: vec![0.0; n], constant: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.quad.iter().zip(&self.linear).zip(x).map(|((q, c), xi)| q * xi * xi + c * xi).sum::<f64>() + self.constant
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.quad.iter().zip(&self.linear).zip(x).map(|((q, c), xi)| 2.0 * q * xi + c).collect()
    }

    /// Multiply every coefficient by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            quad: self.quad.iter().map(|q| q * lambda).collect(),
            linear: self.linear.iter().map(|c| c * lambda).collect(),
            constant: self.constant * lambda,
        }
    }
}

/// minimize objective(x)
/// s.t. equalities: row·x = rhs; inequalities: row·x ≤ rhs;
///      every cone block; lower ≤ x ≤ upper (entries may be infinite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub n_vars: usize,
    pub var_names: Vec<String>,
    pub objective: Objective,
    pub equalities: Vec<LinearRow>,
    pub inequalities: Vec<LinearRow>,
    pub cones: Vec<RotatedCone>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error("vector `{what}` has length {got}, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
    #[error("`{label}` references variable {index} but the program has {n_vars}")]
    BadIndex { label: String, index: usize, n_vars: usize },
    #[error("objective curvature on variable {0} is negative or not finite")]
    NonConvex(usize),
    #[error("box of variable {index} is empty: [{lower}, {upper}]")]
    EmptyBox { index: usize, lower: f64, upper: f64 },
    #[error("`{0}` carries a non-finite coefficient")]
    NonFinite(String),
}

impl ConicProgram {
    /// Check the structural invariants: lengths, indices, convexity, boxes.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.n_vars;
        for (what, got) in [
            ("objective.quad", self.objective.quad.len()),
            ("objective.linear", self.objective.linear.len()),
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
        ] {
            if got != n {
                return Err(ProgramError::Length { what, got, expected: n });
            }
        }
        if let Some(i) = self.objective.quad.iter().position(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(ProgramError::NonConvex(i));
        }
        if self.objective.linear.iter().any(|c| !c.is_finite()) || !self.objective.constant.is_finite() {
            return Err(ProgramError::NonFinite("objective".into()));
        }
        for i in 0..n {
            if self.lower[i] > self.upper[i] || self.lower[i].is_nan() || self.upper[i].is_nan() {
                return Err(ProgramError::EmptyBox { index: i, lower: self.lower[i], upper: self.upper[i] });
            }
        }
        let check_terms = |label: &str, terms: &[(usize, f64)], constant: f64| {
            for &(index, c) in terms {
                if index >= n {
                    return Err(ProgramError::BadIndex { label: label.to_string(), index, n_vars: n });
                }
                if !c.is_finite() {
                    return Err(ProgramError::NonFinite(label.to_string()));
                }
            }
            if constant.is_finite() {
                Ok(())
            } else {
                Err(ProgramError::NonFinite(label.to_string()))
            }
        };
        for row in self.equalities.iter().chain(&self.inequalities) {
            check_terms(&row.label, &row.terms, row.rhs)?;
        }
        for cone in &self.cones {
            for e in std::iter::once(&cone.u).chain(std::iter::once(&cone.v)).chain(&cone.w) {
                check_terms(&cone.label, &e.terms, e.constant)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program is plain data")
    }

    /// Line-oriented dump suitable for textual diffing between builds.
    pub fn dump_text(&self) -> String {
        let name = |i: usize| self.var_names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
        let terms =
            |t: &[(usize, f64)]| t.iter().map(|&(i, c)| format!("{c:+e}*{}", name(i))).collect::<Vec<_>>().join(" ");
        let affine = |e: &AffineExpr| format!("{} {:+e}", terms(&e.terms), e.constant);

        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.n_vars);
        let _ = writeln!(out, "objective constant {:e}", self.objective.constant);
        for i in 0..self.n_vars {
            let (q, c) = (self.objective.quad[i], self.objective.linear[i]);
            if q != 0.0 || c != 0.0 {
                let _ = writeln!(out, "objective {} quad {q:e} lin {c:e}", name(i));
            }
        }
        for i in 0..self.n_vars {
            let _ = writeln!(out, "box {} [{:e}, {:e}]", name(i), self.lower[i], self.upper[i]);
        }
        for r in &self.equalities {
            let _ = writeln!(out, "eq {}: {} = {:e}", r.label, terms(&r.terms), r.rhs);
        }
        for r in &self.inequalities {
            let _ = writeln!(out, "le {}: {} <= {:e}", r.label, terms(&r.terms), r.rhs);
        }
        for c in &self.cones {
            let w = c.w.iter().map(&affine).collect::<Vec<_>>().join(" ; ");
            let _ = writeln!(out, "rcone {}: u = {} | v = {} | w = {}", c.label, affine(&c.u), affine(&c.v), w);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ConicProgram {
        ConicProgram {
            n_vars: 2,
            var_names: vec!["a".into(), "b".into()],
            objective: Objective { quad: vec![1.0, 0.0], linear: vec![0.0, 2.0], constant: 3.0 },
            equalities: vec![LinearRow { label: "e".into(), terms: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 }],
            inequalities: vec![],
            cones: vec![RotatedCone {
                label: "c".into(),
                u: AffineExpr::var(0, 1.0),
                v: AffineExpr::new(vec![], 1.0),
                w: vec![AffineExpr::var(1, 1.0)],
            }],
            lower: vec![0.0, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, f64::INFINITY],
        }
    }

    #[test]
    fn objective_eval_and_gradient() {
        let p = tiny();
        assert_eq!(p.objective.eval(&[2.0, 1.0]), 4.0 + 2.0 + 3.0);
        assert_eq!(p.objective.gradient(&[2.0, 1.0]), vec![4.0, 2.0]);
    }

    #[test]
    fn cone_margin() {
        let p = tiny();
        assert_eq!(p.cones[0].margin(&[2.0, 1.0]), 2.0 * 2.0 * 1.0 - 1.0);
    }

    #[test]
    fn validate_catches_bad_index_and_curvature() {
        let mut p = tiny();
        assert!(p.validate().is_ok());
        p.equalities[0].terms.push((5, 1.0));
        assert!(matches!(p.validate(), Err(ProgramError::BadIndex { index: 5, .. })));
        let mut p = tiny();
        p.objective.quad[1] = -1.0;
        assert_eq!(p.validate(), Err(ProgramError::NonConvex(1)));
        let mut p = tiny();
        p.lower[0] = 2.0;
        p.upper[0] = 1.0;
        assert!(matches!(p.validate(), Err(ProgramError::EmptyBox { index: 0, .. })));
    }

    #[test]
    fn text_dump_lists_every_block() {
        let dump = tiny().dump_text();
        assert!(dump.contains("eq e: +1e0*a +1e0*b = 1e0"));
        assert!(dump.contains("rcone c:"));
        assert!(dump.contains("box a [0e0, inf]"));
    }
}

//! A small mixed-binary linear programming layer: model representation, a
//! bounded-variable simplex for the LP relaxation, depth-first branch and
//! bound, and MPS import/export.

mod branch;
mod mps;
mod simplex;

pub use branch::{milp_solve, milp_solve_from, MilpResult, MilpStatus, SolveLimits};
pub use mps::{export_mps, parse_mps};
pub use simplex::{lp_relax_solve, LpResult, LpStatus};

use thiserror::Error;

/// Feasibility tolerance for constraint rows and bounds.
pub const FEAS_TOL: f64 = 1e-7;
/// Integrality tolerance.
pub const INT_TOL: f64 = 1e-6;
/// Relative optimality gap under which branch and bound claims optimality.
pub const OPT_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("model invalid: {0}")]
    ModelInvalid(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("name collision after hashing: {0}")]
    NameTooLong(String),
    #[error("gap undefined for a zero optimum")]
    ZeroOptimum,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed MPS input: {0}")]
    MalformedMps(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integral: bool,
}

#[derive(Debug, Clone)]
pub struct RowConstraint {
    pub label: &'static str,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Linear model with bounded variables, an optional integrality flag per
/// variable, and a minimized objective.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<RowConstraint>,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, integral: bool) -> usize {
        self.vars.push(Variable { name: name.into(), lo, hi, integral });
        self.objective.push(0.0);
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, 0.0, 1.0, true)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        self.add_var(name, lo, hi, false)
    }

    pub fn set_objective_coef(&mut self, col: usize, coef: f64) {
        self.objective[col] = coef;
    }

    pub fn add_row(
        &mut self,
        label: &'static str,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.rows.push(RowConstraint { label, coeffs, sense, rhs });
    }

    /// Fix a column to `value`, moving its objective contribution into the
    /// model constant.
    pub fn fix_var(&mut self, col: usize, value: f64) {
        self.vars[col].lo = value;
        self.vars[col].hi = value;
        self.objective_constant += self.objective[col] * value;
        self.objective[col] = 0.0;
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        if self.objective.len() != self.vars.len() {
            return Err(MilpError::ModelInvalid("objective length mismatch".into()));
        }
        for (j, v) in self.vars.iter().enumerate() {
            if v.lo > v.hi {
                return Err(MilpError::ModelInvalid(format!(
                    "variable {} has lo {} > hi {}",
                    j, v.lo, v.hi
                )));
            }
            if v.lo.is_nan() || v.hi.is_nan() {
                return Err(MilpError::ModelInvalid(format!("variable {j} has NaN bound")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            for &(col, coef) in &row.coeffs {
                if col >= self.vars.len() {
                    return Err(MilpError::ModelInvalid(format!(
                        "row {r} references column {col} of {}",
                        self.vars.len()
                    )));
                }
                if !coef.is_finite() {
                    return Err(MilpError::ModelInvalid(format!("row {r} has nonfinite coefficient")));
                }
            }
            if !row.rhs.is_finite() {
                return Err(MilpError::ModelInvalid(format!("row {r} has nonfinite rhs")));
            }
        }
        Ok(())
    }

    pub fn activity(&self, row: &RowConstraint, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(c, a)| a * x[c]).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0f64;
        for row in &self.rows {
            let act = self.activity(row, x);
            let v = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, v) in self.vars.iter().enumerate() {
            worst = worst.max(v.lo - x[j]).max(x[j] - v.hi);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.objective.iter().zip(x).map(|(c, v)| c * v).sum();
        dot + self.objective_constant
    }

    /// Row counts per label, in first-appearance order.
    pub fn row_group_counts(&self) -> Vec<(&'static str, usize)> {
        let mut groups: Vec<(&'static str, usize)> = Vec::new();
        for row in &self.rows {
            match groups.iter_mut().find(|(l, _)| *l == row.label) {
                Some((_, c)) => *c += 1,
                None => groups.push((row.label, 1)),
            }
        }
        groups
    }
}

/// Percentage gap `100 (ip - lp) / ip` between an integer optimum and its
/// linear relaxation value.
pub fn lp_gap(ip_value: f64, lp_value: f64) -> Result<f64, MilpError> {
    if ip_value == 0.0 {
        return Err(MilpError::ZeroOptimum);
    }
    Ok(100.0 * (ip_value - lp_value) / ip_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_arithmetic() {
        assert_eq!(lp_gap(10.0, 8.0).unwrap(), 20.0);
        assert_eq!(lp_gap(5.0, 5.0).unwrap(), 0.0);
        assert!(matches!(lp_gap(0.0, 0.0), Err(MilpError::ZeroOptimum)));
    }

    #[test]
    fn validate_catches_bad_column() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x");
        m.add_row("r", vec![(x + 5, 1.0)], Sense::Le, 1.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn fixing_moves_objective_into_constant() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x");
        m.set_objective_coef(x, 3.0);
        m.fix_var(x, 1.0);
        assert_eq!(m.objective_constant, 3.0);
        assert_eq!(m.objective[x], 0.0);
        assert_eq!(m.vars[x].lo, 1.0);
        assert_eq!(m.vars[x].hi, 1.0);
    }
}

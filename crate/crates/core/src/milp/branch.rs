//! Branch and bound over binary variables.
//!
//! Node selection is best-bound with a preference for the most recently
//! created node among ties, which keeps the search plunging depth-first
//! until pruning kicks in. Branching picks the most fractional binary,
//! restricted to binaries that appear in equality rows when any of those is
//! fractional (in the covering models these are the structural choice
//! variables; branching elsewhere first provably thrashes). An optional
//! warm-start vector supplies the initial incumbent. No decision depends on
//! wall-clock time, so results are reproducible run to run; limits merely
//! truncate the search.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use super::simplex::{lp_solve_bounds, LpStatus};
use super::{MilpError, MilpModel, Sense, FEAS_TOL, INT_TOL, OPT_GAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Feasible,
    Infeasible,
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent objective (including the model constant); infinite when no
    /// incumbent was found.
    pub value: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub x: Vec<f64>,
    pub nodes: u64,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveLimits {
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { max_nodes: u64::MAX, time_limit: None }
    }
}

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    hint: Vec<usize>,
    /// LP value of the parent, a valid bound for this subtree.
    inherited: f64,
    seq: u64,
}

/// Solve `model` to proven optimality (all integral variables must be
/// binary) or until a limit interrupts the search.
pub fn milp_solve(model: &MilpModel, limits: &SolveLimits) -> Result<MilpResult, MilpError> {
    milp_solve_from(model, limits, None)
}

/// Like [`milp_solve`], seeded with a feasible integral starting point that
/// becomes the initial incumbent (and cutoff).
pub fn milp_solve_from(
    model: &MilpModel,
    limits: &SolveLimits,
    start: Option<&[f64]>,
) -> Result<MilpResult, MilpError> {
    model.validate()?;
    for (j, v) in model.vars.iter().enumerate() {
        if v.integral && (v.lo < -FEAS_TOL || v.hi > 1.0 + FEAS_TOL) {
            return Err(MilpError::ModelInvalid(format!(
                "integral variable {j} is not binary: bounds [{}, {}]",
                v.lo, v.hi
            )));
        }
    }
    let start_clock = Instant::now();
    let binaries: Vec<usize> =
        (0..model.vars.len()).filter(|&j| model.vars[j].integral).collect();
    // Binaries participating in equality rows branch first.
    let in_equality: BTreeSet<usize> = model
        .rows
        .iter()
        .filter(|r| r.sense == Sense::Eq)
        .flat_map(|r| r.coeffs.iter().map(|&(c, _)| c))
        .filter(|&c| model.vars[c].integral)
        .collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(x0) = start {
        if x0.len() != model.vars.len() {
            return Err(MilpError::ModelInvalid(format!(
                "warm start has {} entries for {} variables",
                x0.len(),
                model.vars.len()
            )));
        }
        let viol = model.max_violation(x0);
        if viol > 1e-6 {
            return Err(MilpError::ModelInvalid(format!(
                "warm start violates the model by {viol}"
            )));
        }
        if binaries.iter().any(|&j| (x0[j] - x0[j].round()).abs() > INT_TOL) {
            return Err(MilpError::ModelInvalid("warm start is fractional".into()));
        }
        let mut x = x0.to_vec();
        for &j in &binaries {
            x[j] = x[j].round();
        }
        incumbent = Some((model.objective_value(&x), x));
    }

    let root_lo: Vec<f64> = model.vars.iter().map(|v| v.lo).collect();
    let root_hi: Vec<f64> = model.vars.iter().map(|v| v.hi).collect();
    let mut open = vec![Node {
        lo: root_lo,
        hi: root_hi,
        hint: Vec::new(),
        inherited: f64::NEG_INFINITY,
        seq: 0,
    }];
    let mut next_seq = 1u64;
    let mut pruned_bound = f64::INFINITY;
    let mut nodes: u64 = 0;
    let mut limit_hit = false;

    let cutoff = |inc: &Option<(f64, Vec<f64>)>| {
        inc.as_ref().map(|(v, _)| v - OPT_GAP * v.abs().max(1.0))
    };

    while !open.is_empty() {
        if nodes >= limits.max_nodes
            || limits.time_limit.is_some_and(|t| start_clock.elapsed() >= t)
        {
            limit_hit = true;
            for rest in &open {
                pruned_bound = pruned_bound.min(rest.inherited);
            }
            break;
        }
        // Best bound first; among ties the most recent node (plunge).
        let mut pick = 0usize;
        for (i, node) in open.iter().enumerate() {
            let better = node.inherited < open[pick].inherited
                || (node.inherited == open[pick].inherited && node.seq > open[pick].seq);
            if better {
                pick = i;
            }
        }
        let node = open.swap_remove(pick);
        if let Some(cut) = cutoff(&incumbent) {
            if node.inherited >= cut {
                pruned_bound = pruned_bound.min(node.inherited);
                continue;
            }
        }
        nodes += 1;
        let (lp, binding) = lp_solve_bounds(model, &node.lo, &node.hi, Some(&node.hint))?;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(MilpError::NumericalFailure(
                    "relaxation unbounded inside branch and bound".into(),
                ))
            }
            LpStatus::Optimal => {}
        }
        if let Some(cut) = cutoff(&incumbent) {
            if lp.value >= cut {
                pruned_bound = pruned_bound.min(lp.value);
                continue;
            }
        }

        // Most fractional binary, preferring the equality-row class.
        let mut branch: Option<(bool, usize, f64)> = None;
        for &j in &binaries {
            let v = lp.x[j];
            if (v - v.round()).abs() > INT_TOL {
                let preferred = in_equality.contains(&j);
                let score = (v - 0.5).abs();
                let better = match branch {
                    None => true,
                    Some((bp, _, bs)) => {
                        (preferred && !bp) || (preferred == bp && score < bs)
                    }
                };
                if better {
                    branch = Some((preferred, j, score));
                }
            }
        }
        match branch {
            None => {
                let mut x = lp.x.clone();
                for &j in &binaries {
                    x[j] = x[j].round();
                }
                if incumbent.as_ref().map_or(true, |(inc, _)| lp.value < *inc) {
                    incumbent = Some((lp.value, x));
                }
            }
            Some((_, j, _)) => {
                let frac = lp.x[j];
                let prefer_one = frac > 0.5;
                let mut zero_hi = node.hi.clone();
                zero_hi[j] = 0.0;
                let zero = Node {
                    lo: node.lo.clone(),
                    hi: zero_hi,
                    hint: binding.clone(),
                    inherited: lp.value,
                    seq: 0,
                };
                let mut one_lo = node.lo;
                one_lo[j] = 1.0;
                let one = Node {
                    lo: one_lo,
                    hi: node.hi,
                    hint: binding,
                    inherited: lp.value,
                    seq: 0,
                };
                // Higher seq wins ties, so the preferred child goes last.
                let (first, mut second) = if prefer_one { (zero, one) } else { (one, zero) };
                let mut first = first;
                first.seq = next_seq;
                next_seq += 1;
                second.seq = next_seq;
                next_seq += 1;
                open.push(first);
                open.push(second);
            }
        }
    }

    let wall = start_clock.elapsed();
    let result = match incumbent {
        None => {
            if limit_hit {
                MilpResult {
                    status: MilpStatus::LimitReached,
                    value: f64::INFINITY,
                    bound: pruned_bound,
                    x: Vec::new(),
                    nodes,
                    wall,
                }
            } else {
                MilpResult {
                    status: MilpStatus::Infeasible,
                    value: f64::INFINITY,
                    bound: f64::INFINITY,
                    x: Vec::new(),
                    nodes,
                    wall,
                }
            }
        }
        Some((value, x)) => {
            let status = if limit_hit { MilpStatus::Feasible } else { MilpStatus::Optimal };
            let bound = if limit_hit { pruned_bound.min(value) } else { value.min(pruned_bound) };
            MilpResult { status, value, bound, x, nodes, wall }
        }
    };
    debug_assert!(result.bound <= result.value + FEAS_TOL * result.value.abs().max(1.0));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{lp_relax_solve, Sense};

    #[test]
    fn integral_relaxation_takes_one_node() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x");
        m.set_objective_coef(x, 1.0);
        m.add_row("r", vec![(x, 1.0)], Sense::Ge, 1.0);
        let res = milp_solve(&m, &SolveLimits::default()).unwrap();
        assert_eq!(res.status, MilpStatus::Optimal);
        assert_eq!(res.nodes, 1);
        assert!((res.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_toy_model() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x");
        m.add_row("a", vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_row("b", vec![(x, 1.0)], Sense::Le, 0.0);
        let res = milp_solve(&m, &SolveLimits::default()).unwrap();
        assert_eq!(res.status, MilpStatus::Infeasible);
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c st 2a + 3b + c <= 3  ==  min of the negation.
        let mut m = MilpModel::new("t");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let c = m.add_binary("c");
        m.set_objective_coef(a, -5.0);
        m.set_objective_coef(b, -4.0);
        m.set_objective_coef(c, -3.0);
        m.add_row("cap", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 3.0);
        let res = milp_solve(&m, &SolveLimits::default()).unwrap();
        assert_eq!(res.status, MilpStatus::Optimal);
        assert!((res.value + 8.0).abs() < 1e-9, "value {}", res.value);
        assert_eq!((res.x[a], res.x[b], res.x[c]), (1.0, 0.0, 1.0));
    }

    #[test]
    fn fixed_binaries_match_relaxation() {
        let mut m = MilpModel::new("t");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let t = m.add_continuous("t", 0.0, f64::INFINITY);
        m.set_objective_coef(t, 1.0);
        m.add_row("r", vec![(t, 1.0), (a, -2.0), (b, -3.0)], Sense::Ge, 0.0);
        m.fix_var(a, 1.0);
        m.fix_var(b, 1.0);
        let milp = milp_solve(&m, &SolveLimits::default()).unwrap();
        let lp = lp_relax_solve(&m).unwrap();
        assert!((milp.value - lp.value).abs() < 1e-9);
        assert!((milp.value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn node_limit_reports_limit_status() {
        let mut m = MilpModel::new("t");
        let xs: Vec<usize> = (0..8).map(|i| m.add_binary(format!("x{i}"))).collect();
        for (i, &x) in xs.iter().enumerate() {
            m.set_objective_coef(x, -(1.0 + i as f64 * 0.1));
        }
        m.add_row("cap", xs.iter().map(|&x| (x, 2.0)).collect(), Sense::Le, 7.0);
        let res = milp_solve(&m, &SolveLimits { max_nodes: 1, time_limit: None }).unwrap();
        assert!(matches!(res.status, MilpStatus::LimitReached | MilpStatus::Feasible));
        let full = milp_solve(&m, &SolveLimits::default()).unwrap();
        assert_eq!(full.status, MilpStatus::Optimal);
        assert!((full.value + 4.8).abs() < 1e-9);
        assert!(res.bound <= full.value + 1e-9);
    }

    #[test]
    fn warm_start_is_used_and_validated() {
        let mut m = MilpModel::new("t");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.set_objective_coef(a, 1.0);
        m.set_objective_coef(b, 2.0);
        m.add_row("r", vec![(a, 1.0), (b, 1.0)], Sense::Ge, 1.0);
        let good = vec![1.0, 0.0];
        let res = milp_solve_from(&m, &SolveLimits::default(), Some(&good)).unwrap();
        assert_eq!(res.status, MilpStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-9);
        let infeasible = vec![0.0, 0.0];
        assert!(milp_solve_from(&m, &SolveLimits::default(), Some(&infeasible)).is_err());
        let fractional = vec![0.5, 0.5];
        assert!(milp_solve_from(&m, &SolveLimits::default(), Some(&fractional)).is_err());
    }

    #[test]
    fn deterministic_across_runs() {
        let mut m = MilpModel::new("t");
        let xs: Vec<usize> = (0..10).map(|i| m.add_binary(format!("x{i}"))).collect();
        for (i, &x) in xs.iter().enumerate() {
            m.set_objective_coef(x, -((i % 4) as f64 + 1.0));
        }
        m.add_row("c1", xs.iter().map(|&x| (x, 1.0)).collect(), Sense::Le, 4.0);
        m.add_row(
            "c2",
            xs.iter().enumerate().map(|(i, &x)| (x, (i % 3) as f64 + 1.0)).collect(),
            Sense::Le,
            6.0,
        );
        let a = milp_solve(&m, &SolveLimits::default()).unwrap();
        let b = milp_solve(&m, &SolveLimits::default()).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.x, b.x);
        assert_eq!(a.nodes, b.nodes);
    }
}

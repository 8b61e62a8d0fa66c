//! Bounded-variable primal simplex with two phases and lazy row activation.
//!
//! Covering formulations produce many more rows than columns, most of them
//! slack at the optimum. `lp_relax_solve` therefore works on an active subset:
//! solve, scan the full row set for violations, activate the worst offenders,
//! and repeat until the subset optimum is feasible for every row, which makes
//! it optimal for the full relaxation.

use super::{MilpError, MilpModel, Sense, FEAS_TOL};

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGEN_STEP: f64 = 1e-11;
/// Rows activated per scan round.
const ACTIVATE_PER_ROUND: usize = 256;
/// Models at or below this row count are solved without the activation loop.
const SMALL_MODEL_ROWS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of a linear relaxation solve. When `Optimal`, `x` satisfies every
/// row within the feasibility tolerance and `value` is the objective at `x`
/// (including the model constant).
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
}

/// Solve the continuous relaxation of `model` (integrality dropped).
pub fn lp_relax_solve(model: &MilpModel) -> Result<LpResult, MilpError> {
    model.validate()?;
    let lo: Vec<f64> = model.vars.iter().map(|v| v.lo).collect();
    let hi: Vec<f64> = model.vars.iter().map(|v| v.hi).collect();
    lp_solve_bounds(model, &lo, &hi, None).map(|(res, _)| res)
}

/// Relaxation solve with bound overrides and an optional starting active set.
/// Returns the result plus the rows binding at the optimum (a useful hint for
/// subsequent related solves).
pub(crate) fn lp_solve_bounds(
    model: &MilpModel,
    lo: &[f64],
    hi: &[f64],
    hint: Option<&[usize]>,
) -> Result<(LpResult, Vec<usize>), MilpError> {
    let m = model.rows.len();
    let mut active: Vec<bool> = vec![false; m];
    if m <= SMALL_MODEL_ROWS {
        active.iter_mut().for_each(|a| *a = true);
    } else {
        for (r, row) in model.rows.iter().enumerate() {
            if row.sense == Sense::Eq {
                active[r] = true;
            }
        }
        if let Some(hint) = hint {
            for &r in hint {
                if r < m {
                    active[r] = true;
                }
            }
        }
    }

    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > m + 64 {
            return Err(MilpError::NumericalFailure("row activation failed to settle".into()));
        }
        let rows: Vec<usize> = (0..m).filter(|&r| active[r]).collect();
        let sol = solve_subset(model, lo, hi, &rows)?;
        match sol.status {
            SubsetStatus::Infeasible => {
                // Infeasible on a subset of the rows: the full model is too.
                return Ok((
                    LpResult { status: LpStatus::Infeasible, value: f64::INFINITY, x: Vec::new() },
                    Vec::new(),
                ));
            }
            SubsetStatus::Unbounded => {
                if rows.len() == m {
                    return Ok((
                        LpResult { status: LpStatus::Unbounded, value: f64::NEG_INFINITY, x: Vec::new() },
                        Vec::new(),
                    ));
                }
                active.iter_mut().for_each(|a| *a = true);
                continue;
            }
            SubsetStatus::Optimal => {
                let x = sol.x;
                // Scan for violations: inactive rows get activated, a violated
                // active row means the pivoting went numerically wrong.
                let mut violated: Vec<(f64, usize)> = Vec::new();
                for (r, row) in model.rows.iter().enumerate() {
                    let act = model.activity(row, &x);
                    let scale = row.rhs.abs().max(1.0);
                    let v = match row.sense {
                        Sense::Le => act - row.rhs,
                        Sense::Ge => row.rhs - act,
                        Sense::Eq => (act - row.rhs).abs(),
                    };
                    if active[r] {
                        if v > 100.0 * FEAS_TOL * scale {
                            return Err(MilpError::NumericalFailure(format!(
                                "active row {r} violated by {v} at a claimed optimum"
                            )));
                        }
                    } else if v > FEAS_TOL * scale {
                        violated.push((v, r));
                    }
                }
                if violated.is_empty() {
                    let value = model.objective_value(&x);
                    let binding: Vec<usize> = rows
                        .iter()
                        .copied()
                        .filter(|&r| {
                            let row = &model.rows[r];
                            let act = model.activity(row, &x);
                            match row.sense {
                                Sense::Eq => true,
                                Sense::Le => row.rhs - act <= FEAS_TOL * row.rhs.abs().max(1.0),
                                Sense::Ge => act - row.rhs <= FEAS_TOL * row.rhs.abs().max(1.0),
                            }
                        })
                        .collect();
                    return Ok((LpResult { status: LpStatus::Optimal, value, x }, binding));
                }
                violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                for &(_, r) in violated.iter().take(ACTIVATE_PER_ROUND) {
                    active[r] = true;
                }
            }
        }
    }
}

enum SubsetStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

struct SubsetSolution {
    status: SubsetStatus,
    x: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ntot: usize,
    /// Row-major m x ntot coefficient matrix in the current basis.
    a: Vec<f64>,
    /// Values of the basic variables, aligned with `basis`.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.ntot + c]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lo[j],
            VState::AtUpper => self.hi[j],
            VState::Basic => unreachable!("basic variable has no bound value"),
        }
    }

    fn value_of(&self, j: usize) -> f64 {
        if self.state[j] == VState::Basic {
            let pos = self.basis.iter().position(|&b| b == j).expect("basic");
            self.xb[pos]
        } else {
            self.nonbasic_value(j)
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Solve the LP over the listed rows only. Bounds come from `lo`/`hi`
/// (integrality is not consulted).
fn solve_subset(
    model: &MilpModel,
    lo: &[f64],
    hi: &[f64],
    rows: &[usize],
) -> Result<SubsetSolution, MilpError> {
    let nstruct = model.vars.len();
    let m = rows.len();

    // Column layout: structurals, then one slack per active row, then
    // artificials as needed.
    let nslack = m;
    let mut lo_all = Vec::with_capacity(nstruct + nslack);
    let mut hi_all = Vec::with_capacity(nstruct + nslack);
    lo_all.extend_from_slice(lo);
    hi_all.extend_from_slice(hi);
    for &r in rows {
        match model.rows[r].sense {
            Sense::Le => {
                lo_all.push(0.0);
                hi_all.push(f64::INFINITY);
            }
            Sense::Ge => {
                lo_all.push(f64::NEG_INFINITY);
                hi_all.push(0.0);
            }
            Sense::Eq => {
                lo_all.push(0.0);
                hi_all.push(0.0);
            }
        }
    }

    // Start every structural at a finite bound.
    let mut state = vec![VState::AtLower; nstruct + nslack];
    for j in 0..nstruct {
        if lo_all[j].is_finite() {
            state[j] = VState::AtLower;
        } else if hi_all[j].is_finite() {
            state[j] = VState::AtUpper;
        } else {
            return Err(MilpError::Unsupported(format!(
                "free variable {} has no finite bound",
                model.vars[j].name
            )));
        }
    }

    let start_val =
        |j: usize, st: &Vec<VState>| if st[j] == VState::AtUpper { hi_all[j] } else { lo_all[j] };

    // Would-be slack values with all structurals at their starting bound.
    let mut slack_val = vec![0.0f64; m];
    for (t, &r) in rows.iter().enumerate() {
        let row = &model.rows[r];
        let act: f64 = row.coeffs.iter().map(|&(c, a)| a * start_val(c, &state)).sum();
        slack_val[t] = row.rhs - act;
    }

    // Decide which rows need an artificial to make the start feasible.
    let mut artif_sign = vec![0i8; m];
    let mut nartif = 0usize;
    for t in 0..m {
        let s = nstruct + t;
        if slack_val[t] > hi_all[s] + FEAS_TOL {
            artif_sign[t] = 1;
            nartif += 1;
        } else if slack_val[t] < lo_all[s] - FEAS_TOL {
            artif_sign[t] = -1;
            nartif += 1;
        }
    }
    let ntot = nstruct + nslack + nartif;
    lo_all.extend(std::iter::repeat(0.0).take(nartif));
    hi_all.extend(std::iter::repeat(f64::INFINITY).take(nartif));
    state.extend(std::iter::repeat(VState::AtLower).take(nartif));

    let mut a = vec![0.0f64; m * ntot];
    let mut basis = vec![0usize; m];
    let mut xb = vec![0.0f64; m];
    let mut next_artif = nstruct + nslack;
    for (t, &r) in rows.iter().enumerate() {
        let row = &model.rows[r];
        for &(c, coef) in &row.coeffs {
            a[t * ntot + c] += coef;
        }
        let s = nstruct + t;
        a[t * ntot + s] = 1.0;
        if artif_sign[t] == 0 {
            basis[t] = s;
            xb[t] = slack_val[t];
            state[s] = VState::Basic;
        } else {
            // Park the slack on its violated bound and let the artificial
            // carry the residual. When the artificial enters with a negative
            // sign the whole row is negated so the starting basis column is
            // +1 (i.e. the tableau is already in basis-normal form).
            let bound = if artif_sign[t] > 0 { hi_all[s] } else { lo_all[s] };
            state[s] = if artif_sign[t] > 0 { VState::AtUpper } else { VState::AtLower };
            let col = next_artif;
            next_artif += 1;
            let sign = f64::from(artif_sign[t]);
            a[t * ntot + col] = sign;
            if sign < 0.0 {
                for j in 0..ntot {
                    a[t * ntot + j] = -a[t * ntot + j];
                }
            }
            basis[t] = col;
            xb[t] = (slack_val[t] - bound) / sign;
            state[col] = VState::Basic;
            debug_assert!(xb[t] >= -FEAS_TOL);
        }
    }

    let mut tab = Tableau { m, ntot, a, xb, basis, state, lo: lo_all, hi: hi_all };

    if nartif > 0 {
        let mut cost1 = vec![0.0f64; ntot];
        for j in nstruct + nslack..ntot {
            cost1[j] = 1.0;
        }
        match run_phase(&mut tab, &cost1)? {
            PhaseEnd::Unbounded => {
                return Err(MilpError::NumericalFailure("feasibility phase unbounded".into()))
            }
            PhaseEnd::Optimal => {}
        }
        let infeas: f64 = (nstruct + nslack..ntot).map(|j| tab.value_of(j)).sum();
        if infeas > FEAS_TOL * 10.0 {
            return Ok(SubsetSolution { status: SubsetStatus::Infeasible, x: Vec::new() });
        }
        // Pin artificials at zero for phase two.
        for j in nstruct + nslack..ntot {
            tab.lo[j] = 0.0;
            tab.hi[j] = 0.0;
        }
    }

    let mut cost2 = vec![0.0f64; ntot];
    cost2[..nstruct].copy_from_slice(&model.objective);
    let end = run_phase(&mut tab, &cost2)?;
    match end {
        PhaseEnd::Unbounded => Ok(SubsetSolution { status: SubsetStatus::Unbounded, x: Vec::new() }),
        PhaseEnd::Optimal => {
            let x: Vec<f64> = (0..nstruct).map(|j| tab.value_of(j)).collect();
            Ok(SubsetSolution { status: SubsetStatus::Optimal, x })
        }
    }
}

/// Run simplex iterations for one cost vector until optimal or unbounded.
fn run_phase(tab: &mut Tableau, cost: &[f64]) -> Result<PhaseEnd, MilpError> {
    let m = tab.m;
    let ntot = tab.ntot;

    // Reduced costs for the current basis: c - c_B^T (B^-1 A).
    let mut dj = cost.to_vec();
    for t in 0..m {
        let cb = cost[tab.basis[t]];
        if cb != 0.0 {
            for j in 0..ntot {
                dj[j] -= cb * tab.at(t, j);
            }
        }
    }

    let max_pivots = 20_000 + 60 * (m + ntot);
    let bland_after = 10 * m.max(10);
    let mut degen_streak = 0usize;
    let mut bland = false;

    for _pivot in 0..max_pivots {
        // Entering variable.
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..ntot {
            if tab.state[j] == VState::Basic || tab.lo[j] == tab.hi[j] {
                continue;
            }
            let improving = match tab.state[j] {
                VState::AtLower => -dj[j],
                VState::AtUpper => dj[j],
                VState::Basic => unreachable!(),
            };
            if improving > RC_TOL {
                if bland {
                    enter = Some((j, improving));
                    break;
                }
                match enter {
                    Some((_, best)) if best >= improving => {}
                    _ => enter = Some((j, improving)),
                }
            }
        }
        let Some((e, _)) = enter else {
            return Ok(PhaseEnd::Optimal);
        };
        let dir = if tab.state[e] == VState::AtLower { 1.0 } else { -1.0 };

        // Ratio test over the basics plus the entering variable's own range.
        let span = tab.hi[e] - tab.lo[e];
        let mut theta = if span.is_finite() { span } else { f64::INFINITY };
        let mut leave: Option<(usize, f64)> = None; // (row, effective coefficient)
        for t in 0..m {
            let g = dir * tab.at(t, e);
            let b = tab.basis[t];
            let limit = if g > PIVOT_TOL {
                if tab.lo[b].is_finite() {
                    (tab.xb[t] - tab.lo[b]) / g
                } else {
                    f64::INFINITY
                }
            } else if g < -PIVOT_TOL {
                if tab.hi[b].is_finite() {
                    (tab.xb[t] - tab.hi[b]) / g
                } else {
                    f64::INFINITY
                }
            } else {
                f64::INFINITY
            };
            let limit = limit.max(0.0);
            let better = match leave {
                None => limit < theta,
                Some((tr, _)) => {
                    limit < theta || (limit == theta && tab.basis[t] < tab.basis[tr])
                }
            };
            if better {
                theta = limit;
                leave = Some((t, g));
            }
        }

        if theta.is_infinite() {
            return Ok(PhaseEnd::Unbounded);
        }
        if theta <= DEGEN_STEP {
            degen_streak += 1;
            if degen_streak > bland_after {
                bland = true;
            }
        } else {
            degen_streak = 0;
            bland = false;
        }

        match leave {
            None => {
                // Bound flip: the entering variable crosses to its other bound.
                for t in 0..m {
                    tab.xb[t] -= theta * dir * tab.at(t, e);
                }
                tab.state[e] = if dir > 0.0 { VState::AtUpper } else { VState::AtLower };
            }
            Some((r, g)) => {
                // Update basic values, swap basis, eliminate the pivot column.
                let enter_val = if dir > 0.0 { tab.lo[e] + theta } else { tab.hi[e] - theta };
                for t in 0..m {
                    if t != r {
                        tab.xb[t] -= theta * dir * tab.at(t, e);
                    }
                }
                let leaving = tab.basis[r];
                tab.state[leaving] = if g > 0.0 { VState::AtLower } else { VState::AtUpper };

                let pivot = tab.at(r, e);
                debug_assert!(pivot.abs() > PIVOT_TOL / 2.0);
                let inv = 1.0 / pivot;
                let (row_start, row_end) = (r * ntot, (r + 1) * ntot);
                for idx in row_start..row_end {
                    tab.a[idx] *= inv;
                }
                for t in 0..m {
                    if t == r {
                        continue;
                    }
                    let factor = tab.at(t, e);
                    if factor != 0.0 {
                        let t_start = t * ntot;
                        for j in 0..ntot {
                            tab.a[t_start + j] -= factor * tab.a[row_start + j];
                        }
                    }
                }
                let factor = dj[e];
                if factor != 0.0 {
                    for j in 0..ntot {
                        dj[j] -= factor * tab.a[row_start + j];
                    }
                }
                tab.basis[r] = e;
                tab.xb[r] = enter_val;
                tab.state[e] = VState::Basic;
            }
        }
    }
    Err(MilpError::NumericalFailure("pivot limit exceeded".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    #[test]
    fn one_variable_lower_bound() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 10.0);
        m.set_objective_coef(x, 1.0);
        m.add_row("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 1.0);
        m.add_row("a", vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_row("b", vec![(x, 1.0)], Sense::Le, 0.0);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_below() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.set_objective_coef(x, -1.0);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_upper_bounds() {
        // min x + 2y st x + y = 4, x <= 3, y <= 3 -> x=3, y=1, value 5.
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 3.0);
        let y = m.add_continuous("y", 0.0, 3.0);
        m.set_objective_coef(x, 1.0);
        m.set_objective_coef(y, 2.0);
        m.add_row("r", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 5.0).abs() < 1e-9, "value {}", res.value);
        assert!((res.x[x] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn negative_coefficients_and_ge_rows() {
        // min -x - y st x + 2y <= 4, 3x + y <= 6, bounds [0, 10].
        // Optimum at intersection: x = 8/5, y = 6/5, value -14/5.
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.set_objective_coef(x, -1.0);
        m.set_objective_coef(y, -1.0);
        m.add_row("a", vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0);
        m.add_row("b", vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value + 14.0 / 5.0).abs() < 1e-9, "value {}", res.value);
        assert!(m.max_violation(&res.x) <= FEAS_TOL);
    }

    #[test]
    fn solution_feasible_and_objective_consistent() {
        // A slightly larger random-ish LP exercised for internal consistency.
        let mut m = MilpModel::new("t");
        let cols: Vec<usize> = (0..6).map(|j| m.add_continuous(format!("x{j}"), 0.0, 2.0)).collect();
        for (j, &c) in cols.iter().enumerate() {
            m.set_objective_coef(c, (j as f64) - 2.5);
        }
        m.add_row("s", cols.iter().map(|&c| (c, 1.0)).collect(), Sense::Ge, 3.0);
        m.add_row("t", cols.iter().enumerate().map(|(j, &c)| (c, 1.0 + j as f64)).collect(), Sense::Le, 14.0);
        m.add_row("u", vec![(cols[0], 1.0), (cols[5], -1.0)], Sense::Eq, 0.5);
        let res = lp_relax_solve(&m).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!(m.max_violation(&res.x) <= FEAS_TOL);
        assert!((m.objective_value(&res.x) - res.value).abs() <= 1e-9);
    }
}

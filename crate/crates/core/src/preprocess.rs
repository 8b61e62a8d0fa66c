//! Variable-fixing preprocessing: rank caps on the covering variables and
//! per-stratum lower bounds that freeze a prefix of the stratum levels.
//!
//! Sites and strata are 0-based; ladder ranks stay 1-based as in the index.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::index::DistanceIndex;
use crate::instance::Instance;
use crate::milp::{lp_relax_solve, milp_solve, LpStatus, MilpError, MilpModel, MilpStatus, Sense, SolveLimits};
use crate::par;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("lower bound {lb} for stratum {s} exceeds its ladder maximum {max}")]
    InconsistentBound { s: usize, lb: f64, max: f64 },
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// Fixings produced by preprocessing. `z_zero`/`u_zero` hold (index, rank)
/// pairs forced to 0; `u_one` is the downward-closed prefix {2..=k_s} forced
/// to 1, contributing `objective_offset` to any telescopic objective.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FixSet {
    pub z_zero: BTreeSet<(usize, usize)>,
    pub u_zero: BTreeSet<(usize, usize)>,
    pub u_one: BTreeSet<(usize, usize)>,
    pub k_s: Vec<usize>,
    pub lb: Vec<f64>,
    pub objective_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionStats {
    pub pct_z_fixed: f64,
    pub pct_u_fixed: f64,
}

/// Ways of obtaining the per-stratum lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    /// Linear relaxation of the single-stratum center model.
    ClassicRelaxation,
    /// Exact single-stratum optimum via bisection over the stratum ladder.
    Binary,
}

/// Preprocessing selections exposed on the command line. `BinaryStar` is the
/// binary bound method combined with the relaxed z tail in the formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessMode {
    None,
    ClassicRel,
    Binary,
    BinaryStar,
}

impl PreprocessMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(PreprocessMode::None),
            "classic-rel" => Some(PreprocessMode::ClassicRel),
            "binary" => Some(PreprocessMode::Binary),
            "binary-star" => Some(PreprocessMode::BinaryStar),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PreprocessMode::None => "none",
            PreprocessMode::ClassicRel => "classic-rel",
            PreprocessMode::Binary => "binary",
            PreprocessMode::BinaryStar => "binary-star",
        }
    }
}

/// Site-covering ranks that can never be reached: with `p` centers open, the
/// allocation distance of `i` is at most the (n-p+1)-th smallest row entry.
pub fn z_fixings(inst: &Instance, idx: &DistanceIndex) -> BTreeSet<(usize, usize)> {
    let cmp = idx.cmp();
    let mut out = BTreeSet::new();
    for i in 0..inst.n() {
        for r in 2..=idx.site[i].len() {
            if cmp.lt(idx.cap[i], idx.site[i].value(r)) {
                out.insert((i, r));
            }
        }
    }
    out
}

/// Stratum-covering ranks unreachable for every member of the stratum.
pub fn u_fixings_cap(inst: &Instance, idx: &DistanceIndex) -> BTreeSet<(usize, usize)> {
    let cmp = idx.cmp();
    let mut out = BTreeSet::new();
    for s in 0..inst.num_strata() {
        for k in 2..=idx.stratum[s].len() {
            let v = idx.stratum[s].value(k);
            if inst.strata.members(s).iter().all(|&i| cmp.lt(idx.cap[i], v)) {
                out.insert((s, k));
            }
        }
    }
    out
}

/// The classic single-max center model restricted to a demand set, with all
/// sites as candidates. Used for the relaxation bound and reused by tests.
pub fn classic_pcp_model(inst: &Instance, demand: &[usize]) -> MilpModel {
    let n = inst.n();
    let mut m = MilpModel::new("PCP");
    let y: Vec<usize> = (0..n).map(|i| m.add_binary(format!("y_{}", i + 1))).collect();
    let theta = m.add_continuous("th", 0.0, f64::INFINITY);
    m.set_objective_coef(theta, 1.0);
    let x: Vec<Vec<usize>> = demand
        .iter()
        .map(|&j| (0..n).map(|i| m.add_binary(format!("x_{}_{}", i + 1, j + 1))).collect())
        .collect();
    m.add_row("open", y.iter().map(|&c| (c, 1.0)).collect(), Sense::Eq, inst.p as f64);
    for (dj, &_j) in demand.iter().enumerate() {
        m.add_row("assign", (0..n).map(|i| (x[dj][i], 1.0)).collect(), Sense::Eq, 1.0);
    }
    for (dj, &_j) in demand.iter().enumerate() {
        for i in 0..n {
            m.add_row("closure", vec![(x[dj][i], 1.0), (y[i], -1.0)], Sense::Le, 0.0);
        }
    }
    for (dj, &j) in demand.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = (0..n)
            .filter(|&i| i != j)
            .map(|i| (x[dj][i], inst.dm.dist(i, j)))
            .collect();
        coeffs.push((theta, -1.0));
        m.add_row("max", coeffs, Sense::Le, 0.0);
    }
    m
}

/// Lower bound for one stratum from the linear relaxation of the classic
/// center model over its members.
pub fn stratum_lb_lp(inst: &Instance, s: usize) -> Result<f64, PreprocessError> {
    let model = classic_pcp_model(inst, inst.strata.members(s));
    let res = lp_relax_solve(&model)?;
    debug_assert_eq!(res.status, LpStatus::Optimal);
    Ok(res.value.max(0.0))
}

/// Exact single-stratum optimum: bisect the stratum ladder, deciding each
/// radius by a cardinality-capped covering feasibility model.
pub fn stratum_lb_binary(
    inst: &Instance,
    idx: &DistanceIndex,
    s: usize,
) -> Result<f64, PreprocessError> {
    let lad = &idx.stratum[s];
    let mut lo = 1usize;
    let mut hi = lad.len();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if covers_within(inst, idx, s, lad.value(mid))? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lad.value(lo))
}

fn covers_within(
    inst: &Instance,
    idx: &DistanceIndex,
    s: usize,
    radius: f64,
) -> Result<bool, PreprocessError> {
    let cmp = idx.cmp();
    let n = inst.n();
    let mut m = MilpModel::new("COVER");
    let y: Vec<usize> = (0..n).map(|i| m.add_binary(format!("y_{}", i + 1))).collect();
    for &j in inst.strata.members(s) {
        let coeffs: Vec<(usize, f64)> = (0..n)
            .filter(|&i| cmp.le(inst.dm.dist(i, j), radius))
            .map(|i| (y[i], 1.0))
            .collect();
        m.add_row("cover", coeffs, Sense::Ge, 1.0);
    }
    m.add_row("card", y.iter().map(|&c| (c, 1.0)).collect(), Sense::Le, inst.p as f64);
    let res = milp_solve(&m, &SolveLimits::default())?;
    Ok(res.status == MilpStatus::Optimal)
}

/// Per-stratum bounds for the whole instance (parallel when enabled).
pub fn stratum_lbs(
    inst: &Instance,
    idx: &DistanceIndex,
    method: BoundMethod,
) -> Result<Vec<f64>, PreprocessError> {
    let results = par::map_collect(inst.num_strata(), |s| match method {
        BoundMethod::ClassicRelaxation => stratum_lb_lp(inst, s),
        BoundMethod::Binary => stratum_lb_binary(inst, idx, s),
    });
    results.into_iter().collect()
}

/// Sequential twin of [`stratum_lbs`], kept for benchmarking comparisons.
pub fn stratum_lbs_seq(
    inst: &Instance,
    idx: &DistanceIndex,
    method: BoundMethod,
) -> Result<Vec<f64>, PreprocessError> {
    (0..inst.num_strata())
        .map(|s| match method {
            BoundMethod::ClassicRelaxation => stratum_lb_lp(inst, s),
            BoundMethod::Binary => stratum_lb_binary(inst, idx, s),
        })
        .collect()
}

/// Assemble the full fixing set from per-stratum lower bounds, merging in the
/// rank-cap fixings. `k_s` is the largest rank whose value stays at or below
/// the bound; ranks `2..=k_s` are frozen to 1.
pub fn lb_fixings(
    inst: &Instance,
    idx: &DistanceIndex,
    lbs: &[f64],
) -> Result<FixSet, PreprocessError> {
    assert_eq!(lbs.len(), inst.num_strata());
    let cmp = idx.cmp();
    let mut fix = FixSet {
        z_zero: z_fixings(inst, idx),
        u_zero: u_fixings_cap(inst, idx),
        ..Default::default()
    };
    let mut offset = 0.0;
    for (s, &lb) in lbs.iter().enumerate() {
        let lad = &idx.stratum[s];
        let max = lad.value(lad.len());
        if lb > max && !cmp.le(lb, max) {
            return Err(PreprocessError::InconsistentBound { s, lb, max });
        }
        let mut k_s = 1usize;
        for k in 2..=lad.len() {
            if cmp.le(lad.value(k), lb) {
                k_s = k;
            } else {
                break;
            }
        }
        for k in 2..=k_s {
            fix.u_one.insert((s, k));
        }
        offset += inst.strata.weight(s) * lad.value(k_s);
        fix.k_s.push(k_s);
        fix.lb.push(lb);
    }
    fix.objective_offset = offset;
    debug_assert!(fix.u_one.is_disjoint(&fix.u_zero));
    Ok(fix)
}

/// Compute the fixing set for a CLI preprocessing mode (`None` yields no
/// fixings at all).
pub fn compute_fixset(
    inst: &Instance,
    idx: &DistanceIndex,
    mode: PreprocessMode,
) -> Result<Option<FixSet>, PreprocessError> {
    let method = match mode {
        PreprocessMode::None => return Ok(None),
        PreprocessMode::ClassicRel => BoundMethod::ClassicRelaxation,
        PreprocessMode::Binary | PreprocessMode::BinaryStar => BoundMethod::Binary,
    };
    let lbs = stratum_lbs(inst, idx, method)?;
    lb_fixings(inst, idx, &lbs).map(Some)
}

/// Fixed-variable percentages relative to the unreduced covering counts.
pub fn reduction_stats(idx: &DistanceIndex, fix: &FixSet) -> ReductionStats {
    let z_total: usize = idx.site.iter().map(|l| l.len() - 1).sum();
    let u_total: usize = idx.stratum.iter().map(|l| l.len() - 1).sum();
    let u_fixed = fix.u_zero.len() + fix.u_one.len();
    ReductionStats {
        pct_z_fixed: if z_total == 0 { 0.0 } else { 100.0 * fix.z_zero.len() as f64 / z_total as f64 },
        pct_u_fixed: if u_total == 0 { 0.0 } else { 100.0 * u_fixed as f64 / u_total as f64 },
    }
}

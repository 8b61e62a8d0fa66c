//! Solver-independent ground truth: direct objective evaluation, exhaustive
//! enumeration over center sets, and a combinatorial branch and bound.
//!
//! All engines break ties toward the lexicographically smallest center set,
//! and the parallel and sequential paths traverse identical search trees, so
//! results (including node counts) are reproducible.

use serde::Serialize;
use thiserror::Error;

use crate::instance::Instance;
use crate::par;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("center set has {got} sites, expected {expected}")]
    BadCardinality { got: usize, expected: usize },
    #[error("enumeration of C({n},{p}) center sets exceeds the cap of {cap}")]
    TooLarge { n: usize, p: usize, cap: u128 },
}

/// Default cap on exhaustive enumeration.
pub const ENUM_CAP: u128 = 2_000_000;

/// A set of exactly `p` center sites (0-based, sorted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CenterSet {
    sites: Vec<usize>,
}

impl CenterSet {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        CenterSet { sites }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Proof {
    Exhaustive,
    BranchBound,
    Milp { spec: String },
}

/// An evaluated (or proven optimal) center set with its per-stratum largest
/// allocation distances and weighted objective.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub centers: CenterSet,
    pub per_stratum_max: Vec<f64>,
    pub objective: f64,
    pub proof: Proof,
}

/// Evaluate a center set: for each stratum the largest allocation distance of
/// its members, then the weighted sum.
pub fn evaluate_centers(inst: &Instance, centers: &CenterSet) -> Result<Solution, ExactError> {
    if centers.len() != inst.p {
        return Err(ExactError::BadCardinality { got: centers.len(), expected: inst.p });
    }
    let alloc = allocation_distances(inst, centers.sites());
    let (per_stratum_max, objective) = stratum_objective(inst, &alloc);
    Ok(Solution { centers: centers.clone(), per_stratum_max, objective, proof: Proof::Exhaustive })
}

fn allocation_distances(inst: &Instance, centers: &[usize]) -> Vec<f64> {
    let n = inst.n();
    let mut alloc = vec![f64::INFINITY; n];
    for &c in centers {
        let row = inst.dm.row(c);
        for j in 0..n {
            if row[j] < alloc[j] {
                alloc[j] = row[j];
            }
        }
    }
    alloc
}

fn stratum_objective(inst: &Instance, alloc: &[f64]) -> (Vec<f64>, f64) {
    let mut maxima = Vec::with_capacity(inst.num_strata());
    let mut objective = 0.0;
    for s in 0..inst.num_strata() {
        let mut worst = 0.0f64;
        for &j in inst.strata.members(s) {
            if alloc[j] > worst {
                worst = alloc[j];
            }
        }
        maxima.push(worst);
        objective += inst.strata.weight(s) * worst;
    }
    (maxima, objective)
}

pub fn binomial(n: usize, p: usize) -> u128 {
    if p > n {
        return 0;
    }
    let p = p.min(n - p);
    let mut acc: u128 = 1;
    for i in 0..p {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Minimize `eval` over all p-subsets of `0..n`, tie-breaking toward the
/// lexicographically smallest subset. The outer loop over the first chosen
/// site is the parallel axis.
pub(crate) fn min_over_center_sets<F>(
    n: usize,
    p: usize,
    cap: u128,
    eval: F,
) -> Result<(f64, Vec<usize>), ExactError>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    let count = binomial(n, p);
    if count > cap {
        return Err(ExactError::TooLarge { n, p, cap });
    }
    let cmp = |a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)| {
        a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
    };
    let best = par::min_by_over(
        n - p + 1,
        |first| {
            let mut current = Vec::with_capacity(p);
            current.push(first);
            let mut best: Option<(f64, Vec<usize>)> = None;
            enumerate_rest(n, p, first + 1, &mut current, &mut best, &eval);
            best
        },
        cmp,
    );
    Ok(best.expect("at least one subset"))
}

/// Sequential twin of [`min_over_center_sets`]; identical results.
pub(crate) fn min_over_center_sets_seq<F>(
    n: usize,
    p: usize,
    cap: u128,
    eval: F,
) -> Result<(f64, Vec<usize>), ExactError>
where
    F: Fn(&[usize]) -> f64,
{
    let count = binomial(n, p);
    if count > cap {
        return Err(ExactError::TooLarge { n, p, cap });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for first in 0..=(n - p) {
        let mut current = vec![first];
        let mut local: Option<(f64, Vec<usize>)> = None;
        enumerate_rest(n, p, first + 1, &mut current, &mut local, &eval);
        if let Some(cand) = local {
            let better = match &best {
                None => true,
                Some(b) => cand.0.total_cmp(&b.0).then_with(|| cand.1.cmp(&b.1)).is_lt(),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    Ok(best.expect("at least one subset"))
}

fn enumerate_rest<F>(
    n: usize,
    p: usize,
    from: usize,
    current: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
    eval: &F,
) where
    F: Fn(&[usize]) -> f64,
{
    if current.len() == p {
        let v = eval(current);
        let better = match best {
            None => true,
            Some((bv, _)) => v < *bv,
        };
        if better {
            *best = Some((v, current.clone()));
        }
        return;
    }
    let need = p - current.len();
    for next in from..=(n - need) {
        current.push(next);
        enumerate_rest(n, p, next + 1, current, best, eval);
        current.pop();
    }
}

/// Global optimum by exhaustive enumeration (within the default cap).
pub fn brute_force(inst: &Instance) -> Result<Solution, ExactError> {
    brute_force_capped(inst, ENUM_CAP)
}

pub fn brute_force_capped(inst: &Instance, cap: u128) -> Result<Solution, ExactError> {
    let (objective, sites) = min_over_center_sets(inst.n(), inst.p, cap, |set| {
        let alloc = allocation_distances(inst, set);
        stratum_objective(inst, &alloc).1
    })?;
    let centers = CenterSet::new(sites);
    let alloc = allocation_distances(inst, centers.sites());
    let (per_stratum_max, obj2) = stratum_objective(inst, &alloc);
    debug_assert_eq!(objective, obj2);
    Ok(Solution { centers, per_stratum_max, objective, proof: Proof::Exhaustive })
}

/// Sequential exhaustive search, useful for benchmarking against the
/// default (possibly parallel) path. Produces identical results.
pub fn brute_force_seq(inst: &Instance) -> Result<Solution, ExactError> {
    let (objective, sites) = min_over_center_sets_seq(inst.n(), inst.p, ENUM_CAP, |set| {
        let alloc = allocation_distances(inst, set);
        stratum_objective(inst, &alloc).1
    })?;
    let centers = CenterSet::new(sites);
    let alloc = allocation_distances(inst, centers.sites());
    let (per_stratum_max, _) = stratum_objective(inst, &alloc);
    Ok(Solution { centers, per_stratum_max, objective, proof: Proof::Exhaustive })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BnbStats {
    pub nodes: u64,
}

/// Combinatorial branch and bound over center subsets.
///
/// `lbs` optionally supplies a valid per-stratum lower bound on the largest
/// allocation distance (for instance the single-stratum optimum), which
/// strengthens pruning without affecting the result.
pub fn branch_and_bound(inst: &Instance, lbs: Option<&[f64]>) -> Solution {
    branch_and_bound_with_stats(inst, lbs).0
}

pub fn branch_and_bound_with_stats(inst: &Instance, lbs: Option<&[f64]>) -> (Solution, BnbStats) {
    let n = inst.n();
    let p = inst.p;
    let zeros = vec![0.0; inst.num_strata()];
    let lbs = lbs.unwrap_or(&zeros);

    // Suffix minima: the closest any site j can get to a center chosen from
    // the candidate suffix starting at t.
    let mut minsuf = vec![f64::INFINITY; (n + 1) * n];
    for t in (0..n).rev() {
        for j in 0..n {
            let d = inst.dm.dist(t, j);
            minsuf[t * n + j] = d.min(minsuf[(t + 1) * n + j]);
        }
    }

    let greedy = greedy_centers(inst);
    let greedy_eval = {
        let alloc = allocation_distances(inst, &greedy);
        stratum_objective(inst, &alloc).1
    };
    let init = (greedy_eval, greedy);

    // First subtree sequentially to sharpen the shared cutoff, remaining
    // subtrees independently (parallel when enabled) against that fixed
    // cutoff; subtree results merge under the strict total order.
    let ctx = BnbCtx { inst, lbs, minsuf: &minsuf };
    let mut nodes0 = 0u64;
    let first = explore_subtree(&ctx, 0, init.clone(), &mut nodes0);
    let shared = pick_better(init, first.clone());

    let results: Vec<((f64, Vec<usize>), u64)> = par::map_collect(n - p, |offset| {
        let root = offset + 1;
        let mut nodes = 0u64;
        let sub = explore_subtree(&ctx, root, shared.clone(), &mut nodes);
        (sub, nodes)
    });

    let mut best = first;
    let mut nodes = nodes0;
    for (cand, nd) in results {
        nodes += nd;
        best = pick_better(best, cand);
    }

    let centers = CenterSet::new(best.1);
    let alloc = allocation_distances(inst, centers.sites());
    let (per_stratum_max, objective) = stratum_objective(inst, &alloc);
    debug_assert_eq!(objective, best.0);
    (
        Solution { centers, per_stratum_max, objective, proof: Proof::BranchBound },
        BnbStats { nodes },
    )
}

fn pick_better(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    if b.0.total_cmp(&a.0).then_with(|| b.1.cmp(&a.1)).is_lt() {
        b
    } else {
        a
    }
}

struct BnbCtx<'a> {
    inst: &'a Instance,
    lbs: &'a [f64],
    minsuf: &'a [f64],
}

/// Greedy construction: repeatedly add the site that minimizes the objective
/// of the partial set. Deterministic; used as a starting incumbent.
pub fn greedy_centers(inst: &Instance) -> Vec<usize> {
    let n = inst.n();
    let mut chosen: Vec<usize> = Vec::with_capacity(inst.p);
    let mut alloc = vec![f64::INFINITY; n];
    for _ in 0..inst.p {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if chosen.contains(&cand) {
                continue;
            }
            let mut obj = 0.0;
            for s in 0..inst.num_strata() {
                let mut worst = 0.0f64;
                for &j in inst.strata.members(s) {
                    let a = alloc[j].min(inst.dm.dist(cand, j));
                    if a > worst {
                        worst = a;
                    }
                }
                obj += inst.strata.weight(s) * worst;
            }
            if best.map_or(true, |(b, _)| obj < b) {
                best = Some((obj, cand));
            }
        }
        let (_, site) = best.expect("candidate exists");
        chosen.push(site);
        for j in 0..n {
            alloc[j] = alloc[j].min(inst.dm.dist(site, j));
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Depth-first search over subsets whose smallest site is `root`, starting
/// from incumbent `inc`. Pruning is strict (bound must exceed the incumbent)
/// so a lexicographically smallest optimum is never discarded.
fn explore_subtree(
    ctx: &BnbCtx,
    root: usize,
    inc: (f64, Vec<usize>),
    nodes: &mut u64,
) -> (f64, Vec<usize>) {
    let inst = ctx.inst;
    let n = inst.n();
    let mut alloc = vec![f64::INFINITY; n];
    let mut chosen = Vec::with_capacity(inst.p);
    let mut best = inc;
    push_center(inst, &mut alloc, root);
    chosen.push(root);
    *nodes += 1;
    dfs(ctx, root + 1, &mut chosen, &mut alloc, &mut best, nodes);
    best
}

fn push_center(inst: &Instance, alloc: &mut [f64], site: usize) {
    let row = inst.dm.row(site);
    for (a, &d) in alloc.iter_mut().zip(row) {
        if d < *a {
            *a = d;
        }
    }
}

fn dfs(
    ctx: &BnbCtx,
    from: usize,
    chosen: &mut Vec<usize>,
    alloc: &mut Vec<f64>,
    best: &mut (f64, Vec<usize>),
    nodes: &mut u64,
) {
    let inst = ctx.inst;
    let n = inst.n();
    let p = inst.p;
    if chosen.len() == p {
        let (_, obj) = stratum_objective_from(inst, alloc);
        if obj.total_cmp(&best.0).then_with(|| chosen[..].cmp(&best.1)).is_lt() {
            *best = (obj, chosen.clone());
        }
        return;
    }

    // Stratum-wise bound: every site may still use its closest remaining
    // candidate, and each stratum is at least its supplied lower bound.
    let suffix = &ctx.minsuf[from * n..(from + 1) * n];
    let mut bound = 0.0;
    for s in 0..inst.num_strata() {
        let mut worst = 0.0f64;
        for &j in inst.strata.members(s) {
            let a = alloc[j].min(suffix[j]);
            if a > worst {
                worst = a;
            }
        }
        bound += inst.strata.weight(s) * worst.max(ctx.lbs[s]);
    }
    if bound > best.0 {
        return;
    }

    let need = p - chosen.len();
    for next in from..=(n - need) {
        let saved = alloc.clone();
        push_center(inst, alloc, next);
        chosen.push(next);
        *nodes += 1;
        dfs(ctx, next + 1, chosen, alloc, best, nodes);
        chosen.pop();
        *alloc = saved;
    }
}

fn stratum_objective_from(inst: &Instance, alloc: &[f64]) -> (Vec<f64>, f64) {
    stratum_objective(inst, alloc)
}

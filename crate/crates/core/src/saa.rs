//! The probabilistic variant: each site independently has demand with
//! probability `q_i`, and `p` centers must minimize the expected maximum
//! allocation distance. Scenario sampling turns it into weighted-strata
//! instances, which the deterministic machinery solves; the best exactly
//! evaluated center set is kept across iterations.

use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, CenterSet, ExactError, Proof, Solution};
use crate::formulations::{build_formulation, extract_centers, incumbent_vector, FormulationError, FormulationSpec};
use crate::index::DistanceIndex;
use crate::instance::{sample::sample_strata_from_q, DistanceMatrix, Instance, InstanceError, StrataSet};
use crate::milp::{milp_solve_from, MilpError, SolveLimits};
use crate::preprocess::{compute_fixset, PreprocessError, PreprocessMode};

#[derive(Debug, Error)]
pub enum SaaError {
    #[error("scenario sampling failed: {0}")]
    SamplingFailed(#[from] InstanceError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("probability vector has {got} entries for {expected} sites")]
    BadProbabilities { got: usize, expected: usize },
}

/// Problem data for the probabilistic variant.
#[derive(Debug, Clone)]
pub struct PpcpInstance {
    pub dm: DistanceMatrix,
    pub p: usize,
    pub q: Vec<f64>,
}

impl PpcpInstance {
    pub fn new(dm: DistanceMatrix, p: usize, q: Vec<f64>) -> Result<Self, SaaError> {
        if q.len() != dm.n() {
            return Err(SaaError::BadProbabilities { got: q.len(), expected: dm.n() });
        }
        assert!(q.iter().all(|&v| (0.0..=1.0).contains(&v)), "probabilities in [0,1]");
        assert!(p >= 2 && p <= dm.n(), "p in [2, n]");
        Ok(PpcpInstance { dm, p, q })
    }

    pub fn n(&self) -> usize {
        self.dm.n()
    }
}

/// Draw `m` demand scenarios as strata with weight `1/m` each. Scenarios with
/// no demand are redrawn (they contribute nothing to the expectation).
pub fn sample_scenarios(q: &[f64], m: usize, seed: u64) -> Result<StrataSet, SaaError> {
    Ok(sample_strata_from_q(q, m, seed)?)
}

/// Exact expected maximum allocation distance of a center set.
///
/// With `a_j` the allocation distance of site `j` and sites visited in
/// decreasing `a_j` (ties by site id), the maximum equals `a_j` exactly when
/// `j` is the first site with demand, hence
/// `E = sum_j a_(j) q_(j) prod_{k<j} (1 - q_(k))`.
pub fn expected_max_objective(ppcp: &PpcpInstance, centers: &CenterSet) -> Result<f64, SaaError> {
    if centers.len() != ppcp.p {
        return Err(SaaError::Exact(ExactError::BadCardinality {
            got: centers.len(),
            expected: ppcp.p,
        }));
    }
    let n = ppcp.n();
    let mut alloc = vec![f64::INFINITY; n];
    for &c in centers.sites() {
        let row = ppcp.dm.row(c);
        for j in 0..n {
            if row[j] < alloc[j] {
                alloc[j] = row[j];
            }
        }
    }
    Ok(expected_max_from_alloc(&alloc, &ppcp.q))
}

fn expected_max_from_alloc(alloc: &[f64], q: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&a, &b| alloc[b].total_cmp(&alloc[a]).then(a.cmp(&b)));
    let mut expectation = 0.0;
    let mut none_before = 1.0;
    for &j in &order {
        expectation += alloc[j] * q[j] * none_before;
        none_before *= 1.0 - q[j];
        if none_before == 0.0 {
            break;
        }
    }
    expectation
}

/// Exact optimum by enumerating all center sets (within the cap), minimizing
/// the expected maximum; ties go to the lexicographically smallest set.
pub fn exact_ppcp(ppcp: &PpcpInstance) -> Result<Solution, SaaError> {
    exact_ppcp_capped(ppcp, exact::ENUM_CAP)
}

pub fn exact_ppcp_capped(ppcp: &PpcpInstance, cap: u128) -> Result<Solution, SaaError> {
    let n = ppcp.n();
    let q = &ppcp.q;
    let dm = &ppcp.dm;
    let (objective, sites) = exact::min_over_center_sets(n, ppcp.p, cap, |set| {
        let mut alloc = vec![f64::INFINITY; n];
        for &c in set {
            let row = dm.row(c);
            for j in 0..n {
                if row[j] < alloc[j] {
                    alloc[j] = row[j];
                }
            }
        }
        expected_max_from_alloc(&alloc, q)
    })?;
    Ok(Solution {
        centers: CenterSet::new(sites),
        per_stratum_max: Vec::new(),
        objective,
        proof: Proof::Exhaustive,
    })
}

/// Sequential twin of [`exact_ppcp`], kept for benchmarking comparisons;
/// produces identical results.
pub fn exact_ppcp_seq(ppcp: &PpcpInstance) -> Result<Solution, SaaError> {
    let n = ppcp.n();
    let (objective, sites) = exact::min_over_center_sets_seq(n, ppcp.p, exact::ENUM_CAP, |set| {
        let mut alloc = vec![f64::INFINITY; n];
        for &c in set {
            let row = ppcp.dm.row(c);
            for j in 0..n {
                if row[j] < alloc[j] {
                    alloc[j] = row[j];
                }
            }
        }
        expected_max_from_alloc(&alloc, &ppcp.q)
    })?;
    Ok(Solution {
        centers: CenterSet::new(sites),
        per_stratum_max: Vec::new(),
        objective,
        proof: Proof::Exhaustive,
    })
}

/// Which engine solves the per-iteration weighted-strata problem.
#[derive(Debug, Clone)]
pub enum ScenarioSolver {
    Combinatorial,
    Milp { spec: FormulationSpec, preprocess: PreprocessMode },
}

#[derive(Debug, Clone)]
pub struct SaaParams {
    pub m: usize,
    pub max_iters: usize,
    /// Relative change of the running mean that counts as converged.
    pub tol: f64,
    /// Look-back window for the convergence check.
    pub window: usize,
    pub solver: ScenarioSolver,
    pub seed: u64,
}

impl Default for SaaParams {
    fn default() -> Self {
        SaaParams {
            m: 10,
            max_iters: 20,
            tol: 1e-3,
            window: 5,
            solver: ScenarioSolver::Combinatorial,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaaIteration {
    pub iter: usize,
    pub scenario_seed: u64,
    /// Distinct scenarios after merging duplicates.
    pub distinct_scenarios: usize,
    pub sampled_value: f64,
    pub centers: Vec<usize>,
    pub exact_value: f64,
    pub incumbent_value: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaaReport {
    pub iterations: Vec<SaaIteration>,
    pub mean_sampled: f64,
    pub stderr_sampled: f64,
    pub best_centers: Vec<usize>,
    pub best_exact: f64,
    /// Percentage spread between the exact incumbent value and the mean of
    /// the sampled optima (negative values are sampling noise).
    pub gap_pct: f64,
    pub iters_run: usize,
    pub converged: bool,
    pub seed: u64,
    pub m: usize,
    pub warnings: Vec<String>,
}

/// Run the sampling loop: draw scenarios, solve the weighted-strata problem,
/// evaluate its centers exactly, and keep the best set. Stops after
/// `max_iters` or once the running mean of sampled optima settles.
pub fn saa_run(ppcp: &PpcpInstance, params: &SaaParams) -> Result<SaaReport, SaaError> {
    assert!(params.m >= 1 && params.max_iters >= 1);
    let mut iterations = Vec::new();
    let mut sampled = Vec::new();
    let mut means = Vec::new();
    let mut best: Option<(f64, CenterSet)> = None;
    let mut converged = false;
    let mut warnings = Vec::new();

    for iter in 0..params.max_iters {
        let scenario_seed = params.seed.wrapping_add(iter as u64);
        let strata = sample_scenarios(&ppcp.q, params.m, scenario_seed)?;
        let merged = merge_duplicate_scenarios(&strata);
        let distinct = merged.count();
        let inst = Instance::new(ppcp.dm.clone(), merged, ppcp.p)
            .expect("scenario instance is valid");

        let solved = solve_scenario_instance(&inst, &params.solver);
        match solved {
            Err(e) => {
                iterations.push(SaaIteration {
                    iter,
                    scenario_seed,
                    distinct_scenarios: distinct,
                    sampled_value: f64::NAN,
                    centers: Vec::new(),
                    exact_value: f64::NAN,
                    incumbent_value: best.as_ref().map_or(f64::NAN, |(v, _)| *v),
                    error: Some(e.to_string()),
                });
                continue;
            }
            Ok((value, centers)) => {
                let exact_value = expected_max_objective(ppcp, &centers)?;
                let improved = best.as_ref().map_or(true, |(bv, bc)| {
                    exact_value
                        .total_cmp(bv)
                        .then_with(|| centers.sites().cmp(bc.sites()))
                        .is_lt()
                });
                if improved {
                    best = Some((exact_value, centers.clone()));
                }
                sampled.push(value);
                let mean = sampled.iter().sum::<f64>() / sampled.len() as f64;
                means.push(mean);
                iterations.push(SaaIteration {
                    iter,
                    scenario_seed,
                    distinct_scenarios: distinct,
                    sampled_value: value,
                    centers: centers.sites().to_vec(),
                    exact_value,
                    incumbent_value: best.as_ref().unwrap().0,
                    error: None,
                });
                if means.len() >= params.window {
                    let old = means[means.len() - params.window];
                    let delta = (mean - old).abs();
                    if delta <= params.tol * mean.abs().max(1e-12) {
                        converged = true;
                        break;
                    }
                }
            }
        }
    }

    let (best_exact, best_centers) = match best {
        Some((v, c)) => (v, c.sites().to_vec()),
        None => {
            warnings.push("no iteration produced a solution".into());
            (f64::NAN, Vec::new())
        }
    };
    let count = sampled.len().max(1) as f64;
    let mean_sampled = sampled.iter().sum::<f64>() / count;
    let var = sampled.iter().map(|v| (v - mean_sampled).powi(2)).sum::<f64>()
        / (count - 1.0).max(1.0);
    let stderr_sampled = (var / count).sqrt();
    if !sampled.is_empty() && mean_sampled - 3.0 * stderr_sampled > best_exact + 1e-9 {
        warnings.push(format!(
            "sampled mean {mean_sampled} minus three standard errors exceeds the exact incumbent {best_exact}"
        ));
    }
    let gap_pct = if best_exact != 0.0 {
        100.0 * (best_exact - mean_sampled) / best_exact
    } else {
        0.0
    };
    Ok(SaaReport {
        iters_run: iterations.len(),
        iterations,
        mean_sampled,
        stderr_sampled,
        best_centers,
        best_exact,
        gap_pct,
        converged,
        seed: params.seed,
        m: params.m,
        warnings,
    })
}

fn solve_scenario_instance(
    inst: &Instance,
    solver: &ScenarioSolver,
) -> Result<(f64, CenterSet), SaaError> {
    match solver {
        ScenarioSolver::Combinatorial => {
            let sol = exact::branch_and_bound(inst, None);
            Ok((sol.objective, sol.centers))
        }
        ScenarioSolver::Milp { spec, preprocess } => {
            let idx = DistanceIndex::build(inst);
            let mut spec = spec.clone();
            if *preprocess == PreprocessMode::BinaryStar && spec.family.has_z() {
                spec.relax_z_tail = true;
            }
            spec.fixings = compute_fixset(inst, &idx, *preprocess)?;
            let (model, varmap) = build_formulation(inst, &idx, &spec)?;
            let start =
                incumbent_vector(inst, &idx, &varmap, &model, &exact::greedy_centers(inst));
            let res = milp_solve_from(&model, &SolveLimits::default(), Some(&start))?;
            let centers = extract_centers(&varmap, &res, spec.family, inst.p)?;
            Ok((res.value, centers))
        }
    }
}

/// Merge identical scenario membership sets, summing their weights; the
/// weighted objective is unchanged and the model shrinks.
fn merge_duplicate_scenarios(strata: &StrataSet) -> StrataSet {
    let mut seen: Vec<(Vec<usize>, f64)> = Vec::new();
    for s in 0..strata.count() {
        let members = strata.members(s).to_vec();
        match seen.iter_mut().find(|(m, _)| *m == members) {
            Some((_, w)) => *w += strata.weight(s),
            None => seen.push((members, strata.weight(s))),
        }
    }
    let (members, weights): (Vec<_>, Vec<_>) = seen.into_iter().unzip();
    StrataSet::new(members, weights).expect("merged scenarios stay valid")
}

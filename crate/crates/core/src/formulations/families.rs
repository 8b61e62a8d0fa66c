//! Row and column generation for each formulation family.

use super::{labels, F5Linking, Family, FormulationSpec, VarMap};
use crate::index::DistanceIndex;
use crate::instance::{DistCmp, Instance};
use crate::milp::{MilpModel, Sense};
use crate::preprocess::FixSet;

/// Candidate sites sorted by distance to each demand site, for prefix sums
/// over strict thresholds `d(i, j) < v`.
struct Neighbors {
    order: Vec<Vec<(f64, usize)>>,
}

impl Neighbors {
    fn build(inst: &Instance) -> Self {
        let n = inst.n();
        let order = (0..n)
            .map(|j| {
                let mut row: Vec<(f64, usize)> = (0..n).map(|i| (inst.dm.dist(i, j), i)).collect();
                row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                row
            })
            .collect();
        Neighbors { order }
    }

    /// Candidates strictly closer to `j` than `threshold`.
    fn strictly_within(&self, j: usize, threshold: f64, cmp: DistCmp) -> &[(f64, usize)] {
        let row = &self.order[j];
        let end = row.partition_point(|&(d, _)| cmp.lt(d, threshold));
        &row[..end]
    }
}

pub(super) fn add_row_tracked(
    model: &mut MilpModel,
    map: &mut VarMap,
    label: &'static str,
    coeffs: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
) {
    model.add_row(label, coeffs, sense, rhs);
    match map.row_groups.iter_mut().find(|(l, _)| *l == label) {
        Some((_, c)) => *c += 1,
        None => map.row_groups.push((label, 1)),
    }
}

pub(super) fn build_base(
    inst: &Instance,
    idx: &DistanceIndex,
    spec: &FormulationSpec,
) -> (MilpModel, VarMap) {
    let mut model = MilpModel::new(format!("SPCP_{}", spec.family));
    let mut map = VarMap::default();
    let neighbors = Neighbors::build(inst);
    match spec.family {
        Family::F1 => build_f1(inst, &mut model, &mut map),
        Family::F2 => build_f2(inst, idx, &neighbors, &mut model, &mut map),
        Family::F2prime => build_f2prime(inst, idx, &neighbors, &mut model, &mut map),
        Family::F3 => build_f3(inst, idx, &neighbors, &mut model, &mut map, false),
        Family::F3mod => build_f3(inst, idx, &neighbors, &mut model, &mut map, true),
        Family::F4 => build_f4(inst, idx, &neighbors, &mut model, &mut map, false),
        Family::F4mod => build_f4(inst, idx, &neighbors, &mut model, &mut map, true),
        Family::F5 => build_f5(inst, idx, &neighbors, &mut model, &mut map, spec.f5_linking.unwrap()),
    }
    (model, map)
}

fn add_open_vars(inst: &Instance, model: &mut MilpModel) -> Vec<usize> {
    (0..inst.n()).map(|i| model.add_binary(format!("y_{}", i + 1))).collect()
}

fn add_theta_vars(inst: &Instance, model: &mut MilpModel) -> Vec<usize> {
    (0..inst.num_strata())
        .map(|s| {
            let col = model.add_continuous(format!("th_{}", s + 1), 0.0, f64::INFINITY);
            model.set_objective_coef(col, inst.strata.weight(s));
            col
        })
        .collect()
}

/// Cumulative stratum-covering variables with the telescopic objective.
fn add_u_vars(inst: &Instance, idx: &DistanceIndex, model: &mut MilpModel) -> Vec<Vec<usize>> {
    (0..inst.num_strata())
        .map(|s| {
            let lad = &idx.stratum[s];
            (2..=lad.len())
                .map(|k| {
                    let col = model.add_binary(format!("u_{}_{}", s + 1, k));
                    let gap = lad.value(k) - lad.value(k - 1);
                    model.set_objective_coef(col, inst.strata.weight(s) * gap);
                    col
                })
                .collect()
        })
        .collect()
}

/// Cumulative site-covering variables (no objective of their own).
fn add_z_vars(inst: &Instance, idx: &DistanceIndex, model: &mut MilpModel) -> Vec<Vec<usize>> {
    (0..inst.n())
        .map(|i| {
            (2..=idx.site[i].len())
                .map(|r| model.add_binary(format!("z_{}_{}", i + 1, r)))
                .collect()
        })
        .collect()
}

fn build_f1(inst: &Instance, model: &mut MilpModel, map: &mut VarMap) {
    let n = inst.n();
    let x: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).map(|j| model.add_binary(format!("x_{}_{}", i + 1, j + 1))).collect())
        .collect();
    let theta = add_theta_vars(inst, model);

    let open: Vec<(usize, f64)> = (0..n).map(|i| (x[i][i], 1.0)).collect();
    add_row_tracked(model, map, labels::CARDINALITY, open, Sense::Eq, inst.p as f64);
    for j in 0..n {
        let coeffs = (0..n).map(|i| (x[i][j], 1.0)).collect();
        add_row_tracked(model, map, labels::ASSIGNMENT, coeffs, Sense::Eq, 1.0);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                add_row_tracked(
                    model,
                    map,
                    labels::CLOSURE,
                    vec![(x[i][j], 1.0), (x[i][i], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }
    for s in 0..inst.num_strata() {
        for &j in inst.strata.members(s) {
            let mut coeffs: Vec<(usize, f64)> = (0..n)
                .filter(|&i| i != j)
                .map(|i| (x[i][j], inst.dm.dist(i, j)))
                .collect();
            coeffs.push((theta[s], -1.0));
            add_row_tracked(model, map, labels::STRATUM_MAX, coeffs, Sense::Le, 0.0);
        }
    }
    map.x = Some(x);
    map.theta = Some(theta);
}

fn build_f2(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
) {
    let cmp = idx.cmp();
    let g = idx.global.len();
    let y = add_open_vars(inst, model);
    let ubar: Vec<Vec<usize>> = (0..inst.num_strata())
        .map(|s| {
            (1..=g)
                .map(|k| {
                    let col = model.add_binary(format!("ub_{}_{}", s + 1, k));
                    model.set_objective_coef(col, inst.strata.weight(s) * idx.global.value(k));
                    col
                })
                .collect()
        })
        .collect();

    add_row_tracked(
        model,
        map,
        labels::CARDINALITY,
        y.iter().map(|&c| (c, 1.0)).collect(),
        Sense::Eq,
        inst.p as f64,
    );
    for s in 0..inst.num_strata() {
        let coeffs = ubar[s].iter().map(|&c| (c, 1.0)).collect();
        add_row_tracked(model, map, labels::LEVEL_CHOICE, coeffs, Sense::Eq, 1.0);
    }
    for s in 0..inst.num_strata() {
        for &j in inst.strata.members(s) {
            for k in 2..=g {
                let mut coeffs: Vec<(usize, f64)> =
                    (1..k).map(|kk| (ubar[s][kk - 1], 1.0)).collect();
                for &(_, i) in neighbors.strictly_within(j, idx.global.value(k), cmp) {
                    coeffs.push((y[i], -1.0));
                }
                add_row_tracked(model, map, labels::COVERAGE, coeffs, Sense::Le, 0.0);
            }
        }
    }
    map.y = Some(y);
    map.ubar = Some(ubar);
}

fn build_f2prime(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
) {
    let cmp = idx.cmp();
    let y = add_open_vars(inst, model);
    let utilde: Vec<Vec<usize>> = (0..inst.num_strata())
        .map(|s| {
            let lad = &idx.stratum[s];
            (1..=lad.len())
                .map(|k| {
                    let col = model.add_binary(format!("ut_{}_{}", s + 1, k));
                    model.set_objective_coef(col, inst.strata.weight(s) * lad.value(k));
                    col
                })
                .collect()
        })
        .collect();

    add_row_tracked(
        model,
        map,
        labels::CARDINALITY,
        y.iter().map(|&c| (c, 1.0)).collect(),
        Sense::Eq,
        inst.p as f64,
    );
    for s in 0..inst.num_strata() {
        let coeffs = utilde[s].iter().map(|&c| (c, 1.0)).collect();
        add_row_tracked(model, map, labels::LEVEL_CHOICE, coeffs, Sense::Eq, 1.0);
    }
    // One coverage row per (stratum, member, site rank): the rows at
    // intermediate stratum levels are dominated and omitted.
    for s in 0..inst.num_strata() {
        for &j in inst.strata.members(s) {
            for r in 2..=idx.site[j].len() {
                let level = idx.l(s, j, r);
                let threshold = idx.site[j].value(r);
                let mut coeffs: Vec<(usize, f64)> =
                    (1..level).map(|kk| (utilde[s][kk - 1], 1.0)).collect();
                for &(_, i) in neighbors.strictly_within(j, threshold, cmp) {
                    coeffs.push((y[i], -1.0));
                }
                add_row_tracked(model, map, labels::COVERAGE, coeffs, Sense::Le, 0.0);
            }
        }
    }
    map.y = Some(y);
    map.utilde = Some(utilde);
}

fn build_f3(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
    grouped: bool,
) {
    let cmp = idx.cmp();
    let y = add_open_vars(inst, model);
    let u = add_u_vars(inst, idx, model);

    add_row_tracked(
        model,
        map,
        labels::CARDINALITY,
        y.iter().map(|&c| (c, 1.0)).collect(),
        Sense::Eq,
        inst.p as f64,
    );
    if grouped {
        for s in 0..inst.num_strata() {
            for &j in inst.strata.members(s) {
                for r in 2..=idx.site[j].len() {
                    let level = idx.l(s, j, r);
                    let mut coeffs = vec![(u[s][level - 2], 1.0)];
                    for &(_, i) in neighbors.strictly_within(j, idx.site[j].value(r), cmp) {
                        coeffs.push((y[i], 1.0));
                    }
                    add_row_tracked(model, map, labels::COVERAGE, coeffs, Sense::Ge, 1.0);
                }
            }
        }
        for s in 0..inst.num_strata() {
            for k in 3..=idx.stratum[s].len() {
                add_row_tracked(
                    model,
                    map,
                    labels::MONOTONE_U,
                    vec![(u[s][k - 2], 1.0), (u[s][k - 3], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    } else {
        for s in 0..inst.num_strata() {
            for &j in inst.strata.members(s) {
                for k in 2..=idx.stratum[s].len() {
                    let mut coeffs = vec![(u[s][k - 2], 1.0)];
                    for &(_, i) in neighbors.strictly_within(j, idx.stratum[s].value(k), cmp) {
                        coeffs.push((y[i], 1.0));
                    }
                    add_row_tracked(model, map, labels::COVERAGE, coeffs, Sense::Ge, 1.0);
                }
            }
        }
    }
    map.y = Some(y);
    map.u = Some(u);
}

fn build_f4(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
    telescopic: bool,
) {
    let z = add_z_vars(inst, idx, model);
    let theta = add_theta_vars(inst, model);
    push_cardinality_service(inst, idx, neighbors, model, map, &z);
    if telescopic {
        for s in 0..inst.num_strata() {
            for &j in inst.strata.members(s) {
                let lad = &idx.site[j];
                let mut coeffs: Vec<(usize, f64)> = (2..=lad.len())
                    .map(|r| (z[j][r - 2], lad.value(r) - lad.value(r - 1)))
                    .collect();
                coeffs.push((theta[s], -1.0));
                add_row_tracked(model, map, labels::STRATUM_MAX, coeffs, Sense::Le, 0.0);
            }
        }
    } else {
        for s in 0..inst.num_strata() {
            for &j in inst.strata.members(s) {
                for r in 2..=idx.site[j].len() {
                    add_row_tracked(
                        model,
                        map,
                        labels::STRATUM_MAX,
                        vec![(z[j][r - 2], idx.site[j].value(r)), (theta[s], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }
    map.z = Some(z);
    map.theta = Some(theta);
}

/// The shared cardinality and service rows of the site-covering families:
/// exactly `n - p` sites lack a center, and a site is served below its r-th
/// ladder value unless no closer candidate hosts a center.
fn push_cardinality_service(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
    z: &[Vec<usize>],
) {
    let cmp = idx.cmp();
    let n = inst.n();
    add_row_tracked(
        model,
        map,
        labels::CARDINALITY,
        (0..n).map(|i| (z[i][0], 1.0)).collect(),
        Sense::Eq,
        (n - inst.p) as f64,
    );
    for j in 0..n {
        for r in 3..=idx.site[j].len() {
            let within = neighbors.strictly_within(j, idx.site[j].value(r), cmp);
            let mut coeffs: Vec<(usize, f64)> =
                within.iter().map(|&(_, i)| (z[i][0], 1.0)).collect();
            // z_{j2} and z_{jr} may both appear; columns are distinct (r > 2).
            coeffs.push((z[j][r - 2], -1.0));
            add_row_tracked(
                model,
                map,
                labels::SERVICE,
                coeffs,
                Sense::Le,
                within.len() as f64 - 1.0,
            );
        }
    }
}

fn build_f5(
    inst: &Instance,
    idx: &DistanceIndex,
    neighbors: &Neighbors,
    model: &mut MilpModel,
    map: &mut VarMap,
    linking: F5Linking,
) {
    let z = add_z_vars(inst, idx, model);
    let u = add_u_vars(inst, idx, model);
    push_cardinality_service(inst, idx, neighbors, model, map, &z);
    map.z = Some(z);
    map.u = Some(u.clone());
    push_linking_rows(inst, idx, model, map, linking, labels::LINK);
    for s in 0..inst.num_strata() {
        for k in 3..=idx.stratum[s].len() {
            add_row_tracked(
                model,
                map,
                labels::MONOTONE_U,
                vec![(u[s][k - 2], 1.0), (u[s][k - 3], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
}

/// Append the rows tying site-covering levels to stratum-covering levels.
pub(super) fn push_linking_rows(
    inst: &Instance,
    idx: &DistanceIndex,
    model: &mut MilpModel,
    map: &mut VarMap,
    linking: F5Linking,
    label: &'static str,
) {
    let z = map.z.clone().expect("F5 has site-covering variables");
    let u = map.u.clone().expect("F5 has stratum-covering variables");
    match linking {
        F5Linking::F55 => {
            for s in 0..inst.num_strata() {
                for &i in inst.strata.members(s) {
                    for k in 2..=idx.stratum[s].len() {
                        let r = idx.lbar(s, i, k);
                        if r >= 2 {
                            add_row_tracked(
                                model,
                                map,
                                label,
                                vec![(z[i][r - 2], 1.0), (u[s][k - 2], -1.0)],
                                Sense::Le,
                                0.0,
                            );
                        }
                    }
                }
            }
        }
        F5Linking::F2_3 => {
            for s in 0..inst.num_strata() {
                for &i in inst.strata.members(s) {
                    for r in 2..=idx.site[i].len() {
                        let k = idx.l(s, i, r);
                        add_row_tracked(
                            model,
                            map,
                            label,
                            vec![(z[i][r - 2], 1.0), (u[s][k - 2], -1.0)],
                            Sense::Le,
                            0.0,
                        );
                    }
                }
            }
        }
        F5Linking::Desagregada => {
            for s in 0..inst.num_strata() {
                for &i in inst.strata.members(s) {
                    for k in 2..=idx.stratum[s].len() {
                        let r = idx.lprime(s, i, k);
                        if r <= idx.site[i].len() {
                            add_row_tracked(
                                model,
                                map,
                                label,
                                vec![(z[i][r - 2], 1.0), (u[s][k - 2], -1.0)],
                                Sense::Le,
                                0.0,
                            );
                        }
                    }
                }
            }
        }
        F5Linking::F52 => {
            for s in 0..inst.num_strata() {
                for k in 2..=idx.stratum[s].len() {
                    let mut coeffs: Vec<(usize, f64)> = Vec::new();
                    for &i in inst.strata.members(s) {
                        let r = idx.lbar(s, i, k);
                        if r >= 2 {
                            coeffs.push((z[i][r - 2], 1.0));
                        }
                    }
                    let count = idx.n_sk[s][k - 2] as f64;
                    debug_assert_eq!(coeffs.len(), count as usize);
                    coeffs.push((u[s][k - 2], -count));
                    add_row_tracked(model, map, label, coeffs, Sense::Le, 0.0);
                }
            }
        }
        F5Linking::Agg53 => {
            for s in 0..inst.num_strata() {
                for k in 2..=idx.stratum[s].len() {
                    let mut coeffs: Vec<(usize, f64)> = Vec::new();
                    for &i in inst.strata.members(s) {
                        let r = idx.lprime(s, i, k);
                        if r <= idx.site[i].len() {
                            coeffs.push((z[i][r - 2], 1.0));
                        }
                    }
                    coeffs.push((u[s][k - 2], -(idx.n_s[s] as f64)));
                    add_row_tracked(model, map, label, coeffs, Sense::Le, 0.0);
                }
            }
        }
        F5Linking::F6 => {
            for i in 0..inst.n() {
                let strata_of: Vec<usize> =
                    (0..inst.num_strata()).filter(|&s| inst.strata.contains(s, i)).collect();
                if strata_of.is_empty() {
                    continue;
                }
                for r in 2..=idx.site[i].len() {
                    let mut coeffs = vec![(z[i][r - 2], strata_of.len() as f64)];
                    for &s in &strata_of {
                        let k = idx.l(s, i, r);
                        coeffs.push((u[s][k - 2], -1.0));
                    }
                    add_row_tracked(model, map, label, coeffs, Sense::Le, 0.0);
                }
            }
        }
    }
}

pub(super) fn apply_relaxations(
    model: &mut MilpModel,
    idx: &DistanceIndex,
    map: &VarMap,
    spec: &FormulationSpec,
) {
    if spec.relax_z_tail {
        if let Some(z) = &map.z {
            for (i, cols) in z.iter().enumerate() {
                for (pos, &col) in cols.iter().enumerate() {
                    // pos 0 holds rank 2; ranks 3.. relax.
                    if pos >= 1 {
                        debug_assert!(pos + 2 <= idx.site[i].len());
                        model.vars[col].integral = false;
                    }
                }
            }
        }
    }
    if spec.relax_u {
        if let Some(u) = &map.u {
            for cols in u {
                for &col in cols {
                    model.vars[col].integral = false;
                }
            }
        }
    }
}

pub(super) fn apply_fixings(model: &mut MilpModel, map: &mut VarMap, fix: &FixSet) {
    let before = model.objective_constant;
    if let Some(z) = &map.z {
        for &(i, r) in &fix.z_zero {
            if i < z.len() && r >= 2 && r - 2 < z[i].len() {
                model.fix_var(z[i][r - 2], 0.0);
            }
        }
    }
    if let Some(u) = &map.u {
        for &(s, k) in &fix.u_zero {
            if s < u.len() && k >= 2 && k - 2 < u[s].len() {
                model.fix_var(u[s][k - 2], 0.0);
            }
        }
        for &(s, k) in &fix.u_one {
            if s < u.len() && k >= 2 && k - 2 < u[s].len() {
                model.fix_var(u[s][k - 2], 1.0);
            }
        }
        let gained = model.objective_constant - before;
        debug_assert!(
            (gained - fix.objective_offset).abs() <= 1e-9 * fix.objective_offset.abs().max(1.0),
            "prefix fixings contribute {gained}, recorded offset {}",
            fix.objective_offset
        );
    }
    map.objective_offset = fix.objective_offset;
}

//! Valid inequalities appended on top of a built model. None of them cut any
//! integer solution; they can only tighten the relaxation.

use std::collections::BTreeSet;

use super::families::{add_row_tracked, push_linking_rows};
use super::{labels, F5Linking, FormulationError, Inequality, VarMap};
use crate::index::DistanceIndex;
use crate::instance::Instance;
use crate::milp::{MilpModel, Sense};

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Append every inequality in `which` (in enum order). Errors if a family
/// lacks the referenced variables.
pub fn attach_inequalities(
    model: &mut MilpModel,
    varmap: &mut VarMap,
    inst: &Instance,
    idx: &DistanceIndex,
    which: &BTreeSet<Inequality>,
) -> Result<(), FormulationError> {
    for ineq in which {
        match ineq {
            Inequality::R1mod | Inequality::Restz => {
                if varmap.z.is_none() {
                    return Err(FormulationError::SymbolUnavailable(format!(
                        "{} requires site-covering variables",
                        ineq.as_str()
                    )));
                }
            }
            Inequality::Escenarios2 | Inequality::Escenarios3 => {
                if varmap.u.is_none() {
                    return Err(FormulationError::SymbolUnavailable(format!(
                        "{} requires cumulative stratum-covering variables",
                        ineq.as_str()
                    )));
                }
            }
            Inequality::F2_3Cuts => {
                if varmap.z.is_none() || varmap.u.is_none() {
                    return Err(FormulationError::SymbolUnavailable(
                        "F2_3 cuts require both covering families".into(),
                    ));
                }
            }
        }
    }

    for ineq in which {
        match ineq {
            Inequality::R1mod => push_r1(model, varmap, inst, idx),
            Inequality::Escenarios2 => push_nested_eq(model, varmap, inst, idx),
            Inequality::Escenarios3 => push_nested_sum(model, varmap, inst),
            Inequality::Restz => push_monotone_z(model, varmap, idx),
            Inequality::F2_3Cuts => {
                push_linking_rows(inst, idx, model, varmap, F5Linking::F2_3, labels::CUT_LINK)
            }
        }
    }
    Ok(())
}

/// If a center sits at `j`, site `i` is served within `d_ij`; so the covering
/// level of `i` just above `d_ij` implies `j` has no center.
fn push_r1(model: &mut MilpModel, map: &mut VarMap, inst: &Instance, idx: &DistanceIndex) {
    let z = map.z.clone().expect("checked");
    let cmp = idx.cmp();
    for i in 0..inst.n() {
        for r in 2..=idx.site[i].len() {
            let prev = idx.site[i].value(r - 1);
            for j in 0..inst.n() {
                if j != i && cmp.eq(prev, inst.dm.dist(i, j)) {
                    add_row_tracked(
                        model,
                        map,
                        labels::CUT_R1,
                        vec![(z[i][r - 2], 1.0), (z[j][0], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }
}

/// Level-for-level comparison of nested strata at equal ladder values.
fn push_nested_eq(model: &mut MilpModel, map: &mut VarMap, inst: &Instance, idx: &DistanceIndex) {
    let u = map.u.clone().expect("checked");
    let cmp = idx.cmp();
    for s1 in 0..inst.num_strata() {
        for s2 in 0..inst.num_strata() {
            if s1 == s2 || !is_subset(inst.strata.members(s1), inst.strata.members(s2)) {
                continue;
            }
            for k in 2..=idx.stratum[s1].len() {
                let v = idx.stratum[s1].value(k);
                let l = idx.stratum[s2]
                    .rank_of(v, cmp)
                    .expect("nested stratum values embed in the larger ladder");
                debug_assert!(l >= 2);
                add_row_tracked(
                    model,
                    map,
                    labels::CUT_NESTED_EQ,
                    vec![(u[s1][k - 2], 1.0), (u[s2][l - 2], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }
}

/// Summed version of the nested-strata relation: the covering level count of
/// the inner stratum never exceeds the outer one's.
fn push_nested_sum(model: &mut MilpModel, map: &mut VarMap, inst: &Instance) {
    let u = map.u.clone().expect("checked");
    for s1 in 0..inst.num_strata() {
        for s2 in 0..inst.num_strata() {
            if s1 == s2 || !is_subset(inst.strata.members(s1), inst.strata.members(s2)) {
                continue;
            }
            let mut coeffs: Vec<(usize, f64)> = u[s1].iter().map(|&c| (c, 1.0)).collect();
            coeffs.extend(u[s2].iter().map(|&c| (c, -1.0)));
            add_row_tracked(model, map, labels::CUT_NESTED_SUM, coeffs, Sense::Le, 0.0);
        }
    }
}

/// Cumulative site-covering levels are nonincreasing in the rank.
fn push_monotone_z(model: &mut MilpModel, map: &mut VarMap, idx: &DistanceIndex) {
    let z = map.z.clone().expect("checked");
    for (i, cols) in z.iter().enumerate() {
        for r in 2..idx.site[i].len() {
            add_row_tracked(
                model,
                map,
                labels::CUT_MONOTONE_Z,
                vec![(cols[r - 1], 1.0), (cols[r - 2], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
}

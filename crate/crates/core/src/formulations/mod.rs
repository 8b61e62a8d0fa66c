//! Model builders: translate an instance plus its distance index into each
//! supported formulation, apply variable fixings and valid inequalities, and
//! map solver output back to center sets.
//!
//! Families:
//! - `F1`: assignment variables with one max variable per stratum.
//! - `F2`: per-stratum level choice over the global distance ladder; `F2prime`
//!   uses per-stratum ladders with rows grouped at site-ladder jumps.
//! - `F3`: cumulative stratum-covering variables with a telescopic objective;
//!   `F3mod` groups coverage rows and adds monotonicity.
//! - `F4`: cumulative site-covering variables; `F4mod` replaces the per-rank
//!   max rows by one telescopic row per (stratum, member).
//! - `F5`: both covering families joined by one of six linking variants
//!   (`F55`, `F2_3`, `desagregada`, `F52`, `agg53`, `F6`).

mod cuts;
mod families;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::exact::CenterSet;
use crate::index::DistanceIndex;
use crate::instance::Instance;
use crate::milp::{MilpModel, MilpResult};
use crate::preprocess::FixSet;

pub use cuts::attach_inequalities;

/// Row-group labels shared by the builders and the analytic counters.
pub mod labels {
    pub const CARDINALITY: &str = "cardinality";
    pub const ASSIGNMENT: &str = "assignment";
    pub const CLOSURE: &str = "closure";
    pub const STRATUM_MAX: &str = "stratum_max";
    pub const LEVEL_CHOICE: &str = "level_choice";
    pub const COVERAGE: &str = "coverage";
    pub const SERVICE: &str = "service";
    pub const LINK: &str = "link";
    pub const MONOTONE_U: &str = "monotone_u";
    pub const CUT_R1: &str = "cut_r1";
    pub const CUT_NESTED_EQ: &str = "cut_nested_eq";
    pub const CUT_NESTED_SUM: &str = "cut_nested_sum";
    pub const CUT_MONOTONE_Z: &str = "cut_monotone_z";
    pub const CUT_LINK: &str = "cut_link";
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("illegal relaxation: {0}")]
    IllegalRelaxation(String),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("unsupported variant: {0}")]
    UnsupportedVariant(String),
    #[error("inequality needs symbols the formulation lacks: {0}")]
    SymbolUnavailable(String),
    #[error("extracted {got} centers, expected {expected}")]
    CardinalityMismatch { got: usize, expected: usize },
    #[error("no incumbent to extract centers from")]
    NoIncumbent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    #[default]
    F1,
    F2,
    F2prime,
    F3,
    F3mod,
    F4,
    F4mod,
    F5,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::F1,
        Family::F2,
        Family::F2prime,
        Family::F3,
        Family::F3mod,
        Family::F4,
        Family::F4mod,
        Family::F5,
    ];

    pub fn has_z(self) -> bool {
        matches!(self, Family::F4 | Family::F4mod | Family::F5)
    }

    pub fn has_cumulative_u(self) -> bool {
        matches!(self, Family::F3 | Family::F3mod | Family::F5)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::F1 => "F1",
            Family::F2 => "F2",
            Family::F2prime => "F2prime",
            Family::F3 => "F3",
            Family::F3mod => "F3mod",
            Family::F4 => "F4",
            Family::F4mod => "F4mod",
            Family::F5 => "F5",
        };
        f.write_str(s)
    }
}

/// How the two covering families of `F5` are linked.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum F5Linking {
    /// One row per (stratum, member, matching ladder level).
    F55,
    /// The same rows enumerated by site-ladder rank.
    F2_3,
    /// One row per (stratum, member, stratum level) via the first site rank
    /// at or above the level value.
    Desagregada,
    /// Aggregation of `F55` over members, scaled by the matching-member count.
    F52,
    /// Aggregation of `desagregada` over members, scaled by the stratum size.
    Agg53,
    /// Aggregation over strata for each (site, rank).
    F6,
}

impl F5Linking {
    pub const ALL: [F5Linking; 6] = [
        F5Linking::F55,
        F5Linking::F2_3,
        F5Linking::Desagregada,
        F5Linking::F52,
        F5Linking::Agg53,
        F5Linking::F6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            F5Linking::F55 => "F55",
            F5Linking::F2_3 => "F2_3",
            F5Linking::Desagregada => "desagregada",
            F5Linking::F52 => "F52",
            F5Linking::Agg53 => "agg53",
            F5Linking::F6 => "F6",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for F5Linking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Valid inequalities that can be appended to a built model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Inequality {
    /// `z_{ir} <= z_{j2}` whenever the previous rank value of `i` equals `d_ij`.
    R1mod,
    /// `u_{s1,k} <= u_{s2,l}` for nested strata at matching ladder values.
    Escenarios2,
    /// Summed version of the nested-strata relation.
    Escenarios3,
    /// `z_{ir} >= z_{i,r+1}`.
    Restz,
    /// The `F2_3` linking rows appended as cuts.
    F2_3Cuts,
}

impl Inequality {
    pub const ALL: [Inequality; 5] = [
        Inequality::R1mod,
        Inequality::Escenarios2,
        Inequality::Escenarios3,
        Inequality::Restz,
        Inequality::F2_3Cuts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Inequality::R1mod => "R1mod",
            Inequality::Escenarios2 => "escenarios2",
            Inequality::Escenarios3 => "escenarios3",
            Inequality::Restz => "Restz",
            Inequality::F2_3Cuts => "F2_3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.as_str() == s)
    }
}

/// A fully specified model variant: family, linking, relaxations, appended
/// inequalities, and optional preprocessing fixings.
#[derive(Debug, Clone, Default)]
pub struct FormulationSpec {
    pub family: Family,
    pub f5_linking: Option<F5Linking>,
    pub relax_z_tail: bool,
    pub relax_u: bool,
    pub inequalities: BTreeSet<Inequality>,
    pub fixings: Option<FixSet>,
}

impl FormulationSpec {
    pub fn new(family: Family) -> Self {
        let f5_linking = (family == Family::F5).then_some(F5Linking::Agg53);
        FormulationSpec { family, f5_linking, ..Default::default() }
    }

    pub fn f5(linking: F5Linking) -> Self {
        FormulationSpec { family: Family::F5, f5_linking: Some(linking), ..Default::default() }
    }

    pub fn with_relax_z(mut self) -> Self {
        self.relax_z_tail = true;
        self
    }

    pub fn with_relax_u(mut self) -> Self {
        self.relax_u = true;
        self
    }

    pub fn with_fixings(mut self, fixings: FixSet) -> Self {
        self.fixings = Some(fixings);
        self
    }

    pub fn with_inequality(mut self, ineq: Inequality) -> Self {
        self.inequalities.insert(ineq);
        self
    }

    /// Canonical name, e.g. `F5-agg53*` (`*` marks the relaxed z tail,
    /// `+relax-u` the relaxed u family).
    pub fn name(&self) -> String {
        let mut s = self.family.to_string();
        if let Some(link) = self.f5_linking {
            if self.family == Family::F5 {
                s.push('-');
                s.push_str(link.as_str());
            }
        }
        if self.relax_z_tail {
            s.push('*');
        }
        if self.relax_u {
            s.push_str("+relax-u");
        }
        s
    }

    /// Parse a canonical name produced by [`FormulationSpec::name`].
    pub fn parse(name: &str) -> Result<Self, FormulationError> {
        let mut rest = name.trim().to_string();
        let relax_u = if let Some(stripped) = rest.strip_suffix("+relax-u") {
            rest = stripped.to_string();
            true
        } else {
            false
        };
        let relax_z = if let Some(stripped) = rest.strip_suffix('*') {
            rest = stripped.to_string();
            true
        } else {
            false
        };
        let (family, linking) = if let Some(link) = rest.strip_prefix("F5-") {
            let linking = F5Linking::parse(link).ok_or_else(|| {
                FormulationError::UnsupportedVariant(format!("unknown F5 linking {link:?}"))
            })?;
            (Family::F5, Some(linking))
        } else {
            let family = Family::ALL
                .into_iter()
                .find(|f| f.to_string() == rest)
                .ok_or_else(|| {
                    FormulationError::UnsupportedVariant(format!("unknown formulation {rest:?}"))
                })?;
            let linking = (family == Family::F5).then_some(F5Linking::Agg53);
            (family, linking)
        };
        let spec = FormulationSpec {
            family,
            f5_linking: linking,
            relax_z_tail: relax_z,
            relax_u,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// All base variants: the seven non-F5 families plus every F5 linking.
    pub fn all_base() -> Vec<FormulationSpec> {
        let mut specs: Vec<FormulationSpec> = Family::ALL
            .into_iter()
            .filter(|f| *f != Family::F5)
            .map(FormulationSpec::new)
            .collect();
        specs.extend(F5Linking::ALL.into_iter().map(FormulationSpec::f5));
        specs
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        match (self.family, self.f5_linking) {
            (Family::F5, None) => {
                return Err(FormulationError::UnsupportedVariant(
                    "F5 requires a linking variant".into(),
                ))
            }
            (Family::F5, Some(_)) => {}
            (_, Some(_)) => {
                return Err(FormulationError::UnsupportedVariant(
                    "linking variants only apply to F5".into(),
                ))
            }
            _ => {}
        }
        if self.relax_z_tail && !self.family.has_z() {
            return Err(FormulationError::IllegalRelaxation(format!(
                "{} has no site-covering variables to relax",
                self.family
            )));
        }
        if self.relax_u {
            let ok = self.family == Family::F5
                && matches!(
                    self.f5_linking,
                    Some(F5Linking::F55) | Some(F5Linking::F2_3) | Some(F5Linking::Desagregada)
                );
            if !ok {
                return Err(FormulationError::IllegalRelaxation(
                    "relax-u is only valid for F5 with F55, F2_3 or desagregada linking".into(),
                ));
            }
        }
        if let Some(fix) = &self.fixings {
            let has_any = !fix.z_zero.is_empty() || !fix.u_zero.is_empty() || !fix.u_one.is_empty();
            if has_any && !self.family.has_z() && !self.family.has_cumulative_u() {
                return Err(FormulationError::UnsupportedCombination(format!(
                    "fixings target covering variables, which {} lacks",
                    self.family
                )));
            }
        }
        for ineq in &self.inequalities {
            match ineq {
                Inequality::R1mod | Inequality::Restz => {
                    if !self.family.has_z() {
                        return Err(FormulationError::SymbolUnavailable(format!(
                            "{} requires site-covering variables",
                            ineq.as_str()
                        )));
                    }
                }
                Inequality::Escenarios2 | Inequality::Escenarios3 => {
                    if !self.family.has_cumulative_u() {
                        return Err(FormulationError::SymbolUnavailable(format!(
                            "{} requires cumulative stratum-covering variables",
                            ineq.as_str()
                        )));
                    }
                }
                Inequality::F2_3Cuts => {
                    if self.family != Family::F5 {
                        return Err(FormulationError::SymbolUnavailable(
                            "F2_3 cuts require both covering families".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Column bookkeeping for a built model: which column holds each symbol
/// instance, plus the rows emitted per group.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// `x[i][j]`: site `j` assigned to center `i` (F1).
    pub x: Option<Vec<Vec<usize>>>,
    /// `y[i]`: a center opens at `i` (F2, F2prime, F3, F3mod).
    pub y: Option<Vec<usize>>,
    /// `theta[s]`: largest allocation distance within stratum `s` (F1, F4).
    pub theta: Option<Vec<usize>>,
    /// `ubar[s][k-1]`, k over the global ladder (F2).
    pub ubar: Option<Vec<Vec<usize>>>,
    /// `utilde[s][k-1]`, k over the stratum ladder (F2prime).
    pub utilde: Option<Vec<Vec<usize>>>,
    /// `u[s][k-2]`, cumulative, k = 2.. over the stratum ladder (F3, F5).
    pub u: Option<Vec<Vec<usize>>>,
    /// `z[i][r-2]`, cumulative, r = 2.. over the site ladder (F4, F5).
    pub z: Option<Vec<Vec<usize>>>,
    /// Objective value forced by prefix fixings.
    pub objective_offset: f64,
    /// Rows per group label, in emission order.
    pub row_groups: Vec<(&'static str, usize)>,
}

/// Build the model and symbol map for `spec`.
pub fn build_formulation(
    inst: &Instance,
    idx: &DistanceIndex,
    spec: &FormulationSpec,
) -> Result<(MilpModel, VarMap), FormulationError> {
    spec.validate()?;
    let (mut model, mut varmap) = families::build_base(inst, idx, spec);
    families::apply_relaxations(&mut model, idx, &varmap, spec);
    if let Some(fix) = &spec.fixings {
        families::apply_fixings(&mut model, &mut varmap, fix);
    }
    if !spec.inequalities.is_empty() {
        attach_inequalities(&mut model, &mut varmap, inst, idx, &spec.inequalities)?;
    }
    debug_assert_eq!(model.row_group_counts(), varmap.row_groups);
    Ok((model, varmap))
}

/// Expand a center set into a full feasible assignment of the built model:
/// nearest-center assignments, covering indicators, and stratum maxima. Used
/// to warm-start the solver (greedy centers give a strong initial cutoff).
pub fn incumbent_vector(
    inst: &Instance,
    idx: &DistanceIndex,
    varmap: &VarMap,
    model: &MilpModel,
    centers: &[usize],
) -> Vec<f64> {
    let n = inst.n();
    let cmp = idx.cmp();
    let mut alloc = vec![f64::INFINITY; n];
    let mut nearest = vec![0usize; n];
    for j in 0..n {
        for &c in centers {
            let d = inst.dm.dist(c, j);
            if d < alloc[j] {
                alloc[j] = d;
                nearest[j] = c;
            }
        }
    }
    let stratum_max: Vec<f64> = (0..inst.num_strata())
        .map(|s| {
            inst.strata
                .members(s)
                .iter()
                .map(|&j| alloc[j])
                .fold(0.0f64, f64::max)
        })
        .collect();

    let mut x = vec![0.0; model.num_vars()];
    if let Some(map) = &varmap.x {
        for j in 0..n {
            x[map[nearest[j]][j]] = 1.0;
        }
    }
    if let Some(y) = &varmap.y {
        for &c in centers {
            x[y[c]] = 1.0;
        }
    }
    if let Some(theta) = &varmap.theta {
        for (s, &col) in theta.iter().enumerate() {
            x[col] = stratum_max[s];
        }
    }
    if let Some(ubar) = &varmap.ubar {
        for (s, cols) in ubar.iter().enumerate() {
            let k = idx.global.rank_of(stratum_max[s], cmp).expect("max is a distance value");
            x[cols[k - 1]] = 1.0;
        }
    }
    if let Some(utilde) = &varmap.utilde {
        for (s, cols) in utilde.iter().enumerate() {
            let k = idx.stratum[s].rank_of(stratum_max[s], cmp).expect("max is a stratum value");
            x[cols[k - 1]] = 1.0;
        }
    }
    if let Some(u) = &varmap.u {
        for (s, cols) in u.iter().enumerate() {
            for (pos, &col) in cols.iter().enumerate() {
                let level = idx.stratum[s].value(pos + 2);
                x[col] = if cmp.le(level, stratum_max[s]) { 1.0 } else { 0.0 };
            }
        }
    }
    if let Some(z) = &varmap.z {
        for (i, cols) in z.iter().enumerate() {
            for (pos, &col) in cols.iter().enumerate() {
                let level = idx.site[i].value(pos + 2);
                x[col] = if cmp.le(level, alloc[i]) { 1.0 } else { 0.0 };
            }
        }
    }
    x
}

/// Read the chosen centers out of a solver incumbent.
pub fn extract_centers(
    varmap: &VarMap,
    result: &MilpResult,
    family: Family,
    p: usize,
) -> Result<CenterSet, FormulationError> {
    if result.x.is_empty() {
        return Err(FormulationError::NoIncumbent);
    }
    let x = &result.x;
    let sites: Vec<usize> = match family {
        Family::F1 => {
            let map = varmap.x.as_ref().expect("F1 has assignment variables");
            (0..map.len()).filter(|&i| x[map[i][i]] >= 0.5).collect()
        }
        Family::F2 | Family::F2prime | Family::F3 | Family::F3mod => {
            let y = varmap.y.as_ref().expect("family has open variables");
            (0..y.len()).filter(|&i| x[y[i]] >= 0.5).collect()
        }
        Family::F4 | Family::F4mod | Family::F5 => {
            // The first covering level is 0 exactly at center sites.
            let z = varmap.z.as_ref().expect("family has site-covering variables");
            (0..z.len()).filter(|&i| x[z[i][0]] <= 0.5).collect()
        }
    };
    if sites.len() != p {
        return Err(FormulationError::CardinalityMismatch { got: sites.len(), expected: p });
    }
    Ok(CenterSet::new(sites))
}

//! Sorted distinct-distance ladders and the rank maps used by the covering
//! formulations.
//!
//! Three ladders are kept: the global one over all pairs, one per site
//! (distances from that site), and one per stratum (distances from member
//! sites to every site). Ranks are 1-based to mirror the model definitions;
//! rank 1 always holds the value 0.

use crate::formulations::{labels, Family, FormulationSpec, FormulationError, F5Linking};
use crate::instance::{DistCmp, Instance};

/// A strictly increasing sequence of distance values starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    values: Vec<f64>,
}

impl Ladder {
    fn from_values(mut values: Vec<f64>, cmp: DistCmp) -> Self {
        values.sort_by(f64::total_cmp);
        let mut dedup: Vec<f64> = Vec::with_capacity(values.len());
        for v in values {
            match dedup.last() {
                Some(&last) if cmp.eq(last, v) => {}
                _ => dedup.push(v),
            }
        }
        debug_assert_eq!(dedup.first().copied(), Some(0.0), "ladders start at 0");
        Ladder { values: dedup }
    }

    /// Number of distinct values (the largest valid rank).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at 1-based `rank`.
    #[inline]
    pub fn value(&self, rank: usize) -> f64 {
        self.values[rank - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based rank of `v`, if present under the comparator.
    pub fn rank_of(&self, v: f64, cmp: DistCmp) -> Option<usize> {
        let idx = self.values.partition_point(|&x| cmp.lt(x, v));
        if idx < self.values.len() && cmp.eq(self.values[idx], v) {
            Some(idx + 1)
        } else {
            None
        }
    }

    /// Smallest 1-based rank whose value is `>= v`, or `len() + 1` when all
    /// values are below `v`.
    pub fn first_rank_at_least(&self, v: f64, cmp: DistCmp) -> usize {
        self.values.partition_point(|&x| cmp.lt(x, v)) + 1
    }
}

/// Ladders plus every rank map needed to instantiate the formulations.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    pub global: Ladder,
    pub site: Vec<Ladder>,
    pub stratum: Vec<Ladder>,
    /// `n_sk[s][k-2]`: members of stratum `s` whose site ladder contains the
    /// k-th stratum value at some rank >= 2.
    pub n_sk: Vec<Vec<usize>>,
    /// `n_s[s] = |N^s|`.
    pub n_s: Vec<usize>,
    /// `cap[i]`: the (n-p+1)-th smallest entry of row `i` with multiplicity;
    /// no allocation distance of `i` can exceed it.
    pub cap: Vec<f64>,
    cmp: DistCmp,
    member_pos: Vec<Vec<Option<usize>>>,
    l: Vec<Vec<Vec<usize>>>,
    lbar: Vec<Vec<Vec<usize>>>,
    lprime: Vec<Vec<Vec<usize>>>,
}

impl DistanceIndex {
    pub fn build(inst: &Instance) -> Self {
        let n = inst.n();
        let s_count = inst.num_strata();
        let cmp = inst.dm.cmp();

        let mut all = Vec::with_capacity(n * n);
        for i in 0..n {
            all.extend_from_slice(inst.dm.row(i));
        }
        let global = Ladder::from_values(all, cmp);

        let site: Vec<Ladder> = (0..n)
            .map(|i| Ladder::from_values(inst.dm.row(i).to_vec(), cmp))
            .collect();

        let mut stratum = Vec::with_capacity(s_count);
        let mut member_pos = Vec::with_capacity(s_count);
        let mut l = Vec::with_capacity(s_count);
        let mut lbar = Vec::with_capacity(s_count);
        let mut lprime = Vec::with_capacity(s_count);
        let mut n_sk = Vec::with_capacity(s_count);
        let mut n_s = Vec::with_capacity(s_count);

        for s in 0..s_count {
            let members = inst.strata.members(s);
            let mut vals = Vec::with_capacity(members.len() * n);
            for &i in members {
                vals.extend_from_slice(inst.dm.row(i));
            }
            let lad = Ladder::from_values(vals, cmp);
            let gs = lad.len();

            let mut pos = vec![None; n];
            for (p, &i) in members.iter().enumerate() {
                pos[i] = Some(p);
            }

            let mut l_s = Vec::with_capacity(members.len());
            let mut lbar_s = Vec::with_capacity(members.len());
            let mut lpr_s = Vec::with_capacity(members.len());
            let mut counts = vec![0usize; gs.saturating_sub(1)];
            for &i in members {
                let gi = site[i].len();
                debug_assert!(gi <= gs, "site ladder never exceeds its stratum ladder");
                let mut l_i = vec![0usize; gi];
                for r in 1..=gi {
                    let k = lad
                        .rank_of(site[i].value(r), cmp)
                        .expect("site value is in the stratum family");
                    l_i[r - 1] = k;
                }
                let mut lbar_i = vec![0usize; gs];
                let mut lpr_i = vec![0usize; gs];
                for k in 1..=gs {
                    let v = lad.value(k);
                    let r = site[i].rank_of(v, cmp).unwrap_or(0);
                    lbar_i[k - 1] = r;
                    lpr_i[k - 1] = site[i].first_rank_at_least(v, cmp);
                    if k >= 2 && r >= 2 {
                        counts[k - 2] += 1;
                    }
                }
                l_s.push(l_i);
                lbar_s.push(lbar_i);
                lpr_s.push(lpr_i);
            }
            stratum.push(lad);
            member_pos.push(pos);
            l.push(l_s);
            lbar.push(lbar_s);
            lprime.push(lpr_s);
            n_sk.push(counts);
            n_s.push(members.len());
        }

        let cap = (0..n)
            .map(|i| {
                let mut row = inst.dm.row(i).to_vec();
                row.sort_by(f64::total_cmp);
                row[n - inst.p]
            })
            .collect();

        DistanceIndex {
            global,
            site,
            stratum,
            n_sk,
            n_s,
            cap,
            cmp,
            member_pos,
            l,
            lbar,
            lprime,
        }
    }

    pub fn cmp(&self) -> DistCmp {
        self.cmp
    }

    fn pos(&self, s: usize, i: usize) -> usize {
        self.member_pos[s][i].expect("site is a member of the stratum")
    }

    /// Stratum rank of the site-ladder value `d_{i(r)}`; defined for members.
    pub fn l(&self, s: usize, i: usize, r: usize) -> usize {
        self.l[s][self.pos(s, i)][r - 1]
    }

    /// Site-ladder rank matching the k-th stratum value, or 0 when the value
    /// does not occur in site `i`'s ladder. Defined for members.
    pub fn lbar(&self, s: usize, i: usize, k: usize) -> usize {
        self.lbar[s][self.pos(s, i)][k - 1]
    }

    /// Smallest site-ladder rank with value `>= d^s_(k)`, or `G_i + 1`.
    pub fn lprime(&self, s: usize, i: usize, k: usize) -> usize {
        self.lprime[s][self.pos(s, i)][k - 1]
    }
}

/// Analytic row counts per constraint family for one formulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCount {
    pub label: &'static str,
    /// Exact number of rows the builder emits.
    pub exact: usize,
    /// Count under the coarser accounting that ignores that level and rank
    /// indices start at 2 (where such a closed form is stated).
    pub loose: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintCounts {
    pub families: Vec<FamilyCount>,
}

impl ConstraintCounts {
    pub fn total(&self) -> usize {
        self.families.iter().map(|f| f.exact).sum()
    }
}

/// Analytic constraint counts for `spec`, independent of the model builder.
/// The built model's row groups must match these exactly.
pub fn count_constraints(
    inst: &Instance,
    idx: &DistanceIndex,
    spec: &FormulationSpec,
) -> Result<ConstraintCounts, FormulationError> {
    spec.validate()
        .map_err(|e| FormulationError::UnsupportedVariant(e.to_string()))?;
    let n = inst.n();
    let s_count = inst.num_strata();
    let g = idx.global.len();
    let g_i = |i: usize| idx.site[i].len();
    let g_s = |s: usize| idx.stratum[s].len();
    // Number of (stratum, member) pairs.
    let memberships: usize = (0..s_count).map(|s| idx.n_s[s]).sum();

    let mut fams = Vec::new();
    match spec.family {
        Family::F1 => {
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::ASSIGNMENT, exact: n, loose: None });
            fams.push(FamilyCount { label: labels::CLOSURE, exact: n * (n - 1), loose: None });
            fams.push(FamilyCount { label: labels::STRATUM_MAX, exact: memberships, loose: None });
        }
        Family::F2 => {
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::LEVEL_CHOICE, exact: s_count, loose: None });
            fams.push(FamilyCount {
                label: labels::COVERAGE,
                exact: memberships * (g - 1),
                loose: Some(memberships * g),
            });
        }
        Family::F2prime => {
            let exact: usize = (0..s_count)
                .map(|s| inst.strata.members(s).iter().map(|&j| g_i(j) - 1).sum::<usize>())
                .sum();
            let loose: usize = (0..s_count)
                .map(|s| inst.strata.members(s).iter().map(|&j| g_i(j)).sum::<usize>())
                .sum();
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::LEVEL_CHOICE, exact: s_count, loose: None });
            fams.push(FamilyCount { label: labels::COVERAGE, exact, loose: Some(loose) });
        }
        Family::F3 => {
            let exact: usize = (0..s_count).map(|s| idx.n_s[s] * (g_s(s) - 1)).sum();
            let loose: usize = (0..s_count).map(|s| idx.n_s[s] * g_s(s)).sum();
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::COVERAGE, exact, loose: Some(loose) });
        }
        Family::F3mod => {
            let cover: usize = (0..s_count)
                .map(|s| inst.strata.members(s).iter().map(|&j| g_i(j) - 1).sum::<usize>())
                .sum();
            let mono: usize = (0..s_count).map(|s| g_s(s).saturating_sub(2)).sum();
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::COVERAGE, exact: cover, loose: None });
            fams.push(FamilyCount { label: labels::MONOTONE_U, exact: mono, loose: None });
        }
        Family::F4 | Family::F4mod => {
            let serve: usize = (0..n).map(|j| g_i(j).saturating_sub(2)).sum();
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::SERVICE, exact: serve, loose: None });
            if spec.family == Family::F4 {
                let theta: usize = (0..s_count)
                    .map(|s| inst.strata.members(s).iter().map(|&j| g_i(j) - 1).sum::<usize>())
                    .sum();
                let loose: usize = (0..s_count)
                    .map(|s| inst.strata.members(s).iter().map(|&j| g_i(j)).sum::<usize>())
                    .sum();
                fams.push(FamilyCount { label: labels::STRATUM_MAX, exact: theta, loose: Some(loose) });
            } else {
                fams.push(FamilyCount {
                    label: labels::STRATUM_MAX,
                    exact: memberships,
                    loose: Some(memberships),
                });
            }
        }
        Family::F5 => {
            let serve: usize = (0..n).map(|j| g_i(j).saturating_sub(2)).sum();
            fams.push(FamilyCount { label: labels::CARDINALITY, exact: 1, loose: None });
            fams.push(FamilyCount { label: labels::SERVICE, exact: serve, loose: None });
            let linking = spec.f5_linking.expect("validated");
            let link = match linking {
                F5Linking::F55 | F5Linking::F2_3 => {
                    let exact: usize = (0..s_count)
                        .map(|s| inst.strata.members(s).iter().map(|&i| g_i(i) - 1).sum::<usize>())
                        .sum();
                    FamilyCount { label: labels::LINK, exact, loose: None }
                }
                F5Linking::Desagregada => {
                    let mut exact = 0usize;
                    for s in 0..s_count {
                        for &i in inst.strata.members(s) {
                            for k in 2..=g_s(s) {
                                if idx.lprime(s, i, k) <= g_i(i) {
                                    exact += 1;
                                }
                            }
                        }
                    }
                    let loose: usize = (0..s_count).map(|s| idx.n_s[s] * (g_s(s) - 1)).sum();
                    FamilyCount { label: labels::LINK, exact, loose: Some(loose) }
                }
                F5Linking::F52 | F5Linking::Agg53 => {
                    let exact: usize = (0..s_count).map(|s| g_s(s) - 1).sum();
                    FamilyCount { label: labels::LINK, exact, loose: None }
                }
                F5Linking::F6 => {
                    let exact: usize = (0..n)
                        .filter(|&i| (0..s_count).any(|s| inst.strata.contains(s, i)))
                        .map(|i| g_i(i) - 1)
                        .sum();
                    FamilyCount { label: labels::LINK, exact, loose: None }
                }
            };
            fams.push(link);
            let mono: usize = (0..s_count).map(|s| g_s(s).saturating_sub(2)).sum();
            fams.push(FamilyCount { label: labels::MONOTONE_U, exact: mono, loose: None });
        }
    }
    Ok(ConstraintCounts { families: fams })
}

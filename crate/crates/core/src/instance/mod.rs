//! Problem data: distance matrices, strata, and validated instances.
//!
//! Sites and strata are 0-based everywhere in memory; the text formats
//! (ORLIB graphs, explicit matrices, strata JSON) use 1-based site ids.

pub mod orlib;
pub mod sample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed header at line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("malformed edge at line {line}: {reason}")]
    MalformedEdge { line: usize, reason: String },
    #[error("edge ({i}, {j}) out of range for n = {n}")]
    EdgeIndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("graph is disconnected: no path between sites {i} and {j}")]
    DisconnectedGraph { i: usize, j: usize },
    #[error("distance d[{i}][{j}] = {value} violates matrix requirements")]
    InvalidDistance { i: usize, j: usize, value: f64 },
    #[error("p = {p} outside the valid range [2, {n}]")]
    InvalidP { p: usize, n: usize },
    #[error("stratum {s} is empty")]
    EmptyStratum { s: usize },
    #[error("stratum {s} refers to site {site} outside 1..={n}")]
    IndexOutOfRange { s: usize, site: usize, n: usize },
    #[error("strata sampling failed after {retries} retries")]
    StrataSamplingFailed { retries: usize },
    #[error("bad strata weights: {0}")]
    BadWeights(String),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("malformed strata file: {0}")]
    MalformedStrata(String),
}

/// Comparator for distance values. Integral inputs compare exactly;
/// floating inputs use a relative tolerance so ladder deduplication and
/// strict threshold sums behave predictably.
#[derive(Debug, Clone, Copy)]
pub struct DistCmp {
    integral: bool,
}

impl DistCmp {
    pub const TOL: f64 = 1e-9;

    pub fn new(integral: bool) -> Self {
        DistCmp { integral }
    }

    pub fn eq(&self, a: f64, b: f64) -> bool {
        if self.integral {
            a == b
        } else {
            (a - b).abs() <= Self::TOL * a.abs().max(b.abs()).max(1.0)
        }
    }

    /// Strictly less, i.e. `a < b` and not equal under the tolerance.
    pub fn lt(&self, a: f64, b: f64) -> bool {
        a < b && !self.eq(a, b)
    }

    pub fn le(&self, a: f64, b: f64) -> bool {
        a < b || self.eq(a, b)
    }
}

/// Full matrix of pairwise distances. `d[i][i] = 0`, off-diagonal entries
/// positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    integral: bool,
}

impl DistanceMatrix {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self, InstanceError> {
        if n == 0 || d.len() != n * n {
            return Err(InstanceError::MalformedMatrix(format!(
                "expected {} entries for n = {}, got {}",
                n * n,
                n,
                d.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || (i == j && v != 0.0) || (i != j && v <= 0.0) {
                    return Err(InstanceError::InvalidDistance { i: i + 1, j: j + 1, value: v });
                }
            }
        }
        let integral = d.iter().all(|v| v.fract() == 0.0 && v.abs() < 2f64.powi(52));
        Ok(DistanceMatrix { n, d, integral })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Row `i` as a slice: distances from site `i` to every site.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn cmp(&self) -> DistCmp {
        DistCmp::new(self.integral)
    }

    /// Parse the explicit-matrix text format: first line `n`, then `n`
    /// whitespace-separated rows of `n` entries.
    pub fn from_text(text: &str) -> Result<Self, InstanceError> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| InstanceError::MalformedMatrix("empty input".into()))?
            .parse()
            .map_err(|e| InstanceError::MalformedMatrix(format!("bad site count: {e}")))?;
        let mut d = Vec::with_capacity(n * n);
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|e| InstanceError::MalformedMatrix(format!("bad entry {tok:?}: {e}")))?;
            d.push(v);
        }
        DistanceMatrix::new(n, d)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// A family of site subsets with nonnegative weights of positive sum.
/// Members are sorted, deduplicated, 0-based site ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataSet {
    members: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StrataFile {
    weights: Vec<f64>,
    members: Vec<Vec<usize>>,
}

impl StrataSet {
    pub fn new(members: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self, InstanceError> {
        if members.is_empty() {
            return Err(InstanceError::MalformedStrata("no strata".into()));
        }
        if members.len() != weights.len() {
            return Err(InstanceError::BadWeights(format!(
                "{} weights for {} strata",
                weights.len(),
                members.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(InstanceError::BadWeights("weights must be nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(InstanceError::BadWeights("weights must have positive sum".into()));
        }
        let mut sorted = Vec::with_capacity(members.len());
        for (s, mut m) in members.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            if m.is_empty() {
                return Err(InstanceError::EmptyStratum { s });
            }
            sorted.push(m);
        }
        Ok(StrataSet { members: sorted, weights })
    }

    /// One stratum containing all `n` sites with weight 1; the problem then
    /// degenerates to the classic p-center problem.
    pub fn single(n: usize) -> Self {
        StrataSet { members: vec![(0..n).collect()], weights: vec![1.0] }
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, s: usize) -> &[usize] {
        &self.members[s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), InstanceError> {
        if weights.len() != self.members.len() {
            return Err(InstanceError::BadWeights(format!(
                "{} weights for {} strata",
                weights.len(),
                self.members.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(InstanceError::BadWeights("weights must be nonnegative with positive sum".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn contains(&self, s: usize, site: usize) -> bool {
        self.members[s].binary_search(&site).is_ok()
    }

    pub fn indicator(&self, s: usize, n: usize) -> Vec<bool> {
        let mut ind = vec![false; n];
        for &i in &self.members[s] {
            if i < n {
                ind[i] = true;
            }
        }
        ind
    }

    /// Parse the strata JSON format: `{"weights": [...], "members": [[...], ...]}`
    /// with 1-based site ids.
    pub fn from_json_str(text: &str) -> Result<Self, InstanceError> {
        let file: StrataFile = serde_json::from_str(text)
            .map_err(|e| InstanceError::MalformedStrata(e.to_string()))?;
        let members = file
            .members
            .into_iter()
            .enumerate()
            .map(|(s, m)| {
                m.into_iter()
                    .map(|site| {
                        if site == 0 {
                            Err(InstanceError::IndexOutOfRange { s, site: 0, n: usize::MAX })
                        } else {
                            Ok(site - 1)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        StrataSet::new(members, file.weights)
    }

    pub fn to_json_string(&self) -> String {
        let file = StrataFile {
            weights: self.weights.clone(),
            members: self
                .members
                .iter()
                .map(|m| m.iter().map(|i| i + 1).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("strata serialize")
    }
}

/// A validated problem instance: distances, strata, and the center count.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dm: DistanceMatrix,
    pub strata: StrataSet,
    pub p: usize,
}

impl Instance {
    pub fn new(dm: DistanceMatrix, strata: StrataSet, p: usize) -> Result<Self, InstanceError> {
        let n = dm.n();
        if p < 2 || p > n {
            return Err(InstanceError::InvalidP { p, n });
        }
        for s in 0..strata.count() {
            if let Some(&site) = strata.members(s).iter().find(|&&i| i >= n) {
                return Err(InstanceError::IndexOutOfRange { s, site: site + 1, n });
            }
        }
        Ok(Instance { dm, strata, p })
    }

    pub fn n(&self) -> usize {
        self.dm.n()
    }

    pub fn num_strata(&self) -> usize {
        self.strata.count()
    }
}

//! Random strata generation.
//!
//! Each site gets a presence probability `q_i`, drawn once; each stratum then
//! includes site `i` when an independent uniform draw lands below `q_i`.
//! Strata that come out empty are redrawn, up to a retry cap.

use rand::Rng;

use super::{InstanceError, StrataSet};
use crate::rng::stream;

const RETRY_CAP: usize = 1000;

/// Sample `s_count` strata over `n` sites with `q_i ~ U(0,1)` and uniform
/// weights `1/s_count`. Pure function of `(n, s_count, seed)`.
pub fn sample_strata(n: usize, s_count: usize, seed: u64) -> Result<StrataSet, InstanceError> {
    let mut rng = stream(seed, "strata-q", 0);
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(f64::MIN_POSITIVE..1.0)).collect();
    sample_strata_from_q(&q, s_count, seed)
}

/// Same sampling with an explicit per-site probability vector (also the
/// scenario generator for the probabilistic variant).
pub fn sample_strata_from_q(q: &[f64], s_count: usize, seed: u64) -> Result<StrataSet, InstanceError> {
    assert!(s_count >= 1, "need at least one stratum");
    assert!(!q.is_empty(), "need at least one site");
    let mut members = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let mut rng = stream(seed, "strata-members", s as u64);
        let mut stratum = Vec::new();
        let mut retries = 0;
        loop {
            stratum.clear();
            for (i, &qi) in q.iter().enumerate() {
                if rng.gen::<f64>() < qi {
                    stratum.push(i);
                }
            }
            if !stratum.is_empty() {
                break;
            }
            retries += 1;
            if retries >= RETRY_CAP {
                return Err(InstanceError::StrataSamplingFailed { retries });
            }
        }
        members.push(stratum);
    }
    let w = 1.0 / s_count as f64;
    StrataSet::new(members, vec![w; s_count])
}

//! Deterministic random instances for tests, benchmarks, and batch runs:
//! connected graphs with integer edge costs, expanded to shortest-path
//! matrices, with sampled strata.

use rand::Rng;

use crate::instance::orlib::{all_pairs_shortest, RawGraph};
use crate::instance::sample::sample_strata;
use crate::instance::Instance;
use crate::rng::stream;
use crate::saa::PpcpInstance;

/// Random connected graph: a random spanning tree plus `extra` chords, edge
/// costs uniform in `1..=max_cost`.
pub fn random_connected_graph(n: usize, extra: usize, max_cost: u64, seed: u64) -> RawGraph {
    assert!(n >= 2);
    let mut rng = stream(seed, "gen-graph", 0);
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        seen.insert((parent.min(i), parent.max(i)));
        edges.push((i, parent, rng.gen_range(1..=max_cost)));
    }
    let complete = n * (n - 1) / 2;
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && seen.len() < complete && attempts < 50 * (extra + 1) {
        attempts += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a, b, rng.gen_range(1..=max_cost)));
            added += 1;
        }
    }
    RawGraph { n, p_default: 2, edges }
}

/// Random instance: graph distances plus sampled strata with uniform weights.
pub fn random_instance(n: usize, p: usize, s_count: usize, seed: u64) -> Instance {
    let graph = random_connected_graph(n, n, 20, seed);
    let dm = all_pairs_shortest(&graph).expect("generated graph is connected");
    let strata = sample_strata(n, s_count, seed ^ 0x5747_4154).expect("sampling succeeds");
    Instance::new(dm, strata, p).expect("generated instance is valid")
}

/// Random probabilistic instance with demand probabilities in (0, 1).
pub fn random_ppcp(n: usize, p: usize, seed: u64) -> PpcpInstance {
    let graph = random_connected_graph(n, n, 20, seed);
    let dm = all_pairs_shortest(&graph).expect("generated graph is connected");
    let mut rng = stream(seed, "gen-q", 0);
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    PpcpInstance::new(dm, p, q).expect("generated instance is valid")
}

//! ORLIB `pmed`-style graph files and shortest-path expansion.
//!
//! Format: a header `n m p`, followed by `m` lines `i j cost` with 1-based
//! site ids and nonnegative integer costs. Distances are all-pairs shortest
//! paths over the (undirected) edge set.

use super::{DistanceMatrix, InstanceError};

/// An edge-list graph as read from a pmed file. Site ids are stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGraph {
    pub n: usize,
    pub p_default: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

/// Parse a pmed file. Rejects short/overlong lines, out-of-range endpoints,
/// and repeated unordered pairs.
pub fn parse_orlib(text: &str) -> Result<RawGraph, InstanceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (line, header) = lines
        .next()
        .ok_or_else(|| InstanceError::MalformedHeader { line: 1, reason: "empty input".into() })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(InstanceError::MalformedHeader {
            line: line + 1,
            reason: format!("expected `n m p`, got {} fields", head.len()),
        });
    }
    let parse_field = |tok: &str, what: &str| -> Result<usize, InstanceError> {
        tok.parse().map_err(|e| InstanceError::MalformedHeader {
            line: line + 1,
            reason: format!("bad {what} {tok:?}: {e}"),
        })
    };
    let n = parse_field(head[0], "site count")?;
    let m = parse_field(head[1], "edge count")?;
    let p_default = parse_field(head[2], "center count")?;
    if n == 0 {
        return Err(InstanceError::MalformedHeader { line: line + 1, reason: "n = 0".into() });
    }

    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for (lineno, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(InstanceError::MalformedEdge {
                line: lineno + 1,
                reason: format!("expected `i j cost`, got {} fields", fields.len()),
            });
        }
        let bad = |what: &str, e: &dyn std::fmt::Display| InstanceError::MalformedEdge {
            line: lineno + 1,
            reason: format!("bad {what}: {e}"),
        };
        let i: usize = fields[0].parse().map_err(|e| bad("endpoint", &e))?;
        let j: usize = fields[1].parse().map_err(|e| bad("endpoint", &e))?;
        let cost: u64 = fields[2].parse().map_err(|e| bad("cost", &e))?;
        if i < 1 || i > n || j < 1 || j > n {
            return Err(InstanceError::EdgeIndexOutOfRange { i, j, n });
        }
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            return Err(InstanceError::DuplicateEdge { i, j });
        }
        edges.push((i - 1, j - 1, cost));
    }
    if edges.len() != m {
        return Err(InstanceError::MalformedEdge {
            line: 0,
            reason: format!("header announced {m} edges, found {}", edges.len()),
        });
    }
    Ok(RawGraph { n, p_default, edges })
}

impl RawGraph {
    /// Serialize back to the pmed text format (1-based ids, input edge order).
    pub fn to_orlib_string(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.edges.len(), self.p_default);
        for &(i, j, c) in &self.edges {
            out.push_str(&format!("{} {} {}\n", i + 1, j + 1, c));
        }
        out
    }
}

/// All-pairs shortest paths (Floyd-Warshall) over the undirected edge set.
pub fn all_pairs_shortest(g: &RawGraph) -> Result<DistanceMatrix, InstanceError> {
    let n = g.n;
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for &(i, j, c) in &g.edges {
        if i != j {
            let c = c as f64;
            if c < d[i * n + j] {
                d[i * n + j] = c;
                d[j * n + i] = c;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if !d[i * n + j].is_finite() {
                return Err(InstanceError::DisconnectedGraph { i: i + 1, j: j + 1 });
            }
        }
    }
    DistanceMatrix::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn parses_small_graph() {
        let g = parse_orlib("3 2 2\n1 2 5\n2 3 7\n").unwrap();
        assert_eq!(g.n, 3);
        assert_eq!(g.p_default, 2);
        assert_eq!(g.edges, vec![(0, 1, 5), (1, 2, 7)]);
    }

    #[test]
    fn rejects_out_of_range_edge() {
        let err = parse_orlib("3 1 2\n1 4 2\n").unwrap_err();
        assert!(matches!(err, InstanceError::EdgeIndexOutOfRange { i: 1, j: 4, n: 3 }));
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = parse_orlib("3 2 2\n1 2 5\n2 1 6\n").unwrap_err();
        assert!(matches!(err, InstanceError::DuplicateEdge { .. }));
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(parse_orlib("3 2\n"), Err(InstanceError::MalformedHeader { .. })));
        assert!(matches!(parse_orlib(""), Err(InstanceError::MalformedHeader { .. })));
    }

    #[test]
    fn path_graph_distances() {
        let g = parse_orlib("3 2 2\n1 2 5\n2 3 7\n").unwrap();
        let dm = all_pairs_shortest(&g).unwrap();
        assert_eq!(dm.dist(0, 2), 12.0);
        assert_eq!(dm.dist(2, 0), 12.0);
        for i in 0..3 {
            assert_eq!(dm.dist(i, i), 0.0);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = parse_orlib("4 2 2\n1 2 5\n3 4 7\n").unwrap();
        assert!(matches!(all_pairs_shortest(&g), Err(InstanceError::DisconnectedGraph { .. })));
    }

    #[test]
    fn round_trip_is_lossless() {
        let g = parse_orlib("4 3 2\n1 2 5\n2 3 7\n3 4 1\n").unwrap();
        let again = parse_orlib(&g.to_orlib_string()).unwrap();
        assert_eq!(g, again);
    }

    /// Independent oracle: Dijkstra from every source.
    fn dijkstra_all(g: &RawGraph) -> Vec<f64> {
        let n = g.n;
        let mut adj = vec![Vec::new(); n];
        for &(i, j, c) in &g.edges {
            adj[i].push((j, c as f64));
            adj[j].push((i, c as f64));
        }
        let mut out = vec![f64::INFINITY; n * n];
        for src in 0..n {
            let mut dist = vec![f64::INFINITY; n];
            let mut done = vec![false; n];
            dist[src] = 0.0;
            for _ in 0..n {
                let mut best = None;
                for v in 0..n {
                    if !done[v] && dist[v].is_finite() {
                        if best.map_or(true, |b: usize| dist[v] < dist[b]) {
                            best = Some(v);
                        }
                    }
                }
                let Some(u) = best else { break };
                done[u] = true;
                for &(v, c) in &adj[u] {
                    if dist[u] + c < dist[v] {
                        dist[v] = dist[u] + c;
                    }
                }
            }
            out[src * n..(src + 1) * n].copy_from_slice(&dist);
        }
        out
    }

    #[test]
    fn floyd_warshall_matches_dijkstra_oracle() {
        let mut rng = stream(11, "apsp-oracle", 0);
        for _ in 0..5 {
            let n = 8;
            let mut edges = Vec::new();
            for i in 1..n {
                let parent = rng.gen_range(0..i);
                edges.push((i, parent, rng.gen_range(1..=9u64)));
            }
            let mut seen: std::collections::HashSet<(usize, usize)> =
                edges.iter().map(|&(a, b, _)| (a.min(b), a.max(b))).collect();
            for _ in 0..6 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b && seen.insert((a.min(b), a.max(b))) {
                    edges.push((a, b, rng.gen_range(1..=9u64)));
                }
            }
            let g = RawGraph { n, p_default: 2, edges };
            let dm = all_pairs_shortest(&g).unwrap();
            let oracle = dijkstra_all(&g);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(dm.dist(i, j), oracle[i * n + j], "mismatch at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn triangle_inequality_holds() {
        let g = parse_orlib("5 6 2\n1 2 3\n2 3 4\n3 4 2\n4 5 6\n1 5 20\n2 4 9\n").unwrap();
        let dm = all_pairs_shortest(&g).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    assert!(dm.dist(i, j) <= dm.dist(i, k) + dm.dist(k, j) + 1e-12);
                }
            }
        }
    }
}

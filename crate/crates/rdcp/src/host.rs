//! Finite host graphs the process runs on.
//!
//! Hosts are simple undirected graphs with a mean-degree parameter `r_n`
//! that sets the exponential clock scale. Complete graphs above a size
//! threshold are kept implicit: adjacency is answered by formula and the
//! edge set is never enumerated (a complete graph on 1e5 vertices has about
//! 5e9 edges).

use crate::{Error, Result};

/// Above this vertex count a complete graph is stored implicitly.
pub const MATERIALIZE_THRESHOLD: usize = 2000;

/// Maximum pairing restarts for the configuration model.
pub const MAX_CONFIG_RESTARTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    Complete,
    CompleteBipartite,
    RandomRegular,
    Union,
    Explicit,
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FamilyTag::Complete => "complete",
            FamilyTag::CompleteBipartite => "complete_bipartite",
            FamilyTag::RandomRegular => "random_regular",
            FamilyTag::Union => "union",
            FamilyTag::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Sorted neighbor lists.
    Materialized(Vec<Vec<u32>>),
    /// Complete graph, adjacency answered by formula.
    ImplicitComplete,
}

/// A finite simple host graph.
#[derive(Debug, Clone)]
pub struct HostGraph {
    n: usize,
    repr: Repr,
    r_n: f64,
    tag: FamilyTag,
}

/// Diagnostic record for the almost-regularity of a host.
#[derive(Debug, Clone, Copy)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// Fraction of vertices with degree outside `(1 +- b) * r_n` for b = 0.01.
    pub outside_fraction: f64,
}

impl HostGraph {
    /// Complete graph `K_n` with `r_n = n - 1`.
    pub fn complete(n: usize) -> Result<Self> {
        Self::complete_with_threshold(n, MATERIALIZE_THRESHOLD)
    }

    /// `K_n` with an explicit materialization threshold (tests use small ones).
    pub fn complete_with_threshold(n: usize, threshold: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidHost(format!("complete graph needs n >= 2, got {n}")));
        }
        let repr = if n > threshold {
            Repr::ImplicitComplete
        } else {
            let adj = (0..n)
                .map(|v| (0..n as u32).filter(|&u| u as usize != v).collect())
                .collect();
            Repr::Materialized(adj)
        };
        Ok(Self { n, repr, r_n: (n - 1) as f64, tag: FamilyTag::Complete })
    }

    /// Complete bipartite graph `K_{n,n}` with `r_n = n`.
    pub fn complete_bipartite(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidHost(format!("bipartite half needs n >= 2, got {n}")));
        }
        let total = 2 * n;
        let mut adj = vec![Vec::new(); total];
        for v in 0..n {
            adj[v] = (n as u32..total as u32).collect();
        }
        for v in n..total {
            adj[v] = (0..n as u32).collect();
        }
        Ok(Self { n: total, repr: Repr::Materialized(adj), r_n: n as f64, tag: FamilyTag::CompleteBipartite })
    }

    /// Uniform-ish r-regular graph via configuration-model pairing with
    /// restart on self-loops or multi-edges, so the result is exactly
    /// r-regular and simple.
    pub fn random_regular(n: usize, r: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        if r >= n {
            return Err(Error::InvalidHost(format!("degree {r} must be below n = {n}")));
        }
        if n * r % 2 != 0 {
            return Err(Error::InvalidHost(format!("n * r = {n} * {r} is odd; no {r}-regular graph on {n} vertices")));
        }
        let mut stubs: Vec<u32> = Vec::with_capacity(n * r);
        'restart: for _attempt in 0..MAX_CONFIG_RESTARTS {
            stubs.clear();
            for v in 0..n as u32 {
                for _ in 0..r {
                    stubs.push(v);
                }
            }
            // Pair random stubs, redrawing on self-loops and multi-edges;
            // a full restart happens only when the leftover stubs deadlock.
            let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(r); n];
            let mut redraws = 0usize;
            while !stubs.is_empty() {
                let i = rng.random_range(0..stubs.len());
                let u = stubs.swap_remove(i);
                let j = rng.random_range(0..stubs.len());
                let v = stubs.swap_remove(j);
                if u == v || adj[u as usize].contains(&v) {
                    stubs.push(u);
                    stubs.push(v);
                    redraws += 1;
                    if redraws > 200 + 10 * n * r {
                        continue 'restart;
                    }
                    continue;
                }
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
            for list in adj.iter_mut() {
                list.sort_unstable();
            }
            return Ok(Self { n, repr: Repr::Materialized(adj), r_n: r as f64, tag: FamilyTag::RandomRegular });
        }
        Err(Error::InvalidHost(format!(
            "configuration model failed to produce a simple {r}-regular graph on {n} vertices after {MAX_CONFIG_RESTARTS} restarts"
        )))
    }

    /// Disjoint union of two hosts; reproduces the two-copies-of-`K_n`
    /// setting where several giant components coexist. The union of two
    /// regular graphs of equal degree is regular with the same `r_n`;
    /// otherwise `r_n` is the mean degree. Note the union is disconnected.
    pub fn disjoint_union(a: &HostGraph, b: &HostGraph) -> Result<Self> {
        let a_adj = a.materialized_adjacency()?;
        let b_adj = b.materialized_adjacency()?;
        let offset = a.n as u32;
        let mut adj = a_adj;
        adj.extend(b_adj.into_iter().map(|list| list.into_iter().map(|u| u + offset).collect::<Vec<_>>()));
        let n = adj.len();
        let degree_sum: usize = adj.iter().map(|l| l.len()).sum();
        let r_n = degree_sum as f64 / n as f64;
        Ok(Self { n, repr: Repr::Materialized(adj), r_n, tag: FamilyTag::Union })
    }

    /// Host from an explicit edge list (tests and small experiments).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidHost("empty vertex set".into()));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidHost(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidHost(format!("edge ({u},{v}) out of range")));
            }
            if adj[u].contains(&(v as u32)) {
                return Err(Error::InvalidHost(format!("duplicate edge ({u},{v})")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        let degree_sum: usize = adj.iter().map(|l| l.len()).sum();
        let r_n = degree_sum as f64 / n as f64;
        Ok(Self { n, repr: Repr::Materialized(adj), r_n, tag: FamilyTag::Explicit })
    }

    /// Parse CLI host spec strings: `complete:n`, `bipartite:n`,
    /// `regular:n:r`, `union:complete:n:complete:n`.
    pub fn from_spec_str(spec: &str, rng: &mut impl rand::Rng) -> Result<Self> {
        let tokens: Vec<&str> = spec.split(':').collect();
        let (host, used) = Self::parse_tokens(&tokens, rng)?;
        if used != tokens.len() {
            return Err(Error::Parse(format!("trailing tokens in host spec `{spec}`")));
        }
        Ok(host)
    }

    fn parse_tokens(tokens: &[&str], rng: &mut impl rand::Rng) -> Result<(Self, usize)> {
        let parse_num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse(format!("bad number `{s}` in host spec")))
        };
        match tokens.first() {
            Some(&"complete") => {
                let n = parse_num(tokens.get(1).ok_or_else(|| Error::Parse("complete:n".into()))?)?;
                Ok((Self::complete(n)?, 2))
            }
            Some(&"bipartite") => {
                let n = parse_num(tokens.get(1).ok_or_else(|| Error::Parse("bipartite:n".into()))?)?;
                Ok((Self::complete_bipartite(n)?, 2))
            }
            Some(&"regular") => {
                let n = parse_num(tokens.get(1).ok_or_else(|| Error::Parse("regular:n:r".into()))?)?;
                let r = parse_num(tokens.get(2).ok_or_else(|| Error::Parse("regular:n:r".into()))?)?;
                Ok((Self::random_regular(n, r, rng)?, 3))
            }
            Some(&"union") => {
                let (a, used_a) = Self::parse_tokens(&tokens[1..], rng)?;
                let (b, used_b) = Self::parse_tokens(&tokens[1 + used_a..], rng)?;
                Ok((Self::disjoint_union(&a, &b)?, 1 + used_a + used_b))
            }
            Some(other) => Err(Error::Parse(format!("unknown host family `{other}`"))),
            None => Err(Error::Parse("empty host spec".into())),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn r_n(&self) -> f64 {
        self.r_n
    }

    pub fn family_tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.repr, Repr::ImplicitComplete)
    }

    pub fn degree(&self, v: usize) -> usize {
        match &self.repr {
            Repr::Materialized(adj) => adj[v].len(),
            Repr::ImplicitComplete => self.n - 1,
        }
    }

    /// Neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> Vec<u32> {
        match &self.repr {
            Repr::Materialized(adj) => adj[v].clone(),
            Repr::ImplicitComplete => (0..self.n as u32).filter(|&u| u as usize != v).collect(),
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        match &self.repr {
            Repr::Materialized(adj) => adj[u].binary_search(&(v as u32)).is_ok(),
            Repr::ImplicitComplete => true,
        }
    }

    pub fn edge_count(&self) -> usize {
        match &self.repr {
            Repr::Materialized(adj) => adj.iter().map(|l| l.len()).sum::<usize>() / 2,
            Repr::ImplicitComplete => self.n * (self.n - 1) / 2,
        }
    }

    /// Edge list `(u, v)` with `u < v`. Errors for implicit hosts, whose
    /// edges must never be enumerated.
    pub fn edges(&self) -> Result<Vec<(u32, u32)>> {
        match &self.repr {
            Repr::Materialized(adj) => {
                let mut es = Vec::with_capacity(self.edge_count());
                for (v, list) in adj.iter().enumerate() {
                    for &u in list {
                        if (v as u32) < u {
                            es.push((v as u32, u));
                        }
                    }
                }
                Ok(es)
            }
            Repr::ImplicitComplete => Err(Error::InvalidHost(
                "refusing to enumerate edges of an implicit complete graph".into(),
            )),
        }
    }

    fn materialized_adjacency(&self) -> Result<Vec<Vec<u32>>> {
        match &self.repr {
            Repr::Materialized(adj) => Ok(adj.clone()),
            Repr::ImplicitComplete => Err(Error::InvalidHost(
                "implicit complete graphs cannot join a disjoint union".into(),
            )),
        }
    }

    /// Almost-regularity diagnostics with band `b = 0.01`.
    pub fn degree_stats(&self) -> DegreeStats {
        match &self.repr {
            Repr::ImplicitComplete => DegreeStats {
                min: self.n - 1,
                max: self.n - 1,
                mean: (self.n - 1) as f64,
                outside_fraction: 0.0,
            },
            Repr::Materialized(adj) => {
                let b = 0.01;
                let lo = (1.0 - b) * self.r_n;
                let hi = (1.0 + b) * self.r_n;
                let mut min = usize::MAX;
                let mut max = 0usize;
                let mut sum = 0usize;
                let mut outside = 0usize;
                for list in adj {
                    let d = list.len();
                    min = min.min(d);
                    max = max.max(d);
                    sum += d;
                    if (d as f64) < lo || (d as f64) > hi {
                        outside += 1;
                    }
                }
                DegreeStats {
                    min,
                    max,
                    mean: sum as f64 / self.n as f64,
                    outside_fraction: outside as f64 / self.n as f64,
                }
            }
        }
    }

    /// True when every vertex is reachable from vertex 0 (BFS).
    pub fn is_connected(&self) -> bool {
        if self.is_implicit() {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                let u = u as usize;
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn complete_small() {
        let h = HostGraph::complete(4).unwrap();
        assert_eq!(h.edge_count(), 6);
        assert!((0..4).all(|v| h.degree(v) == 3));
        assert_eq!(h.r_n(), 3.0);
        assert!(HostGraph::complete(1).is_err());
    }

    #[test]
    fn bipartite_small() {
        let h = HostGraph::complete_bipartite(3).unwrap();
        assert_eq!(h.n_vertices(), 6);
        assert_eq!(h.edge_count(), 9);
        assert!((0..6).all(|v| h.degree(v) == 3));
        assert!(!h.has_edge(0, 1));
        assert!(h.has_edge(0, 3));
    }

    #[test]
    fn implicit_representation() {
        let h = HostGraph::complete(100_000).unwrap();
        assert!(h.is_implicit());
        assert_eq!(h.degree(0), 99_999);
        assert!(h.has_edge(3, 77));
        assert!(h.edges().is_err());
        let stats = h.degree_stats();
        assert_eq!(stats.min, 99_999);
        assert_eq!(stats.outside_fraction, 0.0);
    }

    #[test]
    fn regular_degrees() {
        let mut rng = stream_rng(5, 0);
        let h = HostGraph::random_regular(10, 3, &mut rng).unwrap();
        assert!((0..10).all(|v| h.degree(v) == 3));
        assert!(HostGraph::random_regular(5, 3, &mut rng).is_err());
    }

    #[test]
    fn regular_instances_simple_and_connected() {
        // r-regular graphs with r >= 3 are connected with high probability;
        // 50 seeded instances at n = 1000, r = 20 should all connect.
        for seed in 0..50 {
            let mut rng = stream_rng(seed, 0);
            let h = HostGraph::random_regular(1000, 20, &mut rng).unwrap();
            let stats = h.degree_stats();
            assert_eq!(stats.min, 20);
            assert_eq!(stats.max, 20);
            assert!(h.is_connected(), "seed {seed} disconnected");
        }
    }

    #[test]
    fn union_of_two_complete() {
        let a = HostGraph::complete(50).unwrap();
        let h = HostGraph::disjoint_union(&a, &a).unwrap();
        assert_eq!(h.n_vertices(), 100);
        assert_eq!(h.r_n(), 49.0);
        assert_eq!(h.degree_stats().outside_fraction, 0.0);
        assert!(!h.is_connected());
        assert_eq!(h.family_tag(), FamilyTag::Union);
    }

    #[test]
    fn degree_stats_complete() {
        let h = HostGraph::complete(100).unwrap();
        let s = h.degree_stats();
        assert_eq!((s.min, s.max), (99, 99));
        assert_eq!(s.mean, 99.0);
        assert_eq!(s.outside_fraction, 0.0);
    }

    #[test]
    fn adjacency_matches_edge_list() {
        // Exhaustive agreement between neighbor queries and the edge list.
        let mut rng = stream_rng(11, 0);
        for host in [
            HostGraph::complete(20).unwrap(),
            HostGraph::complete_bipartite(7).unwrap(),
            HostGraph::random_regular(24, 5, &mut rng).unwrap(),
        ] {
            let edges = host.edges().unwrap();
            for u in 0..host.n_vertices() {
                for v in 0..host.n_vertices() {
                    let in_list = edges
                        .iter()
                        .any(|&(a, b)| (a as usize, b as usize) == (u.min(v), u.max(v)));
                    assert_eq!(host.has_edge(u, v), in_list && u != v);
                }
            }
        }
    }

    #[test]
    fn construction_deterministic_under_seed() {
        let h1 = HostGraph::random_regular(60, 4, &mut stream_rng(3, 1)).unwrap();
        let h2 = HostGraph::random_regular(60, 4, &mut stream_rng(3, 1)).unwrap();
        assert_eq!(h1.edges().unwrap(), h2.edges().unwrap());
    }

    #[test]
    fn spec_strings() {
        let mut rng = stream_rng(0, 0);
        assert_eq!(HostGraph::from_spec_str("complete:10", &mut rng).unwrap().n_vertices(), 10);
        assert_eq!(HostGraph::from_spec_str("bipartite:4", &mut rng).unwrap().n_vertices(), 8);
        assert_eq!(HostGraph::from_spec_str("regular:10:3", &mut rng).unwrap().n_vertices(), 10);
        let u = HostGraph::from_spec_str("union:complete:30:complete:30", &mut rng).unwrap();
        assert_eq!(u.n_vertices(), 60);
        assert!(HostGraph::from_spec_str("regular:5:3", &mut rng).is_err());
        assert!(HostGraph::from_spec_str("torus:5", &mut rng).is_err());
        assert!(HostGraph::from_spec_str("complete:10:junk", &mut rng).is_err());
    }
}

//! Samplers for the local weak limit object, two independent ways.
//!
//! The limit of the RDCP around a uniform vertex is a random rooted tree.
//! This module draws it
//!
//! 1. as an explicit multi-type branching process: the root's type (its
//!    phantom saturation time) has density `f`, its degree constraint the
//!    mass function `p_k^t ~ z_{k-1}^t`, the root gets `d` children (the
//!    `d`-th arriving exactly at the root's type with a truncated-`f`
//!    type), every later vertex of type `t0` gets `d - 1` children with
//!    `(label, type)` pairs drawn from the density `f(s) / lambda(t0)` on
//!    `{0 <= t <= t0, t <= s}`, and only edges with label below `t_hat`
//!    are kept; and
//! 2. by running the two-phase exploration on a fresh Poisson weighted
//!    infinite tree (unit-intensity arrival clocks) followed by the leaf
//!    recursion of `explore`, an independent construction whose radius-R
//!    ball has the same law.
//!
//! Canonical codes turn sampled balls into isomorphism classes for
//! empirical neighborhood censuses; total variation between censuses is
//! the cross-validation metric.

use std::collections::BTreeMap;

use crate::dist::DegreeDistribution;
use crate::explore::{kept_ball_edges, resolve_phantom_times, LabelledTree};
use crate::ode::LambdaSolution;
use crate::rng::exp_mean;
use crate::sim::RootedBall;
use crate::{Error, Result};

/// One vertex of a sampled limit tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    /// Type: the phantom saturation time (truncated at the exploration
    /// window for trees coming from `pwit_explore`).
    pub phantom_time: f64,
    pub constraint: u32,
    /// Incoming edge label; meaningless at the root.
    pub edge_label: f64,
    pub depth: usize,
}

/// A rooted edge-labelled tree sampled from the limit object.
#[derive(Debug, Clone)]
pub struct SampledTree {
    pub nodes: Vec<TreeNode>,
    /// Set when the node cap cut the sample short (meaningful for
    /// whole-component statistics; radius-limited censuses set
    /// `max_depth = R`, where the cut is exact, never approximate).
    pub truncated: bool,
}

impl SampledTree {
    pub fn root_degree(&self) -> usize {
        self.nodes[0].children.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Node/depth caps for component sampling.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_nodes: 1_000_000, max_depth: usize::MAX }
    }
}

/// The recursive map behind the phantom saturation times: accept arrivals
/// whose child was still unsaturated, and return the arrival that fills
/// slot `D`. `None` when the stream ends first (caller extends it).
pub fn rde_chi(arrivals: &[f64], d: usize, child_types: &[f64]) -> Option<f64> {
    let mut accepted = 0usize;
    for (j, &tau) in arrivals.iter().enumerate() {
        let t_j = *child_types.get(j)?;
        if tau < t_j {
            accepted += 1;
            if accepted == d {
                return Some(tau);
            }
        }
    }
    None
}

/// Draw the root's type from the density `f` by inverting its CDF
/// `1 - lambda'`; draws beyond the solved horizon (mass below the solver
/// cutoff, ~1e-8) clamp to the horizon.
pub fn sample_root_type(sol: &LambdaSolution, rng: &mut impl rand::Rng) -> f64 {
    let u: f64 = rng.random();
    sol.lambda_prime_inverse(1.0 - u)
}

/// Draw a degree constraint for a vertex of type `t0` from
/// `p_k^t ~ lambda^{k-1}/(k-1)! * p_k`.
pub fn sample_constraint_given_type(
    sol: &LambdaSolution,
    dist: &DegreeDistribution,
    t0: f64,
    rng: &mut impl rand::Rng,
) -> u32 {
    let lam = sol.lambda(t0);
    let delta = dist.delta_max();
    let mut weights = Vec::with_capacity(delta - 1);
    let mut term = 1.0f64; // lambda^{k-1} / (k-1)! up to a common factor
    let mut total = 0.0f64;
    for k in 2..=delta {
        if k > 2 {
            term *= lam / (k - 1) as f64;
        }
        let w = term * dist.pmf(k);
        weights.push(w);
        total += w;
    }
    if total <= 0.0 {
        return dist.min_support() as u32;
    }
    let mut u: f64 = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return (i + 2) as u32;
        }
    }
    delta as u32
}

/// Root type and degree constraint of one MTBP draw.
pub fn mtbp_root(
    sol: &LambdaSolution,
    dist: &DegreeDistribution,
    rng: &mut impl rand::Rng,
) -> (f64, u32) {
    let t = sample_root_type(sol, rng);
    let d = sample_constraint_given_type(sol, dist, t, rng);
    (t, d)
}

/// Type of the root's `d`-th child: density `f` truncated to `(t0, inf)`.
pub fn sample_truncated_type(sol: &LambdaSolution, t0: f64, rng: &mut impl rand::Rng) -> f64 {
    let u: f64 = rng.random();
    sol.lambda_prime_inverse(sol.lambda_prime(t0) * (1.0 - u))
}

/// One `(label, type)` pair from the joint density `f(s)/lambda(t0)` on
/// `{0 <= t <= t0, t <= s}`: the type comes from the marginal proportional
/// to `f(s) * min(t0, s)` by inverse CDF, the label uniformly on
/// `[0, min(t0, s)]`.
pub fn sample_child_pair(
    sol: &LambdaSolution,
    t0: f64,
    rng: &mut impl rand::Rng,
) -> (f64, f64) {
    let lam0 = sol.lambda(t0);
    let u: f64 = rng.random();
    let target = u * lam0;
    let below_t0 = lam0 - t0 * sol.lambda_prime(t0); // CDF mass of s <= t0
    let s = if target <= below_t0 {
        crate::ode::bisect(
            |s| sol.lambda(s) - s * sol.lambda_prime(s) - target,
            0.0,
            t0,
            1e-13,
        )
    } else {
        // remaining mass: t0 * lambda'(s) = lam0 - target on s >= t0
        sol.lambda_prime_inverse((lam0 - target) / t0)
    };
    let cap = t0.min(s);
    let tau: f64 = rng.random::<f64>() * cap;
    (tau, s)
}

/// Children `(label, type)` pairs of a vertex, sorted by label. The root
/// additionally gets its `d`-th child at label exactly `t0` with a
/// truncated-`f` type (that child arrives last: all other labels are
/// below `t0`).
pub fn mtbp_children(
    sol: &LambdaSolution,
    t0: f64,
    constraint: u32,
    is_root: bool,
    rng: &mut impl rand::Rng,
) -> Vec<(f64, f64)> {
    let free = constraint as usize - 1;
    let mut pairs: Vec<(f64, f64)> =
        (0..free).map(|_| sample_child_pair(sol, t0, rng)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if is_root {
        pairs.push((t0, sample_truncated_type(sol, t0, rng)));
    }
    pairs
}

/// Sample the root component of the limit object at time `t_hat` (may be
/// `f64::INFINITY`) as the MTBP, pruning edges with label >= `t_hat`.
pub fn mtbp_component(
    sol: &LambdaSolution,
    dist: &DegreeDistribution,
    t_hat: f64,
    caps: Caps,
    rng: &mut impl rand::Rng,
) -> SampledTree {
    let root_type = sample_root_type(sol, rng);
    let root_constraint = sample_constraint_given_type(sol, dist, root_type, rng);
    let mut nodes = vec![TreeNode {
        parent: None,
        children: Vec::new(),
        phantom_time: root_type,
        constraint: root_constraint,
        edge_label: f64::NEG_INFINITY,
        depth: 0,
    }];
    let mut truncated = false;
    let mut head = 0usize;
    while head < nodes.len() {
        let idx = head;
        head += 1;
        if nodes[idx].depth >= caps.max_depth {
            continue;
        }
        let pairs =
            mtbp_children(sol, nodes[idx].phantom_time, nodes[idx].constraint, idx == 0, rng);
        for (label, child_type) in pairs {
            if label >= t_hat {
                continue; // pruned together with its whole subtree
            }
            if nodes.len() >= caps.max_nodes {
                truncated = true;
                return SampledTree { nodes, truncated };
            }
            let constraint = sample_constraint_given_type(sol, dist, child_type, rng);
            let cid = nodes.len() as u32;
            nodes.push(TreeNode {
                parent: Some(idx as u32),
                children: Vec::new(),
                phantom_time: child_type,
                constraint,
                edge_label: label,
                depth: nodes[idx].depth + 1,
            });
            nodes[idx].children.push(cid);
        }
    }
    SampledTree { nodes, truncated }
}

/// Sample the radius-R ball of the limit object by exploring a fresh
/// Poisson weighted infinite tree in two phases and running the leaf
/// recursion. Requires a finite `t_hat` (the BFS phase truncates arrivals
/// there; the final graph is the MTBP sampler's job). Independent of
/// `mtbp_component`: only the degree distribution and unit-rate clocks
/// enter, never the lambda solution.
pub fn pwit_explore(
    dist: &DegreeDistribution,
    t_hat: f64,
    radius: usize,
    caps: Caps,
    rng: &mut impl rand::Rng,
) -> Result<SampledTree> {
    if !t_hat.is_finite() || t_hat < 0.0 {
        return Err(Error::Simulation(format!(
            "pwit exploration needs a finite nonnegative t_hat, got {t_hat}"
        )));
    }
    let mut tree = LabelledTree::with_root(dist.sample(rng) as u32);
    let mut head = 0usize;
    while head < tree.len() {
        let idx = head;
        head += 1;
        let depth = tree.depths[idx];
        let window = if depth <= radius { t_hat } else { tree.labels[idx] };
        let mut t = 0.0f64;
        loop {
            t += exp_mean(rng, 1.0);
            if t > window {
                break;
            }
            if tree.len() >= caps.max_nodes {
                return Err(Error::Simulation(format!(
                    "pwit exploration exceeded the {} node cap",
                    caps.max_nodes
                )));
            }
            tree.push_child(idx as u32, t, dist.sample(rng) as u32);
        }
    }
    let trunc = resolve_phantom_times(&tree);
    let kept = kept_ball_edges(&tree, &trunc, t_hat, radius);

    // Re-index the kept ball as a SampledTree.
    let capped = |i: usize| trunc[i].map_or(t_hat, |s| s.min(t_hat));
    let mut nodes = vec![TreeNode {
        parent: None,
        children: Vec::new(),
        phantom_time: capped(0),
        constraint: tree.constraints[0],
        edge_label: f64::NEG_INFINITY,
        depth: 0,
    }];
    let mut new_id = vec![u32::MAX; tree.len()];
    new_id[0] = 0;
    for (p, c) in kept {
        let np = new_id[p as usize];
        debug_assert!(np != u32::MAX, "kept edges arrive parents-first");
        let nid = nodes.len() as u32;
        new_id[c as usize] = nid;
        nodes.push(TreeNode {
            parent: Some(np),
            children: Vec::new(),
            phantom_time: capped(c as usize),
            constraint: tree.constraints[c as usize],
            edge_label: tree.labels[c as usize],
            depth: nodes[np as usize].depth + 1,
        });
        nodes[np as usize].children.push(nid);
    }
    Ok(SampledTree { nodes, truncated: false })
}

// ---------------------------------------------------------------------
// Canonical codes

/// AHU canonical code of a rooted tree given by children lists (root 0):
/// a node's code is `(` + its children's codes in sorted order + `)`.
pub fn canonical_code_tree(children: &[Vec<u32>]) -> Vec<u8> {
    fn code_of(v: usize, children: &[Vec<u32>], out: &mut Vec<u8>) {
        let mut child_codes: Vec<Vec<u8>> = children[v]
            .iter()
            .map(|&c| {
                let mut buf = Vec::new();
                code_of(c as usize, children, &mut buf);
                buf
            })
            .collect();
        child_codes.sort();
        out.push(b'(');
        for c in child_codes {
            out.extend_from_slice(&c);
        }
        out.push(b')');
    }
    let mut out = vec![b'T'];
    code_of(0, children, &mut out);
    out
}

/// Canonical code of a small rooted graph (balls cut from finite
/// simulations occasionally contain cycles). Trees take the AHU path;
/// otherwise the minimal adjacency encoding over depth- and
/// refinement-respecting relabelings is returned. Root-preserving
/// isomorphisms preserve BFS depth and refinement classes, so restricting
/// the search keeps the code canonical, and the balls are tiny.
pub fn canonical_code_ball(ball: &RootedBall) -> Vec<u8> {
    let n = ball.depth.len();
    if ball.edges.len() + 1 == n {
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in &ball.edges {
            let (p, c) = if ball.depth[a as usize] <= ball.depth[b as usize] {
                (a, b)
            } else {
                (b, a)
            };
            children[p as usize].push(c);
        }
        return canonical_code_tree(&children);
    }

    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in &ball.edges {
        adj[a as usize][b as usize] = true;
        adj[b as usize][a as usize] = true;
    }
    // Refine (depth, degree) classes by neighbor-class multisets until
    // stable; root-preserving isomorphisms respect them.
    let mut class: Vec<u64> = (0..n)
        .map(|v| {
            let deg = adj[v].iter().filter(|&&b| b).count();
            ((ball.depth[v] as u64) << 32) | deg as u64
        })
        .collect();
    loop {
        let sigs: Vec<(u64, Vec<u64>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u64> = (0..n).filter(|&u| adj[v][u]).map(|u| class[u]).collect();
                nb.sort_unstable();
                (class[v], nb)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        let relabel: std::collections::HashMap<&(u64, Vec<u64>), u64> =
            sorted.iter().enumerate().map(|(i, s)| (s, i as u64)).collect();
        let new_class: Vec<u64> = sigs.iter().map(|s| relabel[s]).collect();
        if new_class == class {
            break;
        }
        class = new_class;
    }

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        groups.entry(class[v]).or_default().push(v);
    }
    let group_list: Vec<Vec<usize>> = groups.into_values().collect();
    let search: usize =
        group_list.iter().map(|g| (1..=g.len()).product::<usize>()).product();
    assert!(search <= 1_000_000, "ball too symmetric to canonicalize exhaustively");

    let encode = |order: &[usize]| -> Vec<u8> {
        let mut bits = Vec::with_capacity(n * n / 16 + 1);
        let mut acc = 0u8;
        let mut nbits = 0;
        for i in 0..n {
            for j in i + 1..n {
                acc = (acc << 1) | adj[order[i]][order[j]] as u8;
                nbits += 1;
                if nbits == 8 {
                    bits.push(acc);
                    acc = 0;
                    nbits = 0;
                }
            }
        }
        if nbits > 0 {
            bits.push(acc << (8 - nbits));
        }
        bits
    };

    fn permute_all(items: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute_all(items, k + 1, f);
            items.swap(k, i);
        }
    }

    fn permute_groups(
        groups: &[Vec<usize>],
        gi: usize,
        order: &mut Vec<usize>,
        best: &mut Option<Vec<u8>>,
        encode: &impl Fn(&[usize]) -> Vec<u8>,
    ) {
        if gi == groups.len() {
            let code = encode(order);
            if best.as_ref().map_or(true, |b| code < *b) {
                *best = Some(code);
            }
            return;
        }
        let mut group = groups[gi].clone();
        let len_before = order.len();
        permute_all(&mut group, 0, &mut |perm| {
            order.extend_from_slice(perm);
            permute_groups(groups, gi + 1, order, best, encode);
            order.truncate(len_before);
        });
    }

    let mut best = None;
    let mut order = Vec::with_capacity(n);
    permute_groups(&group_list, 0, &mut order, &mut best, &encode);

    let mut out = vec![b'G', n as u8];
    out.extend_from_slice(&best.unwrap());
    out
}

/// Canonical code of the radius-R ball around `v` in a simulated RDCP
/// graph given by adjacency lists (the isomorphism-class key used by
/// neighborhood censuses; edge labels play no part).
pub fn neighborhood_code(adj: &[Vec<u32>], v: usize, radius: usize) -> Vec<u8> {
    canonical_code_ball(&crate::sim::extract_ball(adj, v, radius))
}

/// Code of a sampled limit tree's radius-R ball (labels dropped).
pub fn tree_ball_code(tree: &SampledTree, radius: usize) -> Vec<u8> {
    let keep: Vec<bool> = tree.nodes.iter().map(|n| n.depth <= radius).collect();
    let children: Vec<Vec<u32>> = tree
        .nodes
        .iter()
        .map(|n| n.children.iter().copied().filter(|&c| keep[c as usize]).collect())
        .collect();
    canonical_code_tree(&children)
}

// ---------------------------------------------------------------------
// Censuses

/// Empirical distribution over canonical codes; frequencies sum to one.
pub type Census = BTreeMap<Vec<u8>, f64>;

pub fn census_from_codes(codes: impl IntoIterator<Item = Vec<u8>>) -> Census {
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let mut total = 0u64;
    for code in codes {
        *counts.entry(code).or_default() += 1;
        total += 1;
    }
    counts.into_iter().map(|(k, v)| (k, v as f64 / total.max(1) as f64)).collect()
}

/// Total variation distance between two censuses, in `[0, 1]`.
pub fn tv_distance(a: &Census, b: &Census) -> f64 {
    let mut keys: std::collections::BTreeSet<&Vec<u8>> = a.keys().collect();
    keys.extend(b.keys());
    keys.iter()
        .map(|k| (a.get(*k).copied().unwrap_or(0.0) - b.get(*k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::simpson;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn dist3() -> DegreeDistribution {
        DegreeDistribution::from_pmf(&[(3, 1.0)]).unwrap()
    }

    fn mix24() -> DegreeDistribution {
        DegreeDistribution::from_pmf(&[(2, 0.5), (4, 0.5)]).unwrap()
    }

    /// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
    fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(|a, b| a.total_cmp(b));
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn rde_chi_examples() {
        assert_eq!(rde_chi(&[1.0, 2.0, 3.0], 2, &[10.0, 10.0, 10.0]), Some(2.0));
        assert_eq!(rde_chi(&[1.0, 2.0, 3.0], 2, &[0.5, 10.0, 10.0]), Some(3.0));
        assert_eq!(rde_chi(&[1.0, 2.0], 3, &[10.0, 10.0]), None);
    }

    #[test]
    fn root_type_matches_quadrature_cdf() {
        // Dual route: the sampler inverts 1 - lambda'; the oracle CDF here
        // is Simpson quadrature of the density f, accumulated incrementally
        // along the sorted samples (the type has a heavy tail in t).
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let mut rng = stream_rng(11, 0);
        let mut samples: Vec<f64> =
            (0..100_000).map(|_| sample_root_type(&sol, &mut rng)).collect();
        samples.sort_by(|a, b| a.total_cmp(b));
        let mut cdf_vals = Vec::with_capacity(samples.len());
        let mut acc = 0.0f64;
        let mut prev = 0.0f64;
        for &x in &samples {
            let panels = (((x - prev) * 50.0).ceil() as usize).clamp(8, 2000);
            acc += simpson(|s| sol.phantom_density(s), prev, x, panels);
            cdf_vals.push(acc);
            prev = x;
        }
        let n = samples.len() as f64;
        let ks = cdf_vals
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn constraint_point_mass_and_small_t_limit() {
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let mut rng = stream_rng(2, 0);
        for _ in 0..64 {
            let t = sample_root_type(&sol, &mut rng);
            assert_eq!(sample_constraint_given_type(&sol, &dist, t, &mut rng), 3);
        }
        // With p_2 > 0 the constraint near t = 0 tends to 2.
        let dist = mix24();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let twos = (0..2000)
            .filter(|_| sample_constraint_given_type(&sol, &dist, 1e-4, &mut rng) == 2)
            .count();
        assert!(twos > 1990, "{twos} of 2000");
    }

    #[test]
    fn truncated_type_matches_conditional_cdf() {
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let t0 = 0.8;
        let mut rng = stream_rng(3, 0);
        let mut samples: Vec<f64> =
            (0..100_000).map(|_| sample_truncated_type(&sol, t0, &mut rng)).collect();
        assert!(samples.iter().all(|&s| s > t0));
        let lp0 = sol.lambda_prime(t0);
        let ks = ks_statistic(&mut samples, |s| {
            if s <= t0 {
                0.0
            } else {
                (lp0 - sol.lambda_prime(s)) / lp0
            }
        });
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn child_pair_support_and_marginals() {
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let t0 = 1.1;
        let mut rng = stream_rng(4, 0);
        let pairs: Vec<(f64, f64)> =
            (0..100_000).map(|_| sample_child_pair(&sol, t0, &mut rng)).collect();
        for &(tau, s) in &pairs {
            assert!(tau >= 0.0 && tau <= t0 + 1e-12);
            assert!(tau <= s + 1e-12, "support requires tau <= s");
        }
        let lam0 = sol.lambda(t0);
        // Type marginal: CDF = (lambda(s) - s lambda'(s)) / lambda(t0)
        // below t0, then 1 - t0 lambda'(s) / lambda(t0).
        let mut types: Vec<f64> = pairs.iter().map(|&(_, s)| s).collect();
        let ks = ks_statistic(&mut types, |s| {
            if s <= t0 {
                (sol.lambda(s) - s * sol.lambda_prime(s)) / lam0
            } else {
                1.0 - t0 * sol.lambda_prime(s) / lam0
            }
        });
        assert!(ks < 0.01, "type KS {ks}");
        // Label marginal: CDF = lambda(t) / lambda(t0) on [0, t0].
        let mut labels: Vec<f64> = pairs.iter().map(|&(t, _)| t).collect();
        let ks = ks_statistic(&mut labels, |t| sol.lambda(t) / lam0);
        assert!(ks < 0.01, "label KS {ks}");
    }

    #[test]
    fn children_counts_and_ordering() {
        let dist = mix24();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..200 {
            let t0 = sample_root_type(&sol, &mut rng);
            let d = sample_constraint_given_type(&sol, &dist, t0, &mut rng);
            let pairs = mtbp_children(&sol, t0, d, false, &mut rng);
            assert_eq!(pairs.len(), d as usize - 1);
            for w in pairs.windows(2) {
                assert!(w[0].0 <= w[1].0, "labels sorted");
            }
            let root_pairs = mtbp_children(&sol, t0, d, true, &mut rng);
            assert_eq!(root_pairs.len(), d as usize);
            assert_eq!(root_pairs.last().unwrap().0, t0, "d-th child arrives at the type");
        }
    }

    #[test]
    fn component_zero_time_and_child_bounds() {
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let mut rng = stream_rng(6, 0);
        let tree = mtbp_component(&sol, &dist, 0.0, Caps::default(), &mut rng);
        assert_eq!(tree.len(), 1, "no labels below zero");

        let tree = mtbp_component(
            &sol,
            &dist,
            1.2,
            Caps { max_nodes: 20_000, max_depth: 30 },
            &mut rng,
        );
        for (i, node) in tree.nodes.iter().enumerate() {
            let bound = if i == 0 { node.constraint } else { node.constraint - 1 };
            assert!(node.children.len() <= bound as usize);
        }
    }

    #[test]
    fn final_component_root_degree_is_d() {
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let mut rng = stream_rng(7, 0);
        for _ in 0..300 {
            let tree = mtbp_component(
                &sol,
                &dist,
                f64::INFINITY,
                Caps { max_nodes: 200_000, max_depth: 2 },
                &mut rng,
            );
            assert!(!tree.truncated);
            assert_eq!(tree.root_degree(), 3, "all phantom times finite: the root fills up");
        }
    }

    #[test]
    fn subcritical_component_size_stable_under_cap() {
        // Mean component size finite below the critical time and stable
        // when the node cap doubles.
        let dist = dist3();
        let (sol, report) = crate::ode::critical_time(&dist, 1e-10).unwrap();
        let t_hat = 0.8 * report.t_hat_c;
        let mean_size = |cap: usize| {
            let mut rng = stream_rng(8, 0);
            let runs = 20_000;
            let total: usize = (0..runs)
                .map(|_| {
                    mtbp_component(
                        &sol,
                        &dist,
                        t_hat,
                        Caps { max_nodes: cap, max_depth: usize::MAX },
                        &mut rng,
                    )
                    .len()
                })
                .sum();
            total as f64 / runs as f64
        };
        let a = mean_size(50_000);
        let b = mean_size(100_000);
        assert!((a - b).abs() / a < 0.02, "cap sensitivity: {a} vs {b}");
        assert!(a < 50.0, "subcritical mean size should be modest, got {a}");
    }

    #[test]
    fn pwit_zero_time_is_root_only() {
        let dist = dist3();
        let mut rng = stream_rng(9, 0);
        let tree = pwit_explore(&dist, 0.0, 2, Caps::default(), &mut rng).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(pwit_explore(&dist, f64::INFINITY, 2, Caps::default(), &mut rng).is_err());
    }

    #[test]
    fn two_samplers_agree_in_law_smoke() {
        // Smaller-N version of the acceptance check: TV between the two
        // radius-2 censuses at t_hat = 0.6.
        let dist = dist3();
        let sol = LambdaSolution::solve(&dist).unwrap();
        let n = 30_000;
        let caps = Caps { max_nodes: 500_000, max_depth: 2 };
        let mut rng = stream_rng(10, 0);
        let mtbp = census_from_codes(
            (0..n).map(|_| tree_ball_code(&mtbp_component(&sol, &dist, 0.6, caps, &mut rng), 2)),
        );
        let mut rng = stream_rng(10, 1);
        let pwit = census_from_codes((0..n).map(|_| {
            tree_ball_code(&pwit_explore(&dist, 0.6, 2, Caps::default(), &mut rng).unwrap(), 2)
        }));
        let tv = tv_distance(&mtbp, &pwit);
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn census_basics() {
        let a = census_from_codes(vec![vec![1u8], vec![1], vec![2]]);
        let total: f64 = a.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(tv_distance(&a, &a), 0.0);
        let b = census_from_codes(vec![vec![3u8]]);
        assert_eq!(tv_distance(&a, &b), 1.0);
    }

    #[test]
    fn canonical_code_basics() {
        let single = canonical_code_tree(&[vec![]]);
        assert_eq!(single, b"T()".to_vec());
        // Path of 2 from root vs star of 2 from root differ.
        let path = canonical_code_tree(&[vec![1], vec![2], vec![]]);
        let star = canonical_code_tree(&[vec![1, 2], vec![], vec![]]);
        assert_ne!(path, star);
    }

    #[test]
    fn ball_codes_tree_and_cycle() {
        // Radius-1 ball of a triangle: two children; radius-2: a 3-cycle,
        // a non-tree class distinct from every tree code.
        let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let star2 = canonical_code_tree(&[vec![1, 2], vec![], vec![]]);
        assert_eq!(neighborhood_code(&adj, 0, 1), star2);
        let code2 = neighborhood_code(&adj, 0, 2);
        assert_eq!(code2[0], b'G');
        assert_ne!(code2, star2);
        // Radius 0 is the single-vertex class for every vertex.
        assert_eq!(neighborhood_code(&adj, 1, 0), b"T()".to_vec());
    }

    proptest! {
        #[test]
        fn code_invariant_under_child_shuffles(seed in 0u64..500) {
            // Random small tree; reordering children lists leaves the
            // canonical code unchanged.
            use rand::RngCore;
            let mut rng = stream_rng(seed, 3);
            let n = 2 + (rng.next_u64() % 8) as usize;
            let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
            for v in 1..n {
                let p = (rng.next_u64() % v as u64) as usize;
                children[p].push(v as u32);
            }
            let code = canonical_code_tree(&children);
            for list in children.iter_mut() {
                list.reverse();
            }
            prop_assert_eq!(canonical_code_tree(&children), code);
        }
    }
}

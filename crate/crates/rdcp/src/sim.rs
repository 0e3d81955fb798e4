//! RDCP simulation on a finite host.
//!
//! Materialized hosts draw one exponential activation time per edge (mean
//! `r_n`), sort, and process chronologically; an edge is added only when
//! both endpoints are still below their degree constraints. Implicit
//! complete graphs never enumerate their edge set: global activation
//! instants form a Poisson stream of rate `|E| / r_n = n/2`, each instant
//! carries a uniform unordered vertex pair, and a seen-pair set guarantees
//! every pair activates at most once, which reproduces the per-edge
//! construction in distribution.

use crate::dist::DegreeDistribution;
use crate::host::HostGraph;
use crate::rng::exp_mean;
use crate::{Error, Result};

/// When to stop a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    UntilTime(f64),
    UntilSteps(usize),
    UntilFinal,
}

/// Union-find with union by size and path halving.
#[derive(Debug, Clone)]
pub struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.size[ra as usize] += self.size[rb as usize];
        self.parent[rb as usize] = ra;
    }

    pub fn component_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Evolving process state; immutable once `simulate` returns.
#[derive(Debug, Clone)]
pub struct RdcpState {
    pub constraints: Vec<u32>,
    pub degrees: Vec<u32>,
    /// Added edges `(u, v, time)` in chronological order, `u < v`.
    pub edges_added: Vec<(u32, u32, f64)>,
    /// Saturation instant per vertex, `+inf` while unsaturated.
    pub sat_time: Vec<f64>,
    dsu: Dsu,
    /// Current time; `+inf` after a final-graph run.
    pub clock: f64,
}

/// Component summary: largest size, susceptibility `sum |C|^2 / n`, count.
#[derive(Debug, Clone, Copy)]
pub struct ComponentStats {
    pub largest: usize,
    pub susceptibility: f64,
    pub count: usize,
}

impl RdcpState {
    fn new(constraints: Vec<u32>) -> Self {
        let n = constraints.len();
        Self {
            constraints,
            degrees: vec![0; n],
            edges_added: Vec::new(),
            sat_time: vec![f64::INFINITY; n],
            dsu: Dsu::new(n),
            clock: 0.0,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.constraints.len()
    }

    /// Number of edges added so far.
    pub fn steps(&self) -> usize {
        self.edges_added.len()
    }

    pub fn is_saturated(&self, v: usize) -> bool {
        self.degrees[v] == self.constraints[v]
    }

    pub fn unsaturated_count(&self) -> usize {
        (0..self.n_vertices()).filter(|&v| !self.is_saturated(v)).count()
    }

    pub fn unsaturated_fraction(&self) -> f64 {
        self.unsaturated_count() as f64 / self.n_vertices() as f64
    }

    fn add_edge(&mut self, u: u32, v: u32, t: f64) {
        debug_assert!(self.degrees[u as usize] < self.constraints[u as usize]);
        debug_assert!(self.degrees[v as usize] < self.constraints[v as usize]);
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges_added.push((a, b, t));
        for x in [u, v] {
            self.degrees[x as usize] += 1;
            debug_assert!(self.degrees[x as usize] <= self.constraints[x as usize]);
            if self.degrees[x as usize] == self.constraints[x as usize] {
                self.sat_time[x as usize] = t;
            }
        }
        self.dsu.union(u, v);
    }

    /// Adjacency lists of the current RDCP graph.
    pub fn graph_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for &(u, v, _) in &self.edges_added {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    pub fn component_stats(&mut self) -> ComponentStats {
        let n = self.n_vertices();
        let mut largest = 0usize;
        let mut sumsq = 0.0f64;
        let mut count = 0usize;
        for v in 0..n as u32 {
            if self.dsu.find(v) == v {
                let s = self.dsu.size[v as usize] as usize;
                largest = largest.max(s);
                sumsq += (s * s) as f64;
                count += 1;
            }
        }
        ComponentStats { largest, susceptibility: sumsq / n as f64, count }
    }
}

/// Rooted ball extracted from a graph: vertex 0 is the root, `depth[i]`
/// the BFS depth, `edges` those graph edges with an endpoint at depth
/// below the radius (so a radius-1 ball of a triangle is a two-leaf star,
/// while the radius-2 ball picks up the closing edge).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedBall {
    pub depth: Vec<usize>,
    pub edges: Vec<(u32, u32)>,
}

/// Extract the radius-`r` ball around `root` from adjacency lists.
pub fn extract_ball(adj: &[Vec<u32>], root: usize, r: usize) -> RootedBall {
    let mut index = std::collections::HashMap::new();
    index.insert(root as u32, 0u32);
    let mut depth = vec![0usize];
    let mut order = vec![root as u32];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut head = 0usize;
    while head < order.len() {
        let g = order[head];
        let d = depth[head];
        if d >= r {
            break;
        }
        let me = index[&g];
        for &nb in &adj[g as usize] {
            let next_id = index.len() as u32;
            let id = *index.entry(nb).or_insert_with(|| {
                order.push(nb);
                depth.push(d + 1);
                next_id
            });
            let key = (me.min(id), me.max(id));
            if !edges.contains(&key) {
                edges.push(key);
            }
        }
        head += 1;
    }
    RootedBall { depth, edges }
}

/// Draw i.i.d. constraints, one per vertex.
pub fn assign_constraints(
    host: &HostGraph,
    dist: &DegreeDistribution,
    rng: &mut impl rand::Rng,
) -> Vec<u32> {
    (0..host.n_vertices()).map(|_| dist.sample(rng) as u32).collect()
}

/// Per-edge activation times for a materialized host, in edge-list order.
pub fn draw_activation_times(
    host: &HostGraph,
    rng: &mut impl rand::Rng,
) -> Result<Vec<(u32, u32, f64)>> {
    let r_n = host.r_n();
    Ok(host.edges()?.into_iter().map(|(u, v)| (u, v, exp_mean(rng, r_n))).collect())
}

fn validate_constraints(n: usize, constraints: &[u32]) -> Result<()> {
    if constraints.len() != n {
        return Err(Error::Simulation(format!(
            "{} constraints for {} vertices",
            constraints.len(),
            n
        )));
    }
    if let Some(v) = constraints.iter().position(|&c| c < 2) {
        return Err(Error::Simulation(format!(
            "constraint {} at vertex {v}; constraints live on {{2,3,...}}",
            constraints[v]
        )));
    }
    Ok(())
}

fn validate_stop(stop: StopRule) -> Result<()> {
    if let StopRule::UntilTime(t) = stop {
        if !(t >= 0.0) {
            return Err(Error::Simulation(format!("negative stop time {t}")));
        }
    }
    Ok(())
}

/// Run the RDCP. Dispatches to the lazy sampler for implicit hosts.
pub fn simulate(
    host: &HostGraph,
    constraints: &[u32],
    stop: StopRule,
    rng: &mut impl rand::Rng,
) -> Result<RdcpState> {
    validate_constraints(host.n_vertices(), constraints)?;
    validate_stop(stop)?;
    if host.is_implicit() {
        simulate_lazy_complete(host.n_vertices(), constraints, stop, rng)
    } else {
        let times = draw_activation_times(host, rng)?;
        simulate_with_times(host, constraints, &times, stop)
    }
}

/// Run the RDCP on explicit activation times (shared with the two-phase
/// exploration oracle, which must see the same draw).
pub fn simulate_with_times(
    host: &HostGraph,
    constraints: &[u32],
    times: &[(u32, u32, f64)],
    stop: StopRule,
) -> Result<RdcpState> {
    validate_constraints(host.n_vertices(), constraints)?;
    validate_stop(stop)?;
    let mut order: Vec<usize> = (0..times.len()).collect();
    // Exact ties broken by edge index: documented, deterministic.
    order.sort_by(|&a, &b| times[a].2.partial_cmp(&times[b].2).unwrap().then(a.cmp(&b)));

    let mut state = RdcpState::new(constraints.to_vec());
    for idx in order {
        let (u, v, x) = times[idx];
        match stop {
            StopRule::UntilTime(t_hat) if x > t_hat => {
                state.clock = t_hat;
                return Ok(state);
            }
            StopRule::UntilSteps(k) if state.steps() >= k => {
                return Ok(state);
            }
            _ => {}
        }
        if !state.is_saturated(u as usize) && !state.is_saturated(v as usize) {
            state.add_edge(u, v, x);
            state.clock = x;
        }
    }
    state.clock = match stop {
        StopRule::UntilTime(t_hat) => t_hat,
        StopRule::UntilSteps(_) => state.clock,
        StopRule::UntilFinal => f64::INFINITY,
    };
    Ok(state)
}

/// Unsaturated-set size at which the lazy sampler switches to an exact
/// finish (enumerate the still-inactive pairs inside the set and give each
/// a fresh exponential clock, valid by memorylessness).
const LAZY_FINISH_SWITCH: usize = 1000;

fn pair_key(n: usize, u: u32, v: u32) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    a as u64 * n as u64 + b as u64
}

fn simulate_lazy_complete(
    n: usize,
    constraints: &[u32],
    stop: StopRule,
    rng: &mut impl rand::Rng,
) -> Result<RdcpState> {
    let mut state = RdcpState::new(constraints.to_vec());
    let mut seen = std::collections::HashSet::<u64>::new();
    // Unsaturated vertex set with O(1) removal.
    let mut unsat: Vec<u32> = (0..n as u32).collect();
    let mut pos: Vec<usize> = (0..n).collect();
    let remove_unsat = |unsat: &mut Vec<u32>, pos: &mut Vec<usize>, v: u32| {
        let i = pos[v as usize];
        let last = *unsat.last().unwrap();
        unsat.swap_remove(i);
        if i < unsat.len() {
            pos[last as usize] = i;
        }
    };

    let gap_mean = 2.0 / n as f64; // global stream rate |E| / r_n = n / 2
    let r_n = (n - 1) as f64;
    let mut t = 0.0f64;
    loop {
        if let StopRule::UntilSteps(k) = stop {
            if state.steps() >= k {
                return Ok(state);
            }
        }
        // Switch to the exact finish once the global stream would mostly
        // hit pairs with a saturated endpoint.
        let finishing = unsat.len() <= 1
            || (matches!(stop, StopRule::UntilFinal | StopRule::UntilSteps(_))
                && unsat.len() <= LAZY_FINISH_SWITCH);
        if finishing {
            let mut candidates = Vec::new();
            for i in 0..unsat.len() {
                for j in i + 1..unsat.len() {
                    let (u, v) = (unsat[i], unsat[j]);
                    if !seen.contains(&pair_key(n, u, v)) {
                        candidates.push((u, v, t + exp_mean(rng, r_n)));
                    }
                }
            }
            candidates.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
            for (u, v, x) in candidates {
                match stop {
                    StopRule::UntilTime(t_hat) if x > t_hat => {
                        state.clock = t_hat;
                        return Ok(state);
                    }
                    StopRule::UntilSteps(k) if state.steps() >= k => return Ok(state),
                    _ => {}
                }
                if !state.is_saturated(u as usize) && !state.is_saturated(v as usize) {
                    state.add_edge(u, v, x);
                    state.clock = x;
                }
            }
            state.clock = match stop {
                StopRule::UntilTime(t_hat) => t_hat,
                StopRule::UntilSteps(_) => state.clock,
                StopRule::UntilFinal => f64::INFINITY,
            };
            return Ok(state);
        }

        t += exp_mean(rng, gap_mean);
        if let StopRule::UntilTime(t_hat) = stop {
            if t > t_hat {
                state.clock = t_hat;
                return Ok(state);
            }
        }
        let u = rng.random_range(0..n as u32);
        let mut v = rng.random_range(0..n as u32 - 1);
        if v >= u {
            v += 1;
        }
        if !seen.insert(pair_key(n, u, v)) {
            continue; // pair already activated; the instant is consumed
        }
        if !state.is_saturated(u as usize) && !state.is_saturated(v as usize) {
            state.add_edge(u, v, t);
            state.clock = t;
            for x in [u, v] {
                if state.is_saturated(x as usize) {
                    remove_unsat(&mut unsat, &mut pos, x);
                }
            }
        }
    }
}

/// Direct discrete-time sampler for tiny hosts: repeatedly choose a
/// uniform edge among those not in the graph with both endpoints
/// unsaturated. Independent oracle for the continuous-counting route.
pub fn simulate_discrete_direct(
    host: &HostGraph,
    constraints: &[u32],
    steps: usize,
    rng: &mut impl rand::Rng,
) -> Result<RdcpState> {
    validate_constraints(host.n_vertices(), constraints)?;
    let all_edges = host.edges()?;
    let mut state = RdcpState::new(constraints.to_vec());
    let mut in_graph = vec![false; all_edges.len()];
    for step in 0..steps {
        let eligible: Vec<usize> = (0..all_edges.len())
            .filter(|&i| {
                let (u, v) = all_edges[i];
                !in_graph[i]
                    && !state.is_saturated(u as usize)
                    && !state.is_saturated(v as usize)
            })
            .collect();
        if eligible.is_empty() {
            break;
        }
        let pick = eligible[rng.random_range(0..eligible.len())];
        in_graph[pick] = true;
        let (u, v) = all_edges[pick];
        state.add_edge(u, v, (step + 1) as f64);
    }
    Ok(state)
}

//! Two-phase exploration and the leaf recursion for truncated phantom
//! saturation times.
//!
//! The exploration reveals just enough of a host (or of the Poisson
//! weighted infinite tree, see `limit::pwit_explore`) to reconstruct the
//! radius-R ball of the root in the RDCP at time `t_hat`, without
//! simulating the whole graph:
//!
//! * BFS phase: vertices at depth <= R are explored breadth-first (lowest
//!   generation, then lowest incoming label), revealing every incident
//!   activation in `[0, t_hat]`.
//! * Monotone decreasing phase: beyond depth R the active vertex with the
//!   largest label is explored next, revealing only activations below its
//!   own incoming label, so labels strictly decrease along every branch
//!   and the explored tree stays finite for any `t_hat`.
//!
//! A vertex's phantom saturation time (when it would saturate with its
//! parent edge removed) is then resolved bottom-up: a leaf never saturates
//! within its window; an inner vertex saturates at the `d`-th smallest
//! label among children that were themselves unsaturated when their edge
//! arrived, if that many exist. Ball edges at the root keep ties
//! (`label <= min` of the endpoint times truncated at `t_hat`), non-root
//! edges are strict.
//!
//! On a finite host the exploration can close a cycle; that raises a cycle
//! alarm and no reconstruction is attempted (on tree hosts alarms are
//! impossible, and they become vanishingly rare on high-degree hosts).

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use crate::host::HostGraph;
use crate::{Error, Result};

/// Rooted edge-labelled tree with constraints, as produced by the
/// two-phase exploration. Node 0 is the root and children always carry a
/// larger index than their parent; sibling lists are in ascending label
/// order.
#[derive(Debug, Clone, Default)]
pub struct LabelledTree {
    pub parents: Vec<Option<u32>>,
    pub children: Vec<Vec<u32>>,
    /// Incoming edge label; meaningless at the root.
    pub labels: Vec<f64>,
    pub depths: Vec<usize>,
    pub constraints: Vec<u32>,
}

impl LabelledTree {
    pub fn with_root(constraint: u32) -> Self {
        Self {
            parents: vec![None],
            children: vec![Vec::new()],
            labels: vec![f64::NEG_INFINITY],
            depths: vec![0],
            constraints: vec![constraint],
        }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn push_child(&mut self, parent: u32, label: f64, constraint: u32) -> u32 {
        let idx = self.len() as u32;
        self.parents.push(Some(parent));
        self.children.push(Vec::new());
        self.labels.push(label);
        self.depths.push(self.depths[parent as usize] + 1);
        self.constraints.push(constraint);
        self.children[parent as usize].push(idx);
        idx
    }
}

/// Output of the two-phase exploration of a finite host.
#[derive(Debug, Clone)]
pub enum ExploreOutcome {
    /// The tree plus the embedding of its nodes into host vertices.
    Tree(LabelledTree, Vec<u32>),
    /// The exploration touched an already-active vertex (a cycle closed)
    /// within a window; the ball cannot be read off the tree in that case.
    CycleAlarm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Neutral,
    Active,
    Explored,
}

/// Wrapper giving f64 labels a total order inside the heaps.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Label(f64);
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Run the two-phase exploration of a host from `root`, using one fixed
/// activation time per host edge (the same draw a chronological simulation
/// consumes) and one fixed constraint per host vertex.
pub fn explore_host(
    host: &HostGraph,
    times: &[(u32, u32, f64)],
    constraints: &[u32],
    root: u32,
    t_hat: f64,
    radius: usize,
) -> Result<ExploreOutcome> {
    let n = host.n_vertices();
    if constraints.len() != n {
        return Err(Error::Simulation(format!(
            "{} constraints for {n} vertices",
            constraints.len()
        )));
    }
    let mut time_of = HashMap::with_capacity(times.len());
    for &(u, v, x) in times {
        time_of.insert((u.min(v) as u64) * n as u64 + u.max(v) as u64, x);
    }
    let edge_time =
        |a: u32, b: u32| -> f64 { time_of[&((a.min(b) as u64) * n as u64 + a.max(b) as u64)] };

    let mut status = vec![Status::Neutral; n];
    status[root as usize] = Status::Active;
    let mut tree = LabelledTree::with_root(constraints[root as usize]);
    let mut embed = vec![root];

    // BFS phase: min-heap on (depth, label); monotone phase: max-heap on label.
    let mut bfs_heap: BinaryHeap<Reverse<(usize, Label, u32)>> = BinaryHeap::new();
    bfs_heap.push(Reverse((0, Label(f64::NEG_INFINITY), 0)));
    let mut mono_heap: BinaryHeap<(Label, u32)> = BinaryHeap::new();

    let explore_one = |idx: u32,
                           window: f64,
                           tree: &mut LabelledTree,
                           embed: &mut Vec<u32>,
                           status: &mut Vec<Status>,
                           bfs_heap: &mut BinaryHeap<Reverse<(usize, Label, u32)>>,
                           mono_heap: &mut BinaryHeap<(Label, u32)>|
     -> bool {
        let g = embed[idx as usize];
        let depth = tree.depths[idx as usize];
        let mut arrivals: Vec<(f64, u32)> = Vec::new();
        for &nb in host.neighbors(g as usize).iter() {
            if status[nb as usize] == Status::Explored {
                continue; // edge already revealed from the other side
            }
            let x = edge_time(g, nb);
            if x <= window {
                if status[nb as usize] == Status::Active {
                    return false; // cycle alarm
                }
                arrivals.push((x, nb));
            }
        }
        arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, nb) in arrivals {
            let child = tree.push_child(idx, x, constraints[nb as usize]);
            embed.push(nb);
            status[nb as usize] = Status::Active;
            if depth + 1 <= radius {
                bfs_heap.push(Reverse((depth + 1, Label(x), child)));
            } else {
                mono_heap.push((Label(x), child));
            }
        }
        status[g as usize] = Status::Explored;
        true
    };

    while let Some(Reverse((_, _, idx))) = bfs_heap.pop() {
        if !explore_one(idx, t_hat, &mut tree, &mut embed, &mut status, &mut bfs_heap, &mut mono_heap)
        {
            return Ok(ExploreOutcome::CycleAlarm);
        }
    }
    while let Some((Label(label), idx)) = mono_heap.pop() {
        if !explore_one(idx, label, &mut tree, &mut embed, &mut status, &mut bfs_heap, &mut mono_heap)
        {
            return Ok(ExploreOutcome::CycleAlarm);
        }
    }
    Ok(ExploreOutcome::Tree(tree, embed))
}

/// Bottom-up resolution of truncated phantom saturation times.
///
/// `Some(t)`: the vertex saturates at `t` within its exploration window,
/// ignoring its parent edge. `None`: it stays unsaturated through the
/// window, which for a leaf is the base case of the recursion.
pub fn resolve_phantom_times(tree: &LabelledTree) -> Vec<Option<f64>> {
    let mut trunc: Vec<Option<f64>> = vec![None; tree.len()];
    for idx in (0..tree.len()).rev() {
        // Labels of children that were unsaturated when their edge arrived.
        let mut accepted: Vec<f64> = tree.children[idx]
            .iter()
            .filter(|&&c| {
                let c = c as usize;
                trunc[c].map_or(true, |s| tree.labels[c] < s)
            })
            .map(|&c| tree.labels[c as usize])
            .collect();
        let d = tree.constraints[idx] as usize;
        if accepted.len() >= d {
            accepted.sort_by(|a, b| a.total_cmp(b));
            trunc[idx] = Some(accepted[d - 1]);
        }
    }
    trunc
}

/// Kept tree edges `(parent, child)` of the radius-R ball of the root at
/// time `t_hat`, reconstructed from the resolved phantom times: at the
/// root ties are kept (the root's own saturating edge is added), at
/// non-root vertices the comparison is strict.
pub fn kept_ball_edges(
    tree: &LabelledTree,
    trunc: &[Option<f64>],
    t_hat: f64,
    radius: usize,
) -> Vec<(u32, u32)> {
    let capped = |i: usize| trunc[i].map_or(t_hat, |s| s.min(t_hat));
    let mut kept = Vec::new();
    let mut reachable = vec![false; tree.len()];
    if tree.is_empty() {
        return kept;
    }
    reachable[0] = true;
    for idx in 1..tree.len() {
        if tree.depths[idx] > radius {
            continue;
        }
        let parent = tree.parents[idx].unwrap() as usize;
        if !reachable[parent] {
            continue;
        }
        let label = tree.labels[idx];
        let bound = capped(parent).min(capped(idx));
        let keep = if parent == 0 { label <= bound } else { label < bound };
        if keep {
            reachable[idx] = true;
            kept.push((parent as u32, idx as u32));
        }
    }
    kept
}

/// Host-vertex view of a reconstructed ball, for exact comparison with a
/// ball cut out of a whole-graph simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostBall {
    pub vertices: BTreeSet<u32>,
    pub edges: BTreeSet<(u32, u32)>,
}

/// Explore, resolve, and reconstruct the radius-R ball in host-vertex ids.
/// `None` when a cycle alarm rings.
pub fn reconstruct_ball(
    host: &HostGraph,
    times: &[(u32, u32, f64)],
    constraints: &[u32],
    root: u32,
    t_hat: f64,
    radius: usize,
) -> Result<Option<HostBall>> {
    let (tree, embed) = match explore_host(host, times, constraints, root, t_hat, radius)? {
        ExploreOutcome::CycleAlarm => return Ok(None),
        ExploreOutcome::Tree(tree, embed) => (tree, embed),
    };
    let trunc = resolve_phantom_times(&tree);
    let kept = kept_ball_edges(&tree, &trunc, t_hat, radius);
    let mut ball = HostBall { vertices: BTreeSet::from([root]), edges: BTreeSet::new() };
    for (p, c) in kept {
        let (a, b) = (embed[p as usize], embed[c as usize]);
        ball.vertices.insert(b);
        ball.edges.insert((a.min(b), a.max(b)));
    }
    Ok(Some(ball))
}

/// The radius-R ball around `root` of a graph given by adjacency lists,
/// in host-vertex ids (edges need an endpoint strictly inside the radius).
pub fn host_ball_sets(adj: &[Vec<u32>], root: u32, radius: usize) -> HostBall {
    let mut vertices: BTreeSet<u32> = BTreeSet::from([root]);
    let mut edges = BTreeSet::new();
    let mut depth_of: HashMap<u32, usize> = HashMap::from([(root, 0)]);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let d = depth_of[&v];
        if d >= radius {
            continue;
        }
        for &nb in &adj[v as usize] {
            if !depth_of.contains_key(&nb) {
                depth_of.insert(nb, d + 1);
                vertices.insert(nb);
                queue.push_back(nb);
            }
            edges.insert((v.min(nb), v.max(nb)));
        }
    }
    HostBall { vertices, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sim::{simulate_with_times, StopRule};
    use rand::RngCore;

    #[test]
    fn leaf_recursion_base_case() {
        // A root with one child and no grandchildren: the child is a leaf,
        // stays unsaturated in its window, and the edge is kept when its
        // label is below t_hat.
        let host = HostGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let times = vec![(0u32, 1u32, 0.4), (1, 2, 5.0), (2, 3, 5.0)];
        let (tree, _) = match explore_host(&host, &times, &[2, 2, 2, 2], 0, 1.0, 1).unwrap() {
            ExploreOutcome::Tree(t, e) => (t, e),
            _ => panic!("no alarm possible on a path"),
        };
        let trunc = resolve_phantom_times(&tree);
        assert_eq!(trunc[1], None, "leaf never saturates inside its window");
        assert_eq!(kept_ball_edges(&tree, &trunc, 1.0, 1).len(), 1);
    }

    #[test]
    fn saturation_blocks_late_root_edge() {
        // Star host: root 0 with neighbors 1, 2, 3; d(0) = 2. Arrivals at
        // 0.1 and 0.2 fill the root, the 0.3 edge must be rejected, and
        // the saturating 0.2 edge itself is kept (tie rule at the root).
        let host = HostGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let times = vec![(0u32, 1u32, 0.1), (0, 2, 0.2), (0, 3, 0.3)];
        let ball = reconstruct_ball(&host, &times, &[2, 3, 3, 3], 0, 1.0, 1).unwrap().unwrap();
        assert_eq!(ball.vertices, BTreeSet::from([0, 1, 2]));
        assert_eq!(ball.edges, BTreeSet::from([(0, 1), (0, 2)]));
    }

    #[test]
    fn phantom_time_of_child_blocks_root_edge() {
        // Spider host: 1 joins 0 late (0.9) but saturates at 0.3 through
        // its two other edges, so the root stays isolated.
        let host = HostGraph::from_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        let times = vec![(0u32, 1u32, 0.9), (1, 2, 0.2), (1, 3, 0.3)];
        let ball = reconstruct_ball(&host, &times, &[2, 2, 2, 2], 0, 1.0, 1).unwrap().unwrap();
        assert_eq!(ball.vertices, BTreeSet::from([0]));
        assert!(ball.edges.is_empty());

        let st = simulate_with_times(&host, &[2, 2, 2, 2], &times, StopRule::UntilTime(1.0))
            .unwrap();
        let direct = host_ball_sets(&st.graph_adjacency(), 0, 1);
        assert_eq!(ball, direct);
    }

    #[test]
    fn cycle_alarm_on_triangle() {
        let host = HostGraph::complete(3).unwrap();
        let times = vec![(0u32, 1u32, 0.1), (0, 2, 0.2), (1, 2, 0.3)];
        let out = explore_host(&host, &times, &[2, 2, 2], 0, 1.0, 2).unwrap();
        assert!(matches!(out, ExploreOutcome::CycleAlarm));
    }

    #[test]
    fn matches_direct_simulation_on_random_trees() {
        // Random tree hosts never alarm; the reconstruction must equal the
        // ball of the chronological simulation on the same activation draw.
        for seed in 0..300u64 {
            let mut rng = stream_rng(seed, 7);
            let n = 3 + (rng.next_u64() % 10) as usize;
            let mut edges = Vec::new();
            for v in 1..n {
                let parent = (rng.next_u64() % v as u64) as usize;
                edges.push((parent, v));
            }
            let host = HostGraph::from_edges(n, &edges).unwrap();
            let constraints: Vec<u32> =
                (0..n).map(|_| 2 + (rng.next_u64() % 2) as u32).collect();
            let times = crate::sim::draw_activation_times(&host, &mut rng).unwrap();
            for (t_hat, radius) in [(0.5, 1), (1.5, 2)] {
                let root = (seed % n as u64) as u32;
                let recon = reconstruct_ball(&host, &times, &constraints, root, t_hat, radius)
                    .unwrap()
                    .expect("tree host cannot alarm");
                let st = simulate_with_times(
                    &host,
                    &constraints,
                    &times,
                    StopRule::UntilTime(t_hat),
                )
                .unwrap();
                let direct = host_ball_sets(&st.graph_adjacency(), root, radius);
                assert_eq!(recon, direct, "seed {seed} t_hat {t_hat} R {radius}");
            }
        }
    }
}

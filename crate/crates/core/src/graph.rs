//! (T, mu)-connectivity graphs and the conditions built on them.
//!
//! An arrow `i -> j` means agent `i` listens to agent `j` strongly enough on
//! average over a window: `(1/T) * integral_t^{t+T} M_ij >= mu`. Node indices
//! are 0-based in the API; exports use 1-based labels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::signal::{meets_threshold, Schedule};

/// A simple directed graph on `{0, .., n - 1}` without self-loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DirectedGraph {
    n_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    pub fn empty(n_nodes: usize) -> Self {
        Self { n_nodes, edges: BTreeSet::new() }
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges = (0..n_nodes)
            .flat_map(|i| (0..n_nodes).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self { n_nodes, edges }
    }

    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n_nodes);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        ensure!(i < self.n_nodes && j < self.n_nodes, Domain, "edge ({i}, {j}) out of range");
        ensure!(i != j, Domain, "self-loop at node {i}");
        self.edges.insert((i, j));
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn is_subgraph_of(&self, other: &DirectedGraph) -> bool {
        self.n_nodes == other.n_nodes && self.edges.is_subset(&other.edges)
    }

    pub fn intersection(&self, other: &DirectedGraph) -> DirectedGraph {
        DirectedGraph {
            n_nodes: self.n_nodes,
            edges: self.edges.intersection(&other.edges).copied().collect(),
        }
    }

    /// Directed path `n-1 -> n-2 -> .. -> 0`.
    pub fn path_to_first(n_nodes: usize) -> Self {
        Self { n_nodes, edges: (1..n_nodes).map(|i| (i, i - 1)).collect() }
    }

    pub fn to_json(&self) -> String {
        let adjacency: BTreeMap<String, Vec<usize>> = (0..self.n_nodes)
            .map(|i| {
                let out = self.edges.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j + 1).collect();
                ((i + 1).to_string(), out)
            })
            .collect();
        serde_json::to_string_pretty(&GraphJson { n_nodes: self.n_nodes, adjacency })
            .expect("graph serializes")
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph connectivity {\n    rankdir=RL;\n");
        for i in 0..self.n_nodes {
            let _ = writeln!(out, "    {};", i + 1);
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "    {} -> {};", i + 1, j + 1);
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n_nodes: usize,
    adjacency: BTreeMap<String, Vec<usize>>,
}

/// Globally reachable node, hop distances to it, and the graph length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub reachable_node: Option<usize>,
    /// `distances[i]` is the hop count from `i` to the reachable node.
    pub distances: Vec<Option<usize>>,
    pub length: Option<usize>,
}

/// The (T, mu)-connectivity graph at time `t`.
pub fn connectivity_graph(sched: &Schedule, t: f64, window: f64, mu: f64) -> Result<DirectedGraph> {
    ensure!(mu > 0.0 && mu <= 1.0, Domain, "mu must lie in (0, 1], got {mu}");
    ensure!(window > 0.0 && window.is_finite(), Domain, "window must be positive, got {window}");
    ensure!(t >= 0.0 && t.is_finite(), Domain, "t must be nonnegative, got {t}");
    let mut g = DirectedGraph::empty(sched.n_agents());
    for (&(i, j), signal) in sched.entries() {
        if meets_threshold(signal.integrate(t, t + window)?, window, mu) {
            g.edges.insert((i, j));
        }
    }
    Ok(g)
}

/// Finds the lowest-index globally reachable node and the hop distances to it.
///
/// A node is globally reachable iff it belongs to the unique sink component
/// of the condensation.
pub fn globally_reachable(g: &DirectedGraph) -> ReachabilityReport {
    let n = g.n_nodes;
    let none = ReachabilityReport { reachable_node: None, distances: vec![None; n], length: None };
    if n == 0 {
        return none;
    }
    let mut pg = DiGraph::<(), ()>::with_capacity(n, g.edges.len());
    let nodes: Vec<_> = (0..n).map(|_| pg.add_node(())).collect();
    for &(i, j) in &g.edges {
        pg.add_edge(nodes[i], nodes[j], ());
    }
    let components = tarjan_scc(&pg);
    let mut component_of = vec![0usize; n];
    for (c, members) in components.iter().enumerate() {
        for v in members {
            component_of[v.index()] = c;
        }
    }
    let mut is_sink = vec![true; components.len()];
    for &(i, j) in &g.edges {
        if component_of[i] != component_of[j] {
            is_sink[component_of[i]] = false;
        }
    }
    let mut sinks = (0..components.len()).filter(|&c| is_sink[c]);
    let (Some(sink), None) = (sinks.next(), sinks.next()) else {
        return none;
    };
    let root = components[sink].iter().map(|v| v.index()).min().expect("components are nonempty");

    let mut reverse = vec![Vec::new(); n];
    for &(i, j) in &g.edges {
        reverse[j].push(i);
    }
    let mut distances = vec![None; n];
    distances[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let d = distances[v].expect("queued nodes have distances");
        for &u in &reverse[v] {
            if distances[u].is_none() {
                distances[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    debug_assert!(distances.iter().all(Option::is_some));
    let length = distances.iter().flatten().copied().max();
    ReachabilityReport { reachable_node: Some(root), distances, length }
}

/// Edges present in every `G(kT)` for `k = 0 .. k_max - 1`.
///
/// For a schedule whose common period divides `k_max * T` this is the exact
/// infinite intersection.
pub fn persistent_graph(sched: &Schedule, window: f64, mu: f64, k_max: usize) -> Result<DirectedGraph> {
    ensure!(k_max >= 1, Domain, "k_max must be at least 1");
    let mut g = connectivity_graph(sched, 0.0, window, mu)?;
    for k in 1..k_max {
        if g.edges.is_empty() {
            break;
        }
        g = g.intersection(&connectivity_graph(sched, k as f64 * window, window, mu)?);
    }
    Ok(g)
}

/// A pair and time at which a windowed condition fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairFailure {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub average: f64,
}

/// Outcome of a Persistent Excitation check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeReport {
    pub satisfied: bool,
    pub witness: Option<PairFailure>,
    /// True when the kink sampling covers every `t >= 0`.
    pub exhaustive: bool,
    pub points_checked: usize,
}

fn sorted_times(ts: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = ts.into_iter().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Checks `avg(M_ij, t, T) >= mu` for every ordered pair.
///
/// Besides `t_samples`, every window kink of every entry is tested. The
/// average is piecewise linear in `t` between kinks and constant past the
/// last breakpoint of an aperiodic entry, so the check is exhaustive over
/// all `t >= 0`.
pub fn check_pe(sched: &Schedule, window: f64, mu: f64, t_samples: &[f64]) -> Result<PeReport> {
    ensure!(mu > 0.0 && mu <= 1.0, Domain, "mu must lie in (0, 1], got {mu}");
    ensure!(!t_samples.is_empty(), Precondition, "t_samples must be nonempty");
    ensure!(t_samples.iter().all(|&t| t >= 0.0 && t.is_finite()), Precondition, "t_samples must be nonnegative");
    let n = sched.n_agents();
    let mut points = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let kinks = sched.signal(i, j).map(|s| s.window_kinks(window)).unwrap_or_else(|| vec![0.0]);
            let times = sorted_times(t_samples.iter().copied().chain(kinks));
            for t in times {
                points += 1;
                let integral = match sched.signal(i, j) {
                    Some(s) => s.integrate(t, t + window)?,
                    None => 0.0,
                };
                if !meets_threshold(integral, window, mu) {
                    return Ok(PeReport {
                        satisfied: false,
                        witness: Some(PairFailure { i, j, t, average: integral / window }),
                        exhaustive: true,
                        points_checked: points,
                    });
                }
            }
        }
    }
    Ok(PeReport { satisfied: true, witness: None, exhaustive: true, points_checked: points })
}

/// Common-target choice `k` for the pair `{i, j}` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IscWitness {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub k: usize,
}

/// Outcome of an Integral Scrambling Coefficients check over sampled times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IscReport {
    pub satisfied: bool,
    pub sample_times: Vec<f64>,
    pub witnesses: Vec<IscWitness>,
    pub failure: Option<(usize, usize, f64)>,
    /// Always false: the existential choice of `k` does not reduce to kinks.
    pub exhaustive: bool,
}

impl IscReport {
    /// Witness map `{i, j} -> k` (keys with `i < j`) at sampled time `t`.
    pub fn witness_map_at(&self, t: f64) -> BTreeMap<(usize, usize), usize> {
        self.witnesses.iter().filter(|w| w.t == t).map(|w| ((w.i, w.j), w.k)).collect()
    }
}

/// Adjacency of `G(t)` with self-loops counted as present.
fn reflexive_adjacency(sched: &Schedule, t: f64, window: f64, mu: f64) -> Result<Vec<Vec<bool>>> {
    let g = connectivity_graph(sched, t, window, mu)?;
    let n = sched.n_agents();
    let mut adj = vec![vec![false; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(i, j) in g.edges() {
        adj[i][j] = true;
    }
    Ok(adj)
}

/// For every unordered pair `{i, j}` and sampled `t`, finds the smallest `k`
/// with `i -> k` and `j -> k` in `G(t)` (a node trivially reaches itself).
pub fn check_isc(sched: &Schedule, window: f64, mu: f64, t_samples: &[f64]) -> Result<IscReport> {
    ensure!(mu > 0.0 && mu <= 1.0, Domain, "mu must lie in (0, 1], got {mu}");
    ensure!(!t_samples.is_empty(), Precondition, "t_samples must be nonempty");
    ensure!(t_samples.iter().all(|&t| t >= 0.0 && t.is_finite()), Precondition, "t_samples must be nonnegative");
    let n = sched.n_agents();
    let kinks = sched.entries().flat_map(|(_, s)| s.window_kinks(window));
    let sample_times = sorted_times(t_samples.iter().copied().chain(kinks));
    let mut witnesses = Vec::new();
    for &t in &sample_times {
        let adj = reflexive_adjacency(sched, t, window, mu)?;
        for i in 0..n {
            for j in (i + 1)..n {
                match (0..n).find(|&k| adj[i][k] && adj[j][k]) {
                    Some(k) => witnesses.push(IscWitness { i, j, t, k }),
                    None => {
                        return Ok(IscReport {
                            satisfied: false,
                            sample_times,
                            witnesses,
                            failure: Some((i, j, t)),
                            exhaustive: false,
                        })
                    }
                }
            }
        }
    }
    Ok(IscReport { satisfied: true, sample_times, witnesses, failure: None, exhaustive: false })
}

/// Reduces `(0, .., n - 1)` with the pairwise common-target operator.
///
/// Even tuples reduce pairwise, odd tuples reduce their even prefix and then
/// pair the result with the last element. The outcome is reached from every
/// node along witnessed edges, hence globally reachable.
pub fn gamma_reduce(n_nodes: usize, pair_witness: &BTreeMap<(usize, usize), usize>) -> Result<usize> {
    ensure!(n_nodes >= 1, Precondition, "cannot reduce an empty tuple");
    let gamma = |a: usize, b: usize| -> Result<usize> {
        if a == b {
            return Ok(a);
        }
        pair_witness
            .get(&(a.min(b), a.max(b)))
            .copied()
            .ok_or_else(|| Error::Precondition(format!("missing witness for pair ({a}, {b})")))
    };
    fn reduce(tuple: &[usize], gamma: &dyn Fn(usize, usize) -> Result<usize>) -> Result<usize> {
        match tuple.len() {
            1 => Ok(tuple[0]),
            2 => gamma(tuple[0], tuple[1]),
            len if len % 2 == 0 => {
                let halves = tuple.chunks(2).map(|p| gamma(p[0], p[1])).collect::<Result<Vec<_>>>()?;
                reduce(&halves, gamma)
            }
            len => {
                let head = reduce(&tuple[..len - 1], gamma)?;
                gamma(head, tuple[len - 1])
            }
        }
    }
    let nodes: Vec<usize> = (0..n_nodes).collect();
    reduce(&nodes, &gamma)
}

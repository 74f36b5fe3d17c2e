use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::graph::{globally_reachable, DirectedGraph};
use crate::signal::{Piece, Schedule, Signal};

/// Independent generator for case `case` of a run seeded with `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

/// Shape of a random target graph. All shapes have a globally reachable root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetShape {
    Path,
    Star,
    Tree,
}

impl TargetShape {
    pub const ALL: [TargetShape; 3] = [TargetShape::Path, TargetShape::Star, TargetShape::Tree];
}

/// Random in-tree over a shuffled node order: every non-root node gets one
/// edge toward an earlier node.
pub fn random_target<R: Rng>(n_nodes: usize, shape: TargetShape, rng: &mut R) -> Result<DirectedGraph> {
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(rng);
    let edges = (1..n_nodes).map(|k| {
        let parent = match shape {
            TargetShape::Path => k - 1,
            TargetShape::Star => 0,
            TargetShape::Tree => rng.random_range(0..k),
        };
        (order[k], order[parent])
    });
    DirectedGraph::from_edges(n_nodes, edges.collect::<Vec<_>>())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomScheduleParams {
    pub n_agents: usize,
    pub window: f64,
    pub threshold: f64,
    /// Edges present in every `G(kT)`.
    pub target: DirectedGraph,
    /// Probability that a non-target pair carries distractor windows.
    pub extra_edge_prob: f64,
    pub seed: u64,
    /// The schedule repeats every `pattern_periods * window`.
    pub pattern_periods: usize,
}

/// Periodic schedule whose `(T, mu)`-graph at every `kT` contains the target.
pub fn random_schedule(params: &RandomScheduleParams) -> Result<Schedule> {
    ensure!(
        globally_reachable(&params.target).reachable_node.is_some(),
        Config,
        "target graph has no globally reachable node"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    windowed_schedule(params, &mut rng)
}

/// Like [`random_schedule`] without requiring a reachable node in the target.
pub(crate) fn windowed_schedule<R: Rng>(params: &RandomScheduleParams, rng: &mut R) -> Result<Schedule> {
    let RandomScheduleParams { n_agents, window, threshold, ref target, extra_edge_prob, pattern_periods, .. } =
        *params;
    ensure!(target.n_nodes() == n_agents, Config, "target graph has {} nodes, expected {n_agents}", target.n_nodes());
    ensure!(window.is_finite() && window > 0.0, Config, "window must be positive, got {window}");
    ensure!(threshold > 0.0 && threshold <= 1.0, Config, "threshold must lie in (0, 1], got {threshold}");
    ensure!((0.0..=1.0).contains(&extra_edge_prob), Config, "probability outside [0, 1]: {extra_edge_prob}");
    ensure!(pattern_periods >= 1, Config, "need at least one period in the pattern");

    let period = window * pattern_periods as f64;
    let mut sched = Schedule::new(n_agents)?;
    for i in 0..n_agents {
        for j in 0..n_agents {
            if i == j {
                continue;
            }
            let pieces: Vec<Piece> = if target.has_edge(i, j) {
                (0..pattern_periods).map(|k| required_window(k as f64 * window, window, threshold, rng)).collect()
            } else if rng.random_bool(extra_edge_prob) {
                (0..pattern_periods)
                    .filter_map(|k| distractor_window(k as f64 * window, window, rng))
                    .collect()
            } else {
                continue;
            };
            if !pieces.is_empty() {
                sched.set(i, j, Signal::new(pieces, 0.0, Some(period))?)?;
            }
        }
    }
    Ok(sched)
}

/// Height `h` in `[mu, 1]`, length `mu T / h` stretched by up to 50%.
fn required_window<R: Rng>(slot: f64, window: f64, threshold: f64, rng: &mut R) -> Piece {
    let height = rng.random_range(threshold..=1.0);
    let length = (threshold * window / height * rng.random_range(1.0..=1.5)).min(window);
    let start = slot + rng.random_range(0.0..=1.0) * (window - length);
    Piece::new(start, (start + length).min(slot + window), height)
}

fn distractor_window<R: Rng>(slot: f64, window: f64, rng: &mut R) -> Option<Piece> {
    if !rng.random_bool(0.5) {
        return None;
    }
    let length = rng.random_range(0.05..=1.0) * window;
    let start = slot + rng.random_range(0.0..=1.0) * (window - length);
    Some(Piece::new(start, (start + length).min(slot + window), rng.random_range(0.0..=1.0)))
}

/// Uniform random states in `[lo, hi]^dim`.
pub fn random_states<R: Rng>(n_agents: usize, dim: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..n_agents * dim).map(|_| rng.random_range(lo..=hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::connectivity_graph;

    fn params(target: DirectedGraph, prob: f64, seed: u64, periods: usize) -> RandomScheduleParams {
        RandomScheduleParams {
            n_agents: target.n_nodes(),
            window: 2.0,
            threshold: 0.3,
            target,
            extra_edge_prob: prob,
            seed,
            pattern_periods: periods,
        }
    }

    #[test]
    fn path_only_without_extras() {
        let s = random_schedule(&params(DirectedGraph::path_to_first(5), 0.0, 3, 2)).unwrap();
        let keys: Vec<(usize, usize)> = s.entries().map(|(k, _)| *k).collect();
        assert_eq!(keys, vec![(1, 0), (2, 1), (3, 2), (4, 3)]);
    }

    #[test]
    fn target_is_contained_at_every_block() {
        for seed in 0..30 {
            let mut rng = case_rng(11, seed);
            let shape = TargetShape::ALL[seed as usize % 3];
            let target = random_target(6, shape, &mut rng).unwrap();
            assert!(globally_reachable(&target).reachable_node.is_some());
            let p = params(target.clone(), 0.4, seed, 3);
            let s = random_schedule(&p).unwrap();
            for k in 0..7 {
                let g = connectivity_graph(&s, k as f64 * p.window, p.window, p.threshold).unwrap();
                assert!(target.is_subgraph_of(&g), "seed {seed}, block {k}");
            }
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let p = params(DirectedGraph::path_to_first(4), 0.5, 42, 2);
        assert_eq!(random_schedule(&p).unwrap().to_json(), random_schedule(&p).unwrap().to_json());
        assert!(random_schedule(&params(DirectedGraph::empty(3), 0.5, 1, 1)).is_err());
        let mut bad = p.clone();
        bad.threshold = 1.5;
        assert!(random_schedule(&bad).is_err());
    }
}

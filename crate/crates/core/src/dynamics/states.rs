use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Positions (or velocities) of `n_agents` agents in `R^dim`, agent-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentStates {
    n_agents: usize,
    dim: usize,
    values: Vec<f64>,
}

impl AgentStates {
    pub fn new(n_agents: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(n_agents >= 1 && dim >= 1, Domain, "need at least one agent and one dimension");
        ensure!(
            values.len() == n_agents * dim,
            Domain,
            "expected {} values for {n_agents} agents in dimension {dim}, got {}",
            n_agents * dim,
            values.len()
        );
        ensure!(values.iter().all(|v| v.is_finite()), Domain, "states must be finite");
        Ok(Self { n_agents, dim, values })
    }

    /// One scalar per agent.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        ensure!(rows.iter().all(|r| r.len() == dim), Domain, "rows have different lengths");
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn zeros(n_agents: usize, dim: usize) -> Self {
        Self { n_agents, dim, values: vec![0.0; n_agents * dim] }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Coordinate `k` of every agent.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        (0..self.n_agents).map(|i| self.values[i * self.dim + k]).collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.agent(i).iter().zip(self.agent(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Inner product of every agent with `direction`.
    pub fn project(&self, direction: &[f64]) -> Vec<f64> {
        (0..self.n_agents)
            .map(|i| self.agent(i).iter().zip(direction).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_agents, self.dim, &self.values)
    }

    pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (n_agents, dim) = m.shape();
        let values = (0..n_agents).flat_map(|i| (0..dim).map(move |k| (i, k))).map(|(i, k)| m[(i, k)]).collect();
        Self { n_agents, dim, values }
    }
}

/// Which family of variables a diameter refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Position,
    Velocity,
}

/// Largest pairwise Euclidean distance.
pub fn diameter(states: &AgentStates) -> f64 {
    let n = states.n_agents();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max(states.distance(i, j));
        }
    }
    best
}

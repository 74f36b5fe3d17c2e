use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::states::{diameter, AgentStates, Which};
use super::Family;
use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub family: Family,
    pub integrator: String,
    pub step: Option<f64>,
    pub coupling_gain: f64,
    pub schedule_digest: String,
}

/// Sampled solution of one of the models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<AgentStates>,
    pub velocities: Option<Vec<AgentStates>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.positions[0].n_agents()
    }

    pub fn dim(&self) -> usize {
        self.positions[0].dim()
    }

    pub fn states(&self, which: Which) -> Result<&[AgentStates]> {
        match which {
            Which::Position => Ok(&self.positions),
            Which::Velocity => self
                .velocities
                .as_deref()
                .ok_or_else(|| Error::Precondition("trajectory has no velocities".into())),
        }
    }

    pub fn diameters(&self, which: Which) -> Result<Vec<f64>> {
        Ok(self.states(which)?.iter().map(diameter).collect())
    }

    pub fn last(&self, which: Which) -> Result<&AgentStates> {
        Ok(self.states(which)?.last().expect("trajectories are nonempty"))
    }

    /// Index of the grid node at `t`, allowing for rounding in the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        let k = self.times.partition_point(|&s| s < t - tol);
        ensure!(
            k < self.times.len() && (self.times[k] - t).abs() <= tol,
            Precondition,
            "time {t} is not a grid node"
        );
        Ok(k)
    }

    pub fn csv_header(&self) -> String {
        let (n, d) = (self.n_agents(), self.dim());
        let mut cols = vec!["t".to_string()];
        for prefix in ["x", "v"] {
            if prefix == "v" && self.velocities.is_none() {
                break;
            }
            for i in 1..=n {
                for k in 1..=d {
                    cols.push(format!("{prefix}{i}_{k}"));
                }
            }
        }
        cols.join(",")
    }

    /// One row per grid time at full double precision.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for (k, &t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            let mut blocks = vec![&self.positions[k]];
            if let Some(v) = &self.velocities {
                blocks.push(&v[k]);
            }
            for block in blocks {
                for value in block.as_slice() {
                    let _ = write!(out, ",{value:.16e}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            times: vec![0.0, 0.5],
            positions: vec![AgentStates::scalar(&[0.0, 1.0]).unwrap(), AgentStates::scalar(&[0.25, 0.75]).unwrap()],
            velocities: None,
            meta: TrajectoryMeta {
                family: Family::FirstOrderLinear,
                integrator: "test".into(),
                step: None,
                coupling_gain: 0.5,
                schedule_digest: String::new(),
            },
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1_1,x2_1");
        let row: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.5, 0.25, 0.75]);
    }

    #[test]
    fn lookup_and_diameters() {
        let tr = sample();
        assert_eq!(tr.index_of(0.5).unwrap(), 1);
        assert!(tr.index_of(0.3).is_err());
        assert_eq!(tr.diameters(Which::Position).unwrap(), vec![1.0, 0.5]);
        assert!(tr.diameters(Which::Velocity).is_err());
    }
}

use serde::Serialize;

use super::states::{diameter, AgentStates, Which};
use super::trajectory::Trajectory;
use crate::error::{ensure, Result};

/// `alpha + exp(-((N - 1) / N) t) (x_bar - alpha)`.
pub fn left_barrier(x_bar: f64, alpha: f64, n_agents: usize, t: f64) -> Result<f64> {
    ensure!(x_bar >= alpha, Domain, "barrier needs x_bar >= alpha, got {x_bar} < {alpha}");
    ensure!(t >= 0.0, Domain, "barrier time must be nonnegative, got {t}");
    ensure!(n_agents >= 2, Domain, "barrier needs at least 2 agents");
    let rate = (n_agents - 1) as f64 / n_agents as f64;
    Ok(alpha + (-rate * t).exp() * (x_bar - alpha))
}

/// Indices within `tol` of the maximum and of the minimum of scalar states.
pub fn extremal_index_sets(states: &AgentStates, tol: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    ensure!(states.dim() == 1, Precondition, "extremal sets need scalar states");
    let x = states.as_slice();
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = (0..x.len()).filter(|&i| x[i] >= max - tol).collect();
    let lower = (0..x.len()).filter(|&i| x[i] <= min + tol).collect();
    Ok((upper, lower))
}

/// First place where a monotonicity-type invariant breaks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub time: f64,
    pub excess: f64,
    pub what: String,
}

/// Checks `series[k] <= series[k - 1] + tol` along the grid.
pub fn check_nonincreasing(times: &[f64], series: &[f64], tol: f64, what: &str) -> Option<Violation> {
    (1..series.len()).find(|&k| series[k] > series[k - 1] + tol).map(|k| Violation {
        index: k,
        time: times[k],
        excess: series[k] - series[k - 1],
        what: what.to_string(),
    })
}

/// For scalar first-order trajectories: the maximum never rises and the
/// minimum never falls by more than `tol` per step.
pub fn check_support_contraction(traj: &Trajectory, tol: f64) -> Result<Option<Violation>> {
    ensure!(traj.dim() == 1, Precondition, "support contraction is checked on scalar states");
    let max: Vec<f64> = traj.positions.iter().map(|x| x.as_slice().iter().copied().fold(f64::MIN, f64::max)).collect();
    let neg_min: Vec<f64> =
        traj.positions.iter().map(|x| -x.as_slice().iter().copied().fold(f64::MAX, f64::min)).collect();
    Ok(check_nonincreasing(&traj.times, &max, tol, "max_i x_i")
        .or_else(|| check_nonincreasing(&traj.times, &neg_min, tol, "-min_i x_i")))
}

/// Support function `max_i <x_i, u>` is nonincreasing for every direction.
pub fn check_directional_support(
    traj: &Trajectory,
    which: Which,
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<Option<Violation>> {
    let states = traj.states(which)?;
    for (n, u) in directions.iter().enumerate() {
        ensure!(u.len() == traj.dim(), Domain, "direction {n} has the wrong dimension");
        let support: Vec<f64> =
            states.iter().map(|x| x.project(u).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect();
        if let Some(v) = check_nonincreasing(&traj.times, &support, tol, &format!("support along direction {n}")) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// While the maximum (minimum) stays put, the set of agents attaining it
/// never gains a member.
pub fn check_extremal_sets(traj: &Trajectory, value_tol: f64, set_tol: f64) -> Result<Option<Violation>> {
    let mut prev = extremal_index_sets(&traj.positions[0], set_tol)?;
    for k in 1..traj.len() {
        let cur = extremal_index_sets(&traj.positions[k], set_tol)?;
        let (a, b) = (&traj.positions[k - 1], &traj.positions[k]);
        let max_of = |x: &AgentStates| x.as_slice().iter().copied().fold(f64::MIN, f64::max);
        let min_of = |x: &AgentStates| x.as_slice().iter().copied().fold(f64::MAX, f64::min);
        let checks = [
            ((max_of(a) - max_of(b)).abs() <= value_tol, &prev.0, &cur.0, "I+"),
            ((min_of(a) - min_of(b)).abs() <= value_tol, &prev.1, &cur.1, "I-"),
        ];
        for (steady, before, after, name) in checks {
            if let Some(&gained) = after.iter().find(|i| steady && !before.contains(i)) {
                return Ok(Some(Violation {
                    index: k,
                    time: traj.times[k],
                    excess: gained as f64,
                    what: format!("{name} gained agent {}", gained + 1),
                }));
            }
        }
        prev = cur;
    }
    Ok(None)
}

/// `D_X(t0 + t) <= D_X(t0) + t D_V(t0)` between consecutive grid times and
/// from the initial time to every grid time.
pub fn check_position_growth(traj: &Trajectory, tol: f64) -> Result<Option<Violation>> {
    let dx: Vec<f64> = traj.positions.iter().map(diameter).collect();
    let dv = traj.diameters(Which::Velocity)?;
    let t = &traj.times;
    for k in 1..traj.len() {
        for (from, label) in [(k - 1, "consecutive"), (0, "from start")] {
            let bound = dx[from] + (t[k] - t[from]) * dv[from];
            if dx[k] > bound + tol {
                return Ok(Some(Violation {
                    index: k,
                    time: t[k],
                    excess: dx[k] - bound,
                    what: format!("position growth ({label})"),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_examples() {
        assert_eq!(left_barrier(1.5, 0.2, 4, 0.0).unwrap(), 1.5);
        assert_eq!(left_barrier(0.3, 0.3, 4, 7.0).unwrap(), 0.3);
        assert!((left_barrier(1.0, 0.0, 3, 3.0).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        assert!(left_barrier(0.0, 1.0, 3, 1.0).is_err());
    }

    #[test]
    fn extremal_examples() {
        let (up, down) = extremal_index_sets(&AgentStates::scalar(&[0.0, 1.0, 1.0]).unwrap(), 1e-12).unwrap();
        assert_eq!((up, down), (vec![1, 2], vec![0]));
        let (up, down) = extremal_index_sets(&AgentStates::scalar(&[4.0; 3]).unwrap(), 1e-12).unwrap();
        assert_eq!((up, down), (vec![0, 1, 2], vec![0, 1, 2]));
        let (up, _) = extremal_index_sets(&AgentStates::scalar(&[0.0, 1.0 - 1e-15, 1.0]).unwrap(), 1e-12).unwrap();
        assert_eq!(up, vec![1, 2]);
    }

    #[test]
    fn nonincreasing_reports_first_rise() {
        let v = check_nonincreasing(&[0.0, 1.0, 2.0, 3.0], &[3.0, 2.0, 2.5, 1.0], 1e-9, "d").unwrap();
        assert_eq!((v.index, v.time), (2, 2.0));
        assert!(check_nonincreasing(&[0.0, 1.0], &[1.0, 1.0 + 1e-12], 1e-9, "d").is_none());
    }
}

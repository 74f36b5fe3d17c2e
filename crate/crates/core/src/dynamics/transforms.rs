use super::states::AgentStates;
use super::trajectory::{Trajectory, TrajectoryMeta};
use super::{Family, SystemSpec};
use crate::error::{ensure, Result};
use crate::signal::{Piece, Schedule, Signal};

/// Effective weights along a simulated trajectory.
///
/// Returns the schedule `N * g * lambda_i(x) * phi(|x_i - x_j|) * M_ij(t)`,
/// constant on every step of the trajectory grid and sampled at the step
/// midpoint. Integrated with the `1 / N` normalization it reproduces the
/// trajectory up to `O(h^2)`. For second-order systems the kernel is evaluated
/// on positions and the result drives the velocities.
pub fn linearize(spec: &SystemSpec, traj: &Trajectory, sched: &Schedule) -> Result<Schedule> {
    spec.validate()?;
    ensure!(sched.n_agents() == spec.n_agents, Precondition, "schedule and system sizes differ");
    ensure!(
        traj.n_agents() == spec.n_agents && traj.dim() == spec.dim,
        Precondition,
        "trajectory shape does not match the system"
    );
    let factor = spec.gain() * spec.n_agents as f64;
    let unit_kernel = spec.phi.is_unit() && (spec.family == Family::SecondOrder || spec.lambda.is_unit());
    if unit_kernel {
        return if factor == 1.0 { Ok(sched.clone()) } else { sched.scale_values(factor) };
    }
    let t_end = *traj.times.last().expect("trajectories are nonempty");
    for b in sched.breakpoints_in(0.0, t_end) {
        traj.index_of(b)?;
    }

    let n = spec.n_agents;
    let mut pieces: Vec<Vec<Piece>> = vec![Vec::new(); n * n];
    let mut ceiling = 1.0f64;
    for k in 1..traj.len() {
        let (a, b) = (traj.times[k - 1], traj.times[k]);
        let mid_values: Vec<f64> = traj.positions[k - 1]
            .as_slice()
            .iter()
            .zip(traj.positions[k].as_slice())
            .map(|(p, q)| 0.5 * (p + q))
            .collect();
        let mid = AgentStates::new(n, spec.dim, mid_values)?;
        let t_mid = 0.5 * (a + b);
        for (&(i, j), s) in sched.entries() {
            let m = s.value_at(t_mid);
            if m == 0.0 {
                continue;
            }
            let lambda = match spec.family {
                Family::SecondOrder => 1.0,
                _ => spec.lambda.eval(i, &mid, &spec.phi),
            };
            let value = factor * lambda * spec.phi.eval(mid.distance(i, j)) * m;
            ceiling = ceiling.max(value);
            pieces[i * n + j].push(Piece::new(a, b, value));
        }
    }
    let mut out = Schedule::new(n)?;
    for (idx, p) in pieces.into_iter().enumerate() {
        if !p.is_empty() {
            out.set(idx / n, idx % n, Signal::with_ceiling(p, 0.0, None, ceiling)?)?;
        }
    }
    Ok(out)
}

/// `y_i(s) = <x_i(s / m_bar), direction>` on the grid `m_bar * t`.
pub fn project_trajectory(traj: &Trajectory, direction: &[f64], m_bar: f64) -> Result<Trajectory> {
    ensure!(direction.len() == traj.dim(), Domain, "direction has the wrong dimension");
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    ensure!((norm - 1.0).abs() <= 1e-12, Domain, "direction must be a unit vector, |v| = {norm}");
    ensure!(m_bar.is_finite() && m_bar > 0.0, Domain, "m_bar must be positive, got {m_bar}");
    let positions =
        traj.positions.iter().map(|x| AgentStates::scalar(&x.project(direction))).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: traj.times.iter().map(|t| t * m_bar).collect(),
        positions,
        velocities: None,
        meta: TrajectoryMeta {
            family: Family::FirstOrderLinear,
            integrator: format!("projection of [{}]", traj.meta.integrator),
            step: traj.meta.step.map(|h| h * m_bar),
            coupling_gain: traj.meta.coupling_gain,
            schedule_digest: traj.meta.schedule_digest.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_linear, integrate_nonlinear, GridOptions, LambdaForm, PhiForm};

    fn full(n: usize) -> Schedule {
        Schedule::uniform(n, &Signal::constant(1.0).unwrap()).unwrap()
    }

    #[test]
    fn unit_kernels_return_the_schedule() {
        let spec = SystemSpec::nonlinear(2, 1, LambdaForm::Unit, PhiForm::PowerLaw { beta: 0.0 });
        let x0 = AgentStates::scalar(&[0.0, 1.0]).unwrap();
        let tr = integrate_nonlinear(&spec, &full(2), &x0, 1.0, &GridOptions::with_step(0.1)).unwrap();
        assert_eq!(linearize(&spec, &tr, &full(2)).unwrap(), full(2));
    }

    #[test]
    fn power_law_weights_rise_as_agents_meet() {
        let spec = SystemSpec::nonlinear(2, 1, LambdaForm::Unit, PhiForm::PowerLaw { beta: 0.5 });
        let x0 = AgentStates::scalar(&[0.0, 1.0]).unwrap();
        let tr = integrate_nonlinear(&spec, &full(2), &x0, 5.0, &GridOptions::with_step(1e-3)).unwrap();
        let lin = linearize(&spec, &tr, &full(2)).unwrap();
        let w = lin.signal(0, 1).unwrap();
        assert!((w.value_at(0.0) - 0.5f64.sqrt()).abs() < 1e-3);
        let samples: Vec<f64> = (0..50).map(|k| w.value_at(0.1 * k as f64 + 0.05)).collect();
        assert!(samples.windows(2).all(|p| p[1] >= p[0]));
        assert!(samples.last().unwrap() < &1.0);
    }

    #[test]
    fn projection_rescales_time() {
        let s = full(2);
        let x0 = AgentStates::scalar(&[0.0, 1.0]).unwrap();
        let tr = integrate_linear(&s, &x0, 0.5, 1.0, &GridOptions { max_step: Some(0.5), ..Default::default() })
            .unwrap();
        let y = project_trajectory(&tr, &[1.0], 2.0).unwrap();
        assert_eq!(y.positions[y.index_of(2.0).unwrap()], tr.positions[tr.index_of(1.0).unwrap()]);
        assert!(project_trajectory(&tr, &[2.0], 1.0).is_err());
        let planar = AgentStates::from_rows(&[vec![1.0, 5.0], vec![2.0, 6.0]]).unwrap();
        let tr2 = integrate_linear(&s, &planar, 0.5, 1.0, &GridOptions::default()).unwrap();
        let first = project_trajectory(&tr2, &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(first.positions[0].as_slice(), &[1.0, 2.0]);
    }
}

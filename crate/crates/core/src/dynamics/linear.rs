use std::collections::HashMap;

use nalgebra::DMatrix;

use super::grid::{Grid, GridOptions};
use super::states::AgentStates;
use super::trajectory::{Trajectory, TrajectoryMeta};
use super::Family;
use crate::error::{ensure, Error, Result};
use crate::signal::Schedule;

/// Exact piecewise integrator for `x_i' = g * sum_j M_ij(t) (x_j - x_i)`.
///
/// On every interval where the schedule is constant the flow is
/// `exp(A * dt)`. Propagators are cached by generator and step, so periodic
/// schedules only pay for one matrix exponential per distinct piece.
#[derive(Default)]
pub struct LinearIntegrator {
    cache: HashMap<Vec<u64>, DMatrix<f64>>,
}

impl LinearIntegrator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cached_propagators(&self) -> usize {
        self.cache.len()
    }

    /// Generator matrix with off-diagonal `g * M_ij(t)` and zero row sums.
    pub fn generator(sched: &Schedule, gain: f64, t: f64) -> DMatrix<f64> {
        let n = sched.n_agents();
        let mut a = DMatrix::zeros(n, n);
        for (&(i, j), s) in sched.entries() {
            let w = gain * s.value_at(t);
            a[(i, j)] += w;
            a[(i, i)] -= w;
        }
        a
    }

    fn propagator(&mut self, generator: &DMatrix<f64>, dt: f64) -> Result<&DMatrix<f64>> {
        let mut key: Vec<u64> = generator.iter().map(|v| v.to_bits()).collect();
        key.push(dt.to_bits());
        if !self.cache.contains_key(&key) {
            let flow = (generator * dt).exp();
            ensure!(flow.iter().all(|v| v.is_finite()), Numerical, "matrix exponential is not finite");
            self.cache.insert(key.clone(), flow);
        }
        Ok(&self.cache[&key])
    }

    pub fn run(
        &mut self,
        sched: &Schedule,
        x0: &AgentStates,
        gain: f64,
        t_end: f64,
        opts: &GridOptions,
    ) -> Result<Trajectory> {
        ensure!(gain.is_finite() && gain > 0.0, Domain, "coupling gain must be positive, got {gain}");
        ensure!(
            x0.n_agents() == sched.n_agents(),
            Domain,
            "{} initial states for {} agents",
            x0.n_agents(),
            sched.n_agents()
        );
        ensure!(x0.is_finite(), Domain, "initial states must be finite");
        let grid = Grid::build(sched, t_end, opts, false)?;
        let mut x = x0.to_matrix();
        let mut times = vec![0.0];
        let mut positions = vec![x0.clone()];
        for k in 1..grid.times.len() {
            let (a, b) = (grid.times[k - 1], grid.times[k]);
            let generator = Self::generator(sched, gain, 0.5 * (a + b));
            x = self.propagator(&generator, b - a)? * x;
            if grid.records(k, opts.record_stride) {
                times.push(b);
                positions.push(AgentStates::from_matrix(&x));
            }
        }
        if !positions.last().is_some_and(AgentStates::is_finite) {
            return Err(Error::Numerical("linear integration produced non-finite states".into()));
        }
        Ok(Trajectory {
            times,
            positions,
            velocities: None,
            meta: TrajectoryMeta {
                family: Family::FirstOrderLinear,
                integrator: "piecewise-exact matrix exponential".into(),
                step: opts.max_step,
                coupling_gain: gain,
                schedule_digest: sched.digest(),
            },
        })
    }
}

/// Integrates the linear model exactly on every constant piece.
pub fn integrate_linear(
    sched: &Schedule,
    x0: &AgentStates,
    gain: f64,
    t_end: f64,
    opts: &GridOptions,
) -> Result<Trajectory> {
    LinearIntegrator::new().run(sched, x0, gain, t_end, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{diameter, Which};
    use crate::signal::{Piece, Signal};

    #[test]
    fn two_agents_decay_and_mean() {
        let s = Schedule::uniform(2, &Signal::constant(1.0).unwrap()).unwrap();
        let x0 = AgentStates::scalar(&[0.0, 1.0]).unwrap();
        let tr = integrate_linear(&s, &x0, 0.5, 2.0, &GridOptions { max_step: Some(0.25), ..Default::default() })
            .unwrap();
        let k = tr.index_of(1.0).unwrap();
        assert!((diameter(&tr.positions[k]) - (-1.0f64).exp()).abs() < 1e-14);
        for p in &tr.positions {
            assert!((p.as_slice().iter().sum::<f64>() / 2.0 - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_is_static() {
        let s = Schedule::new(3).unwrap();
        let x0 = AgentStates::scalar(&[0.0, 2.0, -1.0]).unwrap();
        let tr = integrate_linear(&s, &x0, 1.0, 5.0, &GridOptions::default()).unwrap();
        assert_eq!(tr.last(Which::Position).unwrap(), &x0);
    }

    #[test]
    fn periodic_schedule_reuses_propagators() {
        let mut s = Schedule::new(2).unwrap();
        s.set(1, 0, Signal::new(vec![Piece::new(0.0, 1.0, 1.0)], 0.0, Some(2.0)).unwrap()).unwrap();
        let x0 = AgentStates::scalar(&[0.0, 1.0]).unwrap();
        let mut integ = LinearIntegrator::new();
        let tr = integ.run(&s, &x0, 1.0, 10.0, &GridOptions::default()).unwrap();
        assert_eq!(integ.cached_propagators(), 2);
        assert!((tr.positions.last().unwrap().agent(1)[0] - (-5.0f64).exp()).abs() < 1e-14);
    }
}

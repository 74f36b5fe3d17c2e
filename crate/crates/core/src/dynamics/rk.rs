use super::grid::{Grid, GridOptions};
use super::states::AgentStates;
use super::trajectory::{Trajectory, TrajectoryMeta};
use super::{Family, LambdaForm, PhiForm, SystemSpec};
use crate::error::{ensure, Error, Result};
use crate::signal::Schedule;

/// Nonzero weights `g * M_ij` on one constant interval.
fn active_links(sched: &Schedule, gain: f64, t: f64) -> Vec<(usize, usize, f64)> {
    sched
        .entries()
        .map(|(&(i, j), s)| (i, j, gain * s.value_at(t)))
        .filter(|&(_, _, w)| w != 0.0)
        .collect()
}

fn distance(x: &[f64], dim: usize, i: usize, j: usize) -> f64 {
    let (a, b) = (&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]);
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; len]), tmp: vec![0.0; len] }
    }

    fn step(&mut self, y: &mut [f64], h: f64, f: &dyn Fn(&[f64], &mut [f64])) {
        let [k1, k2, k3, k4] = &mut self.k;
        f(y, k1);
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(k1.iter())) {
            *t = y + 0.5 * h * k;
        }
        f(&self.tmp, k2);
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(k2.iter())) {
            *t = y + 0.5 * h * k;
        }
        f(&self.tmp, k3);
        for (t, (y, k)) in self.tmp.iter_mut().zip(y.iter().zip(k3.iter())) {
            *t = y + h * k;
        }
        f(&self.tmp, k4);
        for (idx, y) in y.iter_mut().enumerate() {
            *y += h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
        }
    }
}

fn meta(spec: &SystemSpec, sched: &Schedule, opts: &GridOptions) -> TrajectoryMeta {
    TrajectoryMeta {
        family: spec.family,
        integrator: "rk4, breakpoint-aligned fixed step".into(),
        step: opts.max_step,
        coupling_gain: spec.gain(),
        schedule_digest: sched.digest(),
    }
}

fn check_common(spec: &SystemSpec, sched: &Schedule, family: Family) -> Result<()> {
    spec.validate()?;
    ensure!(spec.family == family, Config, "expected a {family:?} system, got {:?}", spec.family);
    ensure!(
        sched.n_agents() == spec.n_agents,
        Config,
        "schedule has {} agents, system has {}",
        sched.n_agents(),
        spec.n_agents
    );
    Ok(())
}

/// RK4 for `x_i' = g * lambda_i(x) * sum_j M_ij(t) phi(|x_i - x_j|) (x_j - x_i)`.
pub fn integrate_nonlinear(
    spec: &SystemSpec,
    sched: &Schedule,
    x0: &AgentStates,
    t_end: f64,
    opts: &GridOptions,
) -> Result<Trajectory> {
    check_common(spec, sched, Family::FirstOrderNonlinear)?;
    spec.check_states(x0)?;
    let grid = Grid::build(sched, t_end, opts, true)?;
    let (n, dim, gain) = (spec.n_agents, spec.dim, spec.gain());
    let (lambda, phi) = (spec.lambda, spec.phi);
    let mut y = x0.as_slice().to_vec();
    let mut rk = Rk4::new(y.len());
    let mut times = vec![0.0];
    let mut positions = vec![x0.clone()];
    let mut links = Vec::new();
    let mut current_interval = usize::MAX;
    let anchors: Vec<usize> = (0..grid.times.len()).filter(|&k| grid.forced[k]).collect();
    for k in 1..grid.times.len() {
        let (a, b) = (grid.times[k - 1], grid.times[k]);
        let interval = anchors.partition_point(|&m| m < k);
        if interval != current_interval {
            let (lo, hi) = (grid.times[anchors[interval - 1]], grid.times[anchors[interval]]);
            links = active_links(sched, gain, 0.5 * (lo + hi));
            current_interval = interval;
        }
        let rhs = |x: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            for &(i, j, w) in &links {
                let c = w * phi.eval(distance(x, dim, i, j));
                for q in 0..dim {
                    out[i * dim + q] += c * (x[j * dim + q] - x[i * dim + q]);
                }
            }
            if !matches!(lambda, LambdaForm::Unit) {
                let states = AgentStates::new(n, dim, x.to_vec()).expect("shape is fixed");
                for i in 0..n {
                    let l = lambda.eval(i, &states, &phi);
                    out[i * dim..(i + 1) * dim].iter_mut().for_each(|v| *v *= l);
                }
            }
        };
        rk.step(&mut y, b - a, &rhs);
        if grid.records(k, opts.record_stride) {
            times.push(b);
            positions.push(
                AgentStates::new(n, dim, y.clone())
                    .map_err(|_| Error::Numerical(format!("non-finite state at t = {b}")))?,
            );
        }
    }
    Ok(Trajectory { times, positions, velocities: None, meta: meta(spec, sched, opts) })
}

/// RK4 for `x_i' = v_i`, `v_i' = g * sum_j M_ij(t) phi(|x_i - x_j|) (v_j - v_i)`.
pub fn integrate_second_order(
    spec: &SystemSpec,
    sched: &Schedule,
    x0: &AgentStates,
    v0: &AgentStates,
    t_end: f64,
    opts: &GridOptions,
) -> Result<Trajectory> {
    check_common(spec, sched, Family::SecondOrder)?;
    spec.check_states(x0)?;
    spec.check_states(v0)?;
    let grid = Grid::build(sched, t_end, opts, true)?;
    let (n, dim, gain) = (spec.n_agents, spec.dim, spec.gain());
    let phi: PhiForm = spec.phi;
    let half = n * dim;
    let mut y = [x0.as_slice(), v0.as_slice()].concat();
    let mut rk = Rk4::new(y.len());
    let mut times = vec![0.0];
    let mut positions = vec![x0.clone()];
    let mut velocities = vec![v0.clone()];
    let mut links = Vec::new();
    let mut current_interval = usize::MAX;
    let anchors: Vec<usize> = (0..grid.times.len()).filter(|&k| grid.forced[k]).collect();
    for k in 1..grid.times.len() {
        let (a, b) = (grid.times[k - 1], grid.times[k]);
        let interval = anchors.partition_point(|&m| m < k);
        if interval != current_interval {
            let (lo, hi) = (grid.times[anchors[interval - 1]], grid.times[anchors[interval]]);
            links = active_links(sched, gain, 0.5 * (lo + hi));
            current_interval = interval;
        }
        let rhs = |s: &[f64], out: &mut [f64]| {
            let (x, v) = s.split_at(half);
            let (dx, dv) = out.split_at_mut(half);
            dx.copy_from_slice(v);
            dv.fill(0.0);
            for &(i, j, w) in &links {
                let c = w * phi.eval(distance(x, dim, i, j));
                for q in 0..dim {
                    dv[i * dim + q] += c * (v[j * dim + q] - v[i * dim + q]);
                }
            }
        };
        rk.step(&mut y, b - a, &rhs);
        if grid.records(k, opts.record_stride) {
            let bad = |_| Error::Numerical(format!("non-finite state at t = {b}"));
            times.push(b);
            positions.push(AgentStates::new(n, dim, y[..half].to_vec()).map_err(bad)?);
            velocities.push(AgentStates::new(n, dim, y[half..].to_vec()).map_err(bad)?);
        }
    }
    Ok(Trajectory { times, positions, velocities: Some(velocities), meta: meta(spec, sched, opts) })
}

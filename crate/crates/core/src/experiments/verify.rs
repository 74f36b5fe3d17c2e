use serde::Serialize;

use crate::certificates::{diameter_envelope, RateCertificate, SecondOrderRate};
use crate::dynamics::{Trajectory, Which};
use crate::error::{ensure, Result};

/// Allowed excess over a bound, relative to the initial diameter.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCheck {
    pub block: u64,
    pub time: f64,
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`, negative on violation.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub passed: bool,
    pub blocks: Vec<BlockCheck>,
    pub envelope_points: usize,
    /// Largest `measured - bound` over the envelope checks.
    pub worst_envelope_excess: f64,
    /// `(time, measured, bound)` of the first violation, blocks first.
    pub first_violation: Option<(f64, f64, f64)>,
}

/// Checks `D(n tau) <= C^n D(0)` at every block time in the trajectory range
/// and `D(t) <= C^n phi(t - n tau) D(0)` at every grid time.
pub fn verify_certificate(traj: &Trajectory, cert: &RateCertificate, which: Which) -> Result<CertificateCheck> {
    let series = traj.diameters(which)?;
    let t_end = *traj.times.last().expect("trajectories are nonempty");
    let mut block_indices = Vec::new();
    let mut n = 1u64;
    while n as f64 * cert.block_time <= t_end * (1.0 + 1e-12) {
        block_indices.push((n, traj.index_of(n as f64 * cert.block_time)?));
        n += 1;
    }
    verify_diameter_series(&traj.times, &series, cert, &block_indices)
}

/// Core of [`verify_certificate`] on a bare series; `blocks` pairs each block
/// number with its index in `times`.
pub fn verify_diameter_series(
    times: &[f64],
    series: &[f64],
    cert: &RateCertificate,
    blocks: &[(u64, usize)],
) -> Result<CertificateCheck> {
    ensure!(times.len() == series.len() && !times.is_empty(), Precondition, "times and series differ in length");
    let d0 = series[0];
    let tol = VERIFY_TOL * d0.max(f64::MIN_POSITIVE);
    let mut first_violation = None;
    let mut checks = Vec::with_capacity(blocks.len());
    for &(n, k) in blocks {
        ensure!(k < series.len(), Precondition, "block index {k} outside the series");
        let bound = cert.contraction.powf(n as f64) * d0;
        if series[k] > bound + tol && first_violation.is_none() {
            first_violation = Some((times[k], series[k], bound));
        }
        checks.push(BlockCheck { block: n, time: times[k], measured: series[k], bound, slack: bound - series[k] });
    }
    let mut worst = f64::NEG_INFINITY;
    let mut envelope_violation = None;
    for (k, (&t, &d)) in times.iter().zip(series).enumerate() {
        let bound = diameter_envelope(cert, t) * d0;
        worst = worst.max(d - bound);
        if d > bound + tol && envelope_violation.is_none() {
            envelope_violation = Some((times[k], d, bound));
        }
    }
    let first_violation = first_violation.or(envelope_violation);
    Ok(CertificateCheck {
        passed: first_violation.is_none(),
        blocks: checks,
        envelope_points: times.len(),
        worst_envelope_excess: worst,
        first_violation,
    })
}

/// Checks `D_V((n+1) tau) <= C(n tau) D_V(n tau)` between consecutive block
/// times and `D_X(t) <= position_bound(n)` for `t` in block `n`.
pub fn verify_second_order(traj: &Trajectory, rate: &SecondOrderRate) -> Result<CertificateCheck> {
    let dv = traj.diameters(Which::Velocity)?;
    let dx = traj.diameters(Which::Position)?;
    let tau = rate.block_time();
    let t_end = *traj.times.last().expect("trajectories are nonempty");
    let tol_v = VERIFY_TOL * dv[0].max(f64::MIN_POSITIVE);
    let tol_x = VERIFY_TOL * dx[0].max(1.0);

    let mut first_violation = None;
    let mut checks = Vec::new();
    let mut prev = 0usize;
    let mut n = 0u64;
    while (n + 1) as f64 * tau <= t_end * (1.0 + 1e-12) {
        let k = traj.index_of((n + 1) as f64 * tau)?;
        let bound = rate.factor(n) * dv[prev];
        if dv[k] > bound + tol_v && first_violation.is_none() {
            first_violation = Some((traj.times[k], dv[k], bound));
        }
        checks.push(BlockCheck { block: n + 1, time: traj.times[k], measured: dv[k], bound, slack: bound - dv[k] });
        prev = k;
        n += 1;
    }

    let mut worst = f64::NEG_INFINITY;
    let mut bound_cache: Vec<f64> = Vec::new();
    for (k, &t) in traj.times.iter().enumerate() {
        // Grid times at a block boundary belong to both blocks; use the earlier.
        let block = ((t / tau) * (1.0 - 1e-12)).floor().max(0.0) as usize;
        while bound_cache.len() <= block {
            bound_cache.push(rate.position_bound(bound_cache.len() as u64));
        }
        let bound = bound_cache[block];
        worst = worst.max(dx[k] - bound);
        if dx[k] > bound + tol_x && first_violation.is_none() {
            first_violation = Some((t, dx[k], bound));
        }
    }
    Ok(CertificateCheck {
        passed: first_violation.is_none(),
        blocks: checks,
        envelope_points: traj.len(),
        worst_envelope_excess: worst,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::rate_linear;
    use crate::dynamics::{integrate_linear, AgentStates, GridOptions};
    use crate::experiments::{example1_schedule, WindowLayout};

    #[test]
    fn example1_passes_with_huge_slack() {
        let sched = example1_schedule(3, 3.0, 0.5, WindowLayout::Sequential).unwrap();
        let cert = rate_linear(3, 3.0, 0.5, 2).unwrap();
        let x0 = AgentStates::scalar(&[0.0, 1.0, 1.0]).unwrap();
        let opts = GridOptions::with_step(0.1).extra_times((1..=4).map(|n| n as f64 * cert.block_time));
        let tr = integrate_linear(&sched, &x0, 1.0 / 3.0, 4.0 * cert.block_time, &opts).unwrap();
        let check = verify_certificate(&tr, &cert, Which::Position).unwrap();
        assert!(check.passed);
        assert_eq!(check.blocks.len(), 4);
        assert!(check.blocks.iter().all(|b| b.slack > 0.1));
    }

    #[test]
    fn zero_diameter_passes_and_violation_fails() {
        let cert = rate_linear(3, 3.0, 0.5, 2).unwrap();
        let tau = cert.block_time;
        let times = [0.0, tau, 2.0 * tau];
        assert!(verify_diameter_series(&times, &[0.0; 3], &cert, &[(1, 1), (2, 2)]).unwrap().passed);

        let mut half = cert.clone();
        half.contraction = 0.5;
        let check = verify_diameter_series(&times, &[1.0, 0.99, 0.98], &half, &[(1, 1), (2, 2)]).unwrap();
        assert!(!check.passed);
        assert_eq!(check.first_violation.unwrap().0, tau);
    }

    #[test]
    fn missing_block_time_is_a_precondition_error() {
        let sched = example1_schedule(3, 3.0, 0.5, WindowLayout::Sequential).unwrap();
        let mut cert = rate_linear(3, 3.0, 0.5, 2).unwrap();
        cert.block_time = 0.7;
        let x0 = AgentStates::scalar(&[0.0, 1.0, 1.0]).unwrap();
        let tr = integrate_linear(&sched, &x0, 1.0 / 3.0, 3.0, &GridOptions::default()).unwrap();
        assert!(matches!(verify_certificate(&tr, &cert, Which::Position), Err(crate::Error::Precondition(_))));
    }
}

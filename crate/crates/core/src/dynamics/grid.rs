use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::signal::Schedule;

/// Controls the time grid of an integration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Largest step. Required by the Runge-Kutta integrators; for the exact
    /// linear integrator it only densifies the recorded grid.
    pub max_step: Option<f64>,
    /// Times that must be grid nodes in addition to the schedule breakpoints.
    #[serde(default)]
    pub extra_times: Vec<f64>,
    /// Record every `record_stride`-th step. Breakpoints, extra times and the
    /// final time are always recorded.
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { max_step: None, extra_times: Vec::new(), record_stride: 1 }
    }
}

impl GridOptions {
    pub fn with_step(h: f64) -> Self {
        Self { max_step: Some(h), ..Self::default() }
    }

    pub fn extra_times(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.extra_times.extend(times);
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }
}

/// Breakpoint intervals shorter than this cannot be stepped by Runge-Kutta.
pub(crate) const MIN_INTERVAL: f64 = 1e-10;

fn merge_tolerance(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// Step nodes of a run and whether each node is a mandatory record point.
pub(crate) struct Grid {
    pub times: Vec<f64>,
    pub forced: Vec<bool>,
}

impl Grid {
    pub fn build(sched: &Schedule, t_end: f64, opts: &GridOptions, need_step: bool) -> Result<Grid> {
        ensure!(t_end.is_finite() && t_end > 0.0, Domain, "t_end must be positive, got {t_end}");
        ensure!(opts.record_stride >= 1, Config, "record_stride must be at least 1");
        if let Some(h) = opts.max_step {
            ensure!(h.is_finite() && h > 0.0, Config, "step must be positive, got {h}");
        } else {
            ensure!(!need_step, Config, "this integrator needs a step size");
        }
        ensure!(opts.extra_times.iter().all(|t| t.is_finite()), Domain, "extra times must be finite");

        let mut candidates = sched.breakpoints_in(0.0, t_end);
        candidates.extend(opts.extra_times.iter().copied().filter(|&t| t > 0.0 && t < t_end));
        candidates.sort_by(f64::total_cmp);
        let mut anchors = vec![0.0];
        for t in candidates {
            let last = *anchors.last().expect("anchors start with 0");
            if t - last > merge_tolerance(t) {
                anchors.push(t);
            }
        }
        if t_end - *anchors.last().expect("nonempty") <= merge_tolerance(t_end) && anchors.len() > 1 {
            anchors.pop();
        }
        anchors.push(t_end);

        if need_step {
            if let Some(w) = anchors.windows(2).find(|w| w[1] - w[0] < MIN_INTERVAL) {
                return Err(crate::Error::Config(format!(
                    "breakpoints {} and {} are closer than the minimum step {MIN_INTERVAL}",
                    w[0], w[1]
                )));
            }
        }

        let mut times = vec![0.0];
        let mut forced = vec![true];
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pieces = match opts.max_step {
                Some(h) => (((b - a) / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
                None => 1,
            };
            for m in 1..pieces {
                times.push(a + (b - a) * m as f64 / pieces as f64);
                forced.push(false);
            }
            times.push(b);
            forced.push(true);
        }
        Ok(Grid { times, forced })
    }

    /// Whether step node `k` is recorded under `stride`.
    pub fn records(&self, k: usize, stride: usize) -> bool {
        self.forced[k] || k % stride == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Piece, Signal};

    #[test]
    fn grid_hits_breakpoints_and_bounds_steps() {
        let mut s = Schedule::new(2).unwrap();
        s.set(0, 1, Signal::new(vec![Piece::new(0.0, 1.5, 1.0)], 0.0, Some(3.0)).unwrap()).unwrap();
        let g = Grid::build(&s, 6.0, &GridOptions::with_step(0.4), true).unwrap();
        for b in [0.0, 1.5, 3.0, 4.5, 6.0] {
            assert!(g.times.iter().any(|&t| t == b), "missing {b}");
        }
        assert!(g.times.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.4 + 1e-12));
        let exact = Grid::build(&s, 6.0, &GridOptions::default(), false).unwrap();
        assert_eq!(exact.times, vec![0.0, 1.5, 3.0, 4.5, 6.0]);
        assert!(Grid::build(&s, 6.0, &GridOptions::default(), true).is_err());
    }

    #[test]
    fn dense_breakpoints_are_rejected() {
        let mut s = Schedule::new(2).unwrap();
        s.set(0, 1, Signal::new(vec![Piece::new(1.0, 1.0 + 1e-11, 1.0)], 0.0, None).unwrap()).unwrap();
        assert!(matches!(
            Grid::build(&s, 2.0, &GridOptions::with_step(0.1), true),
            Err(crate::Error::Config(_))
        ));
    }
}

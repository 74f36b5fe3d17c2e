//! Piecewise-constant connection weights and the schedules built from them.
//!
//! A [`Signal`] is a function of time made of closed-left/open-right pieces
//! over a default level, optionally repeating with a fixed period. Integrals
//! are sums of piece overlaps, so window averages never go through
//! quadrature. A [`Schedule`] is the off-diagonal matrix of signals, where
//! entry `(i, j)` weighs `x_j - x_i` in agent `i`'s equation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// One constant stretch `[start, end)` of a signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Piece {
    pub fn new(start: f64, end: f64, value: f64) -> Self {
        Self { start, end, value }
    }

    fn overlap(&self, a: f64, b: f64) -> f64 {
        (self.end.min(b) - self.start.max(a)).max(0.0)
    }
}

/// A piecewise-constant, nonnegative weight.
///
/// Weights read from the outside world live in `[0, 1]`. Intermediate
/// schedules (e.g. the linearized weights of a nonlinear system) may exceed
/// one; they carry an explicit `ceiling` that every value respects.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pieces: Vec<Piece>,
    default_value: f64,
    period: Option<f64>,
    ceiling: f64,
}

impl Signal {
    /// Builds a `[0, 1]`-valued signal.
    pub fn new(pieces: Vec<Piece>, default_value: f64, period: Option<f64>) -> Result<Self> {
        Self::with_ceiling(pieces, default_value, period, 1.0)
    }

    /// Builds a signal whose values lie in `[0, ceiling]`.
    pub fn with_ceiling(
        mut pieces: Vec<Piece>,
        default_value: f64,
        period: Option<f64>,
        ceiling: f64,
    ) -> Result<Self> {
        ensure!(
            ceiling.is_finite() && ceiling >= 1.0,
            Domain,
            "signal ceiling must be finite and at least 1, got {ceiling}"
        );
        let in_range = |v: f64| v.is_finite() && (0.0..=ceiling).contains(&v);
        ensure!(
            in_range(default_value),
            Domain,
            "default value {default_value} outside [0, {ceiling}]"
        );
        if let Some(p) = period {
            ensure!(p.is_finite() && p > 0.0, Domain, "period must be positive, got {p}");
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        for (k, piece) in pieces.iter().enumerate() {
            ensure!(
                piece.start.is_finite() && piece.end.is_finite() && piece.start < piece.end,
                Domain,
                "piece {k} has invalid bounds [{}, {})",
                piece.start,
                piece.end
            );
            ensure!(piece.start >= 0.0, Domain, "piece {k} starts before t = 0");
            ensure!(
                in_range(piece.value),
                Domain,
                "piece {k} value {} outside [0, {ceiling}]",
                piece.value
            );
            if let Some(p) = period {
                ensure!(piece.end <= p, Domain, "piece {k} ends after the period {p}");
            }
            if k > 0 {
                ensure!(
                    pieces[k - 1].end <= piece.start,
                    Domain,
                    "pieces {} and {k} overlap",
                    k - 1
                );
            }
        }
        Ok(Self { pieces, default_value, period, ceiling })
    }

    pub fn zero() -> Self {
        Self { pieces: Vec::new(), default_value: 0.0, period: None, ceiling: 1.0 }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), value, None)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn default_value(&self) -> f64 {
        self.default_value
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    /// Largest value the signal takes anywhere.
    pub fn max_value(&self) -> f64 {
        self.pieces.iter().map(|p| p.value).fold(self.default_value, f64::max)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.max_value() == 0.0
    }

    fn reduce(&self, t: f64) -> f64 {
        match self.period {
            Some(p) => {
                let r = t - (t / p).floor() * p;
                if r < 0.0 {
                    0.0
                } else if r >= p {
                    r - p
                } else {
                    r
                }
            }
            None => t,
        }
    }

    /// Value at time `t` under the closed-left/open-right convention.
    pub fn value_at(&self, t: f64) -> f64 {
        let r = self.reduce(t);
        let idx = self.pieces.partition_point(|p| p.start <= r);
        if idx > 0 {
            let piece = &self.pieces[idx - 1];
            if r < piece.end {
                return piece.value;
            }
        }
        self.default_value
    }

    /// Integral over `[a, b]` inside a single period frame (or the whole line).
    fn integrate_local(&self, a: f64, b: f64) -> f64 {
        let mut total = self.default_value * (b - a);
        for piece in &self.pieces {
            if piece.start >= b {
                break;
            }
            total += (piece.value - self.default_value) * piece.overlap(a, b);
        }
        total
    }

    /// Exact integral of the signal over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        ensure!(
            a.is_finite() && b.is_finite() && a >= 0.0 && a <= b,
            Domain,
            "integration bounds must satisfy 0 <= a <= b, got [{a}, {b}]"
        );
        let Some(p) = self.period else {
            return Ok(self.integrate_local(a, b));
        };
        let ka = (a / p).floor();
        let kb = (b / p).floor();
        let ra = (a - ka * p).clamp(0.0, p);
        let rb = (b - kb * p).clamp(0.0, p);
        if ka == kb {
            return Ok(self.integrate_local(ra, rb));
        }
        let full = self.integrate_local(0.0, p);
        Ok(self.integrate_local(ra, p) + (kb - ka - 1.0) * full + self.integrate_local(0.0, rb))
    }

    /// Average of the signal over the window `[t, t + window]`.
    pub fn window_average(&self, t: f64, window: f64) -> Result<f64> {
        ensure!(window.is_finite() && window > 0.0, Domain, "window length must be positive, got {window}");
        ensure!(t.is_finite() && t >= 0.0, Domain, "window start must be nonnegative, got {t}");
        Ok(self.integrate(t, t + window)? / window)
    }

    /// Piece boundaries of one period (or of the whole signal when aperiodic).
    pub fn local_breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().flat_map(|p| [p.start, p.end]).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// All discontinuity candidates strictly inside `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let local = self.local_breakpoints();
        let mut out = Vec::new();
        match self.period {
            None => out.extend(local.into_iter().filter(|&t| t > a && t < b)),
            Some(p) => {
                let first = (a / p).floor() as i64;
                let last = (b / p).ceil() as i64;
                for k in first..=last {
                    let shift = k as f64 * p;
                    out.extend(local.iter().map(|&t| t + shift).filter(|&t| t > a && t < b));
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Window starts at which `t -> window_average(t, window)` can change slope.
    ///
    /// The window average is piecewise linear in `t`, with kinks where either
    /// window end crosses a breakpoint. For a periodic signal the returned
    /// times cover one period; otherwise they cover `[0, last breakpoint]`,
    /// after which the average is constant.
    pub fn window_kinks(&self, window: f64) -> Vec<f64> {
        let local = self.local_breakpoints();
        let mut out = vec![0.0];
        match self.period {
            Some(_) => {
                for b in local {
                    out.push(self.reduce(b));
                    out.push(self.reduce(b - window));
                }
            }
            None => {
                for b in local {
                    out.push(b);
                    if b - window >= 0.0 {
                        out.push(b - window);
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Multiplies every value by `c`, keeping the piece layout.
    pub fn scale_values(&self, c: f64) -> Result<Signal> {
        ensure!(c.is_finite() && c >= 0.0, Domain, "scale factor must be nonnegative, got {c}");
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.start, p.end, p.value * c))
            .collect();
        let ceiling = (self.ceiling * c).max(1.0);
        Signal::with_ceiling(pieces, self.default_value * c, self.period, ceiling)
    }

    /// Returns `s -> value(s / m_bar) / m_bar`.
    pub fn rescale_time(&self, m_bar: f64) -> Result<Signal> {
        ensure!(m_bar.is_finite() && m_bar > 0.0, Domain, "m_bar must be positive, got {m_bar}");
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.start * m_bar, p.end * m_bar, p.value / m_bar))
            .collect();
        Signal::new(pieces, self.default_value / m_bar, self.period.map(|p| p * m_bar))
    }
}

/// The matrix of connection weights, off-diagonal only.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    n_agents: usize,
    entries: BTreeMap<(usize, usize), Signal>,
}

impl Schedule {
    pub fn new(n_agents: usize) -> Result<Self> {
        ensure!(n_agents >= 2, Config, "a schedule needs at least 2 agents, got {n_agents}");
        Ok(Self { n_agents, entries: BTreeMap::new() })
    }

    /// Schedule where every off-diagonal entry is the same signal.
    pub fn uniform(n_agents: usize, signal: &Signal) -> Result<Self> {
        let mut sched = Self::new(n_agents)?;
        for i in 0..n_agents {
            for j in 0..n_agents {
                if i != j {
                    sched.set(i, j, signal.clone())?;
                }
            }
        }
        Ok(sched)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Sets entry `(i, j)` (0-based). Identically-zero signals are not stored.
    pub fn set(&mut self, i: usize, j: usize, signal: Signal) -> Result<()> {
        ensure!(
            i < self.n_agents && j < self.n_agents,
            Domain,
            "entry ({i}, {j}) out of range for {} agents",
            self.n_agents
        );
        ensure!(i != j, Domain, "diagonal entry ({i}, {i}) cannot be set");
        if signal.is_identically_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), signal);
        }
        Ok(())
    }

    pub fn signal(&self, i: usize, j: usize) -> Option<&Signal> {
        self.entries.get(&(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Signal)> {
        self.entries.iter()
    }

    pub fn value_at(&self, i: usize, j: usize, t: f64) -> f64 {
        self.entries.get(&(i, j)).map_or(0.0, |s| s.value_at(t))
    }

    pub fn window_average(&self, i: usize, j: usize, t: f64, window: f64) -> Result<f64> {
        match self.entries.get(&(i, j)) {
            Some(s) => s.window_average(t, window),
            None => Signal::zero().window_average(t, window),
        }
    }

    /// Dense `N x N` matrix of values at time `t` (zero diagonal).
    pub fn values_at(&self, t: f64) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_agents]; self.n_agents];
        for (&(i, j), s) in &self.entries {
            out[i][j] = s.value_at(t);
        }
        out
    }

    /// Union of the breakpoints of every entry strictly inside `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.entries.values().flat_map(|s| s.breakpoints_in(a, b)).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Common period of the schedule when every entry is periodic with the
    /// same period (zero entries are periodic with any period).
    pub fn common_period(&self) -> Option<f64> {
        let mut period = None;
        for s in self.entries.values() {
            if s.pieces().is_empty() {
                continue;
            }
            match (period, s.period()) {
                (_, None) => return None,
                (None, Some(p)) => period = Some(p),
                (Some(q), Some(p)) if q == p => {}
                _ => return None,
            }
        }
        period
    }

    pub fn max_value(&self) -> f64 {
        self.entries.values().map(Signal::max_value).fold(0.0, f64::max)
    }

    /// Builds `M_hat(t) = M(t / m_bar) / m_bar` entrywise.
    pub fn rescale_time(&self, m_bar: f64) -> Result<Schedule> {
        let mut out = Schedule::new(self.n_agents)?;
        for (&(i, j), s) in &self.entries {
            out.set(i, j, s.rescale_time(m_bar)?)?;
        }
        Ok(out)
    }

    /// Multiplies every entry by `c`.
    pub fn scale_values(&self, c: f64) -> Result<Schedule> {
        let mut out = Schedule::new(self.n_agents)?;
        for (&(i, j), s) in &self.entries {
            out.set(i, j, s.scale_values(c)?)?;
        }
        Ok(out)
    }

    pub fn to_wire(&self) -> ScheduleWire {
        ScheduleWire {
            n_agents: self.n_agents,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), s)| EntryWire {
                    i: i + 1,
                    j: j + 1,
                    default: s.default_value,
                    period: s.period,
                    pieces: s.pieces.iter().map(|p| [p.start, p.end, p.value]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_wire(wire: &ScheduleWire) -> Result<Self> {
        let mut sched = Schedule::new(wire.n_agents)?;
        for (k, e) in wire.entries.iter().enumerate() {
            ensure!(
                (1..=wire.n_agents).contains(&e.i) && (1..=wire.n_agents).contains(&e.j),
                Config,
                "entries[{k}]: indices ({}, {}) outside 1..={}",
                e.i,
                e.j,
                wire.n_agents
            );
            ensure!(sched.signal(e.i - 1, e.j - 1).is_none(), Config, "entries[{k}]: duplicate entry ({}, {})", e.i, e.j);
            let pieces = e.pieces.iter().map(|p| Piece::new(p[0], p[1], p[2])).collect();
            let signal = Signal::new(pieces, e.default, e.period)
                .map_err(|err| Error::Config(format!("entries[{k}]: {err}")))?;
            sched
                .set(e.i - 1, e.j - 1, signal)
                .map_err(|err| Error::Config(format!("entries[{k}]: {err}")))?;
        }
        Ok(sched)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("schedule wire format serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: ScheduleWire =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("schedule JSON: {e}")))?;
        Self::from_wire(&wire)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::digest::sha256_canonical(&self.to_wire())
    }
}

/// On-disk schedule layout; agent indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleWire {
    pub n_agents: usize,
    #[serde(default)]
    pub entries: Vec<EntryWire>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryWire {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub pieces: Vec<[f64; 3]>,
}

/// Windowed-average threshold test `avg >= mu` with floating-point slack.
///
/// Breakpoints such as `T - l (1 + mu)` are rounded when stored, so a window
/// sitting exactly on the threshold can integrate a few ulps short. The slack
/// is a fixed multiple of machine epsilon relative to `mu * window`.
pub fn meets_threshold(integral: f64, window: f64, mu: f64) -> bool {
    const SLACK_ULPS: f64 = 16.0;
    let target = mu * window;
    integral >= target - SLACK_ULPS * f64::EPSILON * target.abs().max(window)
}

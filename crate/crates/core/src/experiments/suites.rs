//! Seeded property suites checking the certificates and invariants on
//! randomized schedules.
//!
//! Every case draws from its own generator `case_rng(seed, case_id)`, so any
//! failure is reproduced by its `(seed, case_id)` pair alone. Cases run on the
//! ambient rayon pool and are reported in case order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::examples::{example1_schedule, run_example2, Example2Params, WindowLayout};
use super::random::{case_rng, random_states, random_target, windowed_schedule, RandomScheduleParams, TargetShape};
use super::verify::verify_certificate;
use crate::certificates::{bounds_m, eta, rate_linear, rate_nonlinear};
use crate::dynamics::{
    check_directional_support, check_extremal_sets, check_nonincreasing, check_position_growth,
    check_support_contraction, integrate_linear, integrate_nonlinear, integrate_second_order, left_barrier,
    linearize, project_trajectory, AgentStates, GridOptions, LambdaForm, PhiForm, SystemSpec, Trajectory, Which,
};
use crate::error::{Error, Result};
use crate::graph::{check_isc, connectivity_graph, gamma_reduce, globally_reachable, persistent_graph, DirectedGraph};
use crate::signal::{Piece, Schedule, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Block contraction and intra-block envelope on random schedules.
    Theorem1,
    /// Trajectories stay above the left barrier once they cross it.
    Barriers,
    /// One-window lower bound along a single guaranteed edge.
    OneStep,
    /// Diameter, support and extremal-set monotonicity.
    Monotonicity,
    /// Linearization order and time-rescaled projection.
    Reduction,
    /// Reachability against a transitive-closure oracle.
    Graph,
    /// Common-target reduction on scrambling schedules.
    Isc,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Theorem1,
        Suite::Barriers,
        Suite::OneStep,
        Suite::Monotonicity,
        Suite::Reduction,
        Suite::Graph,
        Suite::Isc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Barriers => "barriers",
            Suite::OneStep => "one_step",
            Suite::Monotonicity => "monotonicity",
            Suite::Reduction => "reduction",
            Suite::Graph => "graph",
            Suite::Isc => "isc",
        }
    }

    pub fn default_cases(self) -> usize {
        match self {
            Suite::Theorem1 | Suite::Barriers | Suite::OneStep | Suite::Monotonicity => 200,
            Suite::Reduction => 20,
            Suite::Graph => 500,
            Suite::Isc => 100,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub case_id: u64,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl CaseOutcome {
    fn new(case_id: u64, passed: bool, detail: impl Into<String>) -> Self {
        Self { case_id, passed, detail: detail.into(), metrics: BTreeMap::new(), seconds: 0.0 }
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub seconds: f64,
    pub outcomes: Vec<CaseOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseOutcome> {
        self.outcomes.iter().filter(|c| !c.passed)
    }

    /// Flags reproducing the first failing case.
    pub fn reproducer(&self) -> Option<String> {
        self.failures()
            .next()
            .map(|c| format!("--suite {} --seed {} --case {}", self.suite, self.seed, c.case_id))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }

    pub fn to_junit(&self) -> String {
        junit_xml(std::slice::from_ref(self))
    }
}

/// One `<testsuites>` document for several reports.
pub fn junit_xml(reports: &[SuiteReport]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let (tests, failures): (usize, usize) = reports.iter().fold((0, 0), |(t, f), r| (t + r.cases, f + r.failed));
    let _ = writeln!(out, "<testsuites tests=\"{tests}\" failures=\"{failures}\">");
    for r in reports {
        let _ = writeln!(
            out,
            "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{}\" time=\"{:.3}\">",
            r.suite, r.cases, r.failed, r.seconds
        );
        let _ = writeln!(out, "    <properties><property name=\"seed\" value=\"{}\"/></properties>", r.seed);
        for c in &r.outcomes {
            let _ = write!(
                out,
                "    <testcase classname=\"{}\" name=\"case-{}\" time=\"{:.3}\"",
                r.suite, c.case_id, c.seconds
            );
            if c.passed {
                out.push_str("/>\n");
            } else {
                let _ = writeln!(
                    out,
                    ">\n      <failure message=\"{}\">seed {} case {}</failure>\n    </testcase>",
                    xml_escape(&c.detail),
                    r.seed,
                    c.case_id
                );
            }
        }
        out.push_str("  </testsuite>\n");
    }
    out.push_str("</testsuites>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Runs `cases` cases of `suite` in parallel.
pub fn run_suite(suite: Suite, cases: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut outcomes: Vec<CaseOutcome> = match suite {
        Suite::Graph => {
            let mut out: Vec<CaseOutcome> = (2..=4).into_par_iter().map(exhaustive_graph_case).collect();
            out.extend((0..cases as u64).into_par_iter().map(|id| timed(id, || graph_case(seed, id))).collect::<Vec<_>>());
            out
        }
        _ => (0..cases as u64).into_par_iter().map(|id| run_case(suite, seed, id)).collect(),
    };
    if suite == Suite::Graph {
        for (k, c) in outcomes.iter_mut().enumerate() {
            c.case_id = k as u64;
        }
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    SuiteReport {
        suite,
        seed,
        cases: outcomes.len(),
        passed: outcomes.len() - failed,
        failed,
        seconds: start.elapsed().as_secs_f64(),
        outcomes,
    }
}

/// Runs a single case; for the graph suite, ids below 3 are the exhaustive
/// enumerations for `N = 2, 3, 4`.
pub fn run_case(suite: Suite, seed: u64, case_id: u64) -> CaseOutcome {
    match suite {
        Suite::Theorem1 => timed(case_id, || theorem1_case(seed, case_id).map(|(o, _)| o)),
        Suite::Barriers => timed(case_id, || barrier_case(seed, case_id).map(|(o, _)| o)),
        Suite::OneStep => timed(case_id, || one_step_case(seed, case_id).map(|(o, _)| o)),
        Suite::Monotonicity => timed(case_id, || monotonicity_case(seed, case_id)),
        Suite::Reduction => timed(case_id, || reduction_case(seed, case_id)),
        Suite::Graph if case_id < 3 => {
            let mut c = exhaustive_graph_case(case_id as usize + 2);
            c.case_id = case_id;
            c
        }
        Suite::Graph => timed(case_id, || graph_case(seed, case_id - 3)),
        Suite::Isc => timed(case_id, || isc_case(seed, case_id)),
    }
}

fn timed(case_id: u64, f: impl FnOnce() -> Result<CaseOutcome>) -> CaseOutcome {
    let start = Instant::now();
    let mut outcome = f().unwrap_or_else(|e| CaseOutcome::new(case_id, false, format!("error: {e}")));
    outcome.case_id = case_id;
    outcome.seconds = start.elapsed().as_secs_f64();
    outcome
}

struct RandomSystem {
    n_agents: usize,
    window: f64,
    threshold: f64,
    periods: usize,
    sched: Schedule,
}

fn random_system(
    rng: &mut ChaCha8Rng,
    agents: std::ops::RangeInclusive<usize>,
    target: Option<DirectedGraph>,
    extra_edge_prob: f64,
) -> Result<RandomSystem> {
    let n_agents = target.as_ref().map_or_else(|| rng.random_range(agents), DirectedGraph::n_nodes);
    let window = rng.random_range(0.5..=3.0);
    let threshold = rng.random_range(0.05..=0.8);
    let periods = rng.random_range(1..=3);
    let target = match target {
        Some(t) => t,
        None => {
            let shape = TargetShape::ALL[rng.random_range(0..3)];
            random_target(n_agents, shape, rng)?
        }
    };
    let params = RandomScheduleParams {
        n_agents,
        window,
        threshold,
        target,
        extra_edge_prob,
        seed: 0,
        pattern_periods: periods,
    };
    let sched = windowed_schedule(&params, rng)?;
    Ok(RandomSystem { n_agents, window, threshold, periods, sched })
}

/// Random target graph, random system, block contraction over ten blocks.
pub(crate) fn theorem1_case(seed: u64, id: u64) -> Result<(CaseOutcome, Trajectory)> {
    let mut rng = case_rng(seed, id);
    let sys = random_system(&mut rng, 2..=8, None, 0.3)?;
    let n = sys.n_agents;
    let report = globally_reachable(&persistent_graph(&sys.sched, sys.window, sys.threshold, sys.periods)?);
    let d = report.length.ok_or_else(|| Error::Numerical("target graph lost its reachable node".into()))?;
    let dim = rng.random_range(1..=2);
    let x0 = AgentStates::new(n, dim, random_states(n, dim, -1.0, 1.0, &mut rng))?;
    let nonlinear = id % 4 == 3;

    let (cert, traj) = if nonlinear {
        let beta = rng.random_range(0.2..=1.0);
        let spec = SystemSpec::nonlinear(n, dim, LambdaForm::Unit, PhiForm::PowerLaw { beta });
        let bounds = bounds_m(&spec, &x0)?;
        let cert = rate_nonlinear(n, sys.window, sys.threshold, d, bounds.lower, bounds.upper)?;
        let t_end = 10.0 * cert.block_time;
        let opts = GridOptions::with_step((cert.block_time / 40.0).min(0.05))
            .extra_times((1..=10).map(|k| k as f64 * cert.block_time));
        let traj = integrate_nonlinear(&spec, &sys.sched, &x0, t_end, &opts)?;
        (cert, traj)
    } else {
        let cert = rate_linear(n, sys.window, sys.threshold, d)?;
        let t_end = 10.0 * cert.block_time;
        let opts = GridOptions::with_step(cert.block_time / 40.0)
            .extra_times((1..=10).map(|k| k as f64 * cert.block_time));
        let traj = integrate_linear(&sys.sched, &x0, 1.0 / n as f64, t_end, &opts)?;
        (cert, traj)
    };
    let check = verify_certificate(&traj, &cert, Which::Position)?;
    let detail = match check.first_violation {
        None => format!("N={n} d*={d} {} C=1-{:.3e}", if nonlinear { "nonlinear" } else { "linear" }, cert.one_minus_contraction),
        Some((t, m, b)) => format!("N={n} d*={d}: diameter {m:.6e} above bound {b:.6e} at t={t}"),
    };
    let min_slack = check.blocks.iter().map(|b| b.slack).fold(f64::INFINITY, f64::min);
    let outcome = CaseOutcome::new(id, check.passed, detail)
        .metric("n_agents", n as f64)
        .metric("graph_length", d as f64)
        .metric("one_minus_contraction", cert.one_minus_contraction)
        .metric("min_block_slack", min_slack);
    Ok((outcome, traj))
}

/// Once `x_I` is above the left barrier at some `tau <= T` it stays above.
pub(crate) fn barrier_case(seed: u64, id: u64) -> Result<(CaseOutcome, Trajectory)> {
    let mut rng = case_rng(seed, id);
    let sys = random_system(&mut rng, 2..=6, None, 0.5)?;
    let n = sys.n_agents;
    let alpha = rng.random_range(-1.0..=0.0);
    let mut init: Vec<f64> = (0..n).map(|_| alpha + rng.random_range(0.0..=2.0)).collect();
    init[rng.random_range(0..n)] = alpha;
    let agent = rng.random_range(0..n);
    let x_bar = if rng.random_bool(0.5) {
        alpha + rng.random_range(0.0..=1.0) * (init[agent] - alpha)
    } else {
        alpha + rng.random_range(0.0..=2.0)
    };
    let opts = GridOptions::with_step(sys.window / 50.0);
    let traj = integrate_linear(&sys.sched, &AgentStates::scalar(&init)?, 1.0 / n as f64, 3.0 * sys.window, &opts)?;

    let x_of = |k: usize| traj.positions[k].as_slice()[agent];
    let mut crossing = None;
    for (k, &t) in traj.times.iter().enumerate().take_while(|(_, &t)| t <= sys.window) {
        if x_of(k) >= left_barrier(x_bar, alpha, n, t)? {
            crossing = Some(k);
            break;
        }
    }
    let mut worst = f64::INFINITY;
    let mut failure = None;
    for k in 0..traj.len() {
        let floor = traj.positions[k].as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        if floor < alpha - 1e-9 && failure.is_none() {
            failure = Some(format!("state {floor} fell below alpha {alpha} at t={}", traj.times[k]));
        }
        if crossing.is_some_and(|c| k >= c) {
            let margin = x_of(k) - left_barrier(x_bar, alpha, n, traj.times[k])?;
            worst = worst.min(margin);
            if margin < -1e-9 && failure.is_none() {
                failure = Some(format!("agent {} below barrier by {:.3e} at t={}", agent + 1, -margin, traj.times[k]));
            }
        }
    }
    let detail = failure.clone().unwrap_or_else(|| match crossing {
        Some(k) => format!("N={n} crossed at t={:.4}", traj.times[k]),
        None => format!("N={n} barrier not crossed within one window"),
    });
    let outcome = CaseOutcome::new(id, failure.is_none(), detail)
        .metric("crossed", crossing.is_some() as u8 as f64)
        .metric("min_margin", if worst.is_finite() { worst } else { 0.0 });
    Ok((outcome, traj))
}

/// `x_i(T) >= alpha + eta exp(-2 ((N - 1) / N) T) (x_j(0) - alpha)` when
/// the window `[0, T]` carries the edge `i -> j`.
pub(crate) fn one_step_case(seed: u64, id: u64) -> Result<(CaseOutcome, Trajectory)> {
    let mut rng = case_rng(seed, id);
    let n = rng.random_range(2..=6);
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    let target = DirectedGraph::from_edges(n, [(i, j)])?;
    let sys = random_system(&mut rng, n..=n, Some(target), 0.5)?;
    let alpha = rng.random_range(-1.0..=0.0);
    let mut init: Vec<f64> = (0..n).map(|_| alpha + rng.random_range(0.0..=2.0)).collect();
    if rng.random_bool(0.5) {
        init[i] = alpha;
    }
    let traj = integrate_linear(
        &sys.sched,
        &AgentStates::scalar(&init)?,
        1.0 / n as f64,
        sys.window,
        &GridOptions::with_step(sys.window / 20.0),
    )?;
    let edge_present = connectivity_graph(&sys.sched, 0.0, sys.window, sys.threshold)?.has_edge(i, j);
    let rate = 2.0 * (n - 1) as f64 / n as f64;
    let bound = alpha + eta(n, sys.window, sys.threshold)? * (-rate * sys.window).exp() * (init[j] - alpha);
    let reached = traj.last(Which::Position)?.as_slice()[i];
    let passed = edge_present && reached >= bound - 1e-9;
    let detail = if !edge_present {
        format!("edge {}->{} missing from G(0)", i + 1, j + 1)
    } else {
        format!("N={n} edge {}->{}: x_i(T)={reached:.6e} bound={bound:.6e}", i + 1, j + 1)
    };
    Ok((CaseOutcome::new(id, passed, detail).metric("slack", reached - bound), traj))
}

fn random_directions(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
            v.into_iter().map(|a| a / norm).collect()
        })
        .collect()
}

/// Diameter and support never grow; optionally extremal sets never gain.
pub fn first_order_invariants(traj: &Trajectory, extremal: bool, rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let d = traj.diameters(Which::Position)?;
    let tol = 1e-9 * d[0].max(1e-300);
    if let Some(v) = check_nonincreasing(&traj.times, &d, tol, "diameter") {
        return Ok(Some(format!("{} rose by {:.3e} at t={}", v.what, v.excess, v.time)));
    }
    let support = if traj.dim() == 1 {
        check_support_contraction(traj, tol)?
    } else {
        check_directional_support(traj, Which::Position, &random_directions(traj.dim(), 16, rng), tol)?
    };
    if let Some(v) = support {
        return Ok(Some(format!("{} rose by {:.3e} at t={}", v.what, v.excess, v.time)));
    }
    if extremal {
        if let Some(v) = check_extremal_sets(traj, 1e-13, 1e-12)? {
            return Ok(Some(format!("{} at t={}", v.what, v.time)));
        }
    }
    Ok(None)
}

/// Velocity diameter and support never grow; positions spread at most at
/// the velocity diameter.
pub fn second_order_invariants(traj: &Trajectory, rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let dv = traj.diameters(Which::Velocity)?;
    let tol = 1e-9 * dv[0].max(1e-300);
    if let Some(v) = check_nonincreasing(&traj.times, &dv, tol, "velocity diameter") {
        return Ok(Some(format!("{} rose by {:.3e} at t={}", v.what, v.excess, v.time)));
    }
    let dirs = random_directions(traj.dim(), 16, rng);
    if let Some(v) = check_directional_support(traj, Which::Velocity, &dirs, tol)? {
        return Ok(Some(format!("velocity {} rose by {:.3e} at t={}", v.what, v.excess, v.time)));
    }
    let dx0 = traj.diameters(Which::Position)?[0];
    if let Some(v) = check_position_growth(traj, 1e-9 * dx0.max(1.0))? {
        return Ok(Some(format!("{} exceeded by {:.3e} at t={}", v.what, v.excess, v.time)));
    }
    Ok(None)
}

/// Checks the trajectories of case `id` of the first three suites, a random
/// second-order run and, for `id < 11`, one worked example.
pub(crate) fn monotonicity_case(seed: u64, id: u64) -> Result<CaseOutcome> {
    let mut rng = case_rng(seed ^ 0x6d6f_6e6f, id);
    let mut checked: Vec<(&str, Option<String>)> = vec![
        ("theorem1", first_order_invariants(&theorem1_case(seed, id)?.1, false, &mut rng)?),
        ("barriers", first_order_invariants(&barrier_case(seed, id)?.1, false, &mut rng)?),
        ("one_step", first_order_invariants(&one_step_case(seed, id)?.1, false, &mut rng)?),
    ];

    let sys = random_system(&mut rng, 2..=6, None, 0.4)?;
    let (n, dim) = (sys.n_agents, rng.random_range(1..=2));
    let spec = SystemSpec::second_order(n, dim, PhiForm::PowerLaw { beta: rng.random_range(0.0..=1.0) });
    let x0 = AgentStates::new(n, dim, random_states(n, dim, -1.0, 1.0, &mut rng))?;
    let v0 = AgentStates::new(n, dim, random_states(n, dim, -1.0, 1.0, &mut rng))?;
    let traj = integrate_second_order(&spec, &sys.sched, &x0, &v0, 5.0 * sys.window, &GridOptions::with_step(0.01))?;
    checked.push(("second_order", second_order_invariants(&traj, &mut rng)?));

    match id {
        0..=7 => {
            let n = 3 + id as usize;
            let (window, threshold) = (n as f64, 1.0 / (n - 1) as f64);
            let sched = example1_schedule(n, window, threshold, WindowLayout::Sequential)?;
            let init: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
            for gain in [1.0, 1.0 / n as f64] {
                let traj = integrate_linear(
                    &sched,
                    &AgentStates::scalar(&init)?,
                    gain,
                    (n - 1) as f64 * window,
                    &GridOptions::with_step(window / 20.0),
                )?;
                checked.push(("example1", first_order_invariants(&traj, true, &mut rng)?));
            }
        }
        8..=10 => {
            let mut params = Example2Params::standard([4, 6, 8][id as usize - 8], 0.1);
            params.t_end = 10.0 * params.window;
            params.record_stride = 10;
            let run = run_example2(&params)?;
            let order = run.summary.first_order_violation.map(|t| format!("index order broken at t={t}"));
            checked.push(("example2", second_order_invariants(&run.trajectory, &mut rng)?.or(order)));
        }
        _ => {}
    }
    let count = checked.len();
    match checked.into_iter().find_map(|(label, v)| v.map(|v| format!("{label}: {v}"))) {
        Some(msg) => Ok(CaseOutcome::new(id, false, msg)),
        None => Ok(CaseOutcome::new(id, true, format!("{count} trajectories")).metric("trajectories", count as f64)),
    }
}

/// Schedule with pieces on a 0.1 lattice so that step halving refines the
/// grid uniformly.
fn lattice_schedule(n: usize, rng: &mut ChaCha8Rng) -> Result<Schedule> {
    let mut sched = Schedule::new(n)?;
    for i in 0..n {
        for j in 0..n {
            // Keep one link so the schedule is never empty.
            if i == j || ((i, j) != (1, 0) && !rng.random_bool(0.7)) {
                continue;
            }
            let mut pieces = Vec::new();
            let mut cut = 0usize;
            while cut < 10 {
                let len = rng.random_range(1..=4).min(10 - cut);
                pieces.push(Piece::new(cut as f64 / 10.0, (cut + len) as f64 / 10.0, rng.random_range(0.2..=1.0)));
                cut += len;
            }
            if let Some(last) = pieces.last_mut() {
                last.end = 1.0;
            }
            sched.set(i, j, Signal::new(pieces, 0.0, Some(1.0))?)?;
        }
    }
    Ok(sched)
}

fn max_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    for (k, &t) in a.times.iter().enumerate() {
        let other = &b.positions[b.index_of(t)?];
        for (p, q) in a.positions[k].as_slice().iter().zip(other.as_slice()) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

/// Empirical order of the linearization error, then the projection identity.
pub(crate) fn reduction_case(seed: u64, id: u64) -> Result<CaseOutcome> {
    let mut rng = case_rng(seed, id);
    let n = rng.random_range(2..=5);
    let dim = rng.random_range(1..=2);
    let phi = PhiForm::PowerLaw { beta: rng.random_range(0.5..=1.5) };
    let lambda = if id % 3 == 2 { LambdaForm::MotschTadmor } else { LambdaForm::Unit };
    let spec = SystemSpec::nonlinear(n, dim, lambda, phi);
    let sched = lattice_schedule(n, &mut rng)?;
    let x0 = AgentStates::new(n, dim, random_states(n, dim, -2.0, 2.0, &mut rng))?;
    let t_end = 2.0;

    let mut errors = Vec::new();
    let mut finest = None;
    for h in [0.1, 0.05, 0.025] {
        let traj = integrate_nonlinear(&spec, &sched, &x0, t_end, &GridOptions::with_step(h))?;
        let lin = linearize(&spec, &traj, &sched)?;
        let relin = integrate_linear(&lin, &x0, 1.0 / n as f64, t_end, &GridOptions::default())?;
        errors.push(max_gap(&traj, &relin)?);
        finest = Some((lin, relin));
    }
    let order = (errors[1] / errors[2]).log2();
    let exact = errors[2] < 1e-13;

    let (lin, relin) = finest.expect("three refinements ran");
    let direction = random_directions(dim, 1, &mut rng).remove(0);
    let m_bar = lin.max_value().max(f64::MIN_POSITIVE);
    let projected = project_trajectory(&relin, &direction, m_bar)?;
    let rescaled = lin.rescale_time(m_bar)?;
    let direct = integrate_linear(
        &rescaled,
        &projected.positions[0],
        1.0 / n as f64,
        m_bar * t_end,
        &GridOptions::default(),
    )?;
    let residual = max_gap(&projected, &direct)?;

    let passed = (exact || order >= 1.8) && residual <= 1e-8;
    let detail = format!(
        "N={n} dim={dim} errors {:.3e} {:.3e} {:.3e} order {order:.3} projection residual {residual:.3e}",
        errors[0], errors[1], errors[2]
    );
    Ok(CaseOutcome::new(id, passed, detail)
        .metric("order", order)
        .metric("finest_error", errors[2])
        .metric("projection_residual", residual))
}

/// Reachability from all-pairs shortest paths (Floyd-Warshall).
pub fn oracle_reachability(g: &DirectedGraph) -> (Option<usize>, Vec<Option<usize>>, Option<usize>) {
    let n = g.n_nodes();
    const FAR: usize = usize::MAX / 4;
    let mut dist = vec![vec![FAR; n]; n];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0;
    }
    for &(i, j) in g.edges() {
        dist[i][j] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    let Some(root) = (0..n).find(|&r| (0..n).all(|u| dist[u][r] < FAR)) else {
        return (None, vec![None; n], None);
    };
    let distances: Vec<Option<usize>> = (0..n).map(|u| Some(dist[u][root])).collect();
    let length = distances.iter().flatten().copied().max();
    (Some(root), distances, length)
}

fn matches_oracle(g: &DirectedGraph) -> Option<String> {
    let report = globally_reachable(g);
    let (node, distances, length) = oracle_reachability(g);
    let same = report.reachable_node == node && report.distances == distances && report.length == length;
    (!same).then(|| format!("mismatch on {}: got {:?}, oracle {:?} {:?}", g.to_json(), report, node, distances))
}

fn exhaustive_graph_case(n: usize) -> CaseOutcome {
    let start = Instant::now();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let total = 1u64 << pairs.len();
    let mut failure = None;
    let mut with_root = 0u64;
    for mask in 0..total {
        let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
        let g = DirectedGraph::from_edges(n, edges.collect::<Vec<_>>()).expect("valid edges");
        with_root += globally_reachable(&g).reachable_node.is_some() as u64;
        if let Some(msg) = matches_oracle(&g) {
            failure = Some(msg);
            break;
        }
    }
    let passed = failure.is_none();
    let mut c = CaseOutcome::new(0, passed, failure.unwrap_or_else(|| format!("all {total} graphs on {n} nodes")))
        .metric("graphs", total as f64)
        .metric("with_reachable_node", with_root as f64);
    c.seconds = start.elapsed().as_secs_f64();
    c
}

fn graph_case(seed: u64, id: u64) -> Result<CaseOutcome> {
    let mut rng = case_rng(seed, id);
    let n = rng.random_range(2..=12);
    let p = rng.random_range(0.02..=0.5);
    let mut g = if id % 2 == 0 {
        random_target(n, TargetShape::ALL[rng.random_range(0..3)], &mut rng)?
    } else {
        DirectedGraph::empty(n)
    };
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(match matches_oracle(&g) {
        None => CaseOutcome::new(id, true, format!("N={n} with {} edges", g.edges().len())),
        Some(msg) => CaseOutcome::new(id, false, msg),
    })
}

/// Hub schedule: every agent listens to a hub at a constant level in
/// `[mu, 1]`, plus windowed distractors.
pub(crate) fn isc_case(seed: u64, id: u64) -> Result<CaseOutcome> {
    let mut rng = case_rng(seed, id);
    let n = rng.random_range(3..=7);
    let window = rng.random_range(0.5..=3.0);
    let threshold = rng.random_range(0.1..=0.8);
    let hub = rng.random_range(0..n);
    let mut sched = windowed_schedule(
        &RandomScheduleParams {
            n_agents: n,
            window,
            threshold,
            target: DirectedGraph::empty(n),
            extra_edge_prob: 0.6,
            seed: 0,
            pattern_periods: 2,
        },
        &mut rng,
    )?;
    for i in (0..n).filter(|&i| i != hub) {
        sched.set(i, hub, Signal::constant(rng.random_range(threshold..=1.0))?)?;
    }
    let samples: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..=4.0 * window)).collect();
    let report = check_isc(&sched, window, threshold, &samples)?;
    if !report.satisfied {
        return Ok(CaseOutcome::new(id, false, format!("scrambling failed at {:?}", report.failure)));
    }
    let mut picked = BTreeSet::new();
    for &t in &report.sample_times {
        let node = gamma_reduce(n, &report.witness_map_at(t))?;
        picked.insert(node);
        let g = connectivity_graph(&sched, t, window, threshold)?;
        if !(0..n).all(|u| reaches(&g, u, node)) {
            return Ok(CaseOutcome::new(id, false, format!("reduced node {} not reachable at t={t}", node + 1)));
        }
    }
    Ok(CaseOutcome::new(id, true, format!("N={n} hub {} reduced to {:?}", hub + 1, picked))
        .metric("sample_times", report.sample_times.len() as f64)
        .metric("distinct_reduced_nodes", picked.len() as f64))
}

/// Depth-first search along edges from `from`.
fn reaches(g: &DirectedGraph, from: usize, to: usize) -> bool {
    let mut seen = vec![false; g.n_nodes()];
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if std::mem::replace(&mut seen[u], true) {
            continue;
        }
        stack.extend(g.edges().range((u, 0)..(u + 1, 0)).map(|&(_, v)| v));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let path = DirectedGraph::path_to_first(4);
        assert_eq!(oracle_reachability(&path), (Some(0), vec![Some(0), Some(1), Some(2), Some(3)], Some(3)));
        assert_eq!(oracle_reachability(&DirectedGraph::empty(3)).0, None);
        assert!(matches_oracle(&DirectedGraph::complete(5)).is_none());
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("one-step".parse::<Suite>().unwrap(), Suite::OneStep);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_runs_pass_and_are_deterministic() {
        for suite in [Suite::Barriers, Suite::OneStep, Suite::Isc, Suite::Graph] {
            let a = run_suite(suite, 8, 5);
            assert!(a.all_passed(), "{suite}: {:?}", a.failures().next());
            let b = run_suite(suite, 8, 5);
            let details = |r: &SuiteReport| r.outcomes.iter().map(|c| c.detail.clone()).collect::<Vec<_>>();
            assert_eq!(details(&a), details(&b));
        }
    }

    #[test]
    fn junit_lists_failures() {
        let mut r = run_suite(Suite::Graph, 2, 1);
        r.outcomes[0].passed = false;
        r.outcomes[0].detail = "a < b".into();
        r.failed = 1;
        let xml = r.to_junit();
        assert!(xml.contains("failures=\"1\""));
        assert!(xml.contains("a &lt; b"));
        assert_eq!(r.reproducer().unwrap(), "--suite graph --seed 1 --case 0");
    }
}

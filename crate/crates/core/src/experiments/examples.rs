use serde::{Deserialize, Serialize};

use crate::certificates::{classify_flocking, rate_linear, FlockingVerdict, KernelFacts};
use crate::dynamics::{
    integrate_linear, integrate_second_order, AgentStates, GridOptions, PhiForm, SystemSpec, Trajectory, Which,
};
use crate::error::{ensure, Result};
use crate::graph::{globally_reachable, persistent_graph};
use crate::signal::{Piece, Schedule, Signal};

/// How the periodic chain windows are laid out inside one period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLayout {
    /// Window `[T - i mu - 1, T - (i - 1) mu]` for the link into agent `i`
    /// (1-based). Length `1 + mu`; consecutive links overlap.
    Literal,
    /// Disjoint windows of length `1 + mu` in the same firing order: the
    /// link with index `l` is active on `[T - l (1 + mu), T - (l - 1)(1 + mu)]`.
    #[default]
    Sequential,
}

fn check_chain_params(n_agents: usize, window: f64, threshold: f64, layout: WindowLayout) -> Result<()> {
    ensure!(n_agents >= 2, Config, "need at least 2 agents, got {n_agents}");
    ensure!(window.is_finite() && window > 0.0, Config, "window must be positive, got {window}");
    let links = (n_agents - 1) as f64;
    ensure!(
        threshold > 0.0 && threshold <= 1.0 / links * (1.0 + 1e-12),
        Config,
        "threshold must lie in (0, 1/(N-1)], got {threshold}"
    );
    if layout == WindowLayout::Sequential {
        ensure!(
            links * (1.0 + threshold) <= window * (1.0 + 1e-12),
            Config,
            "sequential windows need (N-1)(1+mu) <= T, got {} > {window}",
            links * (1.0 + threshold)
        );
    }
    Ok(())
}

/// Active window of chain link `link` (1-based, `link = i - 1` for the link
/// into agent `i`), clipped to one period.
fn chain_window(link: usize, window: f64, threshold: f64, layout: WindowLayout) -> Option<Piece> {
    let l = link as f64;
    let (start, end) = match layout {
        WindowLayout::Literal => {
            let i = l + 1.0;
            (window - i * threshold - 1.0, window - (i - 1.0) * threshold)
        }
        WindowLayout::Sequential => (window - l * (1.0 + threshold), window - (l - 1.0) * (1.0 + threshold)),
    };
    let (start, end) = (start.max(0.0), end.min(window));
    // Snap rounding residue at the period start.
    let start = if start.abs() < 1e-12 * window { 0.0 } else { start };
    (end > start).then(|| Piece::new(start, end, 1.0))
}

fn chain_signal(link: usize, window: f64, threshold: f64, layout: WindowLayout) -> Result<Signal> {
    match chain_window(link, window, threshold, layout) {
        Some(piece) => Signal::new(vec![piece], 0.0, Some(window)),
        None => Ok(Signal::zero()),
    }
}

/// The periodic path `N -> N-1 -> .. -> 1`, one link active at a time.
pub fn example1_schedule(n_agents: usize, window: f64, threshold: f64, layout: WindowLayout) -> Result<Schedule> {
    check_chain_params(n_agents, window, threshold, layout)?;
    let mut sched = Schedule::new(n_agents)?;
    for i in 1..n_agents {
        sched.set(i, i - 1, chain_signal(i, window, threshold, layout)?)?;
    }
    Ok(sched)
}

/// Per-period decay of the chain recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayConstant {
    /// `exp(-(1 + mu))`: one window of length `1 + mu` at unit coupling.
    #[default]
    Matching,
    /// `exp(-mu)`
    Printed,
}

impl DecayConstant {
    pub fn value(self, threshold: f64) -> f64 {
        match self {
            DecayConstant::Matching => (-(1.0 + threshold)).exp(),
            DecayConstant::Printed => (-threshold).exp(),
        }
    }
}

/// States at `0, T, .., k T` from `x_1 = 0`, `x_j = 1`, via
/// `x_j((k+1)T) = x_{j-1}(kT) + a (x_j(kT) - x_{j-1}(kT))`.
pub fn example1_recursion(n_agents: usize, threshold: f64, blocks: usize, decay: DecayConstant) -> Vec<Vec<f64>> {
    let a = decay.value(threshold);
    let mut x: Vec<f64> = (0..n_agents).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
    let mut out = vec![x.clone()];
    for _ in 0..blocks {
        let prev = x.clone();
        for j in 1..n_agents {
            x[j] = prev[j - 1] + a * (prev[j] - prev[j - 1]);
        }
        out.push(x.clone());
    }
    out
}

/// Values printed in the comparison table: `(N, 1 - D(d* T), 1 - C)`.
pub const PAPER_TABLE1: [(usize, f64, f64); 8] = [
    (3, 0.6035, 3.4e-7),
    (4, 0.3993, 2.9e-13),
    (5, 0.2591, 3.3e-21),
    (6, 0.1666, 5.6e-31),
    (7, 0.1066, 1.4e-42),
    (8, 0.0679, 5.4e-56),
    (9, 0.0432, 3.3e-71),
    (10, 0.0275, 3.3e-88),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n_agents: usize,
    /// `1 - x_N(d* T)` from the block recursion.
    pub one_minus_diameter: f64,
    /// Same quantity from exact integration of the sequential schedule.
    pub one_minus_diameter_integrated: f64,
    pub one_minus_contraction: f64,
    pub log10_one_minus_contraction: Option<f64>,
    pub paper_one_minus_diameter: Option<f64>,
    pub paper_one_minus_contraction: Option<f64>,
}

/// Chain example at `T = N`, `mu = 1 / (N - 1)`, `d* = N - 1`, unit coupling.
pub fn table1_row(n_agents: usize) -> Result<Table1Row> {
    ensure!(n_agents >= 3, Config, "the table starts at N = 3, got {n_agents}");
    let (window, threshold, length) = (n_agents as f64, 1.0 / (n_agents - 1) as f64, n_agents - 1);
    let rec = example1_recursion(n_agents, threshold, length, DecayConstant::Matching);
    let sched = example1_schedule(n_agents, window, threshold, WindowLayout::Sequential)?;
    let x0 = AgentStates::scalar(&rec[0])?;
    let traj = integrate_linear(&sched, &x0, 1.0, length as f64 * window, &GridOptions::default())?;
    let integrated = traj.last(Which::Position)?.agent(n_agents - 1)[0];
    let cert = rate_linear(n_agents, window, threshold, length)?;
    let paper = PAPER_TABLE1.iter().find(|r| r.0 == n_agents);
    Ok(Table1Row {
        n_agents,
        one_minus_diameter: 1.0 - rec[length][n_agents - 1],
        one_minus_diameter_integrated: 1.0 - integrated,
        one_minus_contraction: cert.one_minus_contraction,
        log10_one_minus_contraction: cert.log10_one_minus_contraction,
        paper_one_minus_diameter: paper.map(|r| r.1),
        paper_one_minus_contraction: paper.map(|r| r.2),
    })
}

pub fn table1(n_min: usize, n_max: usize) -> Result<Vec<Table1Row>> {
    ensure!(n_min <= n_max, Config, "empty range {n_min}..={n_max}");
    (n_min..=n_max).map(table1_row).collect()
}

/// Orientation of the periodic chain in the second-order example.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSense {
    /// Periodic `M_{i+1,i}`: agent `i + 1` listens to agent `i`, so agent 1
    /// is globally reachable with length `N - 1`.
    #[default]
    Reverse,
    /// Periodic `M_{i,i+1}` for `i >= 2` as indexed, with `M_{1,2} = 0` so
    /// that agent 1 listens to no one.
    Forward,
}

/// Constant links `M_ij = 1` for `2 <= i < j <= N` plus the periodic chain.
pub fn example2_schedule(
    n_agents: usize,
    window: f64,
    threshold: f64,
    layout: WindowLayout,
    sense: EdgeSense,
) -> Result<Schedule> {
    check_chain_params(n_agents, window, threshold, layout)?;
    let mut sched = Schedule::new(n_agents)?;
    for i in 1..n_agents {
        for j in (i + 1)..n_agents {
            sched.set(i, j, Signal::constant(1.0)?)?;
        }
    }
    match sense {
        EdgeSense::Reverse => {
            for i in 1..n_agents {
                sched.set(i, i - 1, chain_signal(i, window, threshold, layout)?)?;
            }
        }
        EdgeSense::Forward => {
            for i in 1..n_agents - 1 {
                sched.set(i, i + 1, chain_signal(i + 1, window, threshold, layout)?)?;
            }
        }
    }
    Ok(sched)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example2Params {
    pub n_agents: usize,
    pub beta: f64,
    pub window: f64,
    pub threshold: f64,
    pub t_end: f64,
    pub step: f64,
    pub layout: WindowLayout,
    pub sense: EdgeSense,
    pub record_stride: usize,
}

impl Example2Params {
    /// `T = N`, `mu = 1 / (N - 1)`, horizon `50 T`, step `1e-3`.
    pub fn standard(n_agents: usize, beta: f64) -> Self {
        let window = n_agents as f64;
        Self {
            n_agents,
            beta,
            window,
            threshold: 1.0 / (n_agents - 1) as f64,
            t_end: 50.0 * window,
            step: 1e-3,
            layout: WindowLayout::Sequential,
            sense: EdgeSense::Reverse,
            record_stride: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example2Summary {
    /// Length of the persistent graph, `None` without a reachable node.
    pub graph_length: Option<usize>,
    /// Length used by the classifier (falls back to `N - 1`).
    pub classified_length: usize,
    pub velocity_ratio: f64,
    /// `|D_X(t_end) - D_X(0.9 t_end)| / D_X(t_end)`.
    pub position_tail_change: f64,
    pub final_position_diameter: f64,
    pub order_preserved: bool,
    pub first_order_violation: Option<f64>,
}

pub struct Example2Run {
    pub trajectory: Trajectory,
    pub verdict: FlockingVerdict,
    pub summary: Example2Summary,
}

/// Runs the second-order chain example from `x_1 = v_1 = 0`, `x_j = v_j = 1`.
pub fn run_example2(params: &Example2Params) -> Result<Example2Run> {
    let n = params.n_agents;
    let sched = example2_schedule(n, params.window, params.threshold, params.layout, params.sense)?;
    let spec = SystemSpec::second_order(n, 1, PhiForm::PowerLaw { beta: params.beta });
    let init: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
    let x0 = AgentStates::scalar(&init)?;
    let opts = GridOptions::with_step(params.step).stride(params.record_stride).extra_times(
        (1..10).map(|k| params.t_end * k as f64 / 10.0),
    );
    let trajectory = integrate_second_order(&spec, &sched, &x0, &x0, params.t_end, &opts)?;

    let periods = sched.common_period().map_or(1, |p| (p / params.window).round().max(1.0) as usize);
    let graph = persistent_graph(&sched, params.window, params.threshold, periods.max(1))?;
    let graph_length = globally_reachable(&graph).length;
    let classified_length = graph_length.unwrap_or(n - 1);
    let verdict = classify_flocking(
        &KernelFacts::PowerLaw { beta: params.beta },
        classified_length,
        n,
        params.window,
        params.threshold,
    )?;

    let dv = trajectory.diameters(Which::Velocity)?;
    let dx = trajectory.diameters(Which::Position)?;
    let tail = trajectory.index_of(0.9 * params.t_end)?;
    let last = *dx.last().expect("nonempty");
    let first_order_violation = order_violation(&trajectory)?;
    let summary = Example2Summary {
        graph_length,
        classified_length,
        velocity_ratio: dv.last().expect("nonempty") / dv[0],
        position_tail_change: (last - dx[tail]).abs() / last,
        final_position_diameter: last,
        order_preserved: first_order_violation.is_none(),
        first_order_violation,
    };
    Ok(Example2Run { trajectory, verdict, summary })
}

/// First recorded time at which `x_i <= x_j` or `v_i <= v_j` (`i < j`)
/// fails by more than `1e-9`.
fn order_violation(traj: &Trajectory) -> Result<Option<f64>> {
    let sorted = |s: &AgentStates| s.as_slice().windows(2).all(|w| w[0] <= w[1] + 1e-9);
    let v = traj.states(Which::Velocity)?;
    Ok((0..traj.len()).find(|&k| !sorted(&traj.positions[k]) || !sorted(&v[k])).map(|k| traj.times[k]))
}

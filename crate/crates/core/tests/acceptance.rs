//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::process::ExitCode;
use std::time::Instant;

use consensus_core::certificates::{classify_flocking, isc_block_windows, rate_isc, rate_linear, KernelFacts};
use consensus_core::dynamics::{integrate_linear, AgentStates, GridOptions};
use consensus_core::experiments::{
    example1_recursion, example1_schedule, run_example2, run_suite, table1, DecayConstant, Example2Params, Suite,
    SuiteReport, WindowLayout, PAPER_TABLE1,
};

const SEED: u64 = 7;

struct Line {
    id: usize,
    passed: bool,
    summary: String,
    seconds: f64,
}

fn criterion(id: usize, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (passed, summary) = f();
    let line = Line { id, passed, summary, seconds: start.elapsed().as_secs_f64() };
    println!(
        "{} criterion {:>2}: {} [{:.2}s]",
        if line.passed { "PASS" } else { "FAIL" },
        line.id,
        line.summary,
        line.seconds
    );
    line
}

/// `x_N(d* T)` of the chain by the block recursion, written out directly.
fn chain_oracle(n: usize) -> f64 {
    let a = (-(1.0 + 1.0 / (n - 1) as f64)).exp();
    let mut x = vec![1.0; n];
    x[0] = 0.0;
    for _ in 0..n - 1 {
        let prev = x.clone();
        for j in 1..n {
            x[j] = prev[j - 1] + a * (prev[j] - prev[j - 1]);
        }
    }
    x[n - 1]
}

fn suite_summary(report: &SuiteReport) -> String {
    match report.failures().next() {
        None => format!("{} {}/{} cases", report.suite, report.passed, report.cases),
        Some(c) => format!(
            "{} {}/{} cases, first failure case {} (seed {}): {}",
            report.suite, report.passed, report.cases, c.case_id, report.seed, c.detail
        ),
    }
}

fn table1_trajectory() -> (bool, String) {
    let start = Instant::now();
    let rows = table1(3, 10).expect("table rows");
    let elapsed = start.elapsed().as_secs_f64();
    let mut ok = elapsed < 1.0;
    let mut notes = Vec::new();
    for row in &rows {
        let oracle = 1.0 - chain_oracle(row.n_agents);
        let paper = row.paper_one_minus_diameter.expect("golden present");
        let agree = (row.one_minus_diameter - oracle).abs() <= 1e-14
            && (row.one_minus_diameter - row.one_minus_diameter_integrated).abs() <= 1e-10;
        let golden = (row.one_minus_diameter - paper).abs() <= 5e-5;
        ok &= agree && golden;
        if !(agree && golden) {
            notes.push(format!(
                "N={} computed {:.7} integrated {:.7} table {paper}",
                row.n_agents, row.one_minus_diameter, row.one_minus_diameter_integrated
            ));
        }
    }
    // Block-by-block agreement of recursion and integration.
    for n in 3..=10 {
        let (t, mu) = (n as f64, 1.0 / (n - 1) as f64);
        let sched = example1_schedule(n, t, mu, WindowLayout::Sequential).expect("schedule");
        let init: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect();
        let x0 = AgentStates::scalar(&init).expect("states");
        let traj =
            integrate_linear(&sched, &x0, 1.0, (n - 1) as f64 * t, &GridOptions::default()).expect("integration");
        let rec = example1_recursion(n, mu, n - 1, DecayConstant::Matching);
        for (k, row) in rec.iter().enumerate() {
            let x = &traj.positions[traj.index_of(k as f64 * t).unwrap()];
            let gap = x.as_slice().iter().zip(row).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > 1e-10 {
                ok = false;
                notes.push(format!("N={n} block {k}: integration and recursion differ by {gap:.2e}"));
            }
        }
    }
    let summary = if notes.is_empty() {
        format!("1-D(d*T) for N=3..10 within 5e-5 of the table, recursion = integration to 1e-10 ({elapsed:.3}s)")
    } else {
        format!("{} ({elapsed:.3}s)", notes.join("; "))
    };
    (ok, summary)
}

fn table1_bound() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &(n, _, paper) in &PAPER_TABLE1 {
        let (t, mu, d) = (n as f64, 1.0 / (n - 1) as f64, (n - 1) as f64);
        let eta = mu * t / (n as f64 + mu * t);
        let log_gap = 0.5f64.ln() + d * eta.ln() - 2.0 * d * t;
        let cert = rate_linear(n, t, mu, n - 1).expect("certificate");
        let log10 = cert.log10_one_minus_contraction.expect("finite log");
        let oracle_agrees = (log10 - log_gap / std::f64::consts::LN_10).abs() <= 1e-12 * log10.abs().max(1.0);
        let rel = (10f64.powf(log10) / paper - 1.0).abs();
        worst = worst.max(rel);
        ok &= oracle_agrees && rel <= 0.03;
    }
    (ok, format!("1-C for N=3..10 in log space, worst relative deviation {:.2}% (limit 3%)", 100.0 * worst))
}

fn example2() -> (bool, String) {
    let small = run_example2(&Example2Params::standard(4, 0.1)).expect("N=4 run");
    let large = run_example2(&Example2Params::standard(8, 0.1)).expect("N=8 run");
    let s = &small.summary;
    let l = &large.summary;
    let small_ok = s.velocity_ratio < 1e-2 && s.position_tail_change < 1e-3;
    let large_ok = l.velocity_ratio > 0.3;
    let order_ok = s.order_preserved && l.order_preserved;
    (
        small_ok && large_ok && order_ok,
        format!(
            "N=4 [{}]: D_V ratio {:.4e} (< 1e-2), D_X tail change {:.3e} (< 1e-3); N=8 [{}]: D_V ratio {:.4} (> 0.3); order preserved {}",
            small.verdict.label(),
            s.velocity_ratio,
            s.position_tail_change,
            large.verdict.label(),
            l.velocity_ratio,
            order_ok
        ),
    )
}

fn classifier() -> (bool, String) {
    let verdict = |d: usize| {
        let n = d + 1;
        classify_flocking(&KernelFacts::PowerLaw { beta: 0.1 }, d, n, n as f64, 1.0 / d as f64).expect("verdict")
    };
    let (three, five, seven) = (verdict(3), verdict(5), verdict(7));
    let ok = three.flocking_guaranteed
        && five.alignment_guaranteed
        && !five.flocking_guaranteed
        && five.boundary_case
        && !seven.alignment_guaranteed
        && !seven.flocking_guaranteed;
    (
        ok,
        format!(
            "beta=0.1: d*=3 -> {}, d*=5 -> {}{}, d*=7 -> {}",
            three.label(),
            five.label(),
            if five.boundary_case { " (boundary)" } else { "" },
            seven.label()
        ),
    )
}

fn reduction() -> (bool, String) {
    let start = Instant::now();
    let report = run_suite(Suite::Reduction, Suite::Reduction.default_cases(), SEED);
    let elapsed = start.elapsed().as_secs_f64();
    let metric = |k: &str| -> Vec<f64> {
        report.outcomes.iter().map(|c| c.metrics.get(k).copied().unwrap_or(f64::NAN)).collect()
    };
    let min_order = metric("order").into_iter().fold(f64::INFINITY, f64::min);
    let max_residual = metric("projection_residual").into_iter().fold(0.0, f64::max);
    (
        report.all_passed() && elapsed < 30.0,
        format!("{}; min order {min_order:.3}, max projection residual {max_residual:.2e}", suite_summary(&report)),
    )
}

fn graph_oracle() -> (bool, String) {
    let start = Instant::now();
    let report = run_suite(Suite::Graph, 500, SEED);
    let elapsed = start.elapsed().as_secs_f64();
    let exhaustive: Vec<f64> =
        report.outcomes.iter().take(3).map(|c| c.metrics.get("graphs").copied().unwrap_or(0.0)).collect();
    let counts_ok = exhaustive == [4.0, 64.0, 4096.0];
    (
        report.all_passed() && counts_ok && elapsed < 30.0,
        format!("{}; exhaustive graph counts {:?}", suite_summary(&report), exhaustive),
    )
}

fn isc() -> (bool, String) {
    let start = Instant::now();
    let report = run_suite(Suite::Isc, 100, SEED);
    let mut blocks_ok = true;
    let mut lengths = Vec::new();
    for n in 2..=4usize {
        let expected = (n - 1) as f64 * 2f64.powi((n * (n - 1)) as i32);
        let windows = isc_block_windows(n).expect("fits");
        let cert = rate_isc(n, 1.5, 0.5, 1.0, 1.0).expect("certificate");
        blocks_ok &= windows as f64 == expected && cert.block_time == expected * 1.5;
        lengths.push(windows);
    }
    let elapsed = start.elapsed().as_secs_f64();
    (
        report.all_passed() && blocks_ok && elapsed < 10.0,
        format!("{}; block windows for N=2,3,4: {:?}", suite_summary(&report), lengths),
    )
}

fn main() -> ExitCode {
    let timed_suite = |suite: Suite, limit: f64| {
        let start = Instant::now();
        let report = run_suite(suite, suite.default_cases(), SEED);
        let elapsed = start.elapsed().as_secs_f64();
        (report.all_passed() && elapsed < limit, format!("{} (limit {limit}s)", suite_summary(&report)))
    };

    let lines = vec![
        criterion(1, table1_trajectory),
        criterion(2, table1_bound),
        criterion(3, || timed_suite(Suite::Theorem1, 60.0)),
        criterion(4, || {
            let start = Instant::now();
            let barriers = run_suite(Suite::Barriers, 200, SEED);
            let one_step = run_suite(Suite::OneStep, 200, SEED);
            let elapsed = start.elapsed().as_secs_f64();
            (
                barriers.all_passed() && one_step.all_passed() && elapsed < 30.0,
                format!("{}; {} (limit 30s)", suite_summary(&barriers), suite_summary(&one_step)),
            )
        }),
        criterion(5, || {
            let report = run_suite(Suite::Monotonicity, 200, SEED);
            (report.all_passed(), suite_summary(&report))
        }),
        criterion(6, example2),
        criterion(7, classifier),
        criterion(8, reduction),
        criterion(9, graph_oracle),
        criterion(10, isc),
    ];
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    let total: f64 = lines.iter().map(|l| l.seconds).sum();
    println!("{} of {} criteria passed in {total:.1}s", lines.len() - failed.len(), lines.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

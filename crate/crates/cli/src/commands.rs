use std::fmt::Write as _;
use std::path::PathBuf;

use consensus_core::certificates::{
    bounds_m, classify_flocking, rate_isc, rate_moreau, rate_pe, ExponentForm, KernelFacts, SecondOrderRate,
};
use consensus_core::digest::sha256_canonical;
use consensus_core::dynamics::{
    diameter, integrate_linear, integrate_nonlinear, integrate_second_order, Family, GridOptions, Trajectory, Which,
};
use consensus_core::experiments::{
    junit_xml, random_schedule, random_target, run_case, run_example2, run_suite, table1 as table1_rows, case_rng,
    Example2Params, RandomScheduleParams, Suite, SuiteReport,
};
use consensus_core::graph::{check_isc, check_pe, gamma_reduce, globally_reachable, persistent_graph};
use consensus_core::Schedule;
use serde_json::json;

use crate::config::{resolve, Resolved};
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, write_json};
use crate::plot::{line_chart, Series};
use crate::{CertifyArgs, CheckArgs, ConditionArg, Example2Args, GenArgs, SimulateArgs, Table1Args};

fn integrate(r: &Resolved, t_end: f64, step: Option<f64>, stride: usize) -> CliResult<Trajectory> {
    let spec = &r.config.system;
    let mut opts = GridOptions { max_step: step, ..Default::default() }.stride(stride);
    opts.extra_times = Vec::new();
    let traj = match spec.family {
        Family::FirstOrderLinear => integrate_linear(&r.schedule, &r.positions, spec.gain(), t_end, &opts)?,
        Family::FirstOrderNonlinear => integrate_nonlinear(spec, &r.schedule, &r.positions, t_end, &opts)?,
        Family::SecondOrder => {
            let v0 = r.velocities.as_ref().expect("second-order configs resolve velocities");
            integrate_second_order(spec, &r.schedule, &r.positions, v0, t_end, &opts)?
        }
    };
    let finite = traj.positions.iter().chain(traj.velocities.iter().flatten()).all(|s| s.is_finite());
    if !finite {
        return Err(CliError::Numerical("trajectory left the finite range".into()));
    }
    Ok(traj)
}

fn trajectory_plot(title: &str, traj: &Trajectory) -> String {
    let mut series = Vec::new();
    for i in 0..traj.n_agents() {
        series.push(Series {
            label: format!("x{}", i + 1),
            values: traj.positions.iter().map(|s| s.agent(i)[0]).collect(),
        });
    }
    line_chart(title, &traj.times, &series, false)
}

fn diameter_plot(title: &str, traj: &Trajectory) -> String {
    let mut series = vec![Series {
        label: "D_X".into(),
        values: traj.positions.iter().map(diameter).collect(),
    }];
    if let Ok(dv) = traj.diameters(Which::Velocity) {
        series.push(Series { label: "D_V".into(), values: dv });
    }
    line_chart(title, &traj.times, &series, true)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let r = resolve(&args.config, None)?;
    let t_end = args.t_end.unwrap_or(r.config.horizon);
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CliError::Config(format!("--t-end must be positive, got {t_end}")));
    }
    let step = args.step.or(r.config.step);
    if args.stride == 0 {
        return Err(CliError::Config("--stride must be positive".into()));
    }
    let traj = integrate(&r, t_end, step, args.stride)?;

    let out = args
        .out
        .clone()
        .or_else(|| r.config.outputs.trajectory.clone())
        .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    let meta = args
        .meta
        .clone()
        .or_else(|| r.config.outputs.metadata.clone())
        .unwrap_or_else(|| out.with_extension("json"));
    write_atomic(&out, traj.to_csv().as_bytes())?;
    let d = traj.diameters(Which::Position)?;
    write_json(
        &meta,
        &json!({
            "config_digest": r.digest,
            "schedule_digest": traj.meta.schedule_digest,
            "family": traj.meta.family,
            "integrator": traj.meta.integrator,
            "step": traj.meta.step,
            "coupling_gain": traj.meta.coupling_gain,
            "t_end": t_end,
            "records": traj.len(),
            "position_diameter": {"initial": d[0], "final": d[d.len() - 1]},
            "velocity_diameter": traj.diameters(Which::Velocity).ok().map(|v| json!({"initial": v[0], "final": v[v.len() - 1]})),
        }),
    )?;
    if let Some(svg) = args.svg.clone().or_else(|| r.config.outputs.plot.clone()) {
        let mut doc = trajectory_plot("states (first coordinate)", &traj);
        if svg.extension().is_some_and(|e| e == "svg") {
            write_atomic(&svg.with_file_name(format!(
                "{}_diameters.svg",
                svg.file_stem().unwrap_or_default().to_string_lossy()
            )), diameter_plot("diameters", &traj).as_bytes())?;
        } else {
            doc = diameter_plot("diameters", &traj);
        }
        write_atomic(&svg, doc.as_bytes())?;
    }
    println!("wrote {} grid points to {} (config {})", traj.len(), out.display(), &r.digest[..12]);
    Ok(())
}

/// Windows needed to see every phase of the schedule relative to `T`.
fn persistent_horizon(sched: &Schedule, window: f64) -> (usize, bool) {
    let mut k_max = 1usize;
    let mut exact = true;
    if let Some(p) = sched.common_period() {
        let ratio = p / window;
        if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
            k_max = k_max.max(ratio.round() as usize);
        } else {
            k_max = k_max.max(64);
            exact = false;
        }
    }
    let last_aperiodic = sched
        .entries()
        .filter(|(_, s)| s.period().is_none())
        .flat_map(|(_, s)| s.local_breakpoints())
        .fold(0.0f64, f64::max);
    if last_aperiodic > 0.0 {
        k_max = k_max.max((last_aperiodic / window).ceil() as usize + 1);
    }
    (k_max, exact)
}

fn one_based(node: Option<usize>) -> Option<usize> {
    node.map(|v| v + 1)
}

pub fn certify(args: &CertifyArgs) -> CliResult<()> {
    let r = resolve(&args.config, args.edge_sense.map(Into::into))?;
    let spec = &r.config.system;
    let (n, window, mu) = (spec.n_agents, args.window, args.threshold);
    if !(window.is_finite() && window > 0.0) || !(mu > 0.0 && mu <= 1.0) {
        return Err(CliError::Config(format!("need T > 0 and mu in (0, 1], got T = {window}, mu = {mu}")));
    }
    let form = if args.proof_constant { ExponentForm::Proof } else { ExponentForm::Stated };
    let (auto_k, exact) = persistent_horizon(&r.schedule, window);
    let k_max = args.k_max.unwrap_or(auto_k);
    let graph = persistent_graph(&r.schedule, window, mu, k_max)?;
    let reach = globally_reachable(&graph);

    let unsatisfied = |evidence: serde_json::Value| -> CliResult<()> {
        println!("{}", serde_json::to_string_pretty(&evidence).expect("evidence serializes"));
        Err(CliError::Unsatisfied(evidence["reason"].as_str().unwrap_or("see evidence").to_string()))
    };
    let graph_json = || serde_json::from_str::<serde_json::Value>(&graph.to_json()).expect("graph JSON");

    let mut doc = json!({
        "config_digest": r.digest,
        "schedule_digest": r.schedule.digest(),
        "window": window,
        "threshold": mu,
        "persistent_windows": k_max,
        "persistent_windows_exact": exact,
        "persistent_graph": graph_json(),
        "reachable_node": one_based(reach.reachable_node),
        "graph_length": reach.length,
    });

    if spec.family == Family::SecondOrder {
        let Some(d) = reach.length else {
            return unsatisfied(json!({
                "reason": "persistent graph has no globally reachable node",
                "persistent_graph": graph_json(),
                "persistent_windows": k_max,
            }));
        };
        if (spec.gain() * n as f64 - 1.0).abs() > 1e-12 {
            return Err(CliError::Config(format!(
                "second-order certificates assume coupling gain 1/N, got {}",
                spec.gain()
            )));
        }
        let v0 = r.velocities.as_ref().expect("second-order configs resolve velocities");
        let rate = SecondOrderRate::new(n, window, mu, d, spec.phi, diameter(&r.positions), diameter(v0))?;
        let verdict = classify_flocking(&KernelFacts::from_phi(&spec.phi)?, d, n, window, mu)?;
        doc["second_order"] = json!({
            "block_time": rate.block_time(),
            "factors": (0..10).map(|k| rate.factor(k)).collect::<Vec<_>>(),
            "one_minus_factors": (0..10).map(|k| rate.gap(k)).collect::<Vec<_>>(),
            "position_bound_10_blocks": rate.position_bound(10),
            "verdict": verdict.label(),
            "flocking": verdict,
        });
    } else {
        let bounds = bounds_m(spec, &r.positions)?;
        let cert = match args.condition {
            ConditionArg::Moreau => {
                let Some(d) = reach.length else {
                    return unsatisfied(json!({
                        "reason": "persistent graph has no globally reachable node",
                        "persistent_graph": graph_json(),
                        "persistent_windows": k_max,
                    }));
                };
                rate_moreau(n, window, mu, d, bounds, form)?
            }
            ConditionArg::Pe => {
                let pe = check_pe(&r.schedule, window, mu, &[0.0])?;
                if !pe.satisfied {
                    let w = pe.witness.expect("failed checks carry a witness");
                    return unsatisfied(json!({
                        "reason": format!("pair ({}, {}) averages {} < mu at t = {}", w.i + 1, w.j + 1, w.average, w.t),
                        "pair": [w.i + 1, w.j + 1],
                        "t": w.t,
                        "average": w.average,
                    }));
                }
                rate_pe(n, window, mu, bounds.lower, bounds.upper)?
            }
            ConditionArg::Isc => {
                let horizon = r.schedule.common_period().unwrap_or(window);
                let samples: Vec<f64> = (0..64).map(|k| horizon * k as f64 / 64.0).collect();
                let isc = check_isc(&r.schedule, window, mu, &samples)?;
                if let Some((i, j, t)) = isc.failure {
                    return unsatisfied(json!({
                        "reason": format!("agents {} and {} share no common target at t = {t}", i + 1, j + 1),
                        "pair": [i + 1, j + 1],
                        "t": t,
                    }));
                }
                let node = gamma_reduce(n, &isc.witness_map_at(isc.sample_times[0]))?;
                doc["isc"] = json!({
                    "sample_times": isc.sample_times.len(),
                    "exhaustive": isc.exhaustive,
                    "reduced_node_at_first_sample": node + 1,
                });
                rate_isc(n, window, mu, bounds.lower, bounds.upper)?
            }
        };
        doc["certificate"] = serde_json::to_value(&cert).expect("certificate serializes");
        doc["weight_bounds_tight"] = json!(bounds.tight);
        println!(
            "d* = {}, 1 - C = {:.4e}, tau = {}, delta = {:.6e}",
            cert.graph_length, cert.one_minus_contraction, cert.block_time, cert.envelope_lead
        );
    }
    match &args.out {
        Some(path) => write_json(path, &doc)?,
        None => println!("{}", serde_json::to_string_pretty(&doc).expect("certificate serializes")),
    }
    Ok(())
}

pub fn table1(args: &Table1Args) -> CliResult<()> {
    if args.n_min < 3 || args.n_max < args.n_min {
        return Err(CliError::Config(format!("need 3 <= n-min <= n-max, got {}..={}", args.n_min, args.n_max)));
    }
    let rows = table1_rows(args.n_min, args.n_max)?;
    let mut csv = String::from(
        "N,one_minus_diameter,one_minus_diameter_integrated,paper_one_minus_diameter,one_minus_C,log10_one_minus_C,paper_one_minus_C\n",
    );
    println!("{:>3} {:>12} {:>10} {:>12} {:>10}", "N", "1-D(d*T)", "table", "1-C", "table");
    let mut mismatches = Vec::new();
    for row in &rows {
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        let _ = writeln!(
            csv,
            "{},{:.10},{:.10},{},{:e},{},{}",
            row.n_agents,
            row.one_minus_diameter,
            row.one_minus_diameter_integrated,
            fmt_opt(row.paper_one_minus_diameter),
            row.one_minus_contraction,
            row.log10_one_minus_contraction.map_or(String::new(), |v| format!("{v:.6}")),
            fmt_opt(row.paper_one_minus_contraction),
        );
        println!(
            "{:>3} {:>12.7} {:>10} {:>12.4e} {:>10}",
            row.n_agents,
            row.one_minus_diameter,
            row.paper_one_minus_diameter.map_or("-".into(), |v| format!("{v}")),
            row.one_minus_contraction,
            row.paper_one_minus_contraction.map_or("-".into(), |v| format!("{v:e}")),
        );
        let diameter_ok = row.paper_one_minus_diameter.is_none_or(|p| (row.one_minus_diameter - p).abs() <= 5e-5);
        let bound_ok = row
            .paper_one_minus_contraction
            .is_none_or(|p| (row.one_minus_contraction / p - 1.0).abs() <= 0.03);
        let agree = (row.one_minus_diameter - row.one_minus_diameter_integrated).abs() <= 1e-10;
        if !(diameter_ok && bound_ok && agree) {
            mismatches.push(row.n_agents);
        }
    }
    if let Some(path) = &args.csv {
        write_atomic(path, csv.as_bytes())?;
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Golden(format!("rows N = {mismatches:?} differ from the embedded table")))
    }
}

pub fn example2(args: &Example2Args) -> CliResult<()> {
    if args.n < 2 {
        return Err(CliError::Config(format!("--n must be at least 2, got {}", args.n)));
    }
    let mut params = Example2Params::standard(args.n, args.beta);
    params.t_end = args.t_end.unwrap_or(params.t_end);
    params.step = args.step;
    params.sense = args.edge_sense.into();
    params.layout = args.layout.into();
    params.record_stride = args.stride.max(1);
    let run = run_example2(&params)?;
    let digest = sha256_canonical(&params);
    let dir = &args.out_dir;
    write_atomic(&dir.join("trajectory.csv"), run.trajectory.to_csv().as_bytes())?;
    write_json(
        &dir.join("verdict.json"),
        &json!({
            "config_digest": digest,
            "params": params,
            "verdict": run.verdict.label(),
            "flocking": run.verdict,
            "summary": run.summary,
        }),
    )?;
    write_atomic(&dir.join("positions.svg"), trajectory_plot("positions", &run.trajectory).as_bytes())?;
    write_atomic(&dir.join("diameters.svg"), diameter_plot("diameters", &run.trajectory).as_bytes())?;
    let s = &run.summary;
    println!(
        "verdict: {} (2*beta*d* = {:.3}); D_V ratio {:.4e}, D_X tail change {:.3e}, order preserved {}",
        run.verdict.label(),
        run.verdict.criterion_value.unwrap_or(f64::NAN),
        s.velocity_ratio,
        s.position_tail_change,
        s.order_preserved
    );
    Ok(())
}

pub fn check(args: &CheckArgs) -> CliResult<()> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse::<Suite>().map_err(|e| CliError::Config(e.to_string()))?]
    };
    let reports: Vec<SuiteReport> = suites
        .iter()
        .map(|&suite| match args.case {
            Some(id) => {
                let outcome = run_case(suite, args.seed, id);
                let failed = usize::from(!outcome.passed);
                SuiteReport {
                    suite,
                    seed: args.seed,
                    cases: 1,
                    passed: 1 - failed,
                    failed,
                    seconds: outcome.seconds,
                    outcomes: vec![outcome],
                }
            }
            None => run_suite(suite, args.cases.unwrap_or(suite.default_cases()), args.seed),
        })
        .collect();
    for r in &reports {
        println!(
            "{} {}: {}/{} cases passed in {:.2}s",
            if r.all_passed() { "PASS" } else { "FAIL" },
            r.suite,
            r.passed,
            r.cases,
            r.seconds
        );
        for c in r.failures().take(5) {
            println!("  case {}: {}", c.case_id, c.detail);
        }
    }
    if let Some(path) = &args.json {
        write_json(path, &reports)?;
    }
    if let Some(path) = &args.junit {
        write_atomic(path, junit_xml(&reports).as_bytes())?;
    }
    match reports.iter().find_map(|r| r.reproducer()) {
        None => Ok(()),
        Some(repro) => Err(CliError::Property(format!("reproduce with `check {repro}`"))),
    }
}

pub fn gen(args: &GenArgs) -> CliResult<()> {
    if args.n < 2 {
        return Err(CliError::Config(format!("--n must be at least 2, got {}", args.n)));
    }
    let mut rng = case_rng(args.seed, u64::MAX);
    let target = random_target(args.n, args.shape.into(), &mut rng)?;
    let params = RandomScheduleParams {
        n_agents: args.n,
        window: args.window,
        threshold: args.threshold,
        target,
        extra_edge_prob: args.extra_prob,
        seed: args.seed,
        pattern_periods: args.periods,
    };
    let sched = random_schedule(&params)?;
    write_atomic(&args.out, format!("{}\n", sched.to_json()).as_bytes())?;
    let reach = globally_reachable(&params.target);
    println!(
        "wrote {} entries to {}; target root {} with length {}",
        sched.entries().count(),
        args.out.display(),
        reach.reachable_node.map_or(0, |v| v + 1),
        reach.length.unwrap_or(0)
    );
    Ok(())
}

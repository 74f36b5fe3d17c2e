use std::path::{Path, PathBuf};

use consensus_core::digest::sha256_canonical;
use consensus_core::dynamics::{AgentStates, Family, SystemSpec};
use consensus_core::experiments::{case_rng, example1_schedule, example2_schedule, random_states, EdgeSense, WindowLayout};
use consensus_core::signal::ScheduleWire;
use consensus_core::Schedule;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where the weights come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSource {
    /// Schedule JSON file, relative to the config file.
    Path(PathBuf),
    Inline(ScheduleWire),
    /// Periodic chain `N -> .. -> 1`.
    Example1 {
        n_agents: usize,
        window: f64,
        threshold: f64,
        #[serde(default)]
        layout: WindowLayout,
    },
    /// Chain plus constant links among agents `2..N`.
    Example2 {
        n_agents: usize,
        window: f64,
        threshold: f64,
        #[serde(default)]
        layout: WindowLayout,
        #[serde(default)]
        sense: EdgeSense,
    },
}

/// Per-agent rows; omitted parts are drawn uniformly from `[-1, 1]` with
/// the config seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub positions: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub velocities: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
    #[serde(default)]
    pub metadata: Option<PathBuf>,
    #[serde(default)]
    pub plot: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub schedule: ScheduleSource,
    #[serde(default)]
    pub initial: InitialState,
    pub horizon: f64,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A validated config with every input materialized.
pub struct Resolved {
    pub config: RunConfig,
    pub schedule: Schedule,
    pub positions: AgentStates,
    pub velocities: Option<AgentStates>,
    /// SHA-256 of the canonical JSON of the resolved inputs.
    pub digest: String,
}

/// Deserializes JSON, reporting the failing field path and position.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!(
            "{origin}: field `{path}` at line {} column {}: {inner}",
            inner.line(),
            inner.column()
        ))
    })
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        parse_json(&read_text(path)?, &path.display().to_string())
    }
}

impl ScheduleSource {
    pub fn build(&self, base: &Path, sense_override: Option<EdgeSense>) -> CliResult<Schedule> {
        Ok(match self {
            ScheduleSource::Path(p) => {
                let full = base.join(p);
                let wire: ScheduleWire = parse_json(&read_text(&full)?, &full.display().to_string())?;
                Schedule::from_wire(&wire)?
            }
            ScheduleSource::Inline(wire) => Schedule::from_wire(wire)?,
            &ScheduleSource::Example1 { n_agents, window, threshold, layout } => {
                example1_schedule(n_agents, window, threshold, layout)?
            }
            &ScheduleSource::Example2 { n_agents, window, threshold, layout, sense } => {
                example2_schedule(n_agents, window, threshold, layout, sense_override.unwrap_or(sense))?
            }
        })
    }
}

fn states(rows: Option<&Vec<Vec<f64>>>, spec: &SystemSpec, seed: u64, stream: u64, what: &str) -> CliResult<AgentStates> {
    let states = match rows {
        Some(rows) => AgentStates::from_rows(rows).map_err(|e| CliError::Config(format!("initial.{what}: {e}")))?,
        None => {
            let mut rng = case_rng(seed, stream);
            AgentStates::new(spec.n_agents, spec.dim, random_states(spec.n_agents, spec.dim, -1.0, 1.0, &mut rng))?
        }
    };
    if states.n_agents() != spec.n_agents || states.dim() != spec.dim {
        return Err(CliError::Config(format!(
            "initial.{what}: expected {} agents in dimension {}, got {} in dimension {}",
            spec.n_agents,
            spec.dim,
            states.n_agents(),
            states.dim()
        )));
    }
    Ok(states)
}

/// Loads, validates and materializes a config file.
pub fn resolve(path: &Path, sense_override: Option<EdgeSense>) -> CliResult<Resolved> {
    let config = RunConfig::load(path)?;
    resolve_config(config, path.parent().unwrap_or(Path::new(".")), sense_override)
}

pub fn resolve_config(config: RunConfig, base: &Path, sense_override: Option<EdgeSense>) -> CliResult<Resolved> {
    config.system.validate().map_err(|e| CliError::Config(format!("system: {e}")))?;
    if !(config.horizon.is_finite() && config.horizon > 0.0) {
        return Err(CliError::Config(format!("horizon must be positive, got {}", config.horizon)));
    }
    if let Some(h) = config.step {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Config(format!("step must be positive, got {h}")));
        }
    }
    let schedule = config.schedule.build(base, sense_override)?;
    if schedule.n_agents() != config.system.n_agents {
        return Err(CliError::Config(format!(
            "schedule has {} agents, system has {}",
            schedule.n_agents(),
            config.system.n_agents
        )));
    }
    let positions = states(config.initial.positions.as_ref(), &config.system, config.seed, 0, "positions")?;
    let velocities = match config.system.family {
        Family::SecondOrder => {
            Some(states(config.initial.velocities.as_ref(), &config.system, config.seed, 1, "velocities")?)
        }
        _ => None,
    };
    let digest = sha256_canonical(&serde_json::json!({
        "system": &config.system,
        "schedule": schedule.to_wire(),
        "positions": &positions,
        "velocities": &velocities,
        "horizon": config.horizon,
        "step": config.step,
        "seed": config.seed,
    }));
    Ok(Resolved { config, schedule, positions, velocities, digest })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"{
        "system": {"family": "first_order_linear", "n_agents": 3, "dim": 1},
        "schedule": {"example1": {"n_agents": 3, "window": 3.0, "threshold": 0.5}},
        "initial": {"positions": [[0.0], [1.0], [1.0]]},
        "horizon": 6.0
    }"#;

    #[test]
    fn builtin_schedule_resolves() {
        let cfg: RunConfig = parse_json(EX1, "test").unwrap();
        let r = resolve_config(cfg, Path::new("."), None).unwrap();
        assert_eq!(r.schedule.n_agents(), 3);
        assert_eq!(r.positions.as_slice(), &[0.0, 1.0, 1.0]);
        assert_eq!(r.digest.len(), 64);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = EX1.replace("\"dim\": 1", "\"dim\": \"one\"");
        let CliError::Config(msg) = parse_json::<RunConfig>(&bad, "cfg").unwrap_err() else { panic!() };
        assert!(msg.contains("system.dim"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn validation_failures_are_config_errors() {
        let zero = EX1.replace("\"n_agents\": 3, \"dim\"", "\"n_agents\": 0, \"dim\"");
        let cfg: RunConfig = parse_json(&zero, "cfg").unwrap();
        assert_eq!(resolve_config(cfg, Path::new("."), None).err().unwrap().exit_code(), 2);
        let cfg: RunConfig = parse_json(&EX1.replace("6.0", "-1.0"), "cfg").unwrap();
        assert!(matches!(resolve_config(cfg, Path::new("."), None), Err(CliError::Config(_))));
    }

    #[test]
    fn random_initial_state_is_seeded() {
        let no_init = EX1.replace(r#""initial": {"positions": [[0.0], [1.0], [1.0]]},"#, "");
        let a = resolve_config(parse_json(&no_init, "a").unwrap(), Path::new("."), None).unwrap();
        let b = resolve_config(parse_json(&no_init, "b").unwrap(), Path::new("."), None).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.digest, b.digest);
    }
}

//! Integration of the first-order (linear and nonlinear) and second-order
//! models, plus diameters, reduction transforms and barrier quantities.

mod grid;
mod invariants;
mod linear;
mod rk;
mod states;
mod trajectory;
mod transforms;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

pub use grid::GridOptions;
pub use invariants::{
    check_directional_support, check_extremal_sets, check_nonincreasing, check_position_growth,
    check_support_contraction, extremal_index_sets, left_barrier, Violation,
};
pub use linear::{integrate_linear, LinearIntegrator};
pub use rk::{integrate_nonlinear, integrate_second_order};
pub use states::{diameter, AgentStates, Which};
pub use trajectory::{Trajectory, TrajectoryMeta};
pub use transforms::{linearize, project_trajectory};

/// Model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FirstOrderLinear,
    FirstOrderNonlinear,
    SecondOrder,
}

/// Pairwise interaction kernel as a function of the distance `r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiForm {
    #[default]
    Unit,
    /// `(1 + r^2)^(-beta)`
    PowerLaw { beta: f64 },
    /// `exp(-rate * r)`
    Exponential { rate: f64 },
}

impl PhiForm {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            PhiForm::Unit => 1.0,
            PhiForm::PowerLaw { beta } => (1.0 + r * r).powf(-beta),
            PhiForm::Exponential { rate } => (-rate * r).exp(),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, PhiForm::Unit | PhiForm::PowerLaw { beta: 0.0 } | PhiForm::Exponential { rate: 0.0 })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PhiForm::Unit => {}
            PhiForm::PowerLaw { beta } => {
                ensure!(beta.is_finite() && beta >= 0.0, Config, "power-law exponent must be >= 0, got {beta}")
            }
            PhiForm::Exponential { rate } => {
                ensure!(rate.is_finite() && rate >= 0.0, Config, "exponential rate must be >= 0, got {rate}")
            }
        }
        Ok(())
    }
}

/// Per-agent gain `lambda_i(x)` of the first-order nonlinear model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaForm {
    #[default]
    Unit,
    Constant { value: f64 },
    /// `N / sum_k phi(|x_i - x_k|)`, the sum including `k = i`.
    MotschTadmor,
}

impl LambdaForm {
    pub fn eval(&self, i: usize, x: &AgentStates, phi: &PhiForm) -> f64 {
        match *self {
            LambdaForm::Unit => 1.0,
            LambdaForm::Constant { value } => value,
            LambdaForm::MotschTadmor => {
                let n = x.n_agents();
                let total: f64 = (0..n).map(|k| phi.eval(x.distance(i, k))).sum();
                n as f64 / total
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, LambdaForm::Unit | LambdaForm::Constant { value: 1.0 })
    }

    fn validate(&self) -> Result<()> {
        if let LambdaForm::Constant { value } = *self {
            ensure!(value.is_finite() && value > 0.0, Config, "constant gain must be positive, got {value}");
        }
        Ok(())
    }
}

/// Model family, size and kernels of a simulated system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub family: Family,
    pub n_agents: usize,
    pub dim: usize,
    /// Multiplier on the whole interaction sum; `None` means `1 / N`.
    #[serde(default)]
    pub coupling_gain: Option<f64>,
    #[serde(default)]
    pub lambda: LambdaForm,
    #[serde(default)]
    pub phi: PhiForm,
}

impl SystemSpec {
    pub fn linear(n_agents: usize, dim: usize) -> Self {
        Self {
            family: Family::FirstOrderLinear,
            n_agents,
            dim,
            coupling_gain: None,
            lambda: LambdaForm::Unit,
            phi: PhiForm::Unit,
        }
    }

    pub fn nonlinear(n_agents: usize, dim: usize, lambda: LambdaForm, phi: PhiForm) -> Self {
        Self { family: Family::FirstOrderNonlinear, lambda, phi, ..Self::linear(n_agents, dim) }
    }

    pub fn second_order(n_agents: usize, dim: usize, phi: PhiForm) -> Self {
        Self { family: Family::SecondOrder, phi, ..Self::linear(n_agents, dim) }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.coupling_gain = Some(gain);
        self
    }

    pub fn gain(&self) -> f64 {
        self.coupling_gain.unwrap_or(1.0 / self.n_agents as f64)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_agents >= 2, Config, "need at least 2 agents, got {}", self.n_agents);
        ensure!(self.dim >= 1, Config, "dimension must be at least 1");
        let g = self.gain();
        ensure!(g.is_finite() && g > 0.0, Config, "coupling gain must be positive, got {g}");
        self.lambda.validate()?;
        self.phi.validate()?;
        match self.family {
            Family::FirstOrderLinear => ensure!(
                self.lambda.is_unit() && self.phi.is_unit(),
                Config,
                "the linear family takes unit kernels"
            ),
            Family::SecondOrder => {
                ensure!(self.lambda.is_unit(), Config, "the second-order family has no per-agent gain")
            }
            Family::FirstOrderNonlinear => {}
        }
        Ok(())
    }

    pub(crate) fn check_states(&self, x: &AgentStates) -> Result<()> {
        ensure!(
            x.n_agents() == self.n_agents && x.dim() == self.dim,
            Domain,
            "states have shape {}x{}, system expects {}x{}",
            x.n_agents(),
            x.dim(),
            self.n_agents,
            self.dim
        );
        Ok(())
    }
}

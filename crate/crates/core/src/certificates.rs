//! Explicit exponential-rate certificates and the flocking classifier.
//!
//! All certificates are stated for the `1 / N` normalization of the
//! interaction sum. A system run with coupling gain `g` is covered by
//! scaling the weight bounds by `g * N` (see [`bounds_m`]).
//!
//! `1 - C` is computed from its logarithm, so contraction factors that are
//! indistinguishable from one in `f64` still carry their size.

use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentStates, Family, LambdaForm, PhiForm, SystemSpec};
use crate::error::{ensure, Error, Result};

/// `mu T / (N + mu T)`.
pub fn eta(n_agents: usize, window: f64, threshold: f64) -> Result<f64> {
    ensure!(n_agents >= 2, Domain, "need at least 2 agents, got {n_agents}");
    ensure!(window.is_finite() && window > 0.0, Domain, "window must be positive, got {window}");
    ensure!(threshold.is_finite() && threshold > 0.0, Domain, "threshold must be positive, got {threshold}");
    let mass = threshold * window;
    Ok(mass / (n_agents as f64 + mass))
}

/// Connectivity condition a certificate is derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// A persistent subgraph with a globally reachable node.
    Moreau,
    /// Every ordered pair is window-connected.
    Pe,
    /// Every pair shares a window-connected common target.
    Isc,
}

/// Exponent used in the contraction factor of the connectivity condition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    /// `exp(-2 d T m_upper)`
    #[default]
    Stated,
    /// `exp(-2 ((N - 1) / N) d T m_upper)`, sharper.
    Proof,
}

/// Lower and upper bounds of the effective weights `g N lambda_i phi_ij`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub lower: f64,
    pub upper: f64,
    /// Whether both bounds are attained (false for conservative estimates).
    pub tight: bool,
}

impl WeightBounds {
    pub const UNIT: WeightBounds = WeightBounds { lower: 1.0, upper: 1.0, tight: true };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        ensure!(lower.is_finite() && lower > 0.0, Domain, "lower weight bound must be positive, got {lower}");
        ensure!(upper.is_finite() && upper >= lower, Domain, "need 0 < lower <= upper, got {lower} > {upper}");
        Ok(Self { lower, upper, tight: true })
    }
}

/// An exponential contraction certificate `D(n tau) <= C^n D(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub condition: Condition,
    pub family: Family,
    pub exponent_form: ExponentForm,
    pub n_agents: usize,
    pub window: f64,
    pub threshold: f64,
    pub graph_length: usize,
    /// `m mu T / (N + m mu T)` with the lower weight bound `m`.
    pub one_step_gain: f64,
    pub contraction: f64,
    pub one_minus_contraction: f64,
    /// `log10(1 - C)`, finite even when `1 - C` underflows.
    pub log10_one_minus_contraction: Option<f64>,
    /// `1 - C` is below machine precision: `C` rounds to one.
    pub vacuous: bool,
    pub block_time: f64,
    /// Length of the final part of each block on which the envelope decays.
    pub envelope_lead: f64,
    pub weight_lower: f64,
    pub weight_upper: f64,
    pub horizon_note: Option<String>,
    pub trace: Vec<String>,
}

impl RateCertificate {
    fn from_log_gap(base: CertificateBase, log_gap: f64, block_time: f64, trace: Vec<String>) -> Self {
        let one_minus = log_gap.exp();
        let contraction = 1.0 - one_minus;
        let n = base.n_agents as f64;
        // -ln C = -ln(1 - (1 - C)), accurate for tiny gaps.
        let neg_log_c = -(-one_minus).ln_1p();
        let envelope_lead = n / (2.0 * (n - 1.0) * base.bounds.upper) * neg_log_c;
        let log10 = log_gap / std::f64::consts::LN_10;
        RateCertificate {
            condition: base.condition,
            family: base.family,
            exponent_form: base.form,
            n_agents: base.n_agents,
            window: base.window,
            threshold: base.threshold,
            graph_length: base.graph_length,
            one_step_gain: base.gain,
            contraction,
            one_minus_contraction: one_minus,
            log10_one_minus_contraction: log10.is_finite().then_some(log10),
            vacuous: one_minus < f64::EPSILON,
            block_time,
            envelope_lead,
            weight_lower: base.bounds.lower,
            weight_upper: base.bounds.upper,
            horizon_note: None,
            trace,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Decay rate of the second envelope branch.
    fn envelope_rate(&self) -> f64 {
        let n = self.n_agents as f64;
        2.0 * (n - 1.0) / n * self.weight_upper
    }
}

struct CertificateBase {
    condition: Condition,
    family: Family,
    form: ExponentForm,
    n_agents: usize,
    window: f64,
    threshold: f64,
    graph_length: usize,
    gain: f64,
    bounds: WeightBounds,
}

fn check_bounds(bounds: &WeightBounds) -> Result<()> {
    WeightBounds::new(bounds.lower, bounds.upper).map(|_| ())
}

/// Certificate for a persistent connectivity graph of length `graph_length`.
pub fn rate_moreau(
    n_agents: usize,
    window: f64,
    threshold: f64,
    graph_length: usize,
    bounds: WeightBounds,
    form: ExponentForm,
) -> Result<RateCertificate> {
    check_bounds(&bounds)?;
    ensure!(
        (1..n_agents).contains(&graph_length),
        Domain,
        "graph length must lie in 1..={}, got {graph_length}",
        n_agents.saturating_sub(1)
    );
    let gain = eta(n_agents, window, threshold * bounds.lower)?;
    let (n, d) = (n_agents as f64, graph_length as f64);
    let exponent_scale = match form {
        ExponentForm::Stated => 1.0,
        ExponentForm::Proof => (n - 1.0) / n,
    };
    let decay = 2.0 * exponent_scale * d * window * bounds.upper;
    let log_gap = 0.5f64.ln() + d * gain.ln() - decay;
    let block_time = d * window / bounds.upper;
    let trace = vec![
        format!("eta = m_lower*mu*T/(N + m_lower*mu*T) = {gain:.17e}"),
        format!(
            "1 - C = 0.5 * eta^{graph_length} * exp(-{}) with exponent 2*{exponent_scale}*{graph_length}*{window}*{}",
            decay, bounds.upper
        ),
        format!("log(1 - C) = {log_gap:.17e}"),
        format!("tau = d*T/m_upper = {block_time}"),
    ];
    let family = if bounds == WeightBounds::UNIT { Family::FirstOrderLinear } else { Family::FirstOrderNonlinear };
    let base = CertificateBase {
        condition: Condition::Moreau,
        family,
        form,
        n_agents,
        window,
        threshold,
        graph_length,
        gain,
        bounds,
    };
    Ok(RateCertificate::from_log_gap(base, log_gap, block_time, trace))
}

/// Linear model with weights in `[0, 1]`.
pub fn rate_linear(n_agents: usize, window: f64, threshold: f64, graph_length: usize) -> Result<RateCertificate> {
    rate_moreau(n_agents, window, threshold, graph_length, WeightBounds::UNIT, ExponentForm::Stated)
}

/// Nonlinear model whose effective weights lie in `[m_lower, m_upper]`.
pub fn rate_nonlinear(
    n_agents: usize,
    window: f64,
    threshold: f64,
    graph_length: usize,
    m_lower: f64,
    m_upper: f64,
) -> Result<RateCertificate> {
    let bounds = WeightBounds::new(m_lower, m_upper)?;
    rate_moreau(n_agents, window, threshold, graph_length, bounds, ExponentForm::Stated)
}

/// Persistent Excitation: the connectivity graph is complete, length one.
pub fn rate_pe(n_agents: usize, window: f64, threshold: f64, m_lower: f64, m_upper: f64) -> Result<RateCertificate> {
    let mut cert = rate_moreau(
        n_agents,
        window,
        threshold,
        1,
        WeightBounds::new(m_lower, m_upper)?,
        ExponentForm::Proof,
    )?;
    cert.condition = Condition::Pe;
    cert.trace.insert(0, "complete connectivity graph: d* = 1".into());
    Ok(cert)
}

/// `(N - 1) * 2^(N (N - 1))`, the number of windows per contraction block.
pub fn isc_block_windows(n_agents: usize) -> Result<u128> {
    ensure!(n_agents >= 2, Domain, "need at least 2 agents, got {n_agents}");
    let overflow = || Error::Overflow(format!("(N-1)*2^(N(N-1)) does not fit in 128 bits for N = {n_agents}"));
    let shift = u32::try_from(n_agents * (n_agents - 1)).map_err(|_| overflow())?;
    1u128
        .checked_shl(shift)
        .filter(|_| shift < 128)
        .and_then(|p| p.checked_mul(n_agents as u128 - 1))
        .ok_or_else(overflow)
}

/// Integral Scrambling Coefficients.
///
/// No factor one half, and a tower `(N - 1)^(2^(N (N - 1)))` in the exponent.
/// From `N = 3` on the contraction factor rounds to one; the log of `1 - C`
/// is still reported when finite.
pub fn rate_isc(n_agents: usize, window: f64, threshold: f64, m_lower: f64, m_upper: f64) -> Result<RateCertificate> {
    let bounds = WeightBounds::new(m_lower, m_upper)?;
    let windows = isc_block_windows(n_agents)?;
    let gain = eta(n_agents, window, threshold * bounds.lower)?;
    let n = n_agents as f64;
    let tower_exponent = 2f64.powi((n_agents * (n_agents - 1)) as i32);
    // log of 2 ((N-1)/N) (N-1)^(2^(N(N-1))) T m_upper
    let log_decay = (2.0 * (n - 1.0) / n * window * bounds.upper).ln() + tower_exponent * (n - 1.0).ln();
    let log_gap = (n - 1.0) * gain.ln() - log_decay.exp();
    let block_time = windows as f64 * window;
    let trace = vec![
        format!("eta = m_lower*mu*T/(N + m_lower*mu*T) = {gain:.17e}"),
        format!("log(2((N-1)/N)(N-1)^(2^(N(N-1)))*T*m_upper) = {log_decay:.17e}"),
        format!("log(1 - C) = (N-1)*log(eta) - exp(above) = {log_gap:.17e}"),
        format!("block length = (N-1)*2^(N(N-1))*T = {windows}*{window}"),
    ];
    let base = CertificateBase {
        condition: Condition::Isc,
        family: Family::FirstOrderNonlinear,
        form: ExponentForm::Proof,
        n_agents,
        window,
        threshold,
        graph_length: n_agents - 1,
        gain,
        bounds,
    };
    let mut cert = RateCertificate::from_log_gap(base, log_gap, block_time, trace);
    cert.horizon_note = Some(format!("block length {windows} windows = {block_time}"));
    Ok(cert)
}

/// Envelope of the diameter inside one block `[0, tau]`, relative to its
/// value at the block start.
///
/// Equal to one up to `tau - delta`, then decays exponentially to `C` at
/// `tau`. The decay rate carries the upper weight bound so the two branches
/// meet at `tau - delta`.
pub fn phi_envelope(cert: &RateCertificate, t: f64) -> f64 {
    let (tau, delta) = (cert.block_time, cert.envelope_lead);
    if t <= tau - delta {
        1.0
    } else {
        (cert.contraction * (cert.envelope_rate() * (tau - t)).exp()).min(1.0)
    }
}

/// Bound on `D(t) / D(0)`: `C^n * phi(t - n tau)` with `n = floor(t / tau)`.
pub fn diameter_envelope(cert: &RateCertificate, t: f64) -> f64 {
    let blocks = (t / cert.block_time).floor().max(0.0);
    let offset = (t - blocks * cert.block_time).clamp(0.0, cert.block_time);
    cert.contraction.powf(blocks) * phi_envelope(cert, offset)
}

/// Bounds of `g N lambda_i(x) phi(|x_i - x_j|)` over the ball of radius
/// `max_i |x_i(0)|`.
///
/// All kernels are radial and nonincreasing, so pairwise distances range over
/// `[0, 2R]`. The Motsch-Tadmor gain is bounded by combining the extreme
/// kernel values, which is valid but not attained.
pub fn bounds_m(spec: &SystemSpec, x0: &AgentStates) -> Result<WeightBounds> {
    spec.validate()?;
    spec.check_states(x0)?;
    let factor = spec.gain() * spec.n_agents as f64;
    let radius = (0..x0.n_agents())
        .map(|i| x0.agent(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let (far, near) = (spec.phi.eval(2.0 * radius), spec.phi.eval(0.0));
    let n = spec.n_agents as f64;
    let (lambda_low, lambda_high, tight) = match (spec.family, spec.lambda) {
        (Family::SecondOrder, _) | (_, LambdaForm::Unit) => (1.0, 1.0, true),
        (_, LambdaForm::Constant { value }) => (value, value, true),
        (_, LambdaForm::MotschTadmor) => (1.0 / near, n / (near + (n - 1.0) * far), false),
    };
    ensure!(far > 0.0, Numerical, "kernel underflows to zero at distance {}", 2.0 * radius);
    Ok(WeightBounds { lower: factor * lambda_low * far, upper: factor * lambda_high * near, tight })
}

/// Block contraction factors of the second-order model.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderRate {
    pub n_agents: usize,
    pub window: f64,
    pub threshold: f64,
    pub graph_length: usize,
    pub phi: PhiForm,
    pub position_spread: f64,
    pub velocity_spread: f64,
}

impl SecondOrderRate {
    pub fn new(
        n_agents: usize,
        window: f64,
        threshold: f64,
        graph_length: usize,
        phi: PhiForm,
        position_spread: f64,
        velocity_spread: f64,
    ) -> Result<Self> {
        eta(n_agents, window, threshold)?;
        ensure!((1..n_agents).contains(&graph_length), Domain, "graph length out of range: {graph_length}");
        ensure!(
            position_spread >= 0.0 && velocity_spread >= 0.0,
            Domain,
            "initial diameters must be nonnegative"
        );
        Ok(Self { n_agents, window, threshold, graph_length, phi, position_spread, velocity_spread })
    }

    /// `tau = d T / phi(0)`.
    pub fn block_time(&self) -> f64 {
        self.graph_length as f64 * self.window / self.phi.eval(0.0)
    }

    fn decay(&self) -> f64 {
        let n = self.n_agents as f64;
        (-2.0 * (n - 1.0) / n * self.graph_length as f64 * self.window * self.phi.eval(0.0)).exp()
    }

    /// `C(n tau)` with the kernel evaluated at `D_X(0) + (n + 1) tau D_V(0)`.
    pub fn factor(&self, block: u64) -> f64 {
        1.0 - self.gap(block)
    }

    /// `1 - C(n tau)`.
    pub fn gap(&self, block: u64) -> f64 {
        let r = self.position_spread + (block as f64 + 1.0) * self.block_time() * self.velocity_spread;
        let mass = self.phi.eval(r) * self.threshold * self.window;
        let weight = mass / (self.n_agents as f64 + mass);
        0.5 * weight.powi(self.graph_length as i32) * self.decay()
    }

    pub fn factors(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..).map(|n| self.factor(n))
    }

    /// `D_X(0) + tau D_V(0) (1 + sum_{j=1..n} prod_{k=1..j} C(k tau))`.
    pub fn position_bound(&self, blocks: u64) -> f64 {
        let mut product = 1.0;
        let mut sum = 1.0;
        for k in 1..=blocks {
            product *= self.factor(k);
            sum += product;
        }
        self.position_spread + self.block_time() * self.velocity_spread * sum
    }

    /// `n (phi(n tau D_V(0)) mu T / N)^d exp(-2 ((N - 1) / N) d T phi(0))`.
    pub fn raabe_term(&self, n: f64) -> f64 {
        let r = n * self.block_time() * self.velocity_spread;
        let base = self.phi.eval(r) * self.threshold * self.window / self.n_agents as f64;
        n * base.powi(self.graph_length as i32) * self.decay()
    }
}

/// `C(n tau)` of the second-order model.
#[allow(clippy::too_many_arguments)]
pub fn rate_second_order(
    n_agents: usize,
    window: f64,
    threshold: f64,
    graph_length: usize,
    phi: PhiForm,
    position_spread: f64,
    velocity_spread: f64,
    block: u64,
) -> Result<f64> {
    Ok(SecondOrderRate::new(n_agents, window, threshold, graph_length, phi, position_spread, velocity_spread)?
        .factor(block))
}

/// What is known about the kernel's decay at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelFacts {
    PowerLaw {
        beta: f64,
    },
    /// Facts about `phi^d` supplied by the caller.
    Declared {
        /// `int_R^inf phi(r)^d dr = inf`
        power_nonintegrable: bool,
        /// `lim phi(r) > 0` or `lim r phi(r)^d = inf`
        flocking_trigger: bool,
    },
}

impl KernelFacts {
    pub fn from_phi(phi: &PhiForm) -> Result<Self> {
        match *phi {
            PhiForm::Unit => Ok(KernelFacts::PowerLaw { beta: 0.0 }),
            PhiForm::PowerLaw { beta } => Ok(KernelFacts::PowerLaw { beta }),
            PhiForm::Exponential { rate } if rate == 0.0 => Ok(KernelFacts::PowerLaw { beta: 0.0 }),
            PhiForm::Exponential { .. } => {
                Ok(KernelFacts::Declared { power_nonintegrable: false, flocking_trigger: false })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlockingVerdict {
    pub alignment_guaranteed: bool,
    pub flocking_guaranteed: bool,
    pub boundary_case: bool,
    /// `2 beta d` for power laws.
    pub criterion_value: Option<f64>,
    /// Raabe-type left-hand side sampled at `n = 10^k`, unit velocity spread.
    pub raabe_evidence: Vec<(f64, f64)>,
}

impl FlockingVerdict {
    pub fn label(&self) -> &'static str {
        match (self.flocking_guaranteed, self.alignment_guaranteed) {
            (true, _) => "flocking",
            (false, true) => "alignment",
            _ => "no guarantee",
        }
    }
}

/// Alignment and flocking guarantees for a kernel and graph length.
pub fn classify_flocking(
    facts: &KernelFacts,
    graph_length: usize,
    n_agents: usize,
    window: f64,
    threshold: f64,
) -> Result<FlockingVerdict> {
    ensure!(graph_length >= 1, Domain, "graph length must be positive");
    let (alignment, flocking, boundary, criterion, phi) = match *facts {
        KernelFacts::PowerLaw { beta } => {
            ensure!(beta.is_finite() && beta >= 0.0, Config, "power-law exponent must be >= 0, got {beta}");
            let value = 2.0 * beta * graph_length as f64;
            let boundary = (value - 1.0).abs() <= 1e-12;
            (value <= 1.0 || boundary, value < 1.0 && !boundary, boundary, Some(value), Some(PhiForm::PowerLaw { beta }))
        }
        KernelFacts::Declared { power_nonintegrable, flocking_trigger } => {
            let flocking = power_nonintegrable && flocking_trigger;
            (power_nonintegrable, flocking, power_nonintegrable && !flocking, None, None)
        }
    };
    let raabe_evidence = match phi {
        Some(phi) if n_agents > graph_length => {
            let rate = SecondOrderRate::new(n_agents, window, threshold, graph_length, phi, 0.0, 1.0)?;
            (0..=8).map(|k| 10f64.powi(k)).map(|n| (n, rate.raabe_term(n))).collect()
        }
        _ => Vec::new(),
    };
    Ok(FlockingVerdict {
        alignment_guaranteed: alignment,
        flocking_guaranteed: flocking,
        boundary_case: boundary,
        criterion_value: criterion,
        raabe_evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eta_values() {
        assert_relative_eq!(eta(3, 3.0, 0.5).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(eta(4, 4.0, 1.0 / 3.0).unwrap(), 0.25, max_relative = 1e-15);
        assert!(eta(3, 1.0, 1e-12).unwrap() < 1e-12);
        assert!(eta(3, 0.0, 0.5).is_err());
    }

    #[test]
    fn linear_certificate_n3() {
        let c = rate_linear(3, 3.0, 0.5, 2).unwrap();
        let gap = 0.5 / 9.0 * (-12.0f64).exp();
        assert_relative_eq!(c.one_minus_contraction, gap, max_relative = 1e-13);
        assert_relative_eq!(c.envelope_lead, 0.75 * gap * (1.0 + gap / 2.0), max_relative = 1e-12);
        assert_eq!(c.block_time, 6.0);
        assert!(rate_linear(3, 3.0, 0.5, 3).is_err());
        assert!(rate_linear(3, 3.0, 0.5, 0).is_err());
    }

    #[test]
    fn nonlinear_matches_linear_at_unit_bounds() {
        let a = rate_linear(5, 2.0, 0.3, 3).unwrap();
        let mut b = rate_nonlinear(5, 2.0, 0.3, 3, 1.0, 1.0).unwrap();
        b.family = a.family;
        assert_eq!(a, b);
        let c = rate_nonlinear(3, 3.0, 0.5, 2, 0.5, 1.0).unwrap();
        assert_relative_eq!(c.one_minus_contraction, 0.5 * 0.04 * (-12.0f64).exp(), max_relative = 1e-13);
        assert_eq!(rate_nonlinear(3, 3.0, 0.5, 2, 1.0, 2.0).unwrap().block_time, 3.0);
        assert!(rate_nonlinear(3, 3.0, 0.5, 2, 2.0, 1.0).is_err());
    }

    #[test]
    fn pe_and_isc_values() {
        let pe = rate_pe(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(pe.contraction, 1.0 - (-1.0f64).exp() / 6.0, max_relative = 1e-15);
        assert!(rate_pe(2, 1.0, 1.0, 1e-12, 1.0).unwrap().one_minus_contraction < 1e-12);
        let isc = rate_isc(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(isc.contraction, 1.0 - (-1.0f64).exp() / 3.0, max_relative = 1e-15);
        assert_eq!(isc.block_time, 4.0);
        assert_eq!(isc_block_windows(3).unwrap(), 128);
        assert_eq!(isc_block_windows(4).unwrap(), 3 * 4096);
        assert!(rate_isc(3, 1.0, 1.0, 1.0, 1.0).unwrap().vacuous);
        assert!(matches!(isc_block_windows(12), Err(Error::Overflow(_))));
    }

    #[test]
    fn envelope_branches_meet() {
        let c = rate_nonlinear(4, 1.0, 0.9, 1, 0.8, 1.7).unwrap();
        let (tau, delta) = (c.block_time, c.envelope_lead);
        assert_relative_eq!(phi_envelope(&c, tau - delta), 1.0, epsilon = 1e-12);
        assert_relative_eq!(phi_envelope(&c, tau), c.contraction, epsilon = 1e-12);
        assert_relative_eq!(diameter_envelope(&c, 2.0 * tau), c.contraction.powi(2), epsilon = 1e-12);
    }

    #[test]
    fn weight_bounds() {
        let x0 = AgentStates::scalar(&[0.0, 1.0, -0.5]).unwrap();
        let b = bounds_m(&SystemSpec::nonlinear(3, 1, LambdaForm::Unit, PhiForm::Unit).with_gain(1.0 / 3.0), &x0)
            .unwrap();
        assert_relative_eq!(b.lower, 1.0, max_relative = 1e-15);
        assert_relative_eq!(b.upper, 1.0, max_relative = 1e-15);
        let spec = SystemSpec::nonlinear(3, 1, LambdaForm::Unit, PhiForm::PowerLaw { beta: 0.5 });
        let b = bounds_m(&spec, &x0).unwrap();
        assert_relative_eq!(b.lower, 5f64.powf(-0.5), max_relative = 1e-15);
        assert_eq!(b.upper, 1.0);
    }

    #[test]
    fn second_order_sequence() {
        let r = SecondOrderRate::new(2, 1.0, 1.0, 1, PhiForm::Unit, 3.0, 2.0).unwrap();
        for n in 0..5 {
            assert_relative_eq!(r.factor(n), 1.0 - (-1.0f64).exp() / 6.0, max_relative = 1e-15);
        }
        let r = SecondOrderRate::new(4, 4.0, 1.0 / 3.0, 3, PhiForm::PowerLaw { beta: 0.1 }, 1.0, 1.0).unwrap();
        let f: Vec<f64> = r.factors().take(20).collect();
        assert!(f.windows(2).all(|w| w[1] >= w[0]));
        let frozen = SecondOrderRate::new(4, 4.0, 1.0 / 3.0, 3, PhiForm::PowerLaw { beta: 0.1 }, 1.0, 0.0).unwrap();
        assert_eq!(frozen.factor(0), frozen.factor(100));
    }

    #[test]
    fn classifier_examples() {
        let facts = KernelFacts::PowerLaw { beta: 0.1 };
        let v3 = classify_flocking(&facts, 3, 4, 4.0, 1.0 / 3.0).unwrap();
        assert!(v3.flocking_guaranteed && v3.alignment_guaranteed && !v3.boundary_case);
        let v5 = classify_flocking(&facts, 5, 6, 6.0, 0.2).unwrap();
        assert!(v5.alignment_guaranteed && !v5.flocking_guaranteed && v5.boundary_case);
        let v7 = classify_flocking(&facts, 7, 8, 8.0, 1.0 / 7.0).unwrap();
        assert!(!v7.alignment_guaranteed && !v7.flocking_guaranteed);
        assert_eq!(v7.label(), "no guarantee");
        let declared = KernelFacts::Declared { power_nonintegrable: true, flocking_trigger: false };
        assert_eq!(classify_flocking(&declared, 2, 3, 1.0, 0.5).unwrap().label(), "alignment");
    }
}

//! Fluctuation norms, entropy, entropy production, conservation residuals
//! and the decay envelopes of the flocking estimates.

use crate::error::{Error, Result};
use crate::integrate::{Dynamics, Trajectory};
use crate::models::Model;
use crate::state::{dist_sq, dot, norm, MixtureState, ReferenceTemperature};
use crate::topology::Topology;

/// Default relative slack when comparing a trajectory with an envelope.
pub const ENVELOPE_TOL: f64 = 1e-6;

/// The norms `𝒳 = ‖x‖`, `𝒱 = ‖u‖`, `ℰ = ‖E‖` over all particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fluctuations {
    pub x: f64,
    pub v: f64,
    pub e: f64,
}

pub fn fluctuations(state: &MixtureState, t0: ReferenceTemperature) -> Fluctuations {
    let e: f64 = (0..state.n()).map(|a| state.energy_fluctuation(a, t0).powi(2)).sum();
    Fluctuations {
        x: norm(state.positions()),
        v: norm(state.velocities()),
        e: e.sqrt(),
    }
}

/// `S = (1/n) Σ ln T_α`.
pub fn entropy(state: &MixtureState) -> Result<f64> {
    state.check_temperatures()?;
    Ok(state.temperatures().iter().map(|t| t.ln()).sum::<f64>() / state.n() as f64)
}

/// `S(after) − S(before)`, evaluated as `(1/n) Σ ln(1 + ΔT_α/T_α)`.
pub fn entropy_increment(after: &MixtureState, before: &MixtureState) -> f64 {
    let n = before.n();
    (0..n)
        .map(|a| {
            let t = before.temperature(a);
            ((after.temperature(a) - t) / t).ln_1p()
        })
        .sum::<f64>()
        / n as f64
}

/// Entropy production `dS/dt` for `S = (1/n) Σ ln T_α`.
///
/// This is `1/n` times the rate of `Σ ln T_α`:
/// - PB-CS: `(T0/2n²) Σ a [ |u_β/T_β − u_α/T_α|² + T0 (1/T_α − 1/T_β)² ]`
/// - KB-CS: `(1/2n²) Σ a/(T_αT_β) [ (T_α+T_β)|u_β − u_α|²/2 + (T_β − T_α)² ]`
pub fn entropy_production(
    model: Model,
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<f64> {
    state.check_temperatures()?;
    let w = topology.weight_matrix(state)?;
    let n = state.n();
    let t0 = t0.value();
    let mut sum = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let (ta, tb) = (state.temperature(a), state.temperature(b));
            let term = match model {
                Model::Pbcs => {
                    let dv: f64 = state
                        .u(a)
                        .iter()
                        .zip(state.u(b))
                        .map(|(ua, ub)| (ub / tb - ua / ta).powi(2))
                        .sum();
                    t0 * (dv + t0 * (1.0 / ta - 1.0 / tb).powi(2))
                }
                Model::Kbcs => {
                    let du = dist_sq(state.u(a), state.u(b));
                    ((ta + tb) * du / 2.0 + (tb - ta).powi(2)) / (ta * tb)
                }
            };
            sum += w[(a, b)] * term;
        }
    }
    // unordered pairs counted once, hence 1/n² rather than 1/(2n²)
    Ok(sum / (n * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `|Σ u_α|`.
    pub momentum: f64,
    /// `|(1/n) Σ (T_α + |u_α|²/2) − T0|`.
    pub energy: f64,
    /// `|Σ x_α|`.
    pub centroid: f64,
}

pub fn conservation_residuals(state: &MixtureState, t0: ReferenceTemperature) -> Residuals {
    Residuals {
        momentum: norm(&state.momentum()),
        energy: (state.mean_energy() - t0.value()).abs(),
        centroid: norm(&state.centroid_sum()),
    }
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub e: f64,
    pub entropy: f64,
    /// `dS/dt`, see [`entropy_production`].
    pub sigma: f64,
    pub mom_residual: f64,
    pub energy_residual: f64,
    pub centroid_residual: f64,
    pub min_temp: f64,
}

pub fn record(dynamics: &Dynamics, t: f64, state: &MixtureState) -> Result<DiagnosticsRecord> {
    let f = fluctuations(state, dynamics.t0);
    let r = conservation_residuals(state, dynamics.t0);
    Ok(DiagnosticsRecord {
        t,
        x: f.x,
        v: f.v,
        e: f.e,
        entropy: entropy(state)?,
        sigma: entropy_production(dynamics.model, state, &dynamics.topology, dynamics.t0)?,
        mom_residual: r.momentum,
        energy_residual: r.energy,
        centroid_residual: r.centroid,
        min_temp: state.min_temperature(),
    })
}

pub fn records(trajectory: &Trajectory) -> Result<Vec<DiagnosticsRecord>> {
    trajectory
        .iter()
        .map(|(t, s)| record(&trajectory.dynamics, t, s))
        .collect()
}

/// Scalar functionals constrained by the decay estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    X,
    V,
    E,
}

impl Functional {
    pub fn eval(self, state: &MixtureState, t0: ReferenceTemperature) -> f64 {
        let f = fluctuations(state, t0);
        match self {
            Functional::X => f.x,
            Functional::V => f.v,
            Functional::E => f.e,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Functional::X => "X",
            Functional::V => "V",
            Functional::E => "E",
        }
    }
}

/// `Λ0 = max(1 + 2𝒳0², 2𝒱0²)^{−λ}`, the lower-bound constant for metric weights.
pub fn lambda0(x0: f64, v0: f64, lambda: f64) -> f64 {
    (1.0 + 2.0 * x0 * x0).max(2.0 * v0 * v0).powf(-lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeKind {
    /// `e^{−rate·t}`.
    TypeAExponential { rate: f64 },
    /// `exp(−Λ0((1+t)^{1−2λ} − 1)/(1−2λ))` for `λ < 1/2`.
    TypeBSubexponential { lambda: f64, lambda0: f64 },
    /// `(1+t)^{−Λ0}`, the `λ = 1/2` case.
    TypeBAlgebraic { lambda0: f64 },
}

/// A decay bound `prefactor · g(t)` with `g(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub prefactor: f64,
}

impl Envelope {
    pub fn exponential(rate: f64, prefactor: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("envelope rate must be positive, got {rate}")));
        }
        Ok(Self {
            kind: EnvelopeKind::TypeAExponential { rate },
            prefactor,
        })
    }

    pub fn metric(lambda: f64, lambda0: f64, prefactor: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("Λ0 must lie in (0, 1], got {lambda0}")));
        }
        let kind = if lambda == 0.5 {
            EnvelopeKind::TypeBAlgebraic { lambda0 }
        } else if lambda > 0.0 && lambda < 0.5 {
            EnvelopeKind::TypeBSubexponential { lambda, lambda0 }
        } else {
            return Err(Error::InvalidParameter(format!("metric exponent {lambda} outside (0, 1/2]")));
        };
        Ok(Self { kind, prefactor })
    }

    /// The KB-CS flocking envelope for `functional` (V or E), with the rate
    /// taken from the minimum weight (Type A) or from `Λ0` (Type B).
    pub fn flocking(
        topology: &Topology,
        initial: &MixtureState,
        t0: ReferenceTemperature,
        functional: Functional,
    ) -> Result<Self> {
        let prefactor = functional.eval(initial, t0);
        match topology {
            Topology::ConstantSymmetric(_) => Self::exponential(topology.min_weight(initial)?, prefactor),
            Topology::Metric { lambda } => {
                let f = fluctuations(initial, t0);
                Self::metric(*lambda, lambda0(f.x, f.v, *lambda), prefactor)
            }
        }
    }

    /// Normalized shape `g(t)`.
    pub fn shape(&self, t: f64) -> f64 {
        match self.kind {
            EnvelopeKind::TypeAExponential { rate } => (-rate * t).exp(),
            EnvelopeKind::TypeBSubexponential { lambda, lambda0 } => {
                let p = 1.0 - 2.0 * lambda;
                (-lambda0 * ((1.0 + t).powf(p) - 1.0) / p).exp()
            }
            EnvelopeKind::TypeBAlgebraic { lambda0 } => (1.0 + t).powf(-lambda0),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.prefactor * self.shape(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// Largest `functional(t)/envelope(t)` over records.
    pub max_ratio: f64,
    pub worst_time: f64,
    /// First record whose ratio exceeds `1 + tol`.
    pub first_violation: Option<f64>,
    pub tol: f64,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn ratio(f: f64, bound: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f / bound
    }
}

pub fn envelope_check(
    trajectory: &Trajectory,
    envelope: &Envelope,
    functional: Functional,
    tol: f64,
) -> EnvelopeReport {
    let t0 = trajectory.dynamics.t0;
    let mut report = EnvelopeReport {
        max_ratio: 0.0,
        worst_time: 0.0,
        first_violation: None,
        tol,
    };
    for (t, s) in trajectory.iter() {
        let r = ratio(functional.eval(s, t0), envelope.value(t));
        if r > report.max_ratio {
            report.max_ratio = r;
            report.worst_time = t;
        }
        if report.first_violation.is_none() && !(r <= 1.0 + tol) {
            report.first_violation = Some(t);
        }
    }
    report
}

/// Smallest `C` with `functional(t) ≤ C · functional(0) · e^{−rate·t}` at every
/// record; the PB-CS estimates carry such an unspecified constant.
pub fn fit_envelope_constant(trajectory: &Trajectory, rate: f64, functional: Functional) -> f64 {
    let t0 = trajectory.dynamics.t0;
    let f0 = functional.eval(trajectory.initial(), t0);
    trajectory
        .iter()
        .map(|(t, s)| ratio(functional.eval(s, t0), f0 * (-rate * t).exp()))
        .fold(0.0, f64::max)
}

/// `d𝒱²/dt` for PB-CS:
/// `(T0/n) Σ a [ −|u_α|²/T_α + (1/T_α + 1/T_β) u_α·u_β − |u_β|²/T_β ]`.
pub fn velocity_variance_rate_pbcs(
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<f64> {
    state.check_temperatures()?;
    let w = topology.weight_matrix(state)?;
    let n = state.n();
    let mut sum = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (ta, tb) = (state.temperature(a), state.temperature(b));
            sum += w[(a, b)]
                * (-state.speed_sq(a) / ta + (1.0 / ta + 1.0 / tb) * dot(state.u(a), state.u(b))
                    - state.speed_sq(b) / tb);
        }
    }
    Ok(t0.value() * sum / n as f64)
}

/// `dℰ²/dt` for PB-CS: `(1/n) Σ a T0²/(T_αT_β) (E_α − E_β)(T_β − T_α)`.
pub fn energy_variance_rate_pbcs(
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<f64> {
    state.check_temperatures()?;
    let w = topology.weight_matrix(state)?;
    let n = state.n();
    let e = state.energy_fluctuations(t0);
    let tt = t0.value() * t0.value();
    let mut sum = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (ta, tb) = (state.temperature(a), state.temperature(b));
            sum += w[(a, b)] * tt / (ta * tb) * (e[a] - e[b]) * (tb - ta);
        }
    }
    Ok(sum / n as f64)
}

/// `−2 Σ (T0/T_α)|u_α|²`, the PB-CS rate of `𝒱²` under uniform unit weights.
pub fn uniform_dissipation_pbcs(state: &MixtureState, t0: ReferenceTemperature) -> Result<f64> {
    state.check_temperatures()?;
    Ok(-2.0
        * (0..state.n())
            .map(|a| t0.value() / state.temperature(a) * state.speed_sq(a))
            .sum::<f64>())
}

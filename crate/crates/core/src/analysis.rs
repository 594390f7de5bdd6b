//! Experiments built on the models: the closed-form KB-CS solution for
//! uniform weights, initial-rate probes, pair classification, detection of
//! non-monotone particles and the PB-CS/KB-CS deviation study.

use std::thread;

use crate::diagnostics::{energy_variance_rate_pbcs, velocity_variance_rate_pbcs};
use crate::error::{Error, Result};
use crate::integrate::{Dynamics, IntegratorConfig, Scheme, Trajectory, ADMISSIBILITY_TOL};
use crate::models::Model;
use crate::state::{norm, MixtureState, ReferenceTemperature};
use crate::topology::Topology;

/// Exact KB-CS state at time `t` for unit weights and rest-frame data:
/// `u(t) = u0 e^{−t}`, `E(t) = E0 e^{−t}`, `x(t) = x0 + u0 (1 − e^{−t})`.
pub fn closed_form_kbcs_uniform(
    initial: &MixtureState,
    t0: ReferenceTemperature,
    t: f64,
) -> Result<MixtureState> {
    let decay = (-t).exp();
    let x = initial
        .positions()
        .iter()
        .zip(initial.velocities())
        .map(|(x, u)| x + u * (1.0 - decay))
        .collect();
    let u = initial.velocities().iter().map(|u| u * decay).collect();
    let temp = (0..initial.n())
        .map(|a| {
            t0.value() + initial.energy_fluctuation(a, t0) * decay - 0.5 * initial.speed_sq(a) * decay * decay
        })
        .collect();
    let state = MixtureState::new(initial.d(), x, u, temp)?;
    state.check_temperatures()?;
    Ok(state)
}

/// `d𝒱²/dt` of PB-CS at `state`.
pub fn initial_velocity_derivative_pbcs(
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<f64> {
    velocity_variance_rate_pbcs(state, topology, t0)
}

/// `dℰ²/dt` of PB-CS at `state`.
pub fn initial_energy_derivative_pbcs(
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<f64> {
    energy_variance_rate_pbcs(state, topology, t0)
}

/// Ordered pairs split by the sign of `(E_α − E_β)(T_β − T_α)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnergyPairs {
    /// Strictly positive product; zero-based indices.
    pub plus: Vec<(usize, usize)>,
    /// All remaining pairs, including the diagonal.
    pub minus: Vec<(usize, usize)>,
}

pub fn classify_energy_pairs(state: &MixtureState, t0: ReferenceTemperature) -> EnergyPairs {
    let e = state.energy_fluctuations(t0);
    let mut out = EnergyPairs::default();
    for a in 0..state.n() {
        for b in 0..state.n() {
            let p = (e[a] - e[b]) * (state.temperature(b) - state.temperature(a));
            if p > 0.0 {
                out.plus.push((a, b));
            } else {
                out.minus.push((a, b));
            }
        }
    }
    out
}

/// Rate of change of `f` along the flow at `state`, by central differences
/// of RK4 flows forward and backward, with one Richardson step.
///
/// The step is a thousandth of the fastest local timescale, at most `1e-2`.
pub fn flow_rate<F>(dynamics: &Dynamics, state: &MixtureState, f: F) -> Result<f64>
where
    F: Fn(&MixtureState) -> f64,
{
    flow_rate_of_increment(dynamics, state, |after, before| f(after) - f(before))
}

/// Like [`flow_rate`], but takes the increment `f(after) − f(before)`
/// directly so that functionals with a large offset, such as the entropy,
/// can be differenced without cancellation.
pub fn flow_rate_of_increment<G>(dynamics: &Dynamics, state: &MixtureState, increment: G) -> Result<f64>
where
    G: Fn(&MixtureState, &MixtureState) -> f64,
{
    let r = dynamics.rhs(state)?;
    let mut tau = f64::INFINITY;
    for a in 0..state.n() {
        if r.dtemp(a) != 0.0 {
            tau = tau.min(state.temperature(a) / r.dtemp(a).abs());
        }
        let (u, du) = (norm(state.u(a)), norm(r.du(a)));
        if du != 0.0 && u != 0.0 {
            tau = tau.min(u / du);
        }
    }
    let h = (1e-3 * tau).min(1e-2);
    let flow = |h: f64| -> Result<MixtureState> {
        let mid = dynamics.step_by(state, Scheme::Rk4, 0.0, h / 2.0)?;
        dynamics.step_by(&mid, Scheme::Rk4, h / 2.0, h / 2.0)
    };
    let central = |h: f64| -> Result<f64> {
        Ok((increment(&flow(h)?, state) - increment(&flow(-h)?, state)) / (2.0 * h))
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Per-particle scalar tracked by [`detect_nonmonotonicity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerParticle {
    Speed,
    Energy,
    Temperature,
}

impl PerParticle {
    pub fn eval(self, state: &MixtureState, t0: ReferenceTemperature, alpha: usize) -> f64 {
        match self {
            PerParticle::Speed => norm(state.u(alpha)),
            PerParticle::Energy => state.energy_fluctuation(alpha, t0),
            PerParticle::Temperature => state.temperature(alpha),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PerParticle::Speed => "|u|",
            PerParticle::Energy => "E",
            PerParticle::Temperature => "T",
        }
    }
}

/// A particle whose functional rises over `[start, end]` and later falls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonMonotone {
    pub particle: usize,
    pub start: f64,
    pub end: f64,
}

pub fn detect_nonmonotonicity(trajectory: &Trajectory, functional: PerParticle) -> Result<Vec<NonMonotone>> {
    if trajectory.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "non-monotonicity scan needs at least 3 records, got {}",
            trajectory.len()
        )));
    }
    let t0 = trajectory.dynamics.t0;
    let mut out = Vec::new();
    for alpha in 0..trajectory.initial().n() {
        let v: Vec<f64> = trajectory.states.iter().map(|s| functional.eval(s, t0, alpha)).collect();
        let Some(rise) = (0..v.len() - 1).find(|&k| v[k + 1] > v[k]) else {
            continue;
        };
        let Some(peak) = (rise + 1..v.len() - 1).find(|&k| v[k + 1] < v[k]) else {
            continue;
        };
        out.push(NonMonotone {
            particle: alpha,
            start: trajectory.times[rise],
            end: trajectory.times[peak],
        });
    }
    Ok(out)
}

/// Smallest `ε` for which the data satisfy the smallness conditions
/// `|u_α| ≤ ε/2`, `|T_α − T0| ≤ εT0/2`, `Σ(|u_α|²/2 + |T_α − T0|²) ≤ ε²/8`.
pub fn smallness_epsilon(state: &MixtureState, t0: ReferenceTemperature) -> f64 {
    let t0 = t0.value();
    let mut eps: f64 = 0.0;
    let mut l2 = 0.0;
    for a in 0..state.n() {
        let dt = state.temperature(a) - t0;
        eps = eps.max(2.0 * norm(state.u(a))).max(2.0 * dt.abs() / t0);
        l2 += 0.5 * state.speed_sq(a) + dt * dt;
    }
    eps.max((8.0 * l2).sqrt())
}

/// Data count as small when [`smallness_epsilon`] is below this value, which
/// keeps every temperature within `(T0/2, 3T0/2)`.
pub const SMALLNESS_LIMIT: f64 = 1.0;

/// Rest-frame perturbation of the equilibrium at `t0`:
/// `u = ε·u_pattern`, `T = t0(1 + ε·t_pattern) + c` with `c` restoring the
/// mean total energy to `t0`. Patterns are centred before use.
pub fn perturb_equilibrium(
    positions: &[f64],
    d: usize,
    t0: f64,
    epsilon: f64,
    u_pattern: &[f64],
    t_pattern: &[f64],
) -> Result<MixtureState> {
    let n = t_pattern.len();
    let u = u_pattern.iter().map(|p| epsilon * p).collect();
    let temp = t_pattern.iter().map(|q| t0 * (1.0 + epsilon * q)).collect();
    let s = MixtureState::new(d, positions.to_vec(), u, temp)?.normalize_frame();
    let shift = t0 - s.mean_energy();
    let temp = s.temperatures().iter().map(|t| t + shift).collect();
    debug_assert_eq!(s.n(), n);
    MixtureState::new(d, s.positions().to_vec(), s.velocities().to_vec(), temp)
}

/// Side-by-side PB-CS and KB-CS runs from common data.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    /// `[record][particle]` max-norm of `x^P − x^K`.
    pub dx: Vec<Vec<f64>>,
    pub du: Vec<Vec<f64>>,
    pub de: Vec<Vec<f64>>,
    /// Row averages `ã_α = (1/n) Σ_β a_{αβ}`.
    pub tilde_a: Vec<f64>,
    pub min_weight: f64,
    /// Smallness parameter of the initial data.
    pub epsilon: f64,
    pub admissible: bool,
    pub small: bool,
    /// Smallest constants with `|Δu_α| ≤ e^{−ã_α t}|Δu_α(0)| + C_u ε e^{−a̲t/2}`
    /// (and the same for `E`) at every record.
    pub c_u: f64,
    pub c_e: f64,
    /// Whether the `e^{a̲t/2}`-weighted deviations stay bounded: their
    /// maximum over the second half of the run does not exceed the first
    /// half's. `None` when the data are inadmissible or not small.
    pub bounded: Option<bool>,
    pub pbcs: Trajectory,
    pub kbcs: Trajectory,
}

impl DeviationReport {
    pub fn sup_velocity_deviation(&self) -> f64 {
        sup(&self.du)
    }

    pub fn sup_energy_deviation(&self) -> f64 {
        sup(&self.de)
    }

    /// `sup_{t,α} |Δu_α(t)| e^{rate·t}`.
    pub fn weighted_velocity_sup(&self, rate: f64) -> f64 {
        weighted_sup(&self.times, &self.du, rate, |_| true)
    }

    pub fn terminal(&self) -> (f64, f64, f64) {
        let last = self.times.len() - 1;
        let m = |v: &Vec<Vec<f64>>| v[last].iter().copied().fold(0.0, f64::max);
        (m(&self.dx), m(&self.du), m(&self.de))
    }
}

fn sup(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().copied().fold(0.0, f64::max)
}

fn weighted_sup(times: &[f64], v: &[Vec<f64>], rate: f64, keep: impl Fn(f64) -> bool) -> f64 {
    times
        .iter()
        .zip(v)
        .filter(|(t, _)| keep(**t))
        .flat_map(|(t, row)| row.iter().map(move |d| d * (rate * t).exp()))
        .fold(0.0, f64::max)
}

fn fitted_constant(times: &[f64], dev: &[Vec<f64>], tilde_a: &[f64], floor: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let mut c: f64 = 0.0;
    for (t, row) in times.iter().zip(dev) {
        for (alpha, d) in row.iter().enumerate() {
            let excess = d - (-tilde_a[alpha] * t).exp() * dev[0][alpha];
            c = c.max(excess / (eps * (-floor * t / 2.0).exp()));
        }
    }
    c
}

/// Per-record, per-particle max-norm gaps `(x, u, E)` between two runs on
/// the same time grid.
pub fn deviation_sequences(p: &Trajectory, k: &Trajectory) -> Result<DeviationSequences> {
    if p.times != k.times {
        return Err(Error::InvalidParameter("trajectories use different time grids".into()));
    }
    let n = p.initial().n();
    let maxdiff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut out = DeviationSequences::default();
    for (sp, sk) in p.states.iter().zip(&k.states) {
        out.dx.push((0..n).map(|a| maxdiff(sp.x(a), sk.x(a))).collect());
        out.du.push((0..n).map(|a| maxdiff(sp.u(a), sk.u(a))).collect());
        out.de.push((0..n).map(|a| (sp.total_energy(a) - sk.total_energy(a)).abs()).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviationSequences {
    pub dx: Vec<Vec<f64>>,
    pub du: Vec<Vec<f64>>,
    pub de: Vec<Vec<f64>>,
}

impl DeviationReport {
    /// Builds the report from a PB-CS and a KB-CS run that share initial
    /// data, weights and time grid.
    pub fn from_trajectories(pbcs: Trajectory, kbcs: Trajectory) -> Result<Self> {
        if pbcs.dynamics.model != Model::Pbcs || kbcs.dynamics.model != Model::Kbcs {
            return Err(Error::InvalidParameter("expected a PB-CS run and a KB-CS run".into()));
        }
        let topology = &pbcs.dynamics.topology;
        if !matches!(topology, Topology::ConstantSymmetric(_)) {
            return Err(Error::InvalidTopology(
                "the deviation study needs constant weights".into(),
            ));
        }
        let initial = pbcs.initial();
        let t0 = pbcs.dynamics.t0;
        let admissible = initial.validate_initial(t0, ADMISSIBILITY_TOL).is_admissible();
        let epsilon = smallness_epsilon(initial, t0);
        let small = epsilon < SMALLNESS_LIMIT;
        let DeviationSequences { dx, du, de } = deviation_sequences(&pbcs, &kbcs)?;
        let tilde_a = topology.row_average(initial)?;
        let min_weight = topology.min_weight(initial)?;
        let times = pbcs.times.clone();
        let c_u = fitted_constant(&times, &du, &tilde_a, min_weight, epsilon);
        let c_e = fitted_constant(&times, &de, &tilde_a, min_weight, epsilon);
        let bounded = (admissible && small).then(|| {
            let half = times.last().copied().unwrap_or(0.0) / 2.0;
            [&du, &de].iter().all(|dev| {
                let early = weighted_sup(&times, dev, min_weight / 2.0, |t| t <= half);
                let late = weighted_sup(&times, dev, min_weight / 2.0, |t| t > half);
                late <= early
            })
        });
        Ok(Self {
            times,
            dx,
            du,
            de,
            tilde_a,
            min_weight,
            epsilon,
            admissible,
            small,
            c_u,
            c_e,
            bounded,
            pbcs,
            kbcs,
        })
    }
}

/// Integrates PB-CS and KB-CS side by side from common data and compares them.
pub fn deviation_experiment(
    initial: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
    config: &IntegratorConfig,
) -> Result<DeviationReport> {
    if !matches!(topology, Topology::ConstantSymmetric(_)) {
        return Err(Error::InvalidTopology(
            "the deviation study needs constant weights".into(),
        ));
    }
    let pb = Dynamics::new(Model::Pbcs, topology.clone(), t0);
    let kb = pb.with_model(Model::Kbcs);
    let (pbcs, kbcs) = thread::scope(|s| {
        let p = s.spawn(|| pb.integrate(initial, config));
        let k = kb.integrate(initial, config);
        (p.join().expect("PB-CS integration thread panicked"), k)
    });
    DeviationReport::from_trajectories(pbcs?, kbcs?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::rhs_kbcs;
    use approx::assert_relative_eq;

    fn case_a() -> MixtureState {
        MixtureState::from_1d(&[0.2108, -0.35, 0.1392], &[1.0, 2.0, -3.0], &[3.0, 0.01, 3.0])
            .unwrap()
            .normalize_frame()
    }

    #[test]
    fn closed_form_endpoints() {
        let s = case_a();
        let t0 = s.derive_t0().unwrap();
        assert_eq!(closed_form_kbcs_uniform(&s, t0, 0.0).unwrap().velocities(), s.velocities());
        let late = closed_form_kbcs_uniform(&s, t0, 60.0).unwrap();
        for a in 0..3 {
            assert_relative_eq!(late.x(a)[0], s.x(a)[0] + s.u(a)[0], epsilon = 1e-15);
            assert_relative_eq!(late.temperature(a), t0.value(), epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_solves_kbcs() {
        let s = case_a();
        let t0 = s.derive_t0().unwrap();
        for t in [0.1, 0.7, 2.5] {
            let c = closed_form_kbcs_uniform(&s, t0, t).unwrap();
            let r = rhs_kbcs(&c, &Topology::uniform(3), t0).unwrap();
            let decay = (-t).exp();
            for a in 0..3 {
                let u0 = s.u(a)[0];
                assert_relative_eq!(r.du(a)[0], -u0 * decay, epsilon = 1e-12);
                let dtemp = -s.energy_fluctuation(a, t0) * decay + u0 * u0 * decay * decay;
                assert_relative_eq!(r.dtemp(a), dtemp, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn prop53_pair_sets() {
        let s = MixtureState::from_1d(&[0.0; 3], &[1.0, -2.0, 1.0], &[2.0, 1.0, 1.0]).unwrap();
        let pairs = classify_energy_pairs(&s, s.derive_t0().unwrap());
        assert!(pairs.plus.contains(&(0, 1)) && pairs.plus.contains(&(1, 0)));
        for p in [(0, 2), (1, 2)] {
            assert!(pairs.minus.contains(&p));
        }
        assert_eq!(pairs.plus.len() + pairs.minus.len(), 9);
    }

    #[test]
    fn equal_temperatures_have_no_positive_pairs() {
        let s = MixtureState::from_1d(&[0.0; 3], &[1.0, -2.0, 1.0], &[1.0; 3]).unwrap();
        assert!(classify_energy_pairs(&s, s.derive_t0().unwrap()).plus.is_empty());
    }

    #[test]
    fn smallness_of_equilibrium_is_zero() {
        let s = MixtureState::from_1d(&[0.0; 2], &[0.0; 2], &[2.0; 2]).unwrap();
        assert_eq!(smallness_epsilon(&s, s.derive_t0().unwrap()), 0.0);
    }

    #[test]
    fn perturbation_is_admissible() {
        let s = perturb_equilibrium(&[-1.0, 0.0, 1.0], 1, 1.0, 0.01, &[1.0, -0.5, -0.5], &[0.5, 0.0, -0.5]).unwrap();
        let t0 = ReferenceTemperature::new(1.0).unwrap();
        assert!(s.validate_initial(t0, 1e-14).is_admissible());
        assert!(smallness_epsilon(&s, t0) < SMALLNESS_LIMIT);
    }

    #[test]
    fn equilibrium_deviation_is_zero() {
        let s = MixtureState::from_1d(&[-1.0, 0.0, 1.0], &[0.0; 3], &[1.0; 3]).unwrap();
        let t0 = s.derive_t0().unwrap();
        let r = deviation_experiment(&s, &Topology::uniform(3), t0, &IntegratorConfig::rk4(0.01, 1.0, 10)).unwrap();
        assert_eq!(r.sup_velocity_deviation(), 0.0);
        assert_eq!(r.sup_energy_deviation(), 0.0);
        assert_eq!(r.terminal(), (0.0, 0.0, 0.0));
        assert_eq!(r.bounded, Some(true));
    }

    #[test]
    fn deviation_rejects_metric_weights() {
        let s = case_a();
        let t0 = s.derive_t0().unwrap();
        let top = Topology::metric(0.5).unwrap();
        assert!(deviation_experiment(&s, &top, t0, &IntegratorConfig::rk4(0.01, 1.0, 1)).is_err());
    }

    #[test]
    fn constant_trajectory_has_no_flags() {
        let s = MixtureState::from_1d(&[-1.0, 1.0], &[0.0; 2], &[1.0; 2]).unwrap();
        let dyns = Dynamics::new(Model::Pbcs, Topology::uniform(2), s.derive_t0().unwrap());
        let traj = dyns.integrate(&s, &IntegratorConfig::rk4(0.1, 1.0, 1)).unwrap();
        for f in [PerParticle::Speed, PerParticle::Energy, PerParticle::Temperature] {
            assert!(detect_nonmonotonicity(&traj, f).unwrap().is_empty());
        }
        let short = dyns.integrate(&s, &IntegratorConfig::rk4(0.5, 1.0, 2)).unwrap();
        assert!(detect_nonmonotonicity(&short, PerParticle::Speed).is_err());
    }
}

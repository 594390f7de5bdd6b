//! Fixed-step time integration.
//!
//! Steps are taken in the variables `(x, u, e)` with `e_α = T_α + |u_α|²/2`.
//! Total energy `Σ e_α` is then a linear invariant that explicit Runge-Kutta
//! schemes preserve to rounding; stepping `T` directly would not, because
//! `|u|²` is quadratic. Temperatures are recovered after every stage and
//! checked against the floor.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::{self, rates, Model, StateDerivative};
use crate::state::{dot, MixtureState, ReferenceTemperature, TEMPERATURE_FLOOR};
use crate::topology::Topology;

/// Initial data must satisfy the rest-frame constraints to this tolerance.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "euler",
            Scheme::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Scheme::Rk4),
            "euler" | "explicit-euler" => Ok(Scheme::ExplicitEuler),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored records; `t = 0` and `t = t_end` are always stored.
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            scheme,
            dt,
            t_end,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unchecked constructor for literals; [`Dynamics::integrate`] validates.
    pub fn rk4(dt: f64, t_end: f64, record_every: usize) -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt,
            t_end,
            record_every,
        }
    }

    pub fn euler(dt: f64, t_end: f64, record_every: usize) -> Self {
        Self {
            scheme: Scheme::ExplicitEuler,
            ..Self::rk4(dt, t_end, record_every)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened if `dt` does not divide `t_end`.
    pub fn steps(&self) -> usize {
        if self.t_end == 0.0 {
            return 0;
        }
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Time reached after `k` steps.
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.steps() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

/// A model together with its weights and reference temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub model: Model,
    pub topology: Topology,
    pub t0: ReferenceTemperature,
}

/// Recorded states of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dynamics: Dynamics,
    pub config: IntegratorConfig,
    pub times: Vec<f64>,
    pub states: Vec<MixtureState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &MixtureState {
        &self.states[0]
    }

    pub fn last(&self) -> &MixtureState {
        self.states.last().expect("trajectory holds the initial record")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &MixtureState)> {
        self.times.iter().copied().zip(&self.states)
    }
}

/// Working variables `(x, u, e)` plus scratch space.
struct Phase {
    n: usize,
    d: usize,
    x: Vec<f64>,
    u: Vec<f64>,
    e: Vec<f64>,
}

impl Phase {
    fn from_state(s: &MixtureState) -> Self {
        Self {
            n: s.n(),
            d: s.d(),
            x: s.positions().to_vec(),
            u: s.velocities().to_vec(),
            e: (0..s.n()).map(|a| s.total_energy(a)).collect(),
        }
    }

    fn temperatures(&self) -> Vec<f64> {
        let d = self.d;
        (0..self.n)
            .map(|a| self.e[a] - 0.5 * dot(&self.u[a * d..(a + 1) * d], &self.u[a * d..(a + 1) * d]))
            .collect()
    }

    fn to_state(&self) -> MixtureState {
        MixtureState::from_parts(self.n, self.d, self.x.clone(), self.u.clone(), self.temperatures())
    }
}

struct Slope {
    dx: Vec<f64>,
    du: Vec<f64>,
    de: Vec<f64>,
}

impl Dynamics {
    pub fn new(model: Model, topology: Topology, t0: ReferenceTemperature) -> Self {
        Self { model, topology, t0 }
    }

    pub fn with_model(&self, model: Model) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    pub fn rhs(&self, state: &MixtureState) -> Result<StateDerivative> {
        models::rhs(self.model, state, &self.topology, self.t0)
    }

    fn slope(&self, y: &Phase, w: &mut DMatrix<f64>, time: f64, stage: usize) -> Result<Slope> {
        let temp = self.checked_temperatures(y, time, stage)?;
        self.topology.fill_weights(y.d, &y.x, w);
        let mut du = vec![0.0; y.n * y.d];
        let mut de = vec![0.0; y.n];
        rates(self.model, w, self.t0.value(), y.d, &y.u, &temp, &mut du, &mut de);
        Ok(Slope {
            dx: y.u.clone(),
            du,
            de,
        })
    }

    fn checked_temperatures(&self, y: &Phase, time: f64, stage: usize) -> Result<Vec<f64>> {
        let temp = y.temperatures();
        match temp.iter().position(|&t| !(t > TEMPERATURE_FLOOR)) {
            Some(a) => Err(Error::Integration {
                time,
                stage,
                particle: a,
                value: temp[a],
            }),
            None => Ok(temp),
        }
    }

    /// Advances `y` by `h`. Stages are numbered from 1; stage 0 denotes the
    /// updated state.
    fn advance(&self, y: &mut Phase, w: &mut DMatrix<f64>, scheme: Scheme, t: f64, h: f64) -> Result<()> {
        match scheme {
            Scheme::ExplicitEuler => {
                let k = self.slope(y, w, t, 1)?;
                axpy(&mut y.x, h, &k.dx);
                axpy(&mut y.u, h, &k.du);
                axpy(&mut y.e, h, &k.de);
            }
            Scheme::Rk4 => {
                let k1 = self.slope(y, w, t, 1)?;
                let y2 = offset(y, 0.5 * h, &k1);
                let k2 = self.slope(&y2, w, t + 0.5 * h, 2)?;
                let y3 = offset(y, 0.5 * h, &k2);
                let k3 = self.slope(&y3, w, t + 0.5 * h, 3)?;
                let y4 = offset(y, h, &k3);
                let k4 = self.slope(&y4, w, t + h, 4)?;
                combine(&mut y.x, h, &k1.dx, &k2.dx, &k3.dx, &k4.dx);
                combine(&mut y.u, h, &k1.du, &k2.du, &k3.du, &k4.du);
                combine(&mut y.e, h, &k1.de, &k2.de, &k3.de, &k4.de);
            }
        }
        self.checked_temperatures(y, t + h, 0).map(|_| ())
    }

    /// One step of size `h` (negative `h` steps backward) starting at time `t`.
    pub fn step_by(&self, state: &MixtureState, scheme: Scheme, t: f64, h: f64) -> Result<MixtureState> {
        self.topology.check_size(state.n())?;
        let mut y = Phase::from_state(state);
        self.checked_temperatures(&y, t, 0)?;
        let mut w = DMatrix::zeros(state.n(), state.n());
        self.advance(&mut y, &mut w, scheme, t, h)?;
        Ok(y.to_state())
    }

    pub fn step(&self, state: &MixtureState, config: &IntegratorConfig) -> Result<MixtureState> {
        config.validate()?;
        self.step_by(state, config.scheme, 0.0, config.dt)
    }

    pub fn integrate(&self, initial: &MixtureState, config: &IntegratorConfig) -> Result<Trajectory> {
        config.validate()?;
        self.topology.check_size(initial.n())?;
        let report = initial.validate_initial(self.t0, ADMISSIBILITY_TOL);
        if !report.is_admissible() {
            return Err(Error::InvalidParameter(format!(
                "initial data violate the rest-frame constraints: {:?}",
                report.violations()
            )));
        }
        let mut y = Phase::from_state(initial);
        self.checked_temperatures(&y, 0.0, 0)?;
        let mut w = DMatrix::zeros(initial.n(), initial.n());
        let steps = config.steps();
        let mut times = vec![0.0];
        let mut states = vec![initial.clone()];
        for k in 0..steps {
            let t = config.time_at(k);
            let h = config.time_at(k + 1) - t;
            self.advance(&mut y, &mut w, config.scheme, t, h)?;
            if (k + 1) % config.record_every == 0 || k + 1 == steps {
                times.push(config.time_at(k + 1));
                states.push(y.to_state());
            }
        }
        Ok(Trajectory {
            dynamics: self.clone(),
            config: *config,
            times,
            states,
        })
    }
}

/// Free-function form of [`Dynamics::step`].
pub fn step(
    model: Model,
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
    config: &IntegratorConfig,
) -> Result<MixtureState> {
    Dynamics::new(model, topology.clone(), t0).step(state, config)
}

/// Free-function form of [`Dynamics::integrate`].
pub fn integrate(
    model: Model,
    initial: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    Dynamics::new(model, topology.clone(), t0).integrate(initial, config)
}

fn axpy(y: &mut [f64], h: f64, k: &[f64]) {
    y.iter_mut().zip(k).for_each(|(v, s)| *v += h * s);
}

fn offset(y: &Phase, h: f64, k: &Slope) -> Phase {
    let shift = |base: &[f64], s: &[f64]| base.iter().zip(s).map(|(b, v)| b + h * v).collect();
    Phase {
        n: y.n,
        d: y.d,
        x: shift(&y.x, &k.dx),
        u: shift(&y.u, &k.du),
        e: shift(&y.e, &k.de),
    }
}

fn combine(y: &mut [f64], h: f64, k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]) {
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Max-norm distance over positions, velocities and temperatures.
pub fn state_distance(a: &MixtureState, b: &MixtureState) -> f64 {
    let pairs = a
        .positions()
        .iter()
        .zip(b.positions())
        .chain(a.velocities().iter().zip(b.velocities()))
        .chain(a.temperatures().iter().zip(b.temperatures()));
    pairs.map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Reference solution at `t_end` for [`convergence_order`].
#[derive(Debug, Clone)]
pub enum Reference {
    /// A known exact state.
    Exact(MixtureState),
    /// RK4 with a step eight times smaller than the smallest probed step.
    Refined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    /// Least-squares slope of `ln(error)` against `ln(dt)`.
    pub slope: f64,
    /// `(dt, error at t_end)` pairs.
    pub errors: Vec<(f64, f64)>,
}

pub fn convergence_order(
    dynamics: &Dynamics,
    initial: &MixtureState,
    scheme: Scheme,
    t_end: f64,
    dt_sequence: &[f64],
    reference: &Reference,
) -> Result<ConvergenceFit> {
    if dt_sequence.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "order fit needs at least 3 step sizes, got {}",
            dt_sequence.len()
        )));
    }
    let target = match reference {
        Reference::Exact(s) => s.clone(),
        Reference::Refined => {
            let finest = dt_sequence.iter().copied().fold(f64::INFINITY, f64::min) / 8.0;
            let cfg = IntegratorConfig::new(Scheme::Rk4, finest, t_end, usize::MAX)?;
            dynamics.integrate(initial, &cfg)?.last().clone()
        }
    };
    let mut errors = Vec::with_capacity(dt_sequence.len());
    for &dt in dt_sequence {
        let cfg = IntegratorConfig::new(scheme, dt, t_end, usize::MAX)?;
        let end = dynamics.integrate(initial, &cfg)?;
        errors.push((dt, state_distance(end.last(), &target)));
    }
    if let Some(&(dt, _)) = errors.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "zero error at dt = {dt}; the reference is reproduced exactly"
        )));
    }
    let pts: Vec<(f64, f64)> = errors.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(ConvergenceFit {
        slope: sxy / sxx,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_a() -> MixtureState {
        MixtureState::from_1d(&[0.2108, -0.35, 0.1392], &[1.0, 2.0, -3.0], &[3.0, 0.01, 3.0])
            .unwrap()
            .normalize_frame()
    }

    fn uniform_kbcs(s: &MixtureState) -> Dynamics {
        Dynamics::new(Model::Kbcs, Topology::uniform(s.n()), s.derive_t0().unwrap())
    }

    #[test]
    fn equilibrium_unchanged_by_step() {
        let s = MixtureState::from_1d(&[0.5, -0.5], &[0.0, 0.0], &[1.5, 1.5]).unwrap();
        for model in Model::ALL {
            let dyns = Dynamics::new(model, Topology::uniform(2), s.derive_t0().unwrap());
            assert_eq!(dyns.step(&s, &IntegratorConfig::rk4(0.1, 1.0, 1)).unwrap(), s);
        }
    }

    #[test]
    fn euler_step_on_decoupled_system() {
        let s = case_a();
        let dt = 0.01;
        let next = uniform_kbcs(&s).step(&s, &IntegratorConfig::euler(dt, 1.0, 1)).unwrap();
        for a in 0..3 {
            assert_relative_eq!(next.u(a)[0], s.u(a)[0] * (1.0 - dt), max_relative = 1e-15);
        }
    }

    #[test]
    fn rk4_step_on_decoupled_system() {
        let s = case_a();
        let dt = 0.05;
        let next = uniform_kbcs(&s).step(&s, &IntegratorConfig::rk4(dt, 1.0, 1)).unwrap();
        for a in 0..3 {
            let exact = s.u(a)[0] * (-dt).exp();
            assert!((next.u(a)[0] - exact).abs() <= 3.0 * dt.powi(5) / 120.0);
        }
    }

    #[test]
    fn zero_horizon_keeps_initial_record() {
        let s = case_a();
        let traj = uniform_kbcs(&s).integrate(&s, &IntegratorConfig::rk4(1e-3, 0.0, 1)).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.states, vec![s]);
    }

    #[test]
    fn record_times() {
        let s = case_a();
        let traj = uniform_kbcs(&s).integrate(&s, &IntegratorConfig::rk4(0.1, 1.05, 3)).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 1.05);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.0, 1.0, 1).is_err());
        assert!(IntegratorConfig::new(Scheme::Rk4, 2.0, 1.0, 1).is_err());
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.1, 1.0, 0).is_err());
        assert!(IntegratorConfig::new(Scheme::Rk4, 0.1, -1.0, 1).is_err());
        assert_eq!(IntegratorConfig::rk4(0.001, 10.0, 1).steps(), 10_000);
        assert_eq!("Euler".parse::<Scheme>().unwrap(), Scheme::ExplicitEuler);
    }

    #[test]
    fn inadmissible_initial_data_rejected() {
        let s = MixtureState::from_1d(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]).unwrap();
        let dyns = Dynamics::new(Model::Kbcs, Topology::uniform(2), s.derive_t0().unwrap());
        assert!(dyns.integrate(&s, &IntegratorConfig::rk4(0.1, 1.0, 1)).is_err());
    }

    #[test]
    fn cold_particle_failure_names_particle_and_stage() {
        // PB-CS drains the cold particle 2 at rate ~T0²/T_2; a coarse step overshoots.
        let s = case_a();
        let dyns = Dynamics::new(Model::Pbcs, Topology::uniform(3), s.derive_t0().unwrap());
        match dyns.integrate(&s, &IntegratorConfig::rk4(0.1, 1.0, 1)) {
            Err(Error::Integration { particle, time, .. }) => {
                assert!(particle < 3);
                assert!(time <= 0.1 + 1e-12);
            }
            other => panic!("expected an integration error, got {other:?}"),
        }
    }

    #[test]
    fn order_fit_needs_three_points() {
        let s = case_a();
        let err = convergence_order(&uniform_kbcs(&s), &s, Scheme::Rk4, 1.0, &[0.1], &Reference::Refined);
        assert!(err.is_err());
    }
}

//! Dynamical state of an n-particle mixture and its initial-data constraints.
//!
//! Units are normalized (m = ρ = 1, k_B = 2/3), so the specific total energy of
//! particle α is `T_α + |u_α|²/2` and the flocking temperature is its mean.

use rand::Rng;

use crate::error::{Error, Result};

/// Temperatures at or below this value are treated as degenerate.
pub const TEMPERATURE_FLOOR: f64 = 1e-12;

/// Positions, diffusion velocities and temperatures of `n` particles in `R^d`.
///
/// Vectors are stored row-major: particle α occupies `[α*d, (α+1)*d)`.
/// Temperatures are only required to be finite at construction so that
/// inadmissible data can be reported on; every operation that divides by a
/// temperature checks it against [`TEMPERATURE_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    n: usize,
    d: usize,
    x: Vec<f64>,
    u: Vec<f64>,
    temp: Vec<f64>,
}

impl MixtureState {
    /// Builds a state from flat row-major position and velocity buffers.
    pub fn new(d: usize, x: Vec<f64>, u: Vec<f64>, temp: Vec<f64>) -> Result<Self> {
        let n = temp.len();
        if n < 2 {
            return Err(Error::TooFewParticles(n));
        }
        if d == 0 {
            return Err(Error::Dimension("spatial dimension must be at least 1".into()));
        }
        if x.len() != n * d {
            return Err(Error::Dimension(format!(
                "positions have {} components, expected {}",
                x.len(),
                n * d
            )));
        }
        if u.len() != n * d {
            return Err(Error::Dimension(format!(
                "velocities have {} components, expected {}",
                u.len(),
                n * d
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("positions"));
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("velocities"));
        }
        if !temp.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("temperatures"));
        }
        Ok(Self { n, d, x, u, temp })
    }

    /// Builds a state from per-particle rows.
    pub fn from_rows(x: &[Vec<f64>], u: &[Vec<f64>], temp: &[f64]) -> Result<Self> {
        let n = temp.len();
        if x.len() != n || u.len() != n {
            return Err(Error::Dimension(format!(
                "{} position rows and {} velocity rows for {} temperatures",
                x.len(),
                u.len(),
                n
            )));
        }
        let d = x.first().map_or(0, Vec::len);
        if let Some(row) = x.iter().chain(u.iter()).find(|r| r.len() != d) {
            return Err(Error::Dimension(format!(
                "row of length {} where {} was expected",
                row.len(),
                d
            )));
        }
        Self::new(d, x.concat(), u.concat(), temp.to_vec())
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(x: &[f64], u: &[f64], temp: &[f64]) -> Result<Self> {
        Self::new(1, x.to_vec(), u.to_vec(), temp.to_vec())
    }

    /// Assembles a state from buffers already known to be consistent.
    pub(crate) fn from_parts(n: usize, d: usize, x: Vec<f64>, u: Vec<f64>, temp: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), n * d);
        debug_assert_eq!(u.len(), n * d);
        debug_assert_eq!(temp.len(), n);
        Self { n, d, x, u, temp }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x(&self, alpha: usize) -> &[f64] {
        &self.x[alpha * self.d..(alpha + 1) * self.d]
    }

    pub fn u(&self, alpha: usize) -> &[f64] {
        &self.u[alpha * self.d..(alpha + 1) * self.d]
    }

    pub fn temperature(&self, alpha: usize) -> f64 {
        self.temp[alpha]
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn velocities(&self) -> &[f64] {
        &self.u
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temp
    }

    pub fn speed_sq(&self, alpha: usize) -> f64 {
        dot(self.u(alpha), self.u(alpha))
    }

    /// Specific total energy `T_α + |u_α|²/2`.
    pub fn total_energy(&self, alpha: usize) -> f64 {
        self.temp[alpha] + 0.5 * self.speed_sq(alpha)
    }

    /// Energy fluctuation `E_α = T_α + |u_α|²/2 − T0`.
    pub fn energy_fluctuation(&self, alpha: usize, t0: ReferenceTemperature) -> f64 {
        self.total_energy(alpha) - t0.value()
    }

    pub fn energy_fluctuations(&self, t0: ReferenceTemperature) -> Vec<f64> {
        (0..self.n).map(|a| self.energy_fluctuation(a, t0)).collect()
    }

    pub fn min_temperature(&self) -> f64 {
        self.temp.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fails with the first particle whose temperature is at or below the floor.
    pub fn check_temperatures(&self) -> Result<()> {
        match self.temp.iter().position(|&t| t <= TEMPERATURE_FLOOR) {
            Some(alpha) => Err(Error::DegenerateTemperature {
                particle: alpha,
                value: self.temp[alpha],
                floor: TEMPERATURE_FLOOR,
            }),
            None => Ok(()),
        }
    }

    pub fn momentum(&self) -> Vec<f64> {
        column_sums(&self.u, self.d)
    }

    pub fn centroid_sum(&self) -> Vec<f64> {
        column_sums(&self.x, self.d)
    }

    /// Mean specific total energy `(1/n) Σ (T_α + |u_α|²/2)`.
    pub fn mean_energy(&self) -> f64 {
        (0..self.n).map(|a| self.total_energy(a)).sum::<f64>() / self.n as f64
    }

    /// Shifts positions and velocities so that both have zero mean.
    pub fn normalize_frame(&self) -> Self {
        let mut out = self.clone();
        subtract_mean(&mut out.x, self.d);
        subtract_mean(&mut out.u, self.d);
        out
    }

    /// The flocking temperature fixed by total-energy conservation.
    pub fn derive_t0(&self) -> Result<ReferenceTemperature> {
        self.check_temperatures()?;
        ReferenceTemperature::new(self.mean_energy())
    }

    pub fn validate_initial(&self, t0: ReferenceTemperature, tol: f64) -> ValidationReport {
        ValidationReport {
            centroid_residual: norm(&self.centroid_sum()),
            momentum_residual: norm(&self.momentum()),
            energy_residual: (self.mean_energy() - t0.value()).abs(),
            nonpositive: (0..self.n).filter(|&a| self.temp[a] <= 0.0).collect(),
            tol,
        }
    }

    /// Draws a rest-frame state: positions in `[-1, 1]^d`, velocities in
    /// `[-1, 1]^d`, temperatures in `[0.5, 2]`, then centred.
    pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<Self> {
        let x = (0..n * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let u = (0..n * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let temp = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
        Ok(Self::new(d, x, u, temp)?.normalize_frame())
    }
}

/// The common equilibrium temperature `T0 = T_∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReferenceTemperature(f64);

impl ReferenceTemperature {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "reference temperature must be positive and finite, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    Centroid(f64),
    Momentum(f64),
    Energy(f64),
    NonPositiveTemperature(usize),
}

/// Outcome of checking initial data against the rest-frame constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub centroid_residual: f64,
    pub momentum_residual: f64,
    pub energy_residual: f64,
    /// Zero-based indices of particles with `T_α ≤ 0`.
    pub nonpositive: Vec<usize>,
    pub tol: f64,
}

impl ValidationReport {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.centroid_residual <= self.tol) {
            out.push(Violation::Centroid(self.centroid_residual));
        }
        if !(self.momentum_residual <= self.tol) {
            out.push(Violation::Momentum(self.momentum_residual));
        }
        if !(self.energy_residual <= self.tol) {
            out.push(Violation::Energy(self.energy_residual));
        }
        out.extend(self.nonpositive.iter().map(|&a| Violation::NonPositiveTemperature(a)));
        out
    }

    pub fn is_admissible(&self) -> bool {
        self.violations().is_empty()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn column_sums(flat: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for row in flat.chunks_exact(d) {
        for (acc, v) in s.iter_mut().zip(row) {
            *acc += v;
        }
    }
    s
}

fn subtract_mean(flat: &mut [f64], d: usize) {
    let n = (flat.len() / d) as f64;
    let mean: Vec<f64> = column_sums(flat, d).into_iter().map(|s| s / n).collect();
    for row in flat.chunks_exact_mut(d) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
}

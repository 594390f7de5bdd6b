//! Vector fields of the normalized PB-CS and KB-CS models.
//!
//! With weights `a_{αβ}`, reference temperature `T0` and specific energy
//! `e_α = T_α + |u_α|²/2`:
//!
//! | | `du_α/dt` | `de_α/dt` |
//! |---|---|---|
//! | PB-CS | `(T0/n) Σ a (u_β/T_β − u_α/T_α)` | `(T0²/n) Σ a (1/T_α − 1/T_β)` |
//! | KB-CS | `(1/n) Σ a (u_β − u_α)` | `(1/n) Σ a (e_β − e_α)` |
//!
//! Both conserve `Σ u_α` and `Σ e_α` for symmetric weights.

mod production;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{dot, MixtureState, ReferenceTemperature};
use crate::topology::Topology;

pub use production::{
    linearization_discrepancy, linearization_match, production_kinetic, production_phenomenological,
    rhs_general, MixtureParams, Production, ProductionKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Pbcs,
    Kbcs,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Pbcs, Model::Kbcs];

    pub fn name(self) -> &'static str {
        match self {
            Model::Pbcs => "pbcs",
            Model::Kbcs => "kbcs",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbcs" | "pb-cs" => Ok(Model::Pbcs),
            "kbcs" | "kb-cs" => Ok(Model::Kbcs),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Time derivative of a [`MixtureState`], in the same row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub d: usize,
    pub dx: Vec<f64>,
    pub du: Vec<f64>,
    pub dtemp: Vec<f64>,
}

impl StateDerivative {
    pub fn dx(&self, alpha: usize) -> &[f64] {
        &self.dx[alpha * self.d..(alpha + 1) * self.d]
    }

    pub fn du(&self, alpha: usize) -> &[f64] {
        &self.du[alpha * self.d..(alpha + 1) * self.d]
    }

    pub fn dtemp(&self, alpha: usize) -> f64 {
        self.dtemp[alpha]
    }
}

pub fn rhs_pbcs(state: &MixtureState, topology: &Topology, t0: ReferenceTemperature) -> Result<StateDerivative> {
    rhs(Model::Pbcs, state, topology, t0)
}

pub fn rhs_kbcs(state: &MixtureState, topology: &Topology, t0: ReferenceTemperature) -> Result<StateDerivative> {
    rhs(Model::Kbcs, state, topology, t0)
}

/// Evaluates the selected model. The energy equation is returned as a
/// temperature rate, `dT_α = de_α − u_α·du_α`.
pub fn rhs(
    model: Model,
    state: &MixtureState,
    topology: &Topology,
    t0: ReferenceTemperature,
) -> Result<StateDerivative> {
    state.check_temperatures()?;
    let w = topology.weight_matrix(state)?;
    let (n, d) = (state.n(), state.d());
    let mut du = vec![0.0; n * d];
    let mut de = vec![0.0; n];
    rates(model, &w, t0.value(), d, state.velocities(), state.temperatures(), &mut du, &mut de);
    let dtemp = (0..n)
        .map(|a| de[a] - dot(state.u(a), &du[a * d..(a + 1) * d]))
        .collect();
    Ok(StateDerivative {
        d,
        dx: state.velocities().to_vec(),
        du,
        dtemp,
    })
}

/// Velocity and specific-energy rates. Each pair is visited once and its
/// contribution applied antisymmetrically so that the sums of `du` and `de`
/// cancel to rounding.
pub(crate) fn rates(
    model: Model,
    w: &DMatrix<f64>,
    t0: f64,
    d: usize,
    u: &[f64],
    temp: &[f64],
    du: &mut [f64],
    de: &mut [f64],
) {
    let n = temp.len();
    du.fill(0.0);
    de.fill(0.0);
    let inv_n = 1.0 / n as f64;
    match model {
        Model::Pbcs => {
            for a in 0..n {
                for b in a + 1..n {
                    let wab = w[(a, b)];
                    if wab == 0.0 {
                        continue;
                    }
                    let (ta, tb) = (temp[a], temp[b]);
                    for k in 0..d {
                        let flux = wab * (u[b * d + k] / tb - u[a * d + k] / ta);
                        du[a * d + k] += flux;
                        du[b * d + k] -= flux;
                    }
                    let heat = wab * (1.0 / ta - 1.0 / tb);
                    de[a] += heat;
                    de[b] -= heat;
                }
            }
            du.iter_mut().for_each(|v| *v *= t0 * inv_n);
            de.iter_mut().for_each(|v| *v *= t0 * t0 * inv_n);
        }
        Model::Kbcs => {
            let e: Vec<f64> = (0..n)
                .map(|a| temp[a] + 0.5 * dot(&u[a * d..(a + 1) * d], &u[a * d..(a + 1) * d]))
                .collect();
            for a in 0..n {
                for b in a + 1..n {
                    let wab = w[(a, b)];
                    if wab == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        let flux = wab * (u[b * d + k] - u[a * d + k]);
                        du[a * d + k] += flux;
                        du[b * d + k] -= flux;
                    }
                    let heat = wab * (e[b] - e[a]);
                    de[a] += heat;
                    de[b] -= heat;
                }
            }
            du.iter_mut().for_each(|v| *v *= inv_n);
            de.iter_mut().for_each(|v| *v *= inv_n);
        }
    }
}

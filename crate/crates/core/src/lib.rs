//! Thermo-mechanical Cucker-Smale flocking.
//!
//! Two homogeneous models of a gas mixture whose constituents are treated as
//! agents with position, velocity and temperature:
//!
//! - PB-CS, derived from phenomenological (Eckart-type) production terms;
//! - KB-CS, derived from BGK-type kinetic production terms.
//!
//! The crate provides the vector fields, the general mixture production terms
//! they reduce from, a fixed-step integrator, the diagnostic functionals the
//! flocking estimates are stated in, and a few reference experiments.
//!
//! ```
//! use thermoflock_core::{Dynamics, IntegratorConfig, MixtureState, Model, Topology};
//!
//! let state = MixtureState::from_1d(&[0.2, -0.35, 0.15], &[1.0, 2.0, -3.0], &[3.0, 0.01, 3.0])
//!     .unwrap()
//!     .normalize_frame();
//! let t0 = state.derive_t0().unwrap();
//! let dynamics = Dynamics::new(Model::Kbcs, Topology::uniform(3), t0);
//! let traj = dynamics.integrate(&state, &IntegratorConfig::rk4(1e-3, 1.0, 100)).unwrap();
//! assert_eq!(traj.len(), 11);
//! ```

pub mod analysis;
pub mod diagnostics;
mod error;
pub mod integrate;
pub mod models;
pub mod state;
pub mod topology;

pub use diagnostics::{DiagnosticsRecord, Envelope, EnvelopeKind, Functional};
pub use error::{Error, Result};
pub use integrate::{Dynamics, IntegratorConfig, Scheme, Trajectory};
pub use models::{Model, StateDerivative};
pub use state::{MixtureState, ReferenceTemperature, TEMPERATURE_FLOOR};
pub use topology::Topology;

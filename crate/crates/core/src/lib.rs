//! Continuous dynamical decoupling of a Hadamard gate from thermal boson
//! reservoirs, simulated with a time-local second-order master equation.
//!
//! The crate is layered bottom-up:
//!
//! * [`su2`]: qubit unitaries, rotation matrices, density matrices, fields
//! * [`control`]: bare, dephasing-protected and fully protected drives
//! * [`bath`]: spectral densities, closed-form correlation kernels, kernel tables
//! * [`redfield`]: decoherence tensor tables and the RK4 integrator
//! * [`experiment`]: scenario files, sweeps, CSV and SVG output
//! * [`verify`]: quadrature oracle and invariant suites

pub mod bath;
pub mod control;
pub mod error;
pub mod experiment;
pub mod redfield;
pub mod su2;
pub mod verify;

pub use error::{Result, SimError};

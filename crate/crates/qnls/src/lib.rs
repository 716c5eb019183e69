//! Numerical laboratory for the one-dimensional focusing quintic (mass-
//! critical) nonlinear Schrödinger equation
//!
//! ```text
//! i u_t + u_xx + |u|^4 u = 0
//! ```
//!
//! on a periodic box standing in for the line. The crate provides the
//! explicit objects of the problem — the ground state Q, its symmetry
//! orbit, the pseudoconformal blowup family, the linearized operators —
//! together with a split-step Fourier integrator, a modulation
//! decomposition with parameter tracking, and the scalar diagnostics
//! (conserved quantities, sharp interpolation ratio, variance/virial,
//! frequency-localized functionals) needed to check the identities the
//! objects satisfy.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
mod fft;
pub mod grid;
pub mod ground_state;
pub mod linearized;
pub mod modulation;
pub mod perturb;
pub mod registry;
pub mod spectral;
pub mod symmetries;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
pub use symmetries::ModulationParams;

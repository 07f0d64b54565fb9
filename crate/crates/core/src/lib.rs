//! Discrete-time quantum walks of one and two trapped ions in phase space.
//!
//! The crate simulates the walk at several levels of laser-ion coupling
//! fidelity ([`dynamics::FidelityModel`]), models the Fourier-component probe
//! that maps position or momentum marginals onto the spin, and reconstructs
//! nonnegative densities from probe data by constrained least squares with a
//! kinetic-energy (Fisher information) bound.

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod fock;
pub mod grid;
pub mod probe;
pub mod qp;
pub mod reconstruct;
pub mod solver;
pub mod special;
pub mod spin;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

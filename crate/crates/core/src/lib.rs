//! Pseudo-spectral simulation of anisotropic geophysical flows: the scaled
//! Navier-Stokes system, primitive equations with partial dissipation, and a moist
//! tropical-atmosphere model, plus harnesses for their singular limits.

pub mod error;
pub mod spectral;

pub use error::{Error, Result};
pub mod imex;
mod nonlinear;
pub mod sns;
pub mod pe;
pub mod tam;
pub mod harness;
pub mod io;

//! Periodic-box Fourier infrastructure.

mod fft;
pub mod field;
pub mod grid;

pub use fft::{forward_in_place, forward_real, inverse_in_place, inverse_real};
pub use field::{
    curl_h, divergence_h, leray_horizontal, sample, vector_norm, Axis, LerayScope, NormKind, PhysicalField,
    SpectralField, SymmetryClass, VerticalIntegral, VerticalLevel,
};
pub use grid::Grid;

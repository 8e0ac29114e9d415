//! Crank-Nicolson / Adams-Bashforth building blocks shared by the solvers.
//!
//! The stiff part is always a diagonal (per-mode) dissipation `-mu * rate(k) * u`,
//! so implicit solves reduce to per-coefficient division.

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{Grid, SpectralField};

/// Which second derivatives act as dissipation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dissipation {
    /// `Delta = Delta_H + d_z^2`.
    Full,
    /// `Delta_H` only.
    Horizontal,
    /// `d_z^2` only.
    Vertical,
    None,
}

impl Dissipation {
    /// Decay rate of mode `(i, j, k)` (non-negative).
    pub fn rate(self, g: &Grid, i: usize, j: usize, k: usize) -> f64 {
        let kh = || {
            let k1 = g.wavenumber(0, i);
            let k2 = g.wavenumber(1, j);
            k1 * k1 + k2 * k2
        };
        let kz = || {
            if g.is_planar() {
                0.0
            } else {
                let k3 = g.wavenumber(2, k);
                k3 * k3
            }
        };
        match self {
            Dissipation::Full => kh() + kz(),
            Dissipation::Horizontal => kh(),
            Dissipation::Vertical => kz(),
            Dissipation::None => 0.0,
        }
    }

    /// Squared dissipation seminorm, `<u, -D u>`.
    pub fn seminorm_sq(self, u: &SpectralField) -> f64 {
        let g = *u.grid();
        u.coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (i, j, k) = g.unindex(idx);
                self.rate(&g, i, j, k) * c.norm_sqr()
            })
            .sum::<f64>()
            * g.volume()
    }
}

/// `3/2 now - 1/2 prev`.
pub fn ab2(now: &SpectralField, prev: &SpectralField) -> Result<SpectralField> {
    now.scale(1.5).axpy(-0.5, prev)
}

/// One Crank-Nicolson step for the dissipation with a fixed explicit tendency:
/// `(1 + dt/2 mu r) u' = (1 - dt/2 mu r) u + dt * explicit`.
pub fn cn_update(
    u: &SpectralField,
    explicit: &SpectralField,
    dt: f64,
    diss: Dissipation,
    mu: f64,
) -> Result<SpectralField> {
    u.grid().ensure_same(explicit.grid())?;
    let g = *u.grid();
    let coeffs: Vec<Complex64> = u
        .coeffs()
        .iter()
        .zip(explicit.coeffs())
        .enumerate()
        .map(|(idx, (&c, &e))| {
            let (i, j, k) = g.unindex(idx);
            let a = 0.5 * dt * mu * diss.rate(&g, i, j, k);
            ((1.0 - a) * c + dt * e) / (1.0 + a)
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs, u.sym())
}

/// Predictor over `dt`: explicit tendency, backward Euler on the dissipation.
pub fn predictor_update(
    u: &SpectralField,
    explicit: &SpectralField,
    dt: f64,
    diss: Dissipation,
    mu: f64,
) -> Result<SpectralField> {
    u.grid().ensure_same(explicit.grid())?;
    let g = *u.grid();
    let coeffs: Vec<Complex64> = u
        .coeffs()
        .iter()
        .zip(explicit.coeffs())
        .enumerate()
        .map(|(idx, (&c, &e))| {
            let (i, j, k) = g.unindex(idx);
            (c + dt * e) / (1.0 + dt * mu * diss.rate(&g, i, j, k))
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs, u.sym())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SymmetryClass;
    use std::f64::consts::PI;

    #[test]
    fn cn_factor_on_single_mode() {
        let g = Grid::new2(1.0, 1.0, 8, 8).unwrap();
        let u = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |_, y, _| (2.0 * PI * y).sin());
        let zero = SpectralField::zeros(g, SymmetryClass::NoSymmetry);
        let dt = 0.01;
        let next = cn_update(&u, &zero, dt, Dissipation::Full, 1.0).unwrap();
        let a = 0.5 * dt * 4.0 * PI * PI;
        let factor = (1.0 - a) / (1.0 + a);
        assert!(next.sub(&u.scale(factor)).unwrap().max_abs_coeff() < 1e-16);
        // CN factor agrees with exp(-lambda dt) to third order
        let lam_dt: f64 = 4.0 * PI * PI * dt;
        assert!((factor - (-lam_dt).exp()).abs() < lam_dt.powi(3) / 12.0 * 1.01);
    }

    #[test]
    fn rates_by_kind() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 8).unwrap();
        let (i, j, k) = (1, 0, 1);
        let kh = 4.0 * PI * PI;
        let kz = PI * PI;
        assert!((Dissipation::Full.rate(&g, i, j, k) - kh - kz).abs() < 1e-12);
        assert!((Dissipation::Horizontal.rate(&g, i, j, k) - kh).abs() < 1e-12);
        assert!((Dissipation::Vertical.rate(&g, i, j, k) - kz).abs() < 1e-12);
        assert_eq!(Dissipation::None.rate(&g, i, j, k), 0.0);
    }
}

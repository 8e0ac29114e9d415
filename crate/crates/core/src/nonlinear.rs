//! Dealiased advection terms `(u . grad) f` shared by the solvers.

use crate::error::Result;
use crate::spectral::{Axis, Grid, SpectralField};

/// Advecting velocity held as dealiased grid values, one array per axis.
pub(crate) struct Velocity {
    grid: Grid,
    axes: Vec<Axis>,
    values: Vec<Vec<f64>>,
}

impl Velocity {
    pub fn new(components: &[(&SpectralField, Axis)]) -> Self {
        let grid = *components[0].0.grid();
        Self {
            grid,
            axes: components.iter().map(|c| c.1).collect(),
            values: components.iter().map(|c| c.0.to_physical_dealiased()).collect(),
        }
    }

    /// Product `u . grad f` (grid values, not yet transformed back).
    pub fn advect_values(&self, f: &SpectralField) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid.len()];
        for (axis, vel) in self.axes.iter().zip(&self.values) {
            let d = f.derivative(*axis, 1).to_physical_dealiased();
            for ((a, v), dv) in acc.iter_mut().zip(vel).zip(&d) {
                *a += v * dv;
            }
        }
        acc
    }

    /// `u . grad f` as a dealiased spectral field in the class of `f`.
    pub fn advect(&self, f: &SpectralField) -> Result<SpectralField> {
        let vals = self.advect_values(f);
        SpectralField::from_physical_dealiased(self.grid, &vals, f.sym())
    }

    /// `max_x sum_a |u_a| / dx_a`; times `dt` this is the Courant number.
    pub fn courant_rate(&self) -> f64 {
        let mut best: f64 = 0.0;
        for p in 0..self.grid.len() {
            let mut r = 0.0;
            for (axis, vel) in self.axes.iter().zip(&self.values) {
                r += vel[p].abs() / self.grid.spacing(axis.index());
            }
            best = best.max(r);
        }
        best
    }
}

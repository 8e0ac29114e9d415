use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic collocation grid. Planar (2-D) grids carry `dims[2] == 1`.
///
/// Collocation points are `x_i = i L / N`, `i = 0..N-1`, on every axis, and the
/// flat index runs x-fastest: `idx = i + n1 * (j + n2 * k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lengths: [f64; 3],
    pub dims: [usize; 3],
}

fn check_axis(name: &str, length: f64, n: usize) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidGrid(format!("{name}: length {length} must be > 0")));
    }
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidGrid(format!("{name}: mode count {n} must be even and >= 8")));
    }
    Ok(())
}

impl Grid {
    pub fn new3(l1: f64, l2: f64, lz: f64, n1: usize, n2: usize, n3: usize) -> Result<Self> {
        check_axis("x", l1, n1)?;
        check_axis("y", l2, n2)?;
        check_axis("z", lz, n3)?;
        Ok(Self {
            lengths: [l1, l2, lz],
            dims: [n1, n2, n3],
        })
    }

    pub fn new2(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        check_axis("x", l1, n1)?;
        check_axis("y", l2, n2)?;
        Ok(Self {
            lengths: [l1, l2, 1.0],
            dims: [n1, n2, 1],
        })
    }

    pub fn is_planar(&self) -> bool {
        self.dims[2] == 1
    }

    /// The horizontal slice of a 3-D grid.
    pub fn horizontal(&self) -> Grid {
        Grid {
            lengths: [self.lengths[0], self.lengths[1], 1.0],
            dims: [self.dims[0], self.dims[1], 1],
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        if self.is_planar() {
            self.lengths[0] * self.lengths[1]
        } else {
            self.lengths.iter().product()
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.dims[axis] as f64
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        (i, rest % self.dims[1], rest / self.dims[1])
    }

    /// Collocation coordinate along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    /// Vertical coordinate mapped into `[-Lz/2, Lz/2)`, the natural range of the
    /// symmetric domains `(-h, h)`.
    pub fn z_centered(&self, k: usize) -> f64 {
        let z = self.coord(2, k);
        if z >= 0.5 * self.lengths[2] {
            z - self.lengths[2]
        } else {
            z
        }
    }

    /// Signed integer wavenumber of storage index `i` (Nyquist taken positive).
    pub fn mode(&self, axis: usize, i: usize) -> i64 {
        let n = self.dims[axis];
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        let n = self.dims[axis];
        n > 1 && i == n / 2
    }

    /// Angular wavenumber `2 pi m / L`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        2.0 * PI * self.mode(axis, i) as f64 / self.lengths[axis]
    }

    /// Symbol of the first derivative (imaginary part); zero on the Nyquist mode.
    pub fn first_derivative_symbol(&self, axis: usize, i: usize) -> f64 {
        if self.is_nyquist(axis, i) {
            0.0
        } else {
            self.wavenumber(axis, i)
        }
    }

    /// Largest retained |mode| under the 2/3 rule.
    pub fn dealias_cutoff(&self, axis: usize) -> i64 {
        (self.dims[axis] / 3) as i64
    }

    pub fn in_dealias_band(&self, i: usize, j: usize, k: usize) -> bool {
        self.mode(0, i).abs() <= self.dealias_cutoff(0)
            && self.mode(1, j).abs() <= self.dealias_cutoff(1)
            && self.mode(2, k).abs() <= self.dealias_cutoff(2)
    }

    /// Storage index of the `z -> -z` mirror of vertical mode index `k`.
    pub fn mirror_z(&self, k: usize) -> usize {
        let n = self.dims[2];
        (n - k) % n
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && self
                .lengths
                .iter()
                .zip(other.lengths.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()))
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "grid {:?}/{:?} vs {:?}/{:?}",
                self.dims, self.lengths, other.dims, other.lengths
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_dims() {
        assert!(Grid::new3(1.0, 1.0, 2.0, 9, 8, 8).is_err());
        assert!(Grid::new3(1.0, 1.0, 2.0, 8, 6, 8).is_err());
        assert!(Grid::new2(1.0, -1.0, 8, 8).is_err());
        assert!(Grid::new3(1.0, 1.0, 2.0, 8, 8, 8).is_ok());
    }

    #[test]
    fn modes_and_mirror() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 8).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(0, i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.mirror_z(0), 0);
        assert_eq!(g.mirror_z(1), 7);
        assert_eq!(g.mirror_z(4), 4);
        assert_eq!(g.dealias_cutoff(0), 2);
        assert!((g.z_centered(5) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 10, 12).unwrap();
        for idx in [0, 7, 8, 79, 80, 959] {
            let (i, j, k) = g.unindex(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }
}

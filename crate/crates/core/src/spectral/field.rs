use num_complex::Complex64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Parity of a field under `z -> -z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymmetryClass {
    EvenInZ,
    OddInZ,
    NoSymmetry,
}

impl SymmetryClass {
    /// Class of the z-derivative.
    pub fn flipped(self) -> Self {
        match self {
            SymmetryClass::EvenInZ => SymmetryClass::OddInZ,
            SymmetryClass::OddInZ => SymmetryClass::EvenInZ,
            SymmetryClass::NoSymmetry => SymmetryClass::NoSymmetry,
        }
    }

    /// Class of a pointwise product.
    pub fn product(self, other: Self) -> Self {
        use SymmetryClass::*;
        match (self, other) {
            (NoSymmetry, _) | (_, NoSymmetry) => NoSymmetry,
            (a, b) if a == b => EvenInZ,
            _ => OddInZ,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L2,
    Lq(f64),
    Linf,
    H1,
    H2,
}

/// Lower limit of a vertical antiderivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerticalLevel {
    /// `z = -Lz/2`, the bottom of a symmetric domain `(-h, h)`.
    Bottom,
    /// `z = 0`.
    Middle,
}

/// A real scalar field held as Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    sym: SymmetryClass,
}

/// Grid values of a real field, used where a field must be kept pointwise exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn to_spectral(&self) -> SpectralField {
        let coeffs = fft::forward_real(&self.grid, &self.values).expect("length checked at construction");
        SpectralField {
            grid: self.grid,
            coeffs,
            sym: SymmetryClass::NoSymmetry,
        }
    }

    pub fn l2(&self) -> f64 {
        let w = self.grid.volume() / self.grid.len() as f64;
        (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid, sym: SymmetryClass) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
            sym,
        }
    }

    /// Wraps raw coefficients. The caller vouches for the symmetry class.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>, sym: SymmetryClass) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs, sym })
    }

    /// Forward transform of grid values, projected onto `sym`.
    pub fn from_physical(grid: Grid, values: &[f64], sym: SymmetryClass) -> Result<Self> {
        let coeffs = fft::forward_real(&grid, values)?;
        let raw = Self {
            grid,
            coeffs,
            sym: SymmetryClass::NoSymmetry,
        };
        Ok(if sym == SymmetryClass::NoSymmetry {
            raw
        } else {
            raw.project_symmetry(sym)
        })
    }

    /// Samples `f(x, y, z)` at the collocation points, with `z` in `[-Lz/2, Lz/2)`.
    pub fn from_fn(grid: Grid, sym: SymmetryClass, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = sample(&grid, f);
        Self::from_physical(grid, &values, sym).expect("sampled on the field's own grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn sym(&self) -> SymmetryClass {
        self.sym
    }

    pub fn with_sym(mut self, sym: SymmetryClass) -> Self {
        self.sym = sym;
        self
    }

    pub fn to_physical(&self) -> Vec<f64> {
        fft::inverse_real(&self.grid, &self.coeffs).expect("coefficient count matches grid")
    }

    pub fn to_physical_field(&self) -> PhysicalField {
        PhysicalField {
            grid: self.grid,
            values: self.to_physical(),
        }
    }

    /// Physical values of the 2/3-truncated field.
    pub fn to_physical_dealiased(&self) -> Vec<f64> {
        self.truncated().to_physical()
    }

    /// Forward transform of the values followed by 2/3 truncation and projection onto `sym`.
    pub fn from_physical_dealiased(grid: Grid, values: &[f64], sym: SymmetryClass) -> Result<Self> {
        Ok(Self::from_physical(grid, values, sym)?.truncated())
    }

    /// Zeroes every mode outside the 2/3 band.
    pub fn truncated(&self) -> Self {
        let mut out = self.clone();
        let g = self.grid;
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (i, j, k) = g.unindex(idx);
            if !g.in_dealias_band(i, j, k) {
                *c = Complex64::default();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        if self.sym != other.sym {
            out.sym = SymmetryClass::NoSymmetry;
        }
        Ok(out)
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Multiplies each coefficient by `f(i, j, k)` (storage indices).
    pub fn map_modes(&self, sym: SymmetryClass, f: impl Fn(usize, usize, usize) -> Complex64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (i, j, k) = g.unindex(idx);
                c * f(i, j, k)
            })
            .collect();
        Self { grid: g, coeffs, sym }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Exact spectral derivative. Odd orders zero the Nyquist mode and flip the z-class
    /// when differentiating in z.
    pub fn derivative(&self, axis: Axis, order: u32) -> Self {
        let a = axis.index();
        let g = self.grid;
        let sym = if axis == Axis::Z && order % 2 == 1 {
            self.sym.flipped()
        } else {
            self.sym
        };
        if a == 2 && g.is_planar() {
            return Self::zeros(g, sym);
        }
        self.map_modes(sym, |i, j, k| {
            let n = [i, j, k][a];
            let kk = if order % 2 == 1 {
                g.first_derivative_symbol(a, n)
            } else {
                g.wavenumber(a, n)
            };
            Complex64::new(0.0, kk).powu(order)
        })
    }

    pub fn laplacian_h(&self) -> Self {
        let g = self.grid;
        self.map_modes(self.sym, |i, j, _| {
            let k1 = g.wavenumber(0, i);
            let k2 = g.wavenumber(1, j);
            Complex64::new(-(k1 * k1 + k2 * k2), 0.0)
        })
    }

    /// Solves `(Delta_H + lambda_z d_z^2) u = rhs` in the zero-mean gauge.
    ///
    /// Every mode where the symbol vanishes must carry no right-hand side (relative
    /// size above `1e-10` of the largest coefficient is a gauge violation).
    pub fn poisson_aniso(&self, lambda_z: f64) -> Result<Self> {
        if !(lambda_z >= 0.0 && lambda_z.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_z = {lambda_z} must be >= 0")));
        }
        let g = self.grid;
        let scale = self.max_abs_coeff().max(1.0);
        let mut out = Self::zeros(g, self.sym);
        for (idx, (o, &c)) in out.coeffs.iter_mut().zip(&self.coeffs).enumerate() {
            let (i, j, k) = g.unindex(idx);
            let k1 = g.wavenumber(0, i);
            let k2 = g.wavenumber(1, j);
            let k3 = if g.is_planar() { 0.0 } else { g.wavenumber(2, k) };
            let symbol = k1 * k1 + k2 * k2 + lambda_z * k3 * k3;
            if symbol == 0.0 {
                if c.norm() > 1e-10 * scale {
                    return Err(Error::GaugeViolation { magnitude: c.norm() });
                }
            } else {
                *o = -c / symbol;
            }
        }
        Ok(out)
    }

    /// Antiderivative in z from `lower`.
    pub fn vertical_integral(&self, lower: VerticalLevel) -> VerticalIntegral {
        let g = self.grid;
        let [n1, n2, n3] = g.dims;
        let plane = n1 * n2;
        let z0 = match lower {
            VerticalLevel::Bottom => -0.5 * g.lengths[2],
            VerticalLevel::Middle => 0.0,
        };
        let mut periodic = vec![Complex64::default(); g.len()];
        let mut mean_rate = vec![Complex64::default(); plane];
        for p in 0..plane {
            mean_rate[p] = self.coeffs[p];
            let mut at_lower = Complex64::default();
            for k in 1..n3 {
                let kz = g.first_derivative_symbol(2, k);
                if kz == 0.0 {
                    continue;
                }
                let anti = self.coeffs[p + plane * k] / Complex64::new(0.0, kz);
                periodic[p + plane * k] = anti;
                at_lower += anti * Complex64::from_polar(1.0, g.wavenumber(2, k) * z0);
            }
            periodic[p] = -at_lower;
        }
        VerticalIntegral {
            periodic: Self {
                grid: g,
                coeffs: periodic,
                sym: self.sym.flipped(),
            }
            .project_if_classed(),
            mean_rate,
            lower: z0,
        }
    }

    fn project_if_classed(self) -> Self {
        let s = self.sym;
        if s == SymmetryClass::NoSymmetry {
            self
        } else {
            self.project_symmetry(s)
        }
    }

    /// Orthogonal projection onto a z-parity class.
    pub fn project_symmetry(&self, class: SymmetryClass) -> Self {
        let g = self.grid;
        if class == SymmetryClass::NoSymmetry {
            return self.clone().with_sym(class);
        }
        let sign = if class == SymmetryClass::EvenInZ { 1.0 } else { -1.0 };
        let [n1, n2, n3] = g.dims;
        let plane = n1 * n2;
        let mut coeffs = vec![Complex64::default(); g.len()];
        for k in 0..n3 {
            let km = g.mirror_z(k);
            for p in 0..plane {
                coeffs[p + plane * k] = 0.5 * (self.coeffs[p + plane * k] + sign * self.coeffs[p + plane * km]);
            }
        }
        Self {
            grid: g,
            coeffs,
            sym: class,
        }
    }

    /// Relative distance from the declared class.
    pub fn symmetry_residual(&self) -> f64 {
        if self.sym == SymmetryClass::NoSymmetry {
            return 0.0;
        }
        let p = self.project_symmetry(self.sym);
        let diff: f64 = self.coeffs.iter().zip(&p.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum();
        let tot: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if tot == 0.0 {
            0.0
        } else {
            (diff / tot).sqrt()
        }
    }

    /// Pseudo-spectral product with 2/3 truncation of the inputs and of the result.
    pub fn dealiased_product(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let a = self.to_physical_dealiased();
        let b = other.to_physical_dealiased();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_physical_dealiased(self.grid, &prod, self.sym.product(other.sym))
    }

    /// Plain collocation product (aliasing included).
    pub fn aliased_product(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_physical(self.grid, &prod, self.sym.product(other.sym))
    }

    /// L2 norm by Parseval.
    pub fn l2(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// L2 norm by quadrature on the collocation grid.
    pub fn l2_physical(&self) -> f64 {
        self.to_physical_field().l2()
    }

    /// `sum |k|^(2 order) |c_k|^2 * volume`, the squared seminorm of order `order`.
    fn seminorm_sq(&self, order: i32) -> f64 {
        let g = self.grid;
        let vol = g.volume();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (i, j, k) = g.unindex(idx);
                let k1 = g.wavenumber(0, i);
                let k2 = g.wavenumber(1, j);
                let k3 = if g.is_planar() { 0.0 } else { g.wavenumber(2, k) };
                (k1 * k1 + k2 * k2 + k3 * k3).powi(order) * c.norm_sqr()
            })
            .sum::<f64>()
            * vol
    }

    /// `||grad f||_2^2`.
    pub fn gradient_sq(&self) -> f64 {
        self.seminorm_sq(1)
    }

    /// Norms with the conventions `H1^2 = L2^2 + ||grad f||^2` and
    /// `H2^2 = H1^2 + ||D^2 f||^2`.
    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.l2()),
            NormKind::Lq(q) => {
                check_q(q)?;
                Ok(lq_of_values(&self.grid, self.to_physical().iter().map(|v| v.abs()), q))
            }
            NormKind::Linf => Ok(self.to_physical().iter().map(|v| v.abs()).fold(0.0, f64::max)),
            NormKind::H1 => Ok((self.seminorm_sq(0) + self.seminorm_sq(1)).sqrt()),
            NormKind::H2 => Ok((self.seminorm_sq(0) + self.seminorm_sq(1) + self.seminorm_sq(2)).sqrt()),
        }
    }

    /// z-mean (the `k_z = 0` plane) as a planar field.
    pub fn vertical_mean(&self) -> SpectralField {
        let h = self.grid.horizontal();
        let plane = h.len();
        Self {
            grid: h,
            coeffs: self.coeffs[..plane].to_vec(),
            sym: SymmetryClass::NoSymmetry,
        }
    }

    /// Extends a planar field to a z-independent field on `grid`.
    pub fn extend_vertically(planar: &SpectralField, grid: Grid) -> Result<Self> {
        planar.grid.ensure_same(&grid.horizontal())?;
        let mut out = Self::zeros(grid, SymmetryClass::EvenInZ);
        out.coeffs[..planar.coeffs.len()].copy_from_slice(&planar.coeffs);
        Ok(out)
    }

    /// Fraction of the L2 energy carried by modes outside the 2/3 band.
    pub fn tail_energy_fraction(&self) -> f64 {
        let g = self.grid;
        let mut tail = 0.0;
        let mut total = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (i, j, k) = g.unindex(idx);
            let e = c.norm_sqr();
            total += e;
            if !g.in_dealias_band(i, j, k) {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Result of a vertical antiderivative: a periodic part plus the linear growth of
/// the z-mean mode, `F(z) = periodic(z) + mean_rate * (z - lower)`.
#[derive(Clone, Debug)]
pub struct VerticalIntegral {
    pub periodic: SpectralField,
    /// Horizontal coefficients of the integrand's z-mean.
    pub mean_rate: Vec<Complex64>,
    pub lower: f64,
}

impl VerticalIntegral {
    pub fn mean_magnitude(&self) -> f64 {
        self.mean_rate.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The antiderivative as a periodic field; errors if the integrand had a z-mean
    /// larger than `tol`, since the linear part is not representable.
    pub fn into_field(self, tol: f64) -> Result<SpectralField> {
        let m = self.mean_magnitude();
        if m > tol {
            return Err(Error::BarotropicConstraint(m));
        }
        Ok(self.periodic)
    }

    /// Evaluates the antiderivative at physical height `z` in `[-Lz/2, Lz/2]` over the
    /// horizontal grid.
    pub fn sample_at(&self, z: f64) -> Vec<f64> {
        let g = *self.periodic.grid();
        let [n1, n2, n3] = g.dims;
        let plane = n1 * n2;
        let mut col = vec![Complex64::default(); plane];
        for k in 0..n3 {
            let phase = Complex64::from_polar(1.0, g.wavenumber(2, k) * z);
            for p in 0..plane {
                col[p] += self.periodic.coeffs()[p + plane * k] * phase;
            }
        }
        for p in 0..plane {
            col[p] += self.mean_rate[p] * (z - self.lower);
        }
        fft::inverse_real(&g.horizontal(), &col).expect("plane size")
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(2.0..f64::INFINITY).contains(&q) || q.is_nan() {
        return Err(Error::InvalidExponent(q));
    }
    Ok(())
}

fn lq_of_values(grid: &Grid, abs_values: impl Iterator<Item = f64>, q: f64) -> f64 {
    let vals: Vec<f64> = abs_values.collect();
    let m = vals.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    // scale by the max to keep large q finite
    let w = grid.volume() / grid.len() as f64;
    let s: f64 = vals.iter().map(|v| (v / m).powf(q)).sum::<f64>() * w;
    m * s.powf(1.0 / q)
}

/// Samples `f(x, y, z)` on the collocation grid, `z` centred in `[-Lz/2, Lz/2)`.
pub fn sample(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let [n1, n2, n3] = grid.dims;
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..n3 {
        let z = if grid.is_planar() { 0.0 } else { grid.z_centered(k) };
        for j in 0..n2 {
            let y = grid.coord(1, j);
            for i in 0..n1 {
                out.push(f(grid.coord(0, i), y, z));
            }
        }
    }
    out
}

/// Norm of a vector field; `Lq`/`Linf` use the pointwise Euclidean magnitude.
pub fn vector_norm(components: &[&SpectralField], kind: NormKind) -> Result<f64> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty vector field".into()))?;
    for c in components {
        c.grid().ensure_same(first.grid())?;
    }
    match kind {
        NormKind::L2 | NormKind::H1 | NormKind::H2 => {
            let mut s = 0.0;
            for c in components {
                s += c.norm(kind)?.powi(2);
            }
            Ok(s.sqrt())
        }
        NormKind::Lq(_) | NormKind::Linf => {
            if let NormKind::Lq(q) = kind {
                check_q(q)?;
            }
            let phys: Vec<Vec<f64>> = components.iter().map(|c| c.to_physical()).collect();
            let mags = (0..first.grid().len()).map(|i| phys.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt());
            Ok(match kind {
                NormKind::Lq(q) => lq_of_values(first.grid(), mags, q),
                _ => mags.fold(0.0, f64::max),
            })
        }
    }
}

/// Which modes a horizontal Leray projection acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LerayScope {
    AllModes,
    /// Only the `k_z = 0` plane (the barotropic constraint).
    VerticalMean,
}

/// Removes the horizontal-gradient part of `(v1, v2)`, in place.
pub fn leray_horizontal(v: &mut [SpectralField; 2], scope: LerayScope) -> Result<()> {
    v[0].grid().ensure_same(v[1].grid())?;
    let g = *v[0].grid();
    let plane = g.dims[0] * g.dims[1];
    let limit = match scope {
        LerayScope::AllModes => g.len(),
        LerayScope::VerticalMean => plane,
    };
    let (a, b) = v.split_at_mut(1);
    let c1 = a[0].coeffs_mut();
    let c2 = b[0].coeffs_mut();
    for idx in 0..limit {
        let (i, j, _) = g.unindex(idx);
        let k1 = g.first_derivative_symbol(0, i);
        let k2 = g.first_derivative_symbol(1, j);
        let s = k1 * k1 + k2 * k2;
        if s == 0.0 {
            continue;
        }
        let dot = (k1 * c1[idx] + k2 * c2[idx]) / s;
        c1[idx] -= k1 * dot;
        c2[idx] -= k2 * dot;
    }
    Ok(())
}

/// Horizontal divergence `d_x v1 + d_y v2`.
pub fn divergence_h(v: &[SpectralField; 2]) -> Result<SpectralField> {
    v[0].derivative(Axis::X, 1).add(&v[1].derivative(Axis::Y, 1))
}

/// Horizontal curl `-d_y v1 + d_x v2`.
pub fn curl_h(v: &[SpectralField; 2]) -> Result<SpectralField> {
    v[1].derivative(Axis::X, 1).sub(&v[0].derivative(Axis::Y, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn g3(n: usize) -> Grid {
        Grid::new3(1.0, 1.0, 2.0, n, n, n).unwrap()
    }

    fn random_field(grid: Grid, seed: u64) -> SpectralField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_physical(grid, &vals, SymmetryClass::NoSymmetry).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_transforms_to_zero() {
        let g = g3(8);
        let f = SpectralField::from_physical(g, &vec![0.0; g.len()], SymmetryClass::NoSymmetry).unwrap();
        assert_eq!(f.max_abs_coeff(), 0.0);
        assert!(f.to_physical().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_is_a_single_conjugate_pair() {
        let g = g3(8);
        let f = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, _, _| (2.0 * PI * x).sin());
        for (idx, c) in f.coeffs().iter().enumerate() {
            let (i, j, k) = g.unindex(idx);
            if j == 0 && k == 0 && (i == 1 || i == 7) {
                let expect = if i == 1 { Complex64::new(0.0, -0.5) } else { Complex64::new(0.0, 0.5) };
                assert!((c - expect).norm() < 1e-15);
            } else {
                assert!(c.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = g3(16);
        let f = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, _, _| (2.0 * PI * x).sin());
        let d = f.derivative(Axis::X, 1).to_physical();
        let exact = sample(&g, |x, _, _| 2.0 * PI * (2.0 * PI * x).cos());
        assert!(max_diff(&d, &exact) < 1e-12);
    }

    #[test]
    fn dz_flips_class() {
        let g = g3(8);
        let f = SpectralField::from_fn(g, SymmetryClass::EvenInZ, |_, _, z| (PI * z).cos());
        assert_eq!(f.derivative(Axis::Z, 1).sym(), SymmetryClass::OddInZ);
        assert_eq!(f.derivative(Axis::Z, 2).sym(), SymmetryClass::EvenInZ);
        assert_eq!(f.laplacian_h().sym(), SymmetryClass::EvenInZ);
    }

    #[test]
    fn horizontal_laplacian_eigenfunction() {
        let g = g3(16);
        let f = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, y, _| {
            (2.0 * PI * x).cos() * (2.0 * PI * y).cos()
        });
        let lap = f.laplacian_h().to_physical();
        let expect: Vec<f64> = f.to_physical().iter().map(|v| -8.0 * PI * PI * v).collect();
        assert!(max_diff(&lap, &expect) < 1e-11);
    }

    #[test]
    fn poisson_examples() {
        let g = g3(16);
        let rhs = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, _, _| (2.0 * PI * x).sin());
        let u = rhs.poisson_aniso(1.0).unwrap().to_physical();
        let expect = sample(&g, |x, _, _| -(2.0 * PI * x).sin() / (4.0 * PI * PI));
        assert!(max_diff(&u, &expect) < 1e-14);

        let zero = SpectralField::zeros(g, SymmetryClass::NoSymmetry);
        assert_eq!(zero.poisson_aniso(2.0).unwrap().max_abs_coeff(), 0.0);

        // k_z = pi on Lz = 2, lambda_z = 4: symbol 4 pi^2 + 4 pi^2
        let rhs = SpectralField::from_fn(g, SymmetryClass::OddInZ, |x, _, z| (2.0 * PI * x).sin() * (PI * z).sin());
        let u = rhs.poisson_aniso(4.0).unwrap().to_physical();
        let expect: Vec<f64> = rhs.to_physical().iter().map(|v| -v / (8.0 * PI * PI)).collect();
        assert!(max_diff(&u, &expect) < 1e-14);
    }

    #[test]
    fn poisson_gauge_violations() {
        let g = g3(8);
        let c = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |_, _, _| 1.0);
        assert!(matches!(c.poisson_aniso(1.0), Err(Error::GaugeViolation { .. })));
        // a z-only profile is a null mode of Delta_H
        let zp = SpectralField::from_fn(g, SymmetryClass::EvenInZ, |_, _, z| (PI * z).cos());
        assert!(zp.poisson_aniso(0.0).is_err());
        assert!(zp.poisson_aniso(1.0).is_ok());
    }

    #[test]
    fn poisson_residual_random() {
        let g = g3(16);
        let mut rhs = random_field(g, 3);
        rhs.coeffs_mut()[0] = Complex64::default();
        let lz = 7.5;
        let u = rhs.poisson_aniso(lz).unwrap();
        let back = u.laplacian_h().axpy(lz, &u.derivative(Axis::Z, 2)).unwrap();
        let res = back.sub(&rhs).unwrap().l2() / rhs.l2();
        assert!(res < 1e-11, "{res}");
    }

    #[test]
    fn vertical_integral_of_cosine() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 16).unwrap();
        let f = SpectralField::from_fn(g, SymmetryClass::EvenInZ, |_, _, z| (PI * z).cos());
        let vi = f.vertical_integral(VerticalLevel::Bottom);
        assert_eq!(vi.periodic.sym(), SymmetryClass::OddInZ);
        let phys = vi.into_field(1e-12).unwrap().to_physical();
        let expect = sample(&g, |_, _, z| (PI * z).sin() / PI);
        assert!(max_diff(&phys, &expect) < 1e-14);
    }

    #[test]
    fn vertical_integral_of_zero_and_odd() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 16).unwrap();
        let z = SpectralField::zeros(g, SymmetryClass::EvenInZ);
        assert_eq!(z.vertical_integral(VerticalLevel::Bottom).periodic.max_abs_coeff(), 0.0);
        let s = SpectralField::from_fn(g, SymmetryClass::OddInZ, |_, _, z| (PI * z).sin());
        let vi = s.vertical_integral(VerticalLevel::Bottom);
        let top = vi.sample_at(1.0);
        assert!(top.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn vertical_integral_with_mean_part() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 16).unwrap();
        let f = SpectralField::from_fn(g, SymmetryClass::EvenInZ, |_, _, z| 1.0 + (PI * z).cos());
        let vi = f.vertical_integral(VerticalLevel::Bottom);
        assert!((vi.mean_magnitude() - 1.0).abs() < 1e-14);
        let at = vi.sample_at(0.3);
        let expect = 1.3 + (0.3 * PI).sin() / PI;
        assert!(at.iter().all(|v| (v - expect).abs() < 1e-13));
        assert!(vi.into_field(1e-10).is_err());
    }

    #[test]
    fn vertical_integral_inverts_dz() {
        let g = g3(16);
        let mut f = random_field(g, 11).truncated();
        let plane = 256;
        for c in &mut f.coeffs_mut()[..plane] {
            *c = Complex64::default();
        }
        let back = f.vertical_integral(VerticalLevel::Middle).into_field(1e-12).unwrap().derivative(Axis::Z, 1);
        assert!(back.sub(&f).unwrap().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn symmetry_projection_examples() {
        let g = g3(8);
        let f = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, y, z| {
            (PI * z).cos() * (2.0 * PI * x).sin() * (1.0 + (2.0 * PI * y).cos())
        });
        let e = f.project_symmetry(SymmetryClass::EvenInZ);
        assert!(e.sub(&f).unwrap().max_abs_coeff() < 1e-15);
        assert!(f.project_symmetry(SymmetryClass::OddInZ).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn symmetry_split_matches_pointwise_oracle() {
        let g = g3(8);
        let f = random_field(g, 5);
        let vals = f.to_physical();
        let mut even = vec![0.0; g.len()];
        for (idx, e) in even.iter_mut().enumerate() {
            let (i, j, k) = g.unindex(idx);
            *e = 0.5 * (vals[idx] + vals[g.index(i, j, g.mirror_z(k))]);
        }
        let pe = f.project_symmetry(SymmetryClass::EvenInZ);
        let po = f.project_symmetry(SymmetryClass::OddInZ);
        assert!(max_diff(&pe.to_physical(), &even) < 1e-13);
        let re = pe.add(&po).unwrap();
        assert!(max_diff(&re.to_physical(), &vals) < 1e-13);
        // idempotent
        assert_eq!(pe.project_symmetry(SymmetryClass::EvenInZ), pe);
    }

    #[test]
    fn dealiased_product_of_sines() {
        let g = g3(8);
        let s = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, _, _| (2.0 * PI * x).sin());
        let p = s.dealiased_product(&s).unwrap().to_physical();
        let expect = sample(&g, |x, _, _| 0.5 * (1.0 - (4.0 * PI * x).cos()));
        assert!(max_diff(&p, &expect) < 1e-14);
    }

    #[test]
    fn product_with_one_keeps_band() {
        let g = g3(16);
        let b = random_field(g, 9);
        let one = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |_, _, _| 1.0);
        let p = one.dealiased_product(&b).unwrap();
        assert!(p.sub(&b.truncated()).unwrap().max_abs_coeff() < 1e-15);
        assert_eq!(p, b.dealiased_product(&one).unwrap());
    }

    #[test]
    fn aliasing_witness_on_8_points() {
        // mode 3 x mode 3 = mode 6, which aliases onto -2 on 8 points
        let g = Grid::new2(1.0, 1.0, 8, 8).unwrap();
        let f = |x: f64| (6.0 * PI * x).cos();
        let a = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, _, _| f(x));
        let minus2 = g.index(6, 0, 0);
        let aliased = a.aliased_product(&a).unwrap();
        let dealiased = a.dealiased_product(&a).unwrap();
        // exact product on a fine grid has nothing at mode -2
        let fine = Grid::new2(1.0, 1.0, 32, 32).unwrap();
        let af = SpectralField::from_fn(fine, SymmetryClass::NoSymmetry, |x, _, _| f(x));
        let exact = af.aliased_product(&af).unwrap();
        assert!(exact.coeffs()[fine.index(30, 0, 0)].norm() < 1e-15);
        assert!(aliased.coeffs()[minus2].norm() > 0.1);
        assert!(dealiased.coeffs()[minus2].norm() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let g = Grid::new3(1.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let c = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |_, _, _| 2.0);
        for q in [2.0, 3.0, 7.5, 40.0] {
            assert!((c.norm(NormKind::Lq(q)).unwrap() - 2.0).abs() < 1e-13);
        }
        assert!((c.norm(NormKind::Linf).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(c.norm(NormKind::Lq(1.5)), Err(Error::InvalidExponent(_))));
        assert!(c.norm(NormKind::Lq(f64::INFINITY)).is_err());

        let g2 = Grid::new2(1.0, 1.0, 16, 16).unwrap();
        let s = SpectralField::from_fn(g2, SymmetryClass::NoSymmetry, |x, _, _| (2.0 * PI * x).sin());
        let l2 = 0.5f64.sqrt();
        assert!((s.norm(NormKind::L2).unwrap() - l2).abs() < 1e-14);
        let h1 = (l2 * l2 + 4.0 * PI * PI * l2 * l2).sqrt();
        assert!((s.norm(NormKind::H1).unwrap() - h1).abs() < 1e-12);
        assert!((s.l2_physical() - l2).abs() < 1e-14);
    }

    #[test]
    fn leray_examples() {
        let g = Grid::new2(1.0, 1.0, 16, 16).unwrap();
        // grad-perp of sin sin
        let u1 = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, y, _| {
            -2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
        });
        let u2 = SpectralField::from_fn(g, SymmetryClass::NoSymmetry, |x, y, _| {
            2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()
        });
        let mut u = [u1.clone(), u2.clone()];
        leray_horizontal(&mut u, LerayScope::AllModes).unwrap();
        assert!(u[0].sub(&u1).unwrap().max_abs_coeff() < 1e-14);
        let mut grad = [u2.clone(), u1.scale(-1.0)];
        // (u2, -u1) is a pure gradient of the stream function
        leray_horizontal(&mut grad, LerayScope::AllModes).unwrap();
        assert!(grad[0].max_abs_coeff() < 1e-14 && grad[1].max_abs_coeff() < 1e-14);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_and_parseval(seed in 0u64..1000, n in proptest::sample::select(vec![8usize, 12, 16])) {
            let g = Grid::new3(1.3, 0.7, 2.0, n, n, n).unwrap();
            let f = random_field(g, seed);
            let vals = f.to_physical();
            let back = SpectralField::from_physical(g, &vals, SymmetryClass::NoSymmetry).unwrap();
            proptest::prop_assert!(back.sub(&f).unwrap().max_abs_coeff() < 1e-13);
            proptest::prop_assert!((f.l2() - f.l2_physical()).abs() < 1e-10 * f.l2());
        }

        #[test]
        fn leray_idempotent(seed in 0u64..1000) {
            let g = Grid::new2(1.0, 1.0, 16, 16).unwrap();
            let mut u = [random_field(g, seed), random_field(g, seed + 1)];
            leray_horizontal(&mut u, LerayScope::AllModes).unwrap();
            let div = divergence_h(&u).unwrap();
            proptest::prop_assert!(div.max_abs_coeff() < 1e-12);
            let mut again = u.clone();
            leray_horizontal(&mut again, LerayScope::AllModes).unwrap();
            proptest::prop_assert!(again[0].sub(&u[0]).unwrap().max_abs_coeff() < 1e-14);
        }
    }
}

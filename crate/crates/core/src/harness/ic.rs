//! Named initial-condition generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sns::make_admissible;
use crate::spectral::{Axis, Grid, NormKind, PhysicalField, SpectralField, SymmetryClass};
use crate::spectral::vector_norm;
use crate::tam::{TamConfig, TamState};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// Single-mode cellular flow `A (sin kx x cos ky y, cos kx x sin ky y) cos(pi z / h)`.
    TaylorGreen { amplitude: f64 },
    /// Random band-limited data with sup norm `amplitude`.
    RandomSmooth { amplitude: f64, seed: u64, kmax: usize },
    /// `a |z|^delta + sigma chi_(-eta, eta)`, temperature-free.
    Discontinuous { a: [f64; 2], delta: f64, eta: f64, sigma: [f64; 2] },
    /// Gaussian vortex with a divergent baroclinic bump and `q_e <= 0` (planar).
    Vortical { amplitude: f64 },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Zero => "zero",
            InitialCondition::TaylorGreen { .. } => "taylor-green",
            InitialCondition::RandomSmooth { .. } => "random-smooth",
            InitialCondition::Discontinuous { .. } => "discontinuous",
            InitialCondition::Vortical { .. } => "vortical",
        }
    }
}

fn unsupported(ic: &InitialCondition, what: &str) -> Error {
    Error::InvalidParameter(format!("initial condition '{}' is not defined for {what}", ic.name()))
}

fn random_band(g: Grid, sym: SymmetryClass, kmax: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let k = kmax as i64;
    let mut f = SpectralField::zeros(g, SymmetryClass::NoSymmetry);
    for (idx, c) in f.coeffs_mut().iter_mut().enumerate() {
        let (i, j, l) = g.unindex(idx);
        let m = [g.mode(0, i), g.mode(1, j), if g.is_planar() { 0 } else { g.mode(2, l) }];
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        if m.iter().all(|x| x.abs() <= k) && m.iter().any(|x| *x != 0) {
            let r2 = m.iter().map(|x| (x * x) as f64).sum::<f64>();
            *c = Complex64::new(re, im) * (-r2 / (k * k) as f64).exp();
        }
    }
    // taking the real part of the synthesis makes the coefficients Hermitian
    let real = f.to_physical();
    SpectralField::from_physical(g, &real, sym).expect("grid-sized values")
}

fn normalise(fields: &mut [SpectralField], amplitude: f64) -> Result<()> {
    let refs: Vec<&SpectralField> = fields.iter().collect();
    let sup = vector_norm(&refs, NormKind::Linf)?;
    if sup > 0.0 {
        for f in fields.iter_mut() {
            *f = f.scale(amplitude / sup);
        }
    }
    Ok(())
}

/// Horizontal velocity `v0` on a 3-D grid with `Lz = 2h`: even in z, zero mean and
/// satisfying the barotropic constraint.
pub fn horizontal_velocity(ic: &InitialCondition, g: Grid) -> Result<[SpectralField; 2]> {
    if g.is_planar() {
        return Err(Error::InvalidGrid("3-D grid required".into()));
    }
    let even = SymmetryClass::EvenInZ;
    let mut v = match ic {
        InitialCondition::Zero => [SpectralField::zeros(g, even), SpectralField::zeros(g, even)],
        InitialCondition::TaylorGreen { amplitude: a } => {
            let (kx, ky, kz) = (2.0 * PI / g.lengths[0], 2.0 * PI / g.lengths[1], 2.0 * PI / g.lengths[2]);
            let a = *a;
            [
                SpectralField::from_fn(g, even, |x, y, z| a * (kx * x).sin() * (ky * y).cos() * (kz * z).cos()),
                SpectralField::from_fn(g, even, |x, y, z| a * (kx * x).cos() * (ky * y).sin() * (kz * z).cos()),
            ]
        }
        InitialCondition::RandomSmooth { amplitude, seed, kmax } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut v = [random_band(g, even, *kmax, &mut rng), random_band(g, even, *kmax, &mut rng)];
            make_admissible(&mut v)?;
            normalise(&mut v, *amplitude)?;
            v
        }
        InitialCondition::Discontinuous { a, delta, eta, sigma } => {
            let (a, delta, eta, sigma) = (*a, *delta, *eta, *sigma);
            let f = |c: usize| {
                SpectralField::from_fn(g, even, move |_, _, z| {
                    a[c] * z.abs().powf(delta) + if z.abs() < eta { sigma[c] } else { 0.0 }
                })
            };
            return Ok([f(0), f(1)]);
        }
        InitialCondition::Vortical { .. } => return Err(unsupported(ic, "3-D systems")),
    };
    make_admissible(&mut v)?;
    Ok(v)
}

/// Temperature for the primitive equations (odd in z).
pub fn temperature(ic: &InitialCondition, g: Grid) -> Result<SpectralField> {
    let odd = SymmetryClass::OddInZ;
    Ok(match ic {
        InitialCondition::Zero => SpectralField::zeros(g, odd),
        InitialCondition::TaylorGreen { amplitude } => {
            let (kx, ky, kz) = (2.0 * PI / g.lengths[0], 2.0 * PI / g.lengths[1], 2.0 * PI / g.lengths[2]);
            let a = 0.5 * amplitude;
            SpectralField::from_fn(g, odd, |x, y, z| a * (kx * x).cos() * (ky * y).cos() * (kz * z).sin())
        }
        InitialCondition::RandomSmooth { amplitude, seed, kmax } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
            let mut t = [random_band(g, odd, *kmax, &mut rng)];
            normalise(&mut t, *amplitude)?;
            let [t] = t;
            t
        }
        _ => return Err(unsupported(ic, "the temperature field")),
    })
}

/// Initial state of the tropical model; `q_e <= 0` holds exactly on the grid.
pub fn tam_state(ic: &InitialCondition, cfg: &TamConfig) -> Result<TamState> {
    let g = cfg.grid;
    let ns = SymmetryClass::NoSymmetry;
    match ic {
        InitialCondition::Zero => Ok(TamState::uniform(0.0, -cfg.qhat, cfg)),
        InitialCondition::Vortical { amplitude } => {
            let a = *amplitude;
            let (l1, l2) = (g.lengths[0], g.lengths[1]);
            let gauss = move |cx: f64, cy: f64| {
                move |x: f64, y: f64, _: f64| {
                    let r2 = ((x - cx) / (0.1 * l1)).powi(2) + ((y - cy) / (0.1 * l2)).powi(2);
                    (-r2).exp()
                }
            };
            let psi = SpectralField::from_fn(g, ns, gauss(0.5 * l1, 0.5 * l2)).scale(a * 0.1 * l1);
            let u = [psi.derivative(Axis::Y, 1).scale(-1.0), psi.derivative(Axis::X, 1)];
            let phi = SpectralField::from_fn(g, ns, gauss(0.45 * l1, 0.55 * l2)).scale(0.5 * a * 0.1 * l1);
            let v = [phi.derivative(Axis::X, 1), phi.derivative(Axis::Y, 1)];
            let te = SpectralField::from_fn(g, ns, gauss(0.55 * l1, 0.5 * l2)).scale(0.5 * a);
            let bump = gauss(0.5 * l1, 0.45 * l2);
            let qe = crate::spectral::sample(&g, |x, y, z| -0.2 * a * (1.0 - bump(x, y, z)));
            TamState::new(u, v, te, PhysicalField::new(g, qe)?, cfg)
        }
        _ => Err(unsupported(ic, "the tropical model")),
    }
}

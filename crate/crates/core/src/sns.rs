//! Scaled anisotropic Navier-Stokes equations on `M x (-1, 1)`:
//!
//! ```text
//! d_t v + (v.grad_H) v + w d_z v - Delta v + grad_H p = 0
//! div_H v + d_z w = 0
//! eps^2 (d_t w + v.grad_H w + w d_z w - Delta w) + d_z p = 0
//! ```
//!
//! with `v` even and `w` odd in `z`. The vertical equation is carried divided by
//! `eps^2`, so incompressibility is enforced by an oblique projection whose symbol
//! is `|k_H|^2 + eps^-2 k_z^2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::imex::{self, Dissipation};
use crate::nonlinear::Velocity;
use crate::spectral::{divergence_h, Axis, Grid, LerayScope, SpectralField, SymmetryClass, VerticalLevel};

#[derive(Clone, Debug, PartialEq)]
pub struct SnsConfig {
    pub grid: Grid,
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Switch for the advection terms (linear runs are used for order checks).
    pub nonlinear: bool,
}

impl SnsConfig {
    pub fn new(grid: Grid, epsilon: f64, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            epsilon,
            dt,
            t_end,
            cfl: 0.5,
            nonlinear: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must be > 0", self.epsilon)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.cfl > 0.0) {
            return Err(Error::InvalidParameter("dt > 0, t_end >= 0 and cfl > 0 required".into()));
        }
        if self.grid.is_planar() {
            return Err(Error::InvalidGrid("the SNS system needs a 3-D grid".into()));
        }
        if (self.grid.lengths[2] - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "SNS domain is M x (-1, 1): Lz must be 2, got {}",
                self.grid.lengths[2]
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnsState {
    pub v: [SpectralField; 2],
    pub w: SpectralField,
    /// Pressure from the current state (even in z).
    pub p: SpectralField,
    pub t: f64,
}

/// `w0 = -int_0^z div_H v0 dz'`.
pub fn init_w_from_v(v0: &[SpectralField; 2]) -> Result<SpectralField> {
    let div = divergence_h(v0)?;
    let scale = v0[0].max_abs_coeff().max(v0[1].max_abs_coeff()).max(1.0);
    let w = div.vertical_integral(VerticalLevel::Middle).into_field(1e-10 * scale)?;
    Ok(w.scale(-1.0).project_symmetry(SymmetryClass::OddInZ))
}

impl SnsState {
    /// Builds the initial state from horizontal velocity alone.
    ///
    /// `v0` must be even in z, have zero domain mean and a horizontally
    /// divergence-free vertical mean.
    pub fn from_horizontal(v0: [SpectralField; 2], cfg: &SnsConfig) -> Result<Self> {
        cfg.validate()?;
        for c in &v0 {
            c.grid().ensure_same(&cfg.grid)?;
        }
        let scale = v0[0].max_abs_coeff().max(v0[1].max_abs_coeff()).max(1.0);
        let mean = v0[0].mean().abs().max(v0[1].mean().abs());
        if mean > 1e-12 * scale {
            return Err(Error::NonzeroMean(mean));
        }
        let drift = v0[0].symmetry_residual().max(v0[1].symmetry_residual());
        if v0[0].sym() != SymmetryClass::EvenInZ || v0[1].sym() != SymmetryClass::EvenInZ || drift > 1e-12 {
            return Err(Error::Precondition("v0 must be even in z".into()));
        }
        let w = init_w_from_v(&v0)?;
        let mut state = Self {
            v: v0,
            w,
            p: SpectralField::zeros(cfg.grid, SymmetryClass::EvenInZ),
            t: 0.0,
        };
        let rhs = tendency(cfg, &state)?;
        state.p = pressure(cfg, &rhs.comps);
        Ok(state)
    }

    pub fn zero(cfg: &SnsConfig) -> Self {
        let z = |s| SpectralField::zeros(cfg.grid, s);
        Self {
            v: [z(SymmetryClass::EvenInZ), z(SymmetryClass::EvenInZ)],
            w: z(SymmetryClass::OddInZ),
            p: z(SymmetryClass::EvenInZ),
            t: 0.0,
        }
    }

    /// `1/2 (||v||^2 + eps^2 ||w||^2)`.
    pub fn energy(&self, epsilon: f64) -> f64 {
        0.5 * (self.v[0].l2().powi(2) + self.v[1].l2().powi(2) + epsilon * epsilon * self.w.l2().powi(2))
    }

    /// `||grad v||^2 + eps^2 ||grad w||^2`.
    pub fn dissipation(&self, epsilon: f64) -> f64 {
        self.v[0].gradient_sq() + self.v[1].gradient_sq() + epsilon * epsilon * self.w.gradient_sq()
    }

    /// `||div_H v + d_z w||_2`.
    pub fn divergence_residual(&self) -> f64 {
        divergence_h(&self.v)
            .and_then(|d| d.add(&self.w.derivative(Axis::Z, 1)))
            .map(|d| d.l2())
            .unwrap_or(f64::INFINITY)
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|c| c.is_finite()) && self.w.is_finite()
    }
}

/// `||d_z p_eps||_2`, the defect of hydrostatic balance.
pub fn hydrostatic_residual(state: &SnsState) -> f64 {
    state.p.derivative(Axis::Z, 1).l2()
}

pub(crate) struct Tendency {
    /// `-(u . grad) u` for `(v1, v2, w)`.
    comps: [SpectralField; 3],
    courant_rate: f64,
}

fn tendency(cfg: &SnsConfig, s: &SnsState) -> Result<Tendency> {
    if !cfg.nonlinear {
        let z = |f: &SpectralField| SpectralField::zeros(cfg.grid, f.sym());
        return Ok(Tendency {
            comps: [z(&s.v[0]), z(&s.v[1]), z(&s.w)],
            courant_rate: 0.0,
        });
    }
    let vel = Velocity::new(&[(&s.v[0], Axis::X), (&s.v[1], Axis::Y), (&s.w, Axis::Z)]);
    Ok(Tendency {
        comps: [
            vel.advect(&s.v[0])?.scale(-1.0),
            vel.advect(&s.v[1])?.scale(-1.0),
            vel.advect(&s.w)?.scale(-1.0),
        ],
        courant_rate: vel.courant_rate(),
    })
}

/// Oblique projection onto `div_H v + d_z w = 0` along `(grad_H, eps^-2 d_z) phi`.
fn project(eps: f64, u: &mut [SpectralField; 3]) {
    let g = *u[0].grid();
    let inv = 1.0 / (eps * eps);
    let [a, b, w] = u;
    let (a, b, w) = (a.coeffs_mut(), b.coeffs_mut(), w.coeffs_mut());
    for idx in 0..g.len() {
        let (i, j, k) = g.unindex(idx);
        let k1 = g.first_derivative_symbol(0, i);
        let k2 = g.first_derivative_symbol(1, j);
        let k3 = g.first_derivative_symbol(2, k);
        let s = k1 * k1 + k2 * k2 + inv * k3 * k3;
        if s == 0.0 {
            continue;
        }
        let dot: Complex64 = (k1 * a[idx] + k2 * b[idx] + k3 * w[idx]) / s;
        a[idx] -= k1 * dot;
        b[idx] -= k2 * dot;
        w[idx] -= inv * k3 * dot;
    }
}

/// Solves `(Delta_H + eps^-2 d_z^2) p = div_H R_H + d_z R_w` for `R = -N`.
fn pressure(cfg: &SnsConfig, r: &[SpectralField; 3]) -> SpectralField {
    let g = cfg.grid;
    let inv = 1.0 / (cfg.epsilon * cfg.epsilon);
    let mut p = SpectralField::zeros(g, SymmetryClass::EvenInZ);
    for (idx, out) in p.coeffs_mut().iter_mut().enumerate() {
        let (i, j, k) = g.unindex(idx);
        let k1 = g.first_derivative_symbol(0, i);
        let k2 = g.first_derivative_symbol(1, j);
        let k3 = g.first_derivative_symbol(2, k);
        let s = k1 * k1 + k2 * k2 + inv * k3 * k3;
        if s == 0.0 {
            continue;
        }
        let div = Complex64::i() * (k1 * r[0].coeffs()[idx] + k2 * r[1].coeffs()[idx] + k3 * r[2].coeffs()[idx]);
        *out = -div / s;
    }
    p.project_symmetry(SymmetryClass::EvenInZ)
}

/// Stateful CN/AB2 integrator for the SNS system.
pub struct SnsSolver {
    cfg: SnsConfig,
    state: SnsState,
    now: Option<Tendency>,
    prev: Option<Tendency>,
    steps: usize,
    max_divergence: f64,
    max_symmetry_drift: f64,
}

impl SnsSolver {
    pub fn new(cfg: SnsConfig, state: SnsState) -> Result<Self> {
        cfg.validate()?;
        state.v[0].grid().ensure_same(&cfg.grid)?;
        let div = state.divergence_residual();
        Ok(Self {
            cfg,
            state,
            now: None,
            prev: None,
            steps: 0,
            max_divergence: div,
            max_symmetry_drift: 0.0,
        })
    }

    pub fn state(&self) -> &SnsState {
        &self.state
    }

    pub fn into_state(self) -> SnsState {
        self.state
    }

    pub fn config(&self) -> &SnsConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn max_divergence(&self) -> f64 {
        self.max_divergence
    }

    pub fn max_symmetry_drift(&self) -> f64 {
        self.max_symmetry_drift
    }

    /// Advances one step. On error the state is left untouched.
    pub fn step(&mut self) -> Result<()> {
        let cfg = &self.cfg;
        let dt = cfg.dt;
        let now = match self.now.take() {
            Some(n) => n,
            None => tendency(cfg, &self.state)?,
        };
        let courant = dt * now.courant_rate;
        if courant > cfg.cfl {
            let suggested_dt = cfg.cfl / now.courant_rate;
            let t = self.state.time();
            self.now = Some(now);
            return Err(Error::Cfl {
                time: t,
                courant,
                limit: cfg.cfl,
                suggested_dt,
            });
        }
        let u = [&self.state.v[0], &self.state.v[1], &self.state.w];
        let explicit: [SpectralField; 3] = match &self.prev {
            Some(prev) => [
                imex::ab2(&now.comps[0], &prev.comps[0])?,
                imex::ab2(&now.comps[1], &prev.comps[1])?,
                imex::ab2(&now.comps[2], &prev.comps[2])?,
            ],
            None => {
                // bootstrap: tendency at a half-step predictor
                let mut half = [
                    imex::predictor_update(u[0], &now.comps[0], 0.5 * dt, Dissipation::Full, 1.0)?,
                    imex::predictor_update(u[1], &now.comps[1], 0.5 * dt, Dissipation::Full, 1.0)?,
                    imex::predictor_update(u[2], &now.comps[2], 0.5 * dt, Dissipation::Full, 1.0)?,
                ];
                project(cfg.epsilon, &mut half);
                let [v1, v2, w] = half;
                let hs = SnsState {
                    v: [v1, v2],
                    w,
                    p: self.state.p.clone(),
                    t: self.state.t + 0.5 * dt,
                };
                tendency(cfg, &hs)?.comps
            }
        };
        let mut next = [
            imex::cn_update(u[0], &explicit[0], dt, Dissipation::Full, 1.0)?,
            imex::cn_update(u[1], &explicit[1], dt, Dissipation::Full, 1.0)?,
            imex::cn_update(u[2], &explicit[2], dt, Dissipation::Full, 1.0)?,
        ];
        project(cfg.epsilon, &mut next);
        let drift = next.iter().map(|f| f.symmetry_residual()).fold(0.0, f64::max);
        let [v1, v2, w] = next;
        let mut state = SnsState {
            v: [v1.project_symmetry(SymmetryClass::EvenInZ), v2.project_symmetry(SymmetryClass::EvenInZ)],
            w: w.project_symmetry(SymmetryClass::OddInZ),
            p: SpectralField::zeros(cfg.grid, SymmetryClass::EvenInZ),
            t: self.state.t + dt,
        };
        if !state.is_finite() {
            self.now = Some(now);
            return Err(Error::BlowUp(state.t));
        }
        let fresh = tendency(cfg, &state)?;
        state.p = pressure(cfg, &fresh.comps);
        self.max_divergence = self.max_divergence.max(state.divergence_residual());
        self.max_symmetry_drift = self.max_symmetry_drift.max(drift);
        self.state = state;
        self.prev = Some(now);
        self.now = Some(fresh);
        self.steps += 1;
        Ok(())
    }
}

impl SnsState {
    pub fn time(&self) -> f64 {
        self.t
    }
}

/// A single bootstrap step from `state` (no multistep history).
pub fn sns_step(state: &SnsState, cfg: &SnsConfig) -> Result<SnsState> {
    let mut solver = SnsSolver::new(cfg.clone(), state.clone())?;
    solver.step()?;
    Ok(solver.into_state())
}

/// Barotropic Leray projection re-exported for building admissible `v0`.
pub fn make_admissible(v: &mut [SpectralField; 2]) -> Result<()> {
    crate::spectral::leray_horizontal(v, LerayScope::VerticalMean)?;
    for c in v.iter_mut() {
        c.coeffs_mut()[0] = Complex64::default();
        *c = c.project_symmetry(SymmetryClass::EvenInZ);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new3(1.0, 1.0, 2.0, n, n, n).unwrap()
    }

    fn even(g: Grid, f: impl Fn(f64, f64, f64) -> f64) -> SpectralField {
        SpectralField::from_fn(g, SymmetryClass::EvenInZ, f)
    }

    fn random_v(g: Grid, amp: f64, seed: u64) -> [SpectralField; 2] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for _ in 0..6 {
            modes.push((
                rng.gen_range(1..3) as f64,
                rng.gen_range(0..3) as f64,
                rng.gen_range(0..3) as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..6.0),
            ));
        }
        let make = |shift: f64| {
            even(g, |x, y, z| {
                modes
                    .iter()
                    .map(|&(a, b, c, amp_m, ph)| {
                        amp * amp_m * (2.0 * PI * (a * x + b * y) + ph + shift).sin() * (c * PI * z).cos()
                    })
                    .sum()
            })
        };
        let mut v = [make(0.0), make(1.3)];
        make_admissible(&mut v).unwrap();
        v
    }

    #[test]
    fn w_from_constant_horizontal_velocity_vanishes() {
        let g = grid(8);
        let v = [even(g, |_, _, _| 0.7), even(g, |_, _, _| 0.7)];
        assert!(init_w_from_v(&v).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn w_from_shear_mode() {
        let g = grid(16);
        let v = [
            even(g, |x, _, z| (2.0 * PI * x).sin() * (PI * z).cos()),
            SpectralField::zeros(g, SymmetryClass::EvenInZ),
        ];
        let w = init_w_from_v(&v).unwrap();
        assert_eq!(w.sym(), SymmetryClass::OddInZ);
        let expect = SpectralField::from_fn(g, SymmetryClass::OddInZ, |x, _, z| {
            -2.0 * (2.0 * PI * x).cos() * (PI * z).sin()
        });
        assert!(w.sub(&expect).unwrap().max_abs_coeff() < 1e-14);
    }

    #[test]
    fn w_from_random_v_is_divergence_free() {
        let g = grid(16);
        let cfg = SnsConfig::new(g, 0.1, 1e-3, 0.0).unwrap();
        let s = SnsState::from_horizontal(random_v(g, 1.0, 4), &cfg).unwrap();
        assert!(s.divergence_residual() < 1e-12);
    }

    #[test]
    fn rejects_nonzero_mean() {
        let g = grid(8);
        let cfg = SnsConfig::new(g, 0.1, 1e-3, 0.0).unwrap();
        let v = [even(g, |_, _, _| 1.0), SpectralField::zeros(g, SymmetryClass::EvenInZ)];
        assert!(matches!(SnsState::from_horizontal(v, &cfg), Err(Error::NonzeroMean(_))));
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid(8);
        let cfg = SnsConfig::new(g, 0.1, 1e-2, 0.1).unwrap();
        let s = sns_step(&SnsState::zero(&cfg), &cfg).unwrap();
        assert_eq!(s.v[0].max_abs_coeff(), 0.0);
        assert_eq!(s.w.max_abs_coeff(), 0.0);
        assert_eq!(hydrostatic_residual(&s), 0.0);
    }

    #[test]
    fn shear_flow_decays_with_cn_factor() {
        let g = grid(16);
        let dt = 1e-3;
        let cfg = SnsConfig::new(g, 0.2, dt, 0.0).unwrap();
        let a0 = 0.8;
        let v = [even(g, |_, y, _| a0 * (2.0 * PI * y).sin()), SpectralField::zeros(g, SymmetryClass::EvenInZ)];
        let s0 = SnsState::from_horizontal(v, &cfg).unwrap();
        let mut solver = SnsSolver::new(cfg, s0.clone()).unwrap();
        for _ in 0..3 {
            solver.step().unwrap();
        }
        let lam = 4.0 * PI * PI;
        let a = 0.5 * dt * lam;
        let factor = ((1.0 - a) / (1.0 + a)).powi(3);
        let got = solver.state().v[0].clone();
        assert!(got.sub(&s0.v[0].scale(factor)).unwrap().max_abs_coeff() < 1e-14);
        let exact = (-lam * 3.0 * dt).exp();
        assert!((factor - exact).abs() < 3.0 * (lam * dt).powi(3) / 12.0 * 1.01);
    }

    #[test]
    fn columnar_flow_is_hydrostatic() {
        let g = grid(16);
        let cfg = SnsConfig::new(g, 0.1, 1e-3, 0.0).unwrap();
        let v = [
            even(g, |x, y, _| (2.0 * PI * x).sin() * (2.0 * PI * y).cos()),
            even(g, |x, y, _| -(2.0 * PI * x).cos() * (2.0 * PI * y).sin()),
        ];
        let s = SnsState::from_horizontal(v, &cfg).unwrap();
        assert!(s.w.max_abs_coeff() < 1e-15);
        assert!(hydrostatic_residual(&s) < 1e-12);
    }

    #[test]
    fn cfl_violation_is_rejected_with_suggestion() {
        let g = grid(16);
        let cfg = SnsConfig::new(g, 0.1, 0.05, 1.0).unwrap();
        let s = SnsState::from_horizontal(random_v(g, 5.0, 2), &cfg).unwrap();
        let mut solver = SnsSolver::new(cfg, s.clone()).unwrap();
        match solver.step() {
            Err(Error::Cfl { suggested_dt, .. }) => assert!(suggested_dt < 0.05),
            other => panic!("expected CFL error, got {other:?}"),
        }
        assert_eq!(solver.state(), &s);
    }

    #[test]
    fn invariants_and_energy_budget_small_amplitude() {
        let g = grid(16);
        let dt = 1e-3;
        let eps = 0.3;
        let cfg = SnsConfig::new(g, eps, dt, 0.01).unwrap();
        let s0 = SnsState::from_horizontal(random_v(g, 1e-5, 8), &cfg).unwrap();
        let mut solver = SnsSolver::new(cfg, s0).unwrap();
        let mut e_prev = solver.state().energy(eps);
        let mut d_prev = solver.state().dissipation(eps);
        for _ in 0..10 {
            solver.step().unwrap();
            let s = solver.state();
            assert!(s.divergence_residual() < 1e-10);
            assert_eq!(s.v[0].symmetry_residual(), 0.0);
            assert_eq!(s.w.symmetry_residual(), 0.0);
            let e = s.energy(eps);
            let d = s.dissipation(eps);
            let res = ((e - e_prev) / dt + 0.5 * (d + d_prev)).abs();
            assert!(res < 1e-8, "budget residual {res}");
            e_prev = e;
            d_prev = d;
        }
    }
}

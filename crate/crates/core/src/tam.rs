//! Moist tropical atmosphere model on a periodic box, in the equivalent variables
//! `T_e = q + theta`, `q_e = q - alpha theta - qhat`:
//!
//! ```text
//! d_t u + (u.grad) u - mu Delta u + grad p + div(v (x) v) = 0,   div u = 0
//! d_t v + (u.grad) v - mu Delta v + (v.grad) u = grad(T_e - q_e) / (1 + alpha)
//! d_t T_e + u.grad T_e - (1 - Qbar) div v = 0
//! d_t q_e + u.grad q_e + (Qbar + alpha) div v = -(1 + alpha)/eps q_e^+
//! ```
//!
//! The limit mode replaces the sink by the constraint `q_e <= 0`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::imex::{self, Dissipation};
use crate::nonlinear::Velocity;
use crate::spectral::{
    divergence_h, leray_horizontal, Axis, Grid, LerayScope, PhysicalField, SpectralField, SymmetryClass,
};

const NS: SymmetryClass = SymmetryClass::NoSymmetry;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TamMode {
    /// Precipitation relaxation with time scale `epsilon`.
    Relaxed { epsilon: f64 },
    /// The `epsilon -> 0` constrained system.
    Limit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TamConfig {
    pub grid: Grid,
    pub alpha: f64,
    pub qbar: f64,
    pub qhat: f64,
    pub mode: TamMode,
    pub mu: f64,
    pub h_height: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// With `false`, `q_e` is frozen and drops out of the `v` equation.
    pub moisture: bool,
    pub nonlinear: bool,
}

/// The default `2 pi x 2 pi` box.
pub fn default_box(n1: usize, n2: usize) -> Result<Grid> {
    Grid::new2(2.0 * PI, 2.0 * PI, n1, n2)
}

/// Checks `0 < Qbar < 1` and `alpha + Qbar > 0`.
pub fn check_moist_constants(alpha: f64, qbar: f64) -> Result<()> {
    if !(qbar > 0.0 && qbar < 1.0) {
        return Err(Error::InvalidParameter(format!("Qbar = {qbar} violates 0 < Qbar < 1")));
    }
    if !(alpha + qbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha}, Qbar = {qbar} violates alpha + Qbar > 0"
        )));
    }
    Ok(())
}

impl TamConfig {
    /// Defaults: `mu = 1`, `H = 1`, `cfl = 0.5`.
    pub fn new(grid: Grid, alpha: f64, qbar: f64, qhat: f64, mode: TamMode, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            alpha,
            qbar,
            qhat,
            mode,
            mu: 1.0,
            h_height: 1.0,
            dt,
            t_end,
            cfl: 0.5,
            moisture: true,
            nonlinear: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.grid.is_planar() {
            return Err(Error::InvalidGrid("the tropical model needs a planar grid".into()));
        }
        check_moist_constants(self.alpha, self.qbar)?;
        if !(self.qhat > 0.0) {
            return Err(Error::InvalidParameter(format!("qhat = {} violates qhat > 0", self.qhat)));
        }
        if let TamMode::Relaxed { epsilon } = self.mode {
            if !(epsilon > 0.0) {
                return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
            }
        }
        if !(self.mu > 0.0) || !(self.h_height > 0.0) {
            return Err(Error::InvalidParameter("mu > 0 and H > 0 required".into()));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.cfl > 0.0) {
            return Err(Error::InvalidParameter("dt > 0, t_end >= 0 and cfl > 0 required".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Speed of the `v`/`T_e` gravity-wave coupling.
    fn wave_speed(&self) -> f64 {
        ((1.0 - self.qbar) / (1.0 + self.alpha)).max(0.0).sqrt()
            + if self.moisture {
                ((self.qbar + self.alpha) / (1.0 + self.alpha)).max(0.0).sqrt()
            } else {
                0.0
            }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TamState {
    pub u: [SpectralField; 2],
    pub v: [SpectralField; 2],
    pub te: SpectralField,
    /// Equivalent moisture, kept as grid values so that `q_e <= 0` is exact.
    pub qe: PhysicalField,
    pub t: f64,
}

impl TamState {
    /// Builds a state, projecting `u` onto divergence-free fields.
    pub fn new(
        mut u: [SpectralField; 2],
        v: [SpectralField; 2],
        te: SpectralField,
        qe: PhysicalField,
        cfg: &TamConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        for f in u.iter().chain(&v).chain(std::iter::once(&te)) {
            f.grid().ensure_same(&cfg.grid)?;
        }
        qe.grid.ensure_same(&cfg.grid)?;
        leray_horizontal(&mut u, LerayScope::AllModes)?;
        Ok(Self { u, v, te, qe, t: 0.0 })
    }

    /// `u = v = 0`, `T_e = te`, `q_e = qe` (uniform).
    pub fn uniform(te: f64, qe: f64, cfg: &TamConfig) -> Self {
        let g = cfg.grid;
        let z = || SpectralField::zeros(g, NS);
        let mut t = z();
        t.coeffs_mut()[0] = te.into();
        Self {
            u: [z(), z()],
            v: [z(), z()],
            te: t,
            qe: PhysicalField::constant(g, qe),
            t: 0.0,
        }
    }

    pub fn divergence_u(&self) -> f64 {
        divergence_h(&self.u).map(|d| d.l2()).unwrap_or(f64::INFINITY)
    }

    /// `||q_e^+||_2^2`.
    pub fn positive_part_sq(&self) -> f64 {
        let w = self.qe.grid.volume() / self.qe.grid.len() as f64;
        self.qe.values.iter().map(|q| q.max(0.0).powi(2)).sum::<f64>() * w
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|f| f.is_finite())
            && self.te.is_finite()
            && self.qe.values.iter().all(|q| q.is_finite())
    }
}

/// `T_e = q + theta`, `q_e = q - alpha theta - qhat`.
pub fn to_equivalent(
    theta: &PhysicalField,
    q: &PhysicalField,
    alpha: f64,
    qhat: f64,
) -> Result<(PhysicalField, PhysicalField)> {
    singular_check(alpha)?;
    theta.grid.ensure_same(&q.grid)?;
    let te = theta.values.iter().zip(&q.values).map(|(t, q)| q + t).collect();
    let qe = theta.values.iter().zip(&q.values).map(|(t, q)| q - alpha * t - qhat).collect();
    Ok((PhysicalField::new(theta.grid, te)?, PhysicalField::new(theta.grid, qe)?))
}

/// Inverse of [`to_equivalent`], returning `(theta, q)`.
pub fn from_equivalent(
    te: &PhysicalField,
    qe: &PhysicalField,
    alpha: f64,
    qhat: f64,
) -> Result<(PhysicalField, PhysicalField)> {
    singular_check(alpha)?;
    te.grid.ensure_same(&qe.grid)?;
    let theta: Vec<f64> = te
        .values
        .iter()
        .zip(&qe.values)
        .map(|(t, q)| (t - q - qhat) / (1.0 + alpha))
        .collect();
    let q = te.values.iter().zip(&theta).map(|(t, th)| t - th).collect();
    Ok((PhysicalField::new(te.grid, theta)?, PhysicalField::new(te.grid, q)?))
}

fn singular_check(alpha: f64) -> Result<()> {
    if (1.0 + alpha).abs() < 1e-14 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} makes the equivalent map singular")));
    }
    Ok(())
}

/// Precipitation `P = q_e^+ / eps` and the moisture source `-(1 + alpha) P`.
pub fn precipitation(qe: &PhysicalField, epsilon: f64, alpha: f64) -> Result<(PhysicalField, PhysicalField)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    let p: Vec<f64> = qe.values.iter().map(|q| q.max(0.0) / epsilon).collect();
    let s = p.iter().map(|p| -(1.0 + alpha) * p).collect();
    Ok((PhysicalField::new(qe.grid, p)?, PhysicalField::new(qe.grid, s)?))
}

/// Leray projection of a planar vector field.
pub fn leray_project(u: &[SpectralField; 2]) -> Result<[SpectralField; 2]> {
    let mut out = u.clone();
    leray_horizontal(&mut out, LerayScope::AllModes)?;
    Ok(out)
}

/// Baroclinic-mode reconstruction at one height.
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalSlice {
    pub z: f64,
    pub velocity: [Vec<f64>; 2],
    pub w: Vec<f64>,
    pub theta: Vec<f64>,
}

/// `V = u + v sqrt2 cos(pi z/H)`, `W = -(H/pi) div v sqrt2 sin(pi z/H)`, `Theta = theta sqrt2 sin(pi z/H)`.
pub fn reconstruct_baroclinic(
    u: &[SpectralField; 2],
    v: &[SpectralField; 2],
    theta: &SpectralField,
    z_samples: &[f64],
    h_height: f64,
) -> Result<Vec<VerticalSlice>> {
    if !(h_height > 0.0) {
        return Err(Error::InvalidParameter(format!("H = {h_height} must be > 0")));
    }
    let uu = [u[0].to_physical(), u[1].to_physical()];
    let vv = [v[0].to_physical(), v[1].to_physical()];
    let div = divergence_h(v)?.to_physical();
    let th = theta.to_physical();
    Ok(z_samples
        .iter()
        .map(|&z| {
            let c = SQRT_2 * (PI * z / h_height).cos();
            let s = SQRT_2 * (PI * z / h_height).sin();
            let comp = |a: usize| uu[a].iter().zip(&vv[a]).map(|(u, v)| u + c * v).collect();
            VerticalSlice {
                z,
                velocity: [comp(0), comp(1)],
                w: div.iter().map(|d| -(h_height / PI) * s * d).collect(),
                theta: th.iter().map(|t| s * t).collect(),
            }
        })
        .collect())
}

#[derive(Clone)]
struct Tendency {
    u: [SpectralField; 2],
    v: [SpectralField; 2],
    te: SpectralField,
    courant_rate: f64,
}

fn tendency(cfg: &TamConfig, u: &[SpectralField; 2], v: &[SpectralField; 2], te: &SpectralField, qe: &SpectralField) -> Result<Tendency> {
    let g = cfg.grid;
    let div_v = divergence_h(v)?;
    let forcing = if cfg.moisture { te.sub(qe)? } else { te.clone() };
    let grad = |f: &SpectralField, a: Axis| f.derivative(a, 1).scale(1.0 / (1.0 + cfg.alpha));
    let mut ru;
    let mut rv;
    let mut rt = div_v.scale(1.0 - cfg.qbar);
    let spacing = g.spacing(0).min(g.spacing(1));
    let mut courant_rate = cfg.wave_speed() / spacing;
    if cfg.nonlinear {
        let by_u = Velocity::new(&[(&u[0], Axis::X), (&u[1], Axis::Y)]);
        let by_v = Velocity::new(&[(&v[0], Axis::X), (&v[1], Axis::Y)]);
        let dv = div_v.to_physical_dealiased();
        let vv = [v[0].to_physical_dealiased(), v[1].to_physical_dealiased()];
        let mut nu = Vec::with_capacity(2);
        let mut nv = Vec::with_capacity(2);
        for c in 0..2 {
            // (u.grad) u + (v.grad) v + v div v
            let mut a = by_u.advect_values(&u[c]);
            for ((x, y), (vc, d)) in a.iter_mut().zip(by_v.advect_values(&v[c])).zip(vv[c].iter().zip(&dv)) {
                *x += y + vc * d;
            }
            nu.push(SpectralField::from_physical_dealiased(g, &a, NS)?.scale(-1.0));
            // (u.grad) v + (v.grad) u
            let mut b = by_u.advect_values(&v[c]);
            for (x, y) in b.iter_mut().zip(by_v.advect_values(&u[c])) {
                *x += y;
            }
            nv.push(SpectralField::from_physical_dealiased(g, &b, NS)?.scale(-1.0));
        }
        let [nv0, nv1]: [SpectralField; 2] = nv.try_into().expect("two components");
        ru = nu.try_into().expect("two components");
        rv = [nv0, nv1];
        rt = rt.sub(&by_u.advect(te)?)?;
        courant_rate += by_u.courant_rate().max(by_v.courant_rate());
    } else {
        ru = [SpectralField::zeros(g, NS), SpectralField::zeros(g, NS)];
        rv = [SpectralField::zeros(g, NS), SpectralField::zeros(g, NS)];
    }
    rv[0] = rv[0].add(&grad(&forcing, Axis::X))?;
    rv[1] = rv[1].add(&grad(&forcing, Axis::Y))?;
    leray_horizontal(&mut ru, LerayScope::AllModes)?;
    Ok(Tendency { u: ru, v: rv, te: rt, courant_rate })
}

/// `q~ = q_e + dt * (-(u.grad) q_e - (Qbar + alpha) div v)` on the grid.
fn transported_moisture(cfg: &TamConfig, state: &TamState, qe_hat: &SpectralField) -> Result<Vec<f64>> {
    let g = cfg.grid;
    let mut rate: Vec<f64> = divergence_h(&state.v)?
        .to_physical()
        .iter()
        .map(|d| -(cfg.qbar + cfg.alpha) * d)
        .collect();
    if cfg.nonlinear {
        let by_u = Velocity::new(&[(&state.u[0], Axis::X), (&state.u[1], Axis::Y)]);
        let adv = SpectralField::from_physical_dealiased(g, &by_u.advect_values(qe_hat), NS)?.to_physical();
        for (r, a) in rate.iter_mut().zip(adv) {
            *r -= a;
        }
    }
    Ok(state.qe.values.iter().zip(&rate).map(|(q, r)| q + cfg.dt * r).collect())
}

/// Discrete clip-inactive transport residual of a limit step: the largest
/// `|q_e^{n+1} - q~|` over grid points where `q~ < 0`.
pub fn limit_transport_residual(before: &TamState, after: &TamState, cfg: &TamConfig) -> Result<f64> {
    let q_tilde = transported_moisture(cfg, before, &before.qe.to_spectral())?;
    Ok(q_tilde
        .iter()
        .zip(&after.qe.values)
        .filter(|(qt, _)| **qt < 0.0)
        .map(|(qt, q)| (q - qt).abs())
        .fold(0.0, f64::max))
}

pub struct TamSolver {
    cfg: TamConfig,
    state: TamState,
    prev: Option<Tendency>,
    steps: usize,
    max_divergence: f64,
}

impl TamSolver {
    pub fn new(cfg: TamConfig, state: TamState) -> Result<Self> {
        cfg.validate()?;
        if cfg.mode == TamMode::Limit {
            check_nonpositive(&state.qe)?;
        }
        let div = state.divergence_u();
        Ok(Self {
            cfg,
            state,
            prev: None,
            steps: 0,
            max_divergence: div,
        })
    }

    pub fn state(&self) -> &TamState {
        &self.state
    }

    pub fn into_state(self) -> TamState {
        self.state
    }

    pub fn config(&self) -> &TamConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn max_divergence(&self) -> f64 {
        self.max_divergence
    }

    fn advance(&self, base: &TamState, e: &Tendency, dt: f64, predictor: bool) -> Result<([SpectralField; 2], [SpectralField; 2], SpectralField)> {
        let mu = self.cfg.mu;
        let upd = |a: &SpectralField, b: &SpectralField, d| {
            if predictor {
                imex::predictor_update(a, b, dt, d, mu)
            } else {
                imex::cn_update(a, b, dt, d, mu)
            }
        };
        let mut u = [upd(&base.u[0], &e.u[0], Dissipation::Full)?, upd(&base.u[1], &e.u[1], Dissipation::Full)?];
        leray_horizontal(&mut u, LerayScope::AllModes)?;
        let v = [upd(&base.v[0], &e.v[0], Dissipation::Full)?, upd(&base.v[1], &e.v[1], Dissipation::Full)?];
        let te = upd(&base.te, &e.te, Dissipation::None)?;
        Ok((u, v, te))
    }

    pub fn step(&mut self) -> Result<()> {
        let cfg = &self.cfg;
        let dt = cfg.dt;
        let qe_hat = self.state.qe.to_spectral();
        let now = tendency(cfg, &self.state.u, &self.state.v, &self.state.te, &qe_hat)?;
        let courant = dt * now.courant_rate;
        if courant > cfg.cfl {
            return Err(Error::Cfl {
                time: self.state.t,
                courant,
                limit: cfg.cfl,
                suggested_dt: cfg.cfl / now.courant_rate,
            });
        }
        let explicit = match &self.prev {
            Some(p) => Tendency {
                u: [imex::ab2(&now.u[0], &p.u[0])?, imex::ab2(&now.u[1], &p.u[1])?],
                v: [imex::ab2(&now.v[0], &p.v[0])?, imex::ab2(&now.v[1], &p.v[1])?],
                te: imex::ab2(&now.te, &p.te)?,
                courant_rate: now.courant_rate,
            },
            None => {
                let (hu, hv, ht) = self.advance(&self.state, &now, 0.5 * dt, true)?;
                tendency(cfg, &hu, &hv, &ht, &qe_hat)?
            }
        };
        let (u, v, te) = self.advance(&self.state, &explicit, dt, false)?;
        let qe = if cfg.moisture {
            let q_tilde = transported_moisture(cfg, &self.state, &qe_hat)?;
            match cfg.mode {
                TamMode::Limit => q_tilde.into_iter().map(|q| q.min(0.0)).collect(),
                TamMode::Relaxed { epsilon } => {
                    let decay = (-(1.0 + cfg.alpha) * dt / epsilon).exp();
                    q_tilde.into_iter().map(|q| if q > 0.0 { q * decay } else { q }).collect()
                }
            }
        } else {
            self.state.qe.values.clone()
        };
        let next = TamState {
            u,
            v,
            te,
            qe: PhysicalField::new(cfg.grid, qe)?,
            t: self.state.t + dt,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp(next.t));
        }
        self.max_divergence = self.max_divergence.max(next.divergence_u());
        self.state = next;
        self.prev = Some(now);
        self.steps += 1;
        Ok(())
    }
}

fn check_nonpositive(qe: &PhysicalField) -> Result<()> {
    let m = qe.max();
    if m > 0.0 {
        return Err(Error::Precondition(format!("limit mode needs q_e <= 0, found max {m}")));
    }
    Ok(())
}

/// One relaxed step from `state` (bootstrap).
pub fn tam_step_relaxed(state: &TamState, cfg: &TamConfig) -> Result<TamState> {
    if !matches!(cfg.mode, TamMode::Relaxed { .. }) {
        return Err(Error::InvalidParameter("relaxed step needs a relaxed-mode config".into()));
    }
    let mut s = TamSolver::new(cfg.clone(), state.clone())?;
    s.step()?;
    Ok(s.into_state())
}

/// One limit-system step from `state` (bootstrap).
pub fn tam_step_limit(state: &TamState, cfg: &TamConfig) -> Result<TamState> {
    let cfg = TamConfig {
        mode: TamMode::Limit,
        ..cfg.clone()
    };
    let mut s = TamSolver::new(cfg, state.clone())?;
    s.step()?;
    Ok(s.into_state())
}

//! Primitive equations on `M x (-h, h)` with `v` even and `T`, `w` odd in z:
//!
//! ```text
//! d_t v + (v.grad_H) v + w d_z v + grad_H p + f0 k x v = D_v v
//! d_z p = T,   div_H v + d_z w = 0
//! d_t T + v.grad_H T + w (d_z T + 1/h) = D_T T
//! ```
//!
//! The variant selects the dissipation operators `D_v` and `D_T` (or drops `T`).

use crate::error::{Error, Result};
use crate::imex::{self, Dissipation};
use crate::nonlinear::Velocity;
use crate::spectral::{
    curl_h, divergence_h, leray_horizontal, vector_norm, Axis, Grid, LerayScope, NormKind, SpectralField,
    SymmetryClass, VerticalLevel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PeVariant {
    /// Full viscosity, vertical diffusivity.
    FV,
    /// Full viscosity, horizontal diffusivity.
    FH,
    /// Horizontal viscosity, horizontal diffusivity.
    HH,
    /// Horizontal viscosity, vertical diffusivity.
    HV,
    /// Full viscosity and no temperature.
    NoTemp,
}

impl PeVariant {
    pub const ALL: [PeVariant; 5] = [PeVariant::FV, PeVariant::FH, PeVariant::HH, PeVariant::HV, PeVariant::NoTemp];

    pub fn velocity_dissipation(self) -> Dissipation {
        match self {
            PeVariant::FV | PeVariant::FH | PeVariant::NoTemp => Dissipation::Full,
            PeVariant::HH | PeVariant::HV => Dissipation::Horizontal,
        }
    }

    pub fn temperature_dissipation(self) -> Dissipation {
        match self {
            PeVariant::FV | PeVariant::HV => Dissipation::Vertical,
            PeVariant::FH | PeVariant::HH => Dissipation::Horizontal,
            PeVariant::NoTemp => Dissipation::None,
        }
    }

    pub fn has_temperature(self) -> bool {
        self != PeVariant::NoTemp
    }

    pub fn name(self) -> &'static str {
        match self {
            PeVariant::FV => "fv",
            PeVariant::FH => "fh",
            PeVariant::HH => "hh",
            PeVariant::HV => "hv",
            PeVariant::NoTemp => "notemp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PeVariant::ALL.into_iter().find(|v| v.name() == s.to_ascii_lowercase())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeConfig {
    pub grid: Grid,
    pub h: f64,
    pub f0: f64,
    pub variant: PeVariant,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub nonlinear: bool,
}

impl PeConfig {
    /// Defaults: `h = Lz / 2`, `f0 = 1`, `cfl = 0.5`.
    pub fn new(grid: Grid, variant: PeVariant, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            h: 0.5 * grid.lengths[2],
            f0: 1.0,
            variant,
            dt,
            t_end,
            cfl: 0.5,
            nonlinear: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_planar() {
            return Err(Error::InvalidGrid("the primitive equations need a 3-D grid".into()));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidParameter(format!("h = {} must be > 0", self.h)));
        }
        if (self.grid.lengths[2] - 2.0 * self.h).abs() > 1e-12 * self.h {
            return Err(Error::InvalidGrid(format!(
                "Lz = {} must equal 2h = {}",
                self.grid.lengths[2],
                2.0 * self.h
            )));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.cfl > 0.0) || !self.f0.is_finite() {
            return Err(Error::InvalidParameter("dt > 0, t_end >= 0, cfl > 0 and finite f0 required".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeState {
    pub v: [SpectralField; 2],
    /// Temperature, `None` for the temperature-free variant.
    pub temp: Option<SpectralField>,
    pub w: SpectralField,
    /// Surface pressure (planar field, zero mean).
    pub p_surface: SpectralField,
    pub t: f64,
}

/// `(u, theta, eta) = (d_z v, curl_H v, div_H v + int_{-h}^z T - column mean)`.
#[derive(Clone, Debug)]
pub struct AuxFields {
    pub u_aux: [SpectralField; 2],
    pub theta_aux: SpectralField,
    pub eta_aux: SpectralField,
}

fn barotropic_divergence(v: &[SpectralField; 2]) -> Result<f64> {
    Ok(divergence_h(v)?.vertical_mean().l2())
}

/// `w = -int_{-h}^z div_H v dz'`. Requires the barotropic constraint.
pub fn recover_w(v: &[SpectralField; 2]) -> Result<SpectralField> {
    let div = divergence_h(v)?;
    let scale = v[0].max_abs_coeff().max(v[1].max_abs_coeff()).max(1.0);
    let w = div.vertical_integral(VerticalLevel::Bottom).into_field(1e-10 * scale)?;
    Ok(w.scale(-1.0).project_symmetry(SymmetryClass::OddInZ))
}

/// Hydrostatic pressure anomaly `int_{-h}^z T` (even in z).
fn hydrostatic_part(temp: &SpectralField) -> SpectralField {
    temp.vertical_integral(VerticalLevel::Bottom)
        .periodic
        .project_symmetry(SymmetryClass::EvenInZ)
}

struct Tendency {
    v: [SpectralField; 2],
    temp: Option<SpectralField>,
    courant_rate: f64,
}

fn tendency(cfg: &PeConfig, v: &[SpectralField; 2], temp: Option<&SpectralField>, w: &SpectralField) -> Result<Tendency> {
    let g = cfg.grid;
    let (mut r1, mut r2, mut rt, courant_rate) = if cfg.nonlinear {
        let vel = Velocity::new(&[(&v[0], Axis::X), (&v[1], Axis::Y), (w, Axis::Z)]);
        let rt = match temp {
            Some(t) => Some(vel.advect(t)?.scale(-1.0)),
            None => None,
        };
        (vel.advect(&v[0])?.scale(-1.0), vel.advect(&v[1])?.scale(-1.0), rt, vel.courant_rate())
    } else {
        (
            SpectralField::zeros(g, SymmetryClass::EvenInZ),
            SpectralField::zeros(g, SymmetryClass::EvenInZ),
            temp.map(|_| SpectralField::zeros(g, SymmetryClass::OddInZ)),
            0.0,
        )
    };
    if cfg.f0 != 0.0 {
        // -f0 k x v = f0 (v2, -v1)
        r1 = r1.axpy(cfg.f0, &v[1])?;
        r2 = r2.axpy(-cfg.f0, &v[0])?;
    }
    if let Some(t) = temp {
        let pt = hydrostatic_part(t);
        r1 = r1.sub(&pt.derivative(Axis::X, 1))?;
        r2 = r2.sub(&pt.derivative(Axis::Y, 1))?;
        rt = Some(rt.expect("temperature tendency present").axpy(-1.0 / cfg.h, w)?);
    }
    Ok(Tendency {
        v: [r1.with_sym(SymmetryClass::EvenInZ), r2.with_sym(SymmetryClass::EvenInZ)],
        temp: rt.map(|f| f.with_sym(SymmetryClass::OddInZ)),
        courant_rate,
    })
}

/// `Delta_H p_s = div_H (column mean of the explicit horizontal forcing)`.
fn surface_pressure(r: &[SpectralField; 2]) -> Result<SpectralField> {
    let div = divergence_h(r)?.vertical_mean();
    div.poisson_aniso(0.0)
}

/// Surface pressure and full pressure `p = p_s + int_{-h}^z T`, both in the zero-mean gauge.
pub fn recover_pressure(state: &PeState, cfg: &PeConfig) -> Result<(SpectralField, SpectralField)> {
    let w = recover_w(&state.v)?;
    let r = tendency(cfg, &state.v, state.temp.as_ref(), &w)?;
    let ps = surface_pressure(&r.v)?;
    let mut full = SpectralField::extend_vertically(&ps, cfg.grid)?;
    if let Some(t) = &state.temp {
        let mut pt = hydrostatic_part(t);
        pt.coeffs_mut()[0] = Default::default();
        full = full.add(&pt)?.with_sym(SymmetryClass::EvenInZ);
    }
    Ok((ps, full))
}

/// Auxiliary fields of the horizontal-viscosity theory, computed spectrally.
pub fn aux_fields(state: &PeState) -> Result<AuxFields> {
    let u_aux = [state.v[0].derivative(Axis::Z, 1), state.v[1].derivative(Axis::Z, 1)];
    let theta_aux = curl_h(&state.v)?;
    let mut eta = divergence_h(&state.v)?;
    if let Some(t) = &state.temp {
        let mut pt = hydrostatic_part(t);
        // subtract the column mean of int T (the k_z = 0 plane)
        let plane = pt.grid().dims[0] * pt.grid().dims[1];
        pt.coeffs_mut()[..plane].iter_mut().for_each(|c| *c = Default::default());
        eta = eta.add(&pt)?;
    }
    Ok(AuxFields {
        u_aux,
        theta_aux,
        eta_aux: eta.with_sym(SymmetryClass::EvenInZ),
    })
}

impl PeState {
    /// Builds a state from `v` (and `T`), enforcing symmetry and checking the
    /// barotropic constraint.
    pub fn new(v: [SpectralField; 2], temp: Option<SpectralField>, cfg: &PeConfig) -> Result<Self> {
        cfg.validate()?;
        for c in v.iter().chain(temp.iter()) {
            c.grid().ensure_same(&cfg.grid)?;
        }
        if temp.is_some() != cfg.variant.has_temperature() {
            return Err(Error::Precondition(format!(
                "variant {} {} a temperature field",
                cfg.variant.name(),
                if cfg.variant.has_temperature() { "needs" } else { "takes no" }
            )));
        }
        let v = v.map(|c| c.project_symmetry(SymmetryClass::EvenInZ));
        let temp = temp.map(|t| t.project_symmetry(SymmetryClass::OddInZ));
        let w = recover_w(&v)?;
        let mut state = Self {
            v,
            temp,
            w,
            p_surface: SpectralField::zeros(cfg.grid.horizontal(), SymmetryClass::NoSymmetry),
            t: 0.0,
        };
        state.p_surface = recover_pressure(&state, cfg)?.0;
        Ok(state)
    }

    pub fn zero(cfg: &PeConfig) -> Self {
        let g = cfg.grid;
        Self {
            v: [SpectralField::zeros(g, SymmetryClass::EvenInZ), SpectralField::zeros(g, SymmetryClass::EvenInZ)],
            temp: cfg.variant.has_temperature().then(|| SpectralField::zeros(g, SymmetryClass::OddInZ)),
            w: SpectralField::zeros(g, SymmetryClass::OddInZ),
            p_surface: SpectralField::zeros(g.horizontal(), SymmetryClass::NoSymmetry),
            t: 0.0,
        }
    }

    /// `1/2 ||v||^2 + h/2 ||T||^2`.
    pub fn energy(&self, cfg: &PeConfig) -> f64 {
        let ev = 0.5 * (self.v[0].l2().powi(2) + self.v[1].l2().powi(2));
        ev + self.temp.as_ref().map_or(0.0, |t| 0.5 * cfg.h * t.l2().powi(2))
    }

    /// Variant-specific dissipation rate of [`PeState::energy`].
    pub fn dissipation(&self, cfg: &PeConfig) -> f64 {
        let dv = cfg.variant.velocity_dissipation();
        let d = dv.seminorm_sq(&self.v[0]) + dv.seminorm_sq(&self.v[1]);
        d + self
            .temp
            .as_ref()
            .map_or(0.0, |t| cfg.h * cfg.variant.temperature_dissipation().seminorm_sq(t))
    }

    /// `||div_H v + d_z w||_2`.
    pub fn divergence_residual(&self) -> f64 {
        divergence_h(&self.v)
            .and_then(|d| d.add(&self.w.derivative(Axis::Z, 1)))
            .map(|d| d.l2())
            .unwrap_or(f64::INFINITY)
    }

    /// `|| int div_H v dz ||` over the horizontal domain (as a mean, scaled by 2h).
    pub fn barotropic_residual(&self) -> f64 {
        barotropic_divergence(&self.v).unwrap_or(f64::INFINITY)
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.v
            .iter()
            .chain(self.temp.iter())
            .chain(std::iter::once(&self.w))
            .map(|f| f.symmetry_residual())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().chain(self.temp.iter()).all(|f| f.is_finite())
    }
}

/// The two energy-exchange integrals `(int v . (-grad_H p_T), -int T w)`; they
/// cancel for the hydrostatic pressure `p_T = int_{-h}^z T`.
pub fn exchange_terms(state: &PeState) -> Result<(f64, f64)> {
    let Some(t) = &state.temp else {
        return Ok((0.0, 0.0));
    };
    let pt = hydrostatic_part(t);
    let dot = |a: &SpectralField, b: &SpectralField| -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * a.grid().volume()
    };
    let work = -dot(&state.v[0], &pt.derivative(Axis::X, 1)) - dot(&state.v[1], &pt.derivative(Axis::Y, 1));
    Ok((work, -dot(t, &state.w)))
}

pub struct PeSolver {
    cfg: PeConfig,
    state: PeState,
    now: Option<Tendency>,
    prev: Option<Tendency>,
    steps: usize,
    max_divergence: f64,
    max_barotropic: f64,
    max_symmetry_drift: f64,
}

impl PeSolver {
    pub fn new(cfg: PeConfig, state: PeState) -> Result<Self> {
        cfg.validate()?;
        let div = state.divergence_residual();
        let bar = state.barotropic_residual();
        Ok(Self {
            cfg,
            state,
            now: None,
            prev: None,
            steps: 0,
            max_divergence: div,
            max_barotropic: bar,
            max_symmetry_drift: 0.0,
        })
    }

    pub fn state(&self) -> &PeState {
        &self.state
    }

    pub fn into_state(self) -> PeState {
        self.state
    }

    pub fn config(&self) -> &PeConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn max_divergence(&self) -> f64 {
        self.max_divergence.max(self.max_barotropic)
    }

    pub fn max_symmetry_drift(&self) -> f64 {
        self.max_symmetry_drift
    }

    fn advance(
        &self,
        base: &PeState,
        explicit: &Tendency,
        dt: f64,
        predictor: bool,
    ) -> Result<([SpectralField; 2], Option<SpectralField>, f64)> {
        let var = self.cfg.variant;
        let upd = |u: &SpectralField, e: &SpectralField, d| {
            if predictor {
                imex::predictor_update(u, e, dt, d, 1.0)
            } else {
                imex::cn_update(u, e, dt, d, 1.0)
            }
        };
        let mut v = [
            upd(&base.v[0], &explicit.v[0], var.velocity_dissipation())?,
            upd(&base.v[1], &explicit.v[1], var.velocity_dissipation())?,
        ];
        leray_horizontal(&mut v, LerayScope::VerticalMean)?;
        let temp = match (&base.temp, &explicit.temp) {
            (Some(t), Some(rt)) => Some(upd(t, rt, var.temperature_dissipation())?),
            _ => None,
        };
        let drift = v
            .iter()
            .chain(temp.iter())
            .map(|f| f.symmetry_residual())
            .fold(0.0, f64::max);
        let v = v.map(|c| c.project_symmetry(SymmetryClass::EvenInZ));
        let temp = temp.map(|t| t.project_symmetry(SymmetryClass::OddInZ));
        Ok((v, temp, drift))
    }

    fn w_unchecked(v: &[SpectralField; 2]) -> Result<SpectralField> {
        let div = divergence_h(v)?;
        Ok(div
            .vertical_integral(VerticalLevel::Bottom)
            .periodic
            .scale(-1.0)
            .project_symmetry(SymmetryClass::OddInZ))
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let now = match self.now.take() {
            Some(n) => n,
            None => tendency(&self.cfg, &self.state.v, self.state.temp.as_ref(), &self.state.w)?,
        };
        let courant = dt * now.courant_rate;
        if courant > self.cfg.cfl {
            let suggested_dt = self.cfg.cfl / now.courant_rate;
            let time = self.state.t;
            let limit = self.cfg.cfl;
            self.now = Some(now);
            return Err(Error::Cfl {
                time,
                courant,
                limit,
                suggested_dt,
            });
        }
        let explicit = match &self.prev {
            Some(prev) => Tendency {
                v: [imex::ab2(&now.v[0], &prev.v[0])?, imex::ab2(&now.v[1], &prev.v[1])?],
                temp: match (&now.temp, &prev.temp) {
                    (Some(a), Some(b)) => Some(imex::ab2(a, b)?),
                    _ => None,
                },
                courant_rate: now.courant_rate,
            },
            None => {
                let (hv, ht, _) = self.advance(&self.state, &now, 0.5 * dt, true)?;
                let hw = Self::w_unchecked(&hv)?;
                tendency(&self.cfg, &hv, ht.as_ref(), &hw)?
            }
        };
        let (v, temp, drift) = self.advance(&self.state, &explicit, dt, false)?;
        let w = Self::w_unchecked(&v)?;
        let t_new = self.state.t + dt;
        let probe = PeState {
            v,
            temp,
            w,
            p_surface: self.state.p_surface.clone(),
            t: t_new,
        };
        if !probe.is_finite() {
            self.now = Some(now);
            return Err(Error::BlowUp(t_new));
        }
        let fresh = tendency(&self.cfg, &probe.v, probe.temp.as_ref(), &probe.w)?;
        let mut state = probe;
        state.p_surface = surface_pressure(&fresh.v)?;
        self.max_divergence = self.max_divergence.max(state.divergence_residual());
        self.max_barotropic = self.max_barotropic.max(state.barotropic_residual());
        self.max_symmetry_drift = self.max_symmetry_drift.max(drift);
        self.state = state;
        self.prev = Some(now);
        self.now = Some(fresh);
        self.steps += 1;
        Ok(())
    }
}

/// A single bootstrap step.
pub fn pe_step(state: &PeState, cfg: &PeConfig) -> Result<PeState> {
    let mut solver = PeSolver::new(cfg.clone(), state.clone())?;
    solver.step()?;
    Ok(solver.into_state())
}

/// Temperature-free initial state `v0(z) = a |z|^delta + sigma chi_{(-eta, eta)}(z)`.
pub fn discontinuous_ic(a: [f64; 2], delta: f64, eta_w: f64, sigma: [f64; 2], cfg: &PeConfig) -> Result<PeState> {
    if cfg.variant != PeVariant::NoTemp {
        return Err(Error::InvalidParameter("the discontinuous datum is posed for the notemp variant".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
    }
    if !(eta_w > 0.0 && eta_w < cfg.h) {
        return Err(Error::InvalidParameter(format!("eta = {eta_w} must lie in (0, h = {})", cfg.h)));
    }
    let profile = |c: usize| {
        move |_: f64, _: f64, z: f64| {
            let step = if z.abs() < eta_w { 1.0 } else { 0.0 };
            a[c] * z.abs().powf(delta) + sigma[c] * step
        }
    };
    let v = [
        SpectralField::from_fn(cfg.grid, SymmetryClass::EvenInZ, profile(0)),
        SpectralField::from_fn(cfg.grid, SymmetryClass::EvenInZ, profile(1)),
    ];
    PeState::new(v, None, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqSample {
    pub t: f64,
    /// `||v||_q`, aligned with the sampled exponents.
    pub norms: Vec<f64>,
}

pub fn lq_sample(state: &PeState, q_list: &[f64]) -> Result<LqSample> {
    let comps = [&state.v[0], &state.v[1]];
    let norms = q_list
        .iter()
        .map(|&q| vector_norm(&comps, NormKind::Lq(q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LqSample { t: state.t, norms })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqGrowthRow {
    pub q: f64,
    pub initial: f64,
    pub sup: f64,
    /// `sup_t ||v||_q / ((1 + ||v0||_q) sqrt(q))`.
    pub ratio: f64,
}

/// Growth table of the `L^q` norms against the `sqrt(q)` shape. The first sample
/// is taken as the initial datum.
pub fn lq_growth_report(samples: &[LqSample], q_list: &[f64]) -> Result<Vec<LqGrowthRow>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    for q in q_list {
        if !(q.is_finite() && *q >= 2.0) {
            return Err(Error::InvalidExponent(*q));
        }
    }
    if samples.iter().any(|s| s.norms.len() != q_list.len()) {
        return Err(Error::DimensionMismatch("sample norms do not match the exponent list".into()));
    }
    Ok(q_list
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let initial = first.norms[i];
            let sup = samples.iter().map(|s| s.norms[i]).fold(0.0, f64::max);
            LqGrowthRow {
                q,
                initial,
                sup,
                ratio: sup / ((1.0 + initial) * q.sqrt()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new3(1.0, 1.0, 2.0, n, n, n).unwrap()
    }

    fn even(g: Grid, f: impl Fn(f64, f64, f64) -> f64) -> SpectralField {
        SpectralField::from_fn(g, SymmetryClass::EvenInZ, f)
    }

    fn odd(g: Grid, f: impl Fn(f64, f64, f64) -> f64) -> SpectralField {
        SpectralField::from_fn(g, SymmetryClass::OddInZ, f)
    }

    fn zero_even(g: Grid) -> SpectralField {
        SpectralField::zeros(g, SymmetryClass::EvenInZ)
    }

    #[test]
    fn variant_symbols() {
        use Dissipation::*;
        let table = [
            (PeVariant::FV, Full, Vertical),
            (PeVariant::FH, Full, Horizontal),
            (PeVariant::HH, Horizontal, Horizontal),
            (PeVariant::HV, Horizontal, Vertical),
        ];
        for (v, dv, dt) in table {
            assert_eq!(v.velocity_dissipation(), dv);
            assert_eq!(v.temperature_dissipation(), dt);
            assert_eq!(PeVariant::parse(v.name()), Some(v));
        }
    }

    #[test]
    fn w_of_columnar_divergence_free_flow_is_zero() {
        let g = grid(8);
        let v = [even(g, |_, y, _| (2.0 * PI * y).sin()), even(g, |x, _, _| (2.0 * PI * x).cos())];
        assert!(recover_w(&v).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn w_of_baroclinic_mode() {
        let g = grid(16);
        let v = [even(g, |x, _, z| (2.0 * PI * x).sin() * (PI * z).cos()), zero_even(g)];
        let w = recover_w(&v).unwrap();
        assert_eq!(w.sym(), SymmetryClass::OddInZ);
        let expect = odd(g, |x, _, z| -2.0 * (2.0 * PI * x).cos() * (PI * z).sin());
        assert!(w.sub(&expect).unwrap().max_abs_coeff() < 1e-14);
        let vi = divergence_h(&v).unwrap().vertical_integral(VerticalLevel::Bottom);
        for z in [-1.0, 1.0] {
            assert!(vi.sample_at(z).iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn w_rejects_barotropic_divergence() {
        let g = grid(8);
        let v = [even(g, |x, _, _| (2.0 * PI * x).sin()), zero_even(g)];
        assert!(matches!(recover_w(&v), Err(Error::BarotropicConstraint(_))));
    }

    #[test]
    fn pressure_examples() {
        let g = grid(16);
        let mut cfg = PeConfig::new(g, PeVariant::FV, 1e-3, 0.0).unwrap();
        let s = PeState::zero(&cfg);
        let (ps, p) = recover_pressure(&s, &cfg).unwrap();
        assert_eq!(ps.max_abs_coeff(), 0.0);
        assert_eq!(p.max_abs_coeff(), 0.0);

        cfg.f0 = 0.0;
        let t = odd(g, |_, _, z| (PI * z).sin());
        let s = PeState::new([zero_even(g), zero_even(g)], Some(t), &cfg).unwrap();
        let (ps, p) = recover_pressure(&s, &cfg).unwrap();
        assert!(ps.max_abs_coeff() < 1e-15);
        // (h/pi)(1 - cos(pi z / h)) shifted to zero mean
        let expect = even(g, |_, _, z| -(PI * z).cos() / PI);
        assert!(p.sub(&expect).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn surface_pressure_balances_rotation() {
        let g = grid(16);
        let mut cfg = PeConfig::new(g, PeVariant::NoTemp, 1e-3, 0.0).unwrap();
        cfg.f0 = 1.7;
        cfg.nonlinear = false;
        // barotropic, divergence-free: v = grad-perp psi, psi = sin(2 pi x) sin(2 pi y)
        let v = [
            even(g, |x, y, _| -2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()),
            even(g, |x, y, _| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()),
        ];
        let s = PeState::new(v, None, &cfg).unwrap();
        let (ps, _) = recover_pressure(&s, &cfg).unwrap();
        // Delta_H p_s = -f0 div(k x v) = -f0 (d_x(-v2) + d_y v1) = f0 Delta psi, so p_s = f0 psi
        let psi = SpectralField::from_fn(g.horizontal(), SymmetryClass::NoSymmetry, |x, y, _| {
            (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
        });
        assert!(ps.sub(&psi.scale(1.7)).unwrap().max_abs_coeff() < 1e-13);
    }

    #[test]
    fn zero_state_is_fixed_for_all_variants() {
        let g = grid(8);
        for var in PeVariant::ALL {
            let cfg = PeConfig::new(g, var, 1e-2, 0.1).unwrap();
            let s = pe_step(&PeState::zero(&cfg), &cfg).unwrap();
            assert_eq!(s.v[0].max_abs_coeff(), 0.0);
            assert!(s.temp.iter().all(|t| t.max_abs_coeff() == 0.0));
        }
    }

    #[test]
    fn hh_does_not_diffuse_vertical_temperature_mode() {
        let g = grid(16);
        let mut cfg = PeConfig::new(g, PeVariant::HH, 1e-3, 0.0).unwrap();
        cfg.nonlinear = false;
        cfg.f0 = 0.0;
        let t = odd(g, |_, _, z| 0.3 * (PI * z).sin());
        let s0 = PeState::new([zero_even(g), zero_even(g)], Some(t.clone()), &cfg).unwrap();
        let s1 = pe_step(&s0, &cfg).unwrap();
        assert!(s1.temp.unwrap().sub(&t).unwrap().max_abs_coeff() < 1e-15);
        // the horizontal mode decays with the horizontal symbol
        let th = odd(g, |x, _, z| (2.0 * PI * x).cos() * (PI * z).sin());
        let s0 = PeState { temp: Some(th.clone()), ..s0 };
        let mut solver = PeSolver::new(cfg.clone(), s0).unwrap();
        solver.step().unwrap();
        let a = 0.5 * 1e-3 * 4.0 * PI * PI;
        let t1 = solver.state().temp.clone().unwrap();
        // coupling through the induced w enters at second order in dt
        assert!(t1.sub(&th.scale((1.0 - a) / (1.0 + a))).unwrap().max_abs_coeff() < 1e-5);
    }

    #[test]
    fn linear_decay_matches_variant_symbol() {
        let g = grid(16);
        let mode_v = |g| even(g, |x, _, z| (2.0 * PI * x).cos() * (PI * z).cos());
        let mode_t = |g| odd(g, |x, _, z| (2.0 * PI * x).cos() * (PI * z).sin());
        let kh = 4.0 * PI * PI;
        let kz = PI * PI;
        let dt = 1e-3;
        for (var, rv, rt) in [
            (PeVariant::FV, kh + kz, kz),
            (PeVariant::FH, kh + kz, kh),
            (PeVariant::HH, kh, kh),
            (PeVariant::HV, kh, kz),
        ] {
            let mut cfg = PeConfig::new(g, var, dt, 0.0).unwrap();
            cfg.nonlinear = false;
            cfg.f0 = 0.0;
            // v along y keeps the baroclinic mode divergence-free, so no coupling to T
            let s0 = PeState {
                v: [zero_even(g), mode_v(g)],
                temp: Some(SpectralField::zeros(g, SymmetryClass::OddInZ)),
                w: SpectralField::zeros(g, SymmetryClass::OddInZ),
                p_surface: SpectralField::zeros(g.horizontal(), SymmetryClass::NoSymmetry),
                t: 0.0,
            };
            let s1 = pe_step(&s0, &cfg).unwrap();
            let f = |r: f64| (1.0 - 0.5 * dt * r) / (1.0 + 0.5 * dt * r);
            assert!(s1.v[1].sub(&mode_v(g).scale(f(rv))).unwrap().max_abs_coeff() < 1e-15, "{var:?}");
            let s0t = PeState { v: [zero_even(g), zero_even(g)], temp: Some(mode_t(g)), ..s0 };
            let mut solver = PeSolver::new(cfg, s0t).unwrap();
            solver.step().unwrap();
            let t1 = solver.state().temp.clone().unwrap();
            // first step: T sees w only through the O(dt) velocity it forces
            let want = mode_t(g).scale(f(rt));
            assert!(t1.sub(&want).unwrap().max_abs_coeff() < 1e-5, "{var:?}");
        }
    }

    #[test]
    fn exchange_terms_cancel() {
        let g = grid(16);
        let cfg = PeConfig::new(g, PeVariant::FV, 1e-3, 0.0).unwrap();
        let v = [
            even(g, |x, y, z| (2.0 * PI * x).sin() * (2.0 * PI * y).cos() * (PI * z).cos()),
            even(g, |x, y, z| (2.0 * PI * x).cos() * (4.0 * PI * y).sin() * (2.0 * PI * z).cos()),
        ];
        let t = odd(g, |x, y, z| (2.0 * PI * (x + y)).cos() * (PI * z).sin() + 0.3 * (3.0 * PI * z).sin());
        let s = PeState::new(v, Some(t), &cfg).unwrap();
        let (a, b) = exchange_terms(&s).unwrap();
        assert!(a.abs() > 1e-3);
        assert!((a + b).abs() < 1e-13 * a.abs().max(1.0));
    }

    #[test]
    fn aux_field_examples() {
        let g = grid(16);
        let cfg = PeConfig::new(g, PeVariant::HV, 1e-3, 0.0).unwrap();
        let a = aux_fields(&PeState::zero(&cfg)).unwrap();
        assert_eq!(a.eta_aux.max_abs_coeff(), 0.0);
        assert_eq!(a.theta_aux.max_abs_coeff(), 0.0);

        let v = [even(g, |_, _, z| (PI * z).cos()), zero_even(g)];
        let s = PeState::new(v, Some(SpectralField::zeros(g, SymmetryClass::OddInZ)), &cfg).unwrap();
        let a = aux_fields(&s).unwrap();
        let du = odd(g, |_, _, z| -PI * (PI * z).sin());
        assert!(a.u_aux[0].sub(&du).unwrap().max_abs_coeff() < 1e-14);
        assert!(a.u_aux[1].max_abs_coeff() < 1e-15);
        assert!(a.theta_aux.max_abs_coeff() < 1e-15);

        let t = odd(g, |_, _, z| (PI * z).sin());
        let s = PeState::new([zero_even(g), zero_even(g)], Some(t), &cfg).unwrap();
        let a = aux_fields(&s).unwrap();
        let expect = even(g, |_, _, z| -(PI * z).cos() / PI);
        assert!(a.eta_aux.sub(&expect).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn lq_report_examples() {
        let qs = [2.0, 4.0, 8.0];
        assert!(lq_growth_report(&[], &qs).is_err());
        let c = 0.6;
        let samples: Vec<LqSample> = (0..3)
            .map(|i| LqSample {
                t: i as f64,
                norms: vec![c; 3],
            })
            .collect();
        let rows = lq_growth_report(&samples, &qs).unwrap();
        for (r, q) in rows.iter().zip(qs) {
            assert!((r.ratio - c / ((1.0 + c) * q.sqrt())).abs() < 1e-15);
        }
        assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        let zero = vec![LqSample { t: 0.0, norms: vec![0.0; 3] }];
        assert!(lq_growth_report(&zero, &qs).unwrap().iter().all(|r| r.ratio == 0.0));
    }

    #[test]
    fn lq_of_constant_velocity_on_unit_box() {
        let g = Grid::new3(1.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let mut cfg = PeConfig::new(g, PeVariant::NoTemp, 1e-3, 0.0).unwrap();
        cfg.h = 0.5;
        let v = [even(g, |_, _, _| 0.3), even(g, |_, _, _| 0.4)];
        let s = PeState::new(v, None, &cfg).unwrap();
        let sample = lq_sample(&s, &[2.0, 16.0]).unwrap();
        assert!(sample.norms.iter().all(|n| (n - 0.5).abs() < 1e-14));
    }

    #[test]
    fn discontinuous_ic_examples() {
        let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, 32).unwrap();
        let cfg = PeConfig::new(g, PeVariant::NoTemp, 1e-3, 0.0).unwrap();
        let s = discontinuous_ic([1.0, 0.0], 1.0, 0.5, [0.0, 0.0], &cfg).unwrap();
        let expect = even(g, |_, _, z| z.abs());
        assert!(s.v[0].sub(&expect).unwrap().max_abs_coeff() < 1e-15);
        let s = discontinuous_ic([0.0, 0.0], 0.5, 0.5, [0.25, -0.5], &cfg).unwrap();
        let sup = vector_norm(&[&s.v[1]], NormKind::Linf).unwrap();
        assert!((sup - 0.5).abs() < 1e-14);
        assert!(discontinuous_ic([1.0, 0.0], 0.5, 1.5, [0.0, 0.0], &cfg).is_err());
        assert!(discontinuous_ic([1.0, 0.0], -0.5, 0.5, [0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn discontinuous_ic_l2_matches_quadrature() {
        for n3 in [32usize, 256] {
            let g = Grid::new3(1.0, 1.0, 2.0, 8, 8, n3).unwrap();
            let cfg = PeConfig::new(g, PeVariant::NoTemp, 1e-3, 0.0).unwrap();
            let s = discontinuous_ic([1.0, 0.0], 0.5, 0.5, [0.01, 0.0], &cfg).unwrap();
            // independent 1-D midpoint oracle on the same nodes
            let dz = 2.0 / n3 as f64;
            let oracle: f64 = (0..n3)
                .map(|k| {
                    let z = g.z_centered(k);
                    let f = z.abs().sqrt() + if z.abs() < 0.5 { 0.01 } else { 0.0 };
                    f * f * dz
                })
                .sum();
            assert!((s.v[0].l2().powi(2) - oracle).abs() < 1e-12);
            // exact integral: 2 (1/2 + 0.02 (2/3) 0.5^1.5 + 0.0001 * 0.5)
            let exact = 2.0 * (0.5 + 0.02 * (2.0 / 3.0) * 0.5f64.powf(1.5) + 0.0001 * 0.5);
            assert!((oracle - exact).abs() < 0.1 / (n3 as f64).sqrt());
        }
    }
}

//! Singular-limit sweeps: each epsilon is run against a reference solution of the
//! limiting system on the same grid and time step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pe::{PeConfig, PeVariant};
use crate::sns::{hydrostatic_residual, SnsConfig};
use crate::spectral::{Grid, SpectralField};
use crate::tam::{TamConfig, TamMode, TamState};

use super::fit::{fit_rate, RateFit};
use super::ic::InitialCondition;
use super::run::{run_with, RunSpec, Simulation, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Hydrostatic,
    Relaxation,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Hydrostatic => "hydrostatic",
            StudyKind::Relaxation => "relaxation",
        }
    }
}

/// Constants of the tropical model used by the relaxation sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoistParams {
    pub alpha: f64,
    pub qbar: f64,
    pub qhat: f64,
    pub mu: f64,
}

impl Default for MoistParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            qbar: 0.4,
            qhat: 1.0,
            mu: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: StudyKind,
    /// Strictly decreasing with a uniform ratio.
    pub epsilons: Vec<f64>,
    pub ic: InitialCondition,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Sampling interval in steps, at most 10.
    pub sample_every: usize,
    pub moist: MoistParams,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SweepSpec {
    /// The hydrostatic sweep at `32^2 x 32` with `t_end = 0.5`.
    pub fn hydrostatic_default(ic: InitialCondition) -> Result<Self> {
        Ok(Self {
            kind: StudyKind::Hydrostatic,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            ic,
            grid: Grid::new3(1.0, 1.0, 2.0, 32, 32, 32)?,
            dt: 2e-3,
            t_end: 0.5,
            cfl: 0.5,
            sample_every: 5,
            moist: MoistParams::default(),
            workers: None,
        })
    }

    /// The relaxation sweep on a `64^2` box with `t_end = 1`.
    pub fn relaxation_default(ic: InitialCondition) -> Result<Self> {
        Ok(Self {
            kind: StudyKind::Relaxation,
            epsilons: vec![1e-1, 5e-2, 2.5e-2, 1.25e-2],
            ic,
            grid: crate::tam::default_box(64, 64)?,
            dt: 2e-3,
            t_end: 1.0,
            cfl: 0.5,
            sample_every: 5,
            moist: MoistParams::default(),
            workers: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilons;
        if e.len() < 3 {
            return Err(Error::InvalidParameter("a sweep needs at least 3 epsilon values".into()));
        }
        if e.iter().any(|x| !(*x > 0.0 && x.is_finite())) || e.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("epsilons must be positive and strictly decreasing".into()));
        }
        let r0 = e[1] / e[0];
        if e.windows(2).any(|w| ((w[1] / w[0]) / r0 - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidParameter("epsilon ratios must be uniform".into()));
        }
        if self.sample_every == 0 || self.sample_every > 10 {
            return Err(Error::InvalidParameter("sampling interval must be 1..=10 steps".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub epsilon: f64,
    pub status: RowStatus,
    /// Aligned with [`StudyReport::columns`]; the first column is fitted.
    pub values: Vec<f64>,
    pub in_fit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitStatus {
    Fitted(RateFit),
    /// Every error is exactly zero; there is no rate to fit.
    ExactZero,
    Impossible(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub columns: Vec<String>,
    pub rows: Vec<StudyRow>,
    pub fit: FitStatus,
    pub warnings: Vec<String>,
    /// `(epsilon, sup-in-time gap to the finest-epsilon run)`, relaxation only.
    pub cross_check: Vec<(f64, f64)>,
    /// Wall-clock seconds of the reference run followed by each epsilon run.
    pub runtimes: Vec<f64>,
}

impl StudyReport {
    pub fn primary(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.values.first().copied().unwrap_or(f64::NAN)).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn slope(&self) -> Option<f64> {
        match &self.fit {
            FitStatus::Fitted(f) => Some(f.slope),
            _ => None,
        }
    }
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Runs a sweep of the kind named in `spec`.
pub fn run_study(spec: &SweepSpec) -> Result<StudyReport> {
    match spec.kind {
        StudyKind::Hydrostatic => hydrostatic_limit_study(spec),
        StudyKind::Relaxation => relaxation_limit_study(spec),
    }
}

fn assemble(
    kind: StudyKind,
    columns: &[&str],
    epsilons: &[f64],
    outcomes: Vec<Result<(Vec<f64>, f64)>>,
    ref_seconds: f64,
) -> Result<StudyReport> {
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut runtimes = vec![ref_seconds];
    for (&eps, out) in epsilons.iter().zip(outcomes) {
        match out {
            Ok((values, secs)) => {
                runtimes.push(secs);
                rows.push(StudyRow {
                    epsilon: eps,
                    status: RowStatus::Ok,
                    values,
                    in_fit: false,
                });
            }
            Err(e) if e.is_numerical() => {
                warnings.push(format!("eps = {eps} failed and is excluded from the fit: {e}"));
                runtimes.push(0.0);
                rows.push(StudyRow {
                    epsilon: eps,
                    status: RowStatus::Failed(e.to_string()),
                    values: vec![f64::NAN; columns.len()],
                    in_fit: false,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let ok: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].status == RowStatus::Ok).collect();
    let errs: Vec<f64> = ok.iter().map(|&i| rows[i].values[0]).collect();
    let eps: Vec<f64> = ok.iter().map(|&i| rows[i].epsilon).collect();
    let fit = if !errs.is_empty() && errs.iter().all(|e| *e == 0.0) {
        FitStatus::ExactZero
    } else {
        match fit_rate(&errs, &eps) {
            Ok(f) => {
                for (&i, &u) in ok.iter().zip(&f.used) {
                    rows[i].in_fit = u;
                }
                warnings.extend(f.warnings.iter().cloned());
                FitStatus::Fitted(f)
            }
            Err(e @ Error::FitImpossible(_)) => FitStatus::Impossible(e.to_string()),
            Err(e) => return Err(e),
        }
    };
    Ok(StudyReport {
        kind,
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
        fit,
        warnings,
        cross_check: Vec::new(),
        runtimes,
    })
}

/// Columns of the hydrostatic report.
pub const HYDROSTATIC_COLUMNS: [&str; 4] = ["sup_l2", "sup_h1", "grad_sq_integral", "sup_dz_p"];

/// Scaled Navier-Stokes runs against the temperature-free primitive equations.
pub fn hydrostatic_limit_study(spec: &SweepSpec) -> Result<StudyReport> {
    spec.validate()?;
    let mut pe_cfg = PeConfig::new(spec.grid, PeVariant::NoTemp, spec.dt, spec.t_end)?;
    pe_cfg.f0 = 0.0;
    pe_cfg.cfl = spec.cfl;
    let reference = RunSpec {
        sample_every: spec.sample_every,
        ..RunSpec::new(SystemConfig::Pe(pe_cfg), spec.ic.clone())
    };
    let mut ref_samples: Vec<(f64, [SpectralField; 3])> = Vec::new();
    let ref_traj = in_pool(spec.workers, || {
        run_with(&reference, None, |sim, sampled| {
            if let (Simulation::Pe(s), true) = (sim, sampled) {
                let st = s.state();
                ref_samples.push((st.t, [st.v[0].clone(), st.v[1].clone(), st.w.clone()]));
            }
            Ok(())
        })
    })??;
    let outcomes: Vec<Result<(Vec<f64>, f64)>> = in_pool(spec.workers, || {
        spec.epsilons
            .par_iter()
            .map(|&eps| {
                let mut cfg = SnsConfig::new(spec.grid, eps, spec.dt, spec.t_end)?;
                cfg.cfl = spec.cfl;
                let run = RunSpec {
                    sample_every: spec.sample_every,
                    ..RunSpec::new(SystemConfig::Sns(cfg), spec.ic.clone())
                };
                let mut idx = 0;
                let (mut sup_l2, mut sup_h1, mut sup_dzp, mut integral) = (0.0f64, 0.0f64, 0.0f64, 0.0);
                let mut last: Option<(f64, f64)> = None;
                let traj = run_with(&run, None, |sim, sampled| {
                    let (Simulation::Sns(s), true) = (sim, sampled) else {
                        return Ok(());
                    };
                    let st = s.state();
                    let (t_ref, r) = &ref_samples[idx];
                    idx += 1;
                    if (t_ref - st.t).abs() > 1e-9 * spec.dt {
                        return Err(Error::Report(format!("sample times drifted: {t_ref} vs {}", st.t)));
                    }
                    let dv = [st.v[0].sub(&r[0])?, st.v[1].sub(&r[1])?];
                    let dw = st.w.sub(&r[2])?;
                    let l2 = dv.iter().map(|f| f.l2().powi(2)).sum::<f64>() + eps * eps * dw.l2().powi(2);
                    let g2 = dv.iter().map(|f| f.gradient_sq()).sum::<f64>() + eps * eps * dw.gradient_sq();
                    sup_l2 = sup_l2.max(l2.sqrt());
                    sup_h1 = sup_h1.max((l2 + g2).sqrt());
                    sup_dzp = sup_dzp.max(hydrostatic_residual(st));
                    if let Some((t0, g0)) = last {
                        integral += 0.5 * (st.t - t0) * (g0 + g2);
                    }
                    last = Some((st.t, g2));
                    Ok(())
                })?;
                Ok((vec![sup_l2, sup_h1, integral, sup_dzp], traj.wall_seconds))
            })
            .collect()
    })?;
    assemble(
        StudyKind::Hydrostatic,
        &HYDROSTATIC_COLUMNS,
        &spec.epsilons,
        outcomes,
        ref_traj.wall_seconds,
    )
}

/// Columns of the relaxation report.
pub const RELAXATION_COLUMNS: [&str; 2] = ["sup_l2", "qplus_integral"];

fn tam_gap(a: &TamState, b: &TamState) -> Result<f64> {
    let mut s = 0.0;
    for (x, y) in a.u.iter().chain(&a.v).zip(b.u.iter().chain(&b.v)) {
        s += x.sub(y)?.l2().powi(2);
    }
    s += a.te.sub(&b.te)?.l2().powi(2);
    let w = a.qe.grid.volume() / a.qe.grid.len() as f64;
    s += a.qe.values.iter().zip(&b.qe.values).map(|(p, q)| (p - q).powi(2)).sum::<f64>() * w;
    Ok(s.sqrt())
}

fn tam_config(spec: &SweepSpec, mode: TamMode) -> Result<TamConfig> {
    let m = spec.moist;
    let mut c = TamConfig::new(spec.grid, m.alpha, m.qbar, m.qhat, mode, spec.dt, spec.t_end)?;
    c.mu = m.mu;
    c.cfl = spec.cfl;
    Ok(c)
}

/// Relaxed tropical-model runs against the limit system, plus a cross-check
/// against the finest-epsilon run.
pub fn relaxation_limit_study(spec: &SweepSpec) -> Result<StudyReport> {
    spec.validate()?;
    let mut modes = vec![TamMode::Limit];
    modes.extend(spec.epsilons.iter().map(|&epsilon| TamMode::Relaxed { epsilon }));
    let runs: Vec<Result<(Vec<TamState>, f64, f64)>> = in_pool(spec.workers, || {
        modes
            .par_iter()
            .map(|&mode| {
                let run = RunSpec {
                    sample_every: spec.sample_every,
                    ..RunSpec::new(SystemConfig::Tam(tam_config(spec, mode)?), spec.ic.clone())
                };
                let mut samples = Vec::new();
                let mut qplus = 0.0;
                let traj = run_with(&run, None, |sim, sampled| {
                    let Simulation::Tam(s) = sim else {
                        return Ok(());
                    };
                    let st = s.state();
                    if let TamMode::Relaxed { epsilon } = mode {
                        if st.t > 0.0 {
                            qplus += spec.dt * st.positive_part_sq() / epsilon;
                        }
                    }
                    if sampled {
                        samples.push(st.clone());
                    }
                    Ok(())
                })?;
                Ok((samples, qplus, traj.wall_seconds))
            })
            .collect()
    })?;
    let mut runs = runs.into_iter();
    let (reference, _, ref_secs) = runs.next().expect("reference run")?;
    let relaxed: Vec<Result<(Vec<TamState>, f64, f64)>> = runs.collect();
    let sup_gap = |a: &[TamState], b: &[TamState]| -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Report("runs recorded different sample counts".into()));
        }
        a.iter().zip(b).map(|(x, y)| tam_gap(x, y)).try_fold(0.0f64, |m, g| Ok(m.max(g?)))
    };
    let mut cross_check = Vec::new();
    let finest = match relaxed.last() {
        Some(Ok((s, _, _))) => Some(s.clone()),
        _ => None,
    };
    let mut outcomes = Vec::new();
    for (eps, run) in spec.epsilons.iter().zip(relaxed) {
        outcomes.push(match run {
            Ok((samples, qplus, secs)) => {
                if let Some(f) = &finest {
                    cross_check.push((*eps, sup_gap(&samples, f)?));
                }
                Ok((vec![sup_gap(&samples, &reference)?, qplus], secs))
            }
            Err(e) => Err(e),
        });
    }
    let mut report = assemble(StudyKind::Relaxation, &RELAXATION_COLUMNS, &spec.epsilons, outcomes, ref_secs)?;
    report.cross_check = cross_check;
    Ok(report)
}

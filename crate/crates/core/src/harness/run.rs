//! Single simulations: construction from a named initial condition, stepping and
//! trajectory recording.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::pe::{self, PeConfig, PeSolver, PeState};
use crate::sns::{SnsConfig, SnsSolver, SnsState};
use crate::spectral::{vector_norm, NormKind, SpectralField};
use crate::tam::{TamConfig, TamMode, TamSolver, TamState};

use super::ic::{self, InitialCondition};

#[derive(Clone, Debug, PartialEq)]
pub enum SystemConfig {
    Sns(SnsConfig),
    Pe(PeConfig),
    Tam(TamConfig),
}

impl SystemConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            SystemConfig::Sns(_) => "sns",
            SystemConfig::Pe(_) => "pe",
            SystemConfig::Tam(_) => "tam",
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            SystemConfig::Sns(c) => c.dt,
            SystemConfig::Pe(c) => c.dt,
            SystemConfig::Tam(c) => c.dt,
        }
    }

    pub fn t_end(&self) -> f64 {
        match self {
            SystemConfig::Sns(c) => c.t_end,
            SystemConfig::Pe(c) => c.t_end,
            SystemConfig::Tam(c) => c.t_end,
        }
    }

    pub fn grid(&self) -> crate::spectral::Grid {
        match self {
            SystemConfig::Sns(c) => c.grid,
            SystemConfig::Pe(c) => c.grid,
            SystemConfig::Tam(c) => c.grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimState {
    Sns(SnsState),
    Pe(PeState),
    Tam(TamState),
}

impl SimState {
    pub fn time(&self) -> f64 {
        match self {
            SimState::Sns(s) => s.t,
            SimState::Pe(s) => s.t,
            SimState::Tam(s) => s.t,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SimState::Sns(_) => "sns",
            SimState::Pe(_) => "pe",
            SimState::Tam(_) => "tam",
        }
    }

    fn velocity(&self) -> [&SpectralField; 2] {
        match self {
            SimState::Sns(s) => [&s.v[0], &s.v[1]],
            SimState::Pe(s) => [&s.v[0], &s.v[1]],
            SimState::Tam(s) => [&s.u[0], &s.u[1]],
        }
    }
}

/// Builds the initial state of `system` from a named generator.
pub fn initial_state(system: &SystemConfig, ic: &InitialCondition) -> Result<SimState> {
    Ok(match system {
        SystemConfig::Sns(c) => SimState::Sns(SnsState::from_horizontal(ic::horizontal_velocity(ic, c.grid)?, c)?),
        SystemConfig::Pe(c) => {
            if let InitialCondition::Discontinuous { a, delta, eta, sigma } = ic {
                return Ok(SimState::Pe(pe::discontinuous_ic(*a, *delta, *eta, *sigma, c)?));
            }
            let v = ic::horizontal_velocity(ic, c.grid)?;
            let t = if c.variant.has_temperature() { Some(ic::temperature(ic, c.grid)?) } else { None };
            SimState::Pe(PeState::new(v, t, c)?)
        }
        SystemConfig::Tam(c) => SimState::Tam(ic::tam_state(ic, c)?),
    })
}

/// A running solver of any of the three systems.
pub enum Simulation {
    Sns(SnsSolver),
    Pe(Box<PeSolver>),
    Tam(TamSolver),
}

impl Simulation {
    pub fn new(system: &SystemConfig, state: SimState) -> Result<Self> {
        Ok(match (system, state) {
            (SystemConfig::Sns(c), SimState::Sns(s)) => Simulation::Sns(SnsSolver::new(c.clone(), s)?),
            (SystemConfig::Pe(c), SimState::Pe(s)) => Simulation::Pe(Box::new(PeSolver::new(c.clone(), s)?)),
            (SystemConfig::Tam(c), SimState::Tam(s)) => Simulation::Tam(TamSolver::new(c.clone(), s)?),
            (sys, st) => {
                return Err(Error::Checkpoint(format!(
                    "state of system '{}' does not fit a '{}' run",
                    st.tag(),
                    sys.tag()
                )))
            }
        })
    }

    pub fn step(&mut self) -> Result<()> {
        match self {
            Simulation::Sns(s) => s.step(),
            Simulation::Pe(s) => s.step(),
            Simulation::Tam(s) => s.step(),
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Simulation::Sns(s) => s.state().t,
            Simulation::Pe(s) => s.state().t,
            Simulation::Tam(s) => s.state().t,
        }
    }

    pub fn snapshot(&self) -> SimState {
        match self {
            Simulation::Sns(s) => SimState::Sns(s.state().clone()),
            Simulation::Pe(s) => SimState::Pe(s.state().clone()),
            Simulation::Tam(s) => SimState::Tam(s.state().clone()),
        }
    }

    /// Energy of the system in its natural weighting.
    pub fn energy(&self) -> f64 {
        match self {
            Simulation::Sns(s) => s.state().energy(s.config().epsilon),
            Simulation::Pe(s) => s.state().energy(s.config()),
            Simulation::Tam(s) => tam_energy(s.state(), s.config()),
        }
    }

    /// Rate at which [`Simulation::energy`] is dissipated.
    pub fn dissipation(&self) -> f64 {
        match self {
            Simulation::Sns(s) => s.state().dissipation(s.config().epsilon),
            Simulation::Pe(s) => s.state().dissipation(s.config()),
            Simulation::Tam(s) => tam_dissipation(s.state(), s.config()),
        }
    }

    /// Running maxima of the divergence and symmetry-drift monitors.
    pub fn residuals(&self) -> (f64, f64) {
        match self {
            Simulation::Sns(s) => (s.max_divergence(), s.max_symmetry_drift()),
            Simulation::Pe(s) => (s.max_divergence(), s.max_symmetry_drift()),
            Simulation::Tam(s) => (s.max_divergence(), 0.0),
        }
    }

    pub fn velocity_lq(&self, q_list: &[f64]) -> Result<Vec<f64>> {
        let snap = self.snapshot();
        let v = snap.velocity();
        q_list.iter().map(|&q| vector_norm(&v, NormKind::Lq(q))).collect()
    }
}

/// `1/2 (|u|^2 + |v|^2) + |T_e|^2 / (2 (1+a)(1-Q)) + |q_e|^2 / (2 (1+a)(Q+a))`;
/// the coupling terms cancel in this weighting.
pub fn tam_energy(s: &TamState, c: &TamConfig) -> f64 {
    let kin: f64 = s.u.iter().chain(&s.v).map(|f| f.l2().powi(2)).sum();
    let wt = 1.0 / ((1.0 + c.alpha) * (1.0 - c.qbar));
    let wq = 1.0 / ((1.0 + c.alpha) * (c.qbar + c.alpha));
    0.5 * kin + 0.5 * wt * s.te.l2().powi(2) + 0.5 * wq * s.qe.l2().powi(2)
}

/// Viscous dissipation plus the precipitation sink `|q_e^+|^2 / (eps (Q + a))`.
pub fn tam_dissipation(s: &TamState, c: &TamConfig) -> f64 {
    let visc: f64 = s.u.iter().chain(&s.v).map(|f| f.gradient_sq()).sum::<f64>() * c.mu;
    match c.mode {
        TamMode::Relaxed { epsilon } => visc + s.positive_part_sq() / (epsilon * (c.qbar + c.alpha)),
        TamMode::Limit => visc,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Velocity `L^q` norms aligned with [`RunSpec::lq`].
    pub lq: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub system: SystemConfig,
    pub ic: InitialCondition,
    /// Sampling interval in steps.
    pub sample_every: usize,
    pub lq: Vec<f64>,
}

impl RunSpec {
    pub fn new(system: SystemConfig, ic: InitialCondition) -> Self {
        Self {
            system,
            ic,
            sample_every: 10,
            lq: vec![2.0],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub energy: Vec<EnergyRecord>,
    pub samples: Vec<Sample>,
    pub max_divergence: f64,
    pub max_symmetry_drift: f64,
    pub steps: usize,
    pub final_state: SimState,
    pub wall_seconds: f64,
}

/// Runs `spec` from its initial condition, or from `resume` if given, to `t_end`.
/// `observe` sees the solver after every step and at the start, with a flag set at
/// sample times (the start is a sample time).
pub fn run_with(
    spec: &RunSpec,
    resume: Option<SimState>,
    mut observe: impl FnMut(&Simulation, bool) -> Result<()>,
) -> Result<Trajectory> {
    let start = Instant::now();
    let state = match resume {
        Some(s) => s,
        None => initial_state(&spec.system, &spec.ic)?,
    };
    let mut sim = Simulation::new(&spec.system, state)?;
    let dt = spec.system.dt();
    let t_end = spec.system.t_end();
    let every = spec.sample_every.max(1);
    let mut energy = vec![EnergyRecord {
        t: sim.time(),
        energy: sim.energy(),
        dissipation: sim.dissipation(),
    }];
    let mut samples = vec![Sample {
        t: sim.time(),
        lq: sim.velocity_lq(&spec.lq)?,
    }];
    observe(&sim, true)?;
    let mut steps = 0;
    while sim.time() < t_end - 1e-9 * dt {
        sim.step()?;
        steps += 1;
        energy.push(EnergyRecord {
            t: sim.time(),
            energy: sim.energy(),
            dissipation: sim.dissipation(),
        });
        let last = sim.time() >= t_end - 1e-9 * dt;
        let sampled = steps % every == 0 || last;
        if sampled {
            samples.push(Sample {
                t: sim.time(),
                lq: sim.velocity_lq(&spec.lq)?,
            });
        }
        observe(&sim, sampled)?;
    }
    let (max_divergence, max_symmetry_drift) = sim.residuals();
    Ok(Trajectory {
        energy,
        samples,
        max_divergence,
        max_symmetry_drift,
        steps,
        final_state: sim.snapshot(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_simulation(spec: &RunSpec) -> Result<Trajectory> {
    run_with(spec, None, |_, _| Ok(()))
}

/// Per-step residuals `|(E1 - E0)/dt + (D0 + D1)/2|` of the energy identity. The
/// exchange terms between components cancel in the energies used here.
pub fn energy_budget(records: &[EnergyRecord]) -> Vec<f64> {
    records
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            ((w[1].energy - w[0].energy) / dt + 0.5 * (w[0].dissipation + w[1].dissipation)).abs()
        })
        .collect()
}

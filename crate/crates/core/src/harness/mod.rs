//! Simulation driver, singular-limit sweeps and rate fitting.

pub mod fit;
pub mod ic;
pub mod run;
pub mod study;

pub use fit::{fit_rate, RateFit};
pub use ic::InitialCondition;
pub use run::{
    energy_budget, initial_state, run_simulation, run_with, EnergyRecord, RunSpec, Sample, SimState, Simulation,
    SystemConfig, Trajectory,
};
pub use study::{
    hydrostatic_limit_study, relaxation_limit_study, run_study, FitStatus, MoistParams, RowStatus, StudyKind,
    StudyReport, StudyRow, SweepSpec,
};

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geoflow::harness::{run_study, run_with, SimState, StudyKind};
use geoflow::io::config::SystemKind;
use geoflow::io::report::{samples_csv, trajectory_csv, trajectory_summary};
use geoflow::io::{emit_report, parse_config, read_checkpoint, read_state_for, write_checkpoint, RunConfig};
use geoflow::{Error, Result};

#[derive(Parser)]
#[command(name = "geoflow", version, about = "Anisotropic geophysical flow solvers and singular-limit studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Continue from a checkpoint instead of the initial condition.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled Navier-Stokes run.
    RunSns(RunArgs),
    /// Primitive-equations run.
    RunPe(RunArgs),
    /// Tropical atmosphere run.
    RunTam(RunArgs),
    /// Hydrostatic-limit sweep over `epsilons`.
    LimitHydrostatic(Common),
    /// Relaxation-limit sweep over `epsilons`.
    LimitRelaxation(Common),
    /// Recompute invariants of a checkpoint.
    Diagnose {
        /// Checkpoint file.
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Optional configuration, used to check the checkpoint against it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Cfl { .. } | Error::BlowUp(_) => 3,
        Error::Io(_) | Error::Checkpoint(_) | Error::Report(_) => 4,
        _ => 2,
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let text = fs::read_to_string(&common.config)?;
    let cfg = parse_config(&text)?;
    Ok(match common.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn run(args: &RunArgs, want: SystemKind) -> Result<()> {
    let cfg = load(&args.common)?;
    if cfg.system != want {
        return Err(Error::Config {
            line: 0,
            key: "kind".into(),
            message: format!("this subcommand runs kind = {}, config has {}", want.name(), cfg.system.name()),
        });
    }
    let spec = cfg.run_spec()?;
    let resume = match &args.resume {
        Some(p) => Some(read_state_for(p, &spec.system)?),
        None => None,
    };
    let traj = run_with(&spec, resume, |_, _| Ok(()))?;
    let dir = out_dir(&args.common, &cfg);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("energy.csv"), trajectory_csv(&traj)?)?;
    fs::write(dir.join("samples.csv"), samples_csv(&traj, &spec.lq)?)?;
    let summary = trajectory_summary(&traj, spec.system.tag());
    fs::write(dir.join("summary.jsonl"), &summary)?;
    if cfg.output.checkpoint {
        write_checkpoint(&traj.final_state, &dir.join("final.chk"))?;
    }
    print!("{summary}");
    println!("{} steps in {:.2} s, output in {}", traj.steps, traj.wall_seconds, dir.display());
    Ok(())
}

fn study(common: &Common, kind: StudyKind) -> Result<()> {
    let cfg = load(common)?;
    let spec = cfg.sweep_spec(kind, common.workers)?;
    let report = run_study(&spec)?;
    let dir = out_dir(common, &cfg);
    let paths = emit_report(&report, &cfg.output.formats, &dir)?;
    print!("{}", geoflow::io::report_human(&report)?);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn diagnose(path: &Path, config: Option<&Path>) -> Result<()> {
    let ck = read_checkpoint(path)?;
    if let Some(c) = config {
        let cfg = parse_config(&fs::read_to_string(c)?)?;
        ck.check_against(&cfg.system_config()?)?;
    }
    let state = ck.to_state()?;
    println!("system {} at t = {:.16e}, grid {:?}", ck.system, ck.time, ck.dims);
    match &state {
        SimState::Sns(s) => {
            println!("divergence residual  {:.6e}", s.divergence_residual());
            println!("hydrostatic residual {:.6e}", geoflow::sns::hydrostatic_residual(s));
        }
        SimState::Pe(s) => {
            println!("divergence residual  {:.6e}", s.divergence_residual());
            println!("barotropic residual  {:.6e}", s.barotropic_residual());
            println!("symmetry residual    {:.6e}", s.symmetry_residual());
        }
        SimState::Tam(s) => {
            println!("div u                {:.6e}", s.divergence_u());
            println!("max q_e              {:.6e}", s.qe.max());
            println!("|q_e^+|^2            {:.6e}", s.positive_part_sq());
        }
    }
    let finite = match &state {
        SimState::Sns(s) => s.is_finite(),
        SimState::Pe(s) => s.is_finite(),
        SimState::Tam(s) => s.is_finite(),
    };
    if !finite {
        return Err(Error::BlowUp(ck.time));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunSns(a) => run(a, SystemKind::Sns),
        Command::RunPe(a) => run(a, SystemKind::Pe),
        Command::RunTam(a) => run(a, SystemKind::Tam),
        Command::LimitHydrostatic(c) => study(c, StudyKind::Hydrostatic),
        Command::LimitRelaxation(c) => study(c, StudyKind::Relaxation),
        Command::Diagnose {
            checkpoint,
            resume,
            config,
        } => match checkpoint.as_ref().or(resume.as_ref()) {
            Some(p) => diagnose(p, config.as_deref()),
            None => Err(Error::InvalidParameter("diagnose needs a checkpoint path".into())),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

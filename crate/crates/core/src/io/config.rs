//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [system]
//! kind = pe            # sns | pe | tam
//! variant = hh         # pe only
//! [grid]
//! n1 = 32
//! n2 = 32
//! n3 = 32
//! [physics]
//! epsilons = 0.2, 0.1, 0.05, 0.025
//! [integrator]
//! dt = 1e-3
//! t_end = 0.5
//! [ic]
//! name = taylor-green
//! amplitude = 1
//! [output]
//! dir = out
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::harness::{InitialCondition, MoistParams, RunSpec, StudyKind, SweepSpec, SystemConfig};
use crate::pe::{PeConfig, PeVariant};
use crate::sns::SnsConfig;
use crate::spectral::Grid;
use crate::tam::{check_moist_constants, TamConfig, TamMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Sns,
    Pe,
    Tam,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Sns => "sns",
            SystemKind::Pe => "pe",
            SystemKind::Tam => "tam",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
    Human,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: String,
    /// Sampling cadence in steps.
    pub every: usize,
    pub formats: Vec<ReportFormat>,
    /// Exponents of the recorded velocity `L^q` norms.
    pub lq: Vec<f64>,
    pub checkpoint: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemKind,
    pub variant: PeVariant,
    pub grid: Grid,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub f0: f64,
    pub h: f64,
    pub alpha: f64,
    pub qbar: f64,
    pub qhat: f64,
    pub mu: f64,
    pub h_height: f64,
    /// `None` selects the limit system.
    pub tam_epsilon: Option<f64>,
    pub nonlinear: bool,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub ic: InitialCondition,
    pub output: OutputSpec,
}

struct Entry {
    line: usize,
    value: String,
}

struct Table {
    entries: HashMap<(String, String), Entry>,
}

fn config_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

const SECTIONS: [&str; 6] = ["system", "grid", "physics", "integrator", "ic", "output"];

const KEYS: &[(&str, &[&str])] = &[
    ("system", &["kind", "variant"]),
    ("grid", &["n1", "n2", "n3", "l1", "l2", "lz"]),
    (
        "physics",
        &["epsilon", "epsilons", "f0", "h", "alpha", "qbar", "qhat", "mu", "h_height", "mode", "nonlinear"],
    ),
    ("integrator", &["dt", "t_end", "cfl"]),
    ("ic", &["name", "amplitude", "seed", "kmax", "a", "delta", "eta", "sigma"]),
    ("output", &["dir", "every", "formats", "lq", "checkpoint"]),
];

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, body, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(config_err(line, &name, format!("unknown section (expected one of {SECTIONS:?})")));
                }
                section = Some(name);
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| config_err(line, body, "expected `key = value`"))?;
            let key = k.trim().to_ascii_lowercase();
            let sec = section
                .clone()
                .ok_or_else(|| config_err(line, &key, "key appears before any section header"))?;
            let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key.as_str()) {
                return Err(config_err(line, &key, format!("unknown key in [{sec}]")));
            }
            let slot = (sec, key.clone());
            if entries.contains_key(&slot) {
                return Err(config_err(line, &key, "duplicate key"));
            }
            entries.insert(
                slot,
                Entry {
                    line,
                    value: v.trim().to_string(),
                },
            );
        }
        Ok(Self { entries })
    }

    fn raw(&self, sec: &str, key: &str) -> Option<(usize, String)> {
        self.entries
            .get(&(sec.to_string(), key.to_string()))
            .map(|e| (e.line, e.value.clone()))
    }

    fn line(&self, sec: &str, key: &str) -> usize {
        self.entries.get(&(sec.to_string(), key.to_string())).map_or(0, |e| e.line)
    }

    fn f64_or(&self, sec: &str, key: &str, default: f64) -> Result<f64> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some((line, v)) => parse_f64(&v).ok_or_else(|| config_err(line, key, format!("`{v}` is not a number"))),
        }
    }

    fn opt_f64(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some((line, v)) => parse_f64(&v)
                .map(Some)
                .ok_or_else(|| config_err(line, key, format!("`{v}` is not a number"))),
        }
    }

    fn usize_or(&self, sec: &str, key: &str, default: usize) -> Result<usize> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| config_err(line, key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn u64_or(&self, sec: &str, key: &str, default: u64) -> Result<u64> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| config_err(line, key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn bool_or(&self, sec: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(config_err(line, key, format!("`{v}` is not a boolean"))),
            },
        }
    }

    fn list_or(&self, sec: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(sec, key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    parse_f64(s.trim()).ok_or_else(|| config_err(line, key, format!("`{}` is not a number", s.trim())))
                })
                .collect(),
        }
    }

    fn str_or(&self, sec: &str, key: &str, default: &str) -> (usize, String) {
        self.raw(sec, key).unwrap_or((0, default.to_string()))
    }
}

/// Whether a key is meaningful for the selected system.
fn applies(system: SystemKind, key: &str) -> bool {
    use SystemKind::*;
    match key {
        "variant" | "f0" => system == Pe,
        "n3" | "lz" | "h" => system != Tam,
        "epsilon" | "epsilons" => system != Pe,
        "alpha" | "qbar" | "qhat" | "mu" | "h_height" | "mode" => system == Tam,
        _ => true,
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    let v = match lower.as_str() {
        "pi" => PI,
        "2pi" | "2*pi" => 2.0 * PI,
        _ => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

fn pair(t: &Table, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
    let line = t.line("ic", key);
    let v = t.list_or("ic", key, &default)?;
    match v.as_slice() {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(config_err(line, key, "expected one or two comma-separated numbers")),
    }
}

fn require(cond: bool, line: usize, key: &str, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(line, key, format!("violates {what}")))
    }
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let t = Table::parse(text)?;

    let (kline, kind) = t.str_or("system", "kind", "");
    let system = match kind.to_ascii_lowercase().as_str() {
        "sns" => SystemKind::Sns,
        "pe" => SystemKind::Pe,
        "tam" => SystemKind::Tam,
        "" => return Err(config_err(kline, "kind", "missing [system] kind (sns | pe | tam)")),
        other => return Err(config_err(kline, "kind", format!("unknown system `{other}` (sns | pe | tam)"))),
    };
    let (vline, vname) = t.str_or("system", "variant", "fv");
    let variant = PeVariant::parse(&vname)
        .ok_or_else(|| config_err(vline, "variant", format!("unknown variant `{vname}` (fv | fh | hh | hv | notemp)")))?;

    let h = t.f64_or("physics", "h", 1.0)?;
    require(h > 0.0, t.line("physics", "h"), "h", "h > 0")?;
    let planar = system == SystemKind::Tam;
    let box_len = if planar { 2.0 * PI } else { 1.0 };
    let n1 = t.usize_or("grid", "n1", 32)?;
    let n2 = t.usize_or("grid", "n2", n1)?;
    let l1 = t.f64_or("grid", "l1", box_len)?;
    let l2 = t.f64_or("grid", "l2", l1)?;
    let grid = if planar {
        Grid::new2(l1, l2, n1, n2)
    } else {
        let n3 = t.usize_or("grid", "n3", n1)?;
        let lz = t.f64_or("grid", "lz", 2.0 * h)?;
        require(
            (lz - 2.0 * h).abs() <= 1e-12 * h,
            t.line("grid", "lz").max(t.line("physics", "h")),
            "lz",
            "lz = 2 h",
        )?;
        Grid::new3(l1, l2, lz, n1, n2, n3)
    }
    .map_err(|e| config_err(t.line("grid", "n1"), "grid", e.to_string()))?;

    let epsilon = t.f64_or("physics", "epsilon", 0.1)?;
    let eps_line = t.line("physics", "epsilon");
    let default_sweep: &[f64] = if planar { &[1e-1, 5e-2, 2.5e-2, 1.25e-2] } else { &[0.2, 0.1, 0.05, 0.025] };
    let epsilons = t.list_or("physics", "epsilons", default_sweep)?;
    let sweep_line = t.line("physics", "epsilons");
    require(
        epsilons.iter().all(|e| *e > 0.0) && epsilons.windows(2).all(|w| w[1] < w[0]),
        sweep_line,
        "epsilons",
        "0 < epsilons, strictly decreasing",
    )?;
    let f0 = t.f64_or("physics", "f0", 1.0)?;

    let alpha = t.f64_or("physics", "alpha", 0.5)?;
    let qbar = t.f64_or("physics", "qbar", 0.4)?;
    let qhat = t.f64_or("physics", "qhat", 1.0)?;
    let mu = t.f64_or("physics", "mu", 1.0)?;
    let h_height = t.f64_or("physics", "h_height", 1.0)?;
    let (mline, mode) = t.str_or("physics", "mode", "relaxed");
    let nonlinear = t.bool_or("physics", "nonlinear", true)?;
    let qline = t.line("physics", "qbar").max(t.line("physics", "alpha"));
    require(qbar > 0.0 && qbar < 1.0, t.line("physics", "qbar"), "Qbar", "0 < Qbar < 1")?;
    require(alpha + qbar > 0.0, qline, "alpha", "alpha + Qbar > 0")?;
    debug_assert!(check_moist_constants(alpha, qbar).is_ok());
    require(qhat > 0.0, t.line("physics", "qhat"), "qhat", "qhat > 0")?;
    require(mu > 0.0, t.line("physics", "mu"), "mu", "mu > 0")?;
    require(h_height > 0.0, t.line("physics", "h_height"), "h_height", "H > 0")?;
    let tam_epsilon = match mode.to_ascii_lowercase().as_str() {
        "relaxed" => Some(epsilon),
        "limit" => None,
        other => return Err(config_err(mline, "mode", format!("unknown mode `{other}` (relaxed | limit)"))),
    };
    require(epsilon > 0.0, eps_line, "epsilon", "epsilon > 0")?;

    let dt = t.f64_or("integrator", "dt", 1e-3)?;
    require(dt > 0.0, t.line("integrator", "dt"), "dt", "dt > 0")?;
    let t_end = t.f64_or("integrator", "t_end", if planar { 1.0 } else { 0.5 })?;
    require(t_end >= 0.0, t.line("integrator", "t_end"), "t_end", "t_end >= 0")?;
    let cfl = t.f64_or("integrator", "cfl", 0.5)?;
    require(cfl > 0.0, t.line("integrator", "cfl"), "cfl", "cfl > 0")?;

    let (iline, ic_name) = t.str_or("ic", "name", if planar { "vortical" } else { "taylor-green" });
    let amplitude = t.f64_or("ic", "amplitude", 1.0)?;
    let ic = match ic_name.to_ascii_lowercase().as_str() {
        "zero" => InitialCondition::Zero,
        "taylor-green" => InitialCondition::TaylorGreen { amplitude },
        "random-smooth" => InitialCondition::RandomSmooth {
            amplitude,
            seed: t.u64_or("ic", "seed", 0)?,
            kmax: t.usize_or("ic", "kmax", 3)?,
        },
        "discontinuous" => {
            let a = pair(&t, "a", [1.0, 0.0])?;
            let sigma = pair(&t, "sigma", [0.01, 0.0])?;
            let delta = t.f64_or("ic", "delta", 0.5)?;
            let eta = t.opt_f64("ic", "eta")?.unwrap_or(0.5 * h);
            require(delta > 0.0, t.line("ic", "delta"), "delta", "delta > 0")?;
            require(eta > 0.0 && eta < h, t.line("ic", "eta"), "eta", "0 < eta < h")?;
            require(
                system == SystemKind::Pe && variant == PeVariant::NoTemp,
                iline,
                "name",
                "discontinuous data need kind = pe, variant = notemp",
            )?;
            InitialCondition::Discontinuous { a, delta, eta, sigma }
        }
        "vortical" => InitialCondition::Vortical { amplitude },
        other => {
            return Err(config_err(
                iline,
                "name",
                format!("unknown initial condition `{other}` (zero | taylor-green | random-smooth | discontinuous | vortical)"),
            ))
        }
    };
    let fits = match (&ic, system) {
        (InitialCondition::Zero, _) => true,
        (InitialCondition::Vortical { .. }, s) => s == SystemKind::Tam,
        (_, s) => s != SystemKind::Tam,
    };
    require(fits, iline, "name", "an initial condition defined for the selected system")?;

    let (_, dir) = t.str_or("output", "dir", "out");
    let every = t.usize_or("output", "every", 10)?;
    require((1..=10).contains(&every), t.line("output", "every"), "every", "1 <= every <= 10")?;
    let (fline, fmts) = t.str_or("output", "formats", "csv, json-lines, human");
    let formats = fmts
        .split(',')
        .map(|f| match f.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json-lines" | "jsonl" => Ok(ReportFormat::JsonLines),
            "human" => Ok(ReportFormat::Human),
            other => Err(config_err(fline, "formats", format!("unknown format `{other}` (csv | json-lines | human)"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let lq = t.list_or("output", "lq", &[2.0, 4.0, 8.0, 16.0, 32.0])?;
    require(lq.iter().all(|q| *q >= 2.0), t.line("output", "lq"), "lq", "2 <= q")?;
    let checkpoint = t.bool_or("output", "checkpoint", true)?;

    for ((sec, key), e) in &t.entries {
        if !applies(system, key) {
            return Err(config_err(
                e.line,
                key,
                format!("[{sec}] {key} is not used by kind = {}", system.name()),
            ));
        }
    }

    let cfg = RunConfig {
        system,
        variant,
        grid,
        epsilon,
        epsilons,
        f0,
        h,
        alpha,
        qbar,
        qhat,
        mu,
        h_height,
        tam_epsilon,
        nonlinear,
        dt,
        t_end,
        cfl,
        ic,
        output: OutputSpec {
            dir,
            every,
            formats,
            lq,
            checkpoint,
        },
    };
    cfg.system_config()
        .map_err(|e| config_err(0, "config", e.to_string()))?;
    Ok(cfg)
}

impl RunConfig {
    /// The solver configuration for a single run.
    pub fn system_config(&self) -> Result<SystemConfig> {
        Ok(match self.system {
            SystemKind::Sns => {
                let mut c = SnsConfig::new(self.grid, self.epsilon, self.dt, self.t_end)?;
                c.cfl = self.cfl;
                c.nonlinear = self.nonlinear;
                SystemConfig::Sns(c)
            }
            SystemKind::Pe => {
                let mut c = PeConfig::new(self.grid, self.variant, self.dt, self.t_end)?;
                c.h = self.h;
                c.f0 = self.f0;
                c.cfl = self.cfl;
                c.nonlinear = self.nonlinear;
                c.validate()?;
                SystemConfig::Pe(c)
            }
            SystemKind::Tam => {
                let mode = match self.tam_epsilon {
                    Some(epsilon) => TamMode::Relaxed { epsilon },
                    None => TamMode::Limit,
                };
                let mut c = TamConfig::new(self.grid, self.alpha, self.qbar, self.qhat, mode, self.dt, self.t_end)?;
                c.mu = self.mu;
                c.h_height = self.h_height;
                c.cfl = self.cfl;
                c.nonlinear = self.nonlinear;
                SystemConfig::Tam(c)
            }
        })
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        Ok(RunSpec {
            system: self.system_config()?,
            ic: self.ic.clone(),
            sample_every: self.output.every,
            lq: self.output.lq.clone(),
        })
    }

    /// Sweep over `epsilons`; the system kind must match the study.
    pub fn sweep_spec(&self, kind: StudyKind, workers: Option<usize>) -> Result<SweepSpec> {
        let want = match kind {
            StudyKind::Hydrostatic => SystemKind::Sns,
            StudyKind::Relaxation => SystemKind::Tam,
        };
        if self.system != want {
            return Err(Error::Config {
                line: 0,
                key: "kind".into(),
                message: format!("the {} study needs kind = {}", kind.name(), want.name()),
            });
        }
        let spec = SweepSpec {
            kind,
            epsilons: self.epsilons.clone(),
            ic: self.ic.clone(),
            grid: self.grid,
            dt: self.dt,
            t_end: self.t_end,
            cfl: self.cfl,
            sample_every: self.output.every,
            moist: MoistParams {
                alpha: self.alpha,
                qbar: self.qbar,
                qhat: self.qhat,
                mu: self.mu,
            },
            workers,
        };
        spec.validate().map_err(|e| Error::Config {
            line: 0,
            key: "epsilons".into(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    /// Replaces the seed of a random initial condition.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialCondition::RandomSmooth { seed: s, .. } = &mut self.ic {
            *s = seed;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tam(extra: &str) -> String {
        format!("[system]\nkind = tam\n[physics]\nmode = limit\n{extra}\n")
    }

    #[test]
    fn minimal_tam_defaults() {
        let c = parse_config("[system]\nkind = tam\n").unwrap();
        assert_eq!(c.mu, 1.0);
        assert_eq!(c.cfl, 0.5);
        assert!((c.grid.lengths[0] - 2.0 * PI).abs() < 1e-15 && c.grid.is_planar());
        assert_eq!(c.ic, InitialCondition::Vortical { amplitude: 1.0 });
        assert!(matches!(c.system_config().unwrap(), SystemConfig::Tam(_)));
    }

    #[test]
    fn moist_constraints_are_named() {
        match parse_config(&tam("qbar = 1.5")) {
            Err(Error::Config { line, key, message }) => {
                assert_eq!((line, key.as_str()), (5, "Qbar"));
                assert!(message.contains("0 < Qbar < 1"));
            }
            other => panic!("{other:?}"),
        }
        let e = parse_config(&tam("alpha = -0.2\nqbar = 0.1")).unwrap_err();
        assert!(e.to_string().contains("alpha + Qbar > 0"), "{e}");
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        let e = parse_config("[system]\nkind = sns\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        assert!(parse_config("kind = sns\n").is_err());
        assert!(parse_config("[system]\nkind = sns\n[grid]\nn1 = 3x\n").is_err());
        assert!(parse_config("[system]\nkind = sns\n[weird]\n").is_err());
        // only used by pe
        let e = parse_config("[system]\nkind = sns\nvariant = hh\n").unwrap_err();
        assert!(e.to_string().contains("not used by kind = sns"), "{e}");
    }

    #[test]
    fn full_pe_config() {
        let text = "# comment\n[system]\nkind = pe\nvariant = hh\n[grid]\nn1 = 16\nn3 = 16\n[physics]\nf0 = 0.5\n\
                    [integrator]\ndt = 2e-3\nt_end = 0.1\n[ic]\nname = random-smooth\nseed = 9\n[output]\nformats = csv\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.dims, [16, 16, 16]);
        assert_eq!(c.variant, PeVariant::HH);
        assert_eq!(c.output.formats, vec![ReportFormat::Csv]);
        let c = c.with_seed(4);
        assert!(matches!(c.ic, InitialCondition::RandomSmooth { seed: 4, .. }));
        match c.system_config().unwrap() {
            SystemConfig::Pe(p) => assert_eq!(p.f0, 0.5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn study_kind_must_match() {
        let c = parse_config("[system]\nkind = sns\n").unwrap();
        assert!(c.sweep_spec(StudyKind::Hydrostatic, None).is_ok());
        assert!(c.sweep_spec(StudyKind::Relaxation, None).is_err());
    }
}

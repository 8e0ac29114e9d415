use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geoflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoflow")).args(args).output().expect("spawn geoflow")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const PE: &str = "[system]\nkind = pe\nvariant = hh\n[grid]\nn1 = 16\n[ic]\nname = taylor-green\namplitude = 0.5\n[integrator]\ndt = 2e-3\nt_end = 0.02\n[output]\ncheckpoint = true\n";
const TAM: &str = "[system]\nkind = tam\n[grid]\nn1 = 16\n[integrator]\ndt = 2e-3\nt_end = 0.02\n";

#[test]
fn invalid_moist_constant_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.ini", "[system]\nkind = tam\n[physics]\nqbar = 1.5\n");
    let out = geoflow(&["run-tam", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Qbar"), "{err}");
}

#[test]
fn missing_config_exits_4() {
    let out = geoflow(&["run-pe", "--config", "/nonexistent/geoflow.ini"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fast.ini",
        "[system]\nkind = sns\n[grid]\nn1 = 16\n[ic]\nname = taylor-green\namplitude = 50\n[integrator]\ndt = 0.5\nt_end = 1\n",
    );
    let out = geoflow(&["run-sns", "--config", &cfg, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_then_diagnose_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pe.ini", PE);
    let out_dir = dir.path().join("out");
    let out = geoflow(&["run-pe", "--config", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["energy.csv", "samples.csv", "summary.jsonl", "final.chk"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let chk = out_dir.join("final.chk").to_string_lossy().into_owned();
    let diag = geoflow(&["diagnose", &chk]);
    assert_eq!(diag.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&diag.stdout).contains("system pe"));

    let resumed = geoflow(&["run-pe", "--config", &cfg, "--resume", &chk, "--out", &dir.path().join("r").to_string_lossy()]);
    assert_eq!(resumed.status.code(), Some(0), "{}", String::from_utf8_lossy(&resumed.stderr));

    let tam = write(dir.path(), "tam.ini", TAM);
    let wrong = geoflow(&["run-tam", "--config", &tam, "--resume", &chk]);
    assert_eq!(wrong.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("mismatch"));
}

#[test]
fn corrupt_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "junk.chk", "not a checkpoint");
    assert_eq!(geoflow(&["diagnose", &p]).status.code(), Some(4));
}

#[test]
fn study_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "relax.ini",
        "[system]\nkind = tam\n[grid]\nn1 = 16\n[physics]\nepsilons = 0.1, 0.05, 0.025\n[integrator]\ndt = 2e-3\nt_end = 0.05\n[output]\nformats = csv, jsonl\n",
    );
    let mut outputs = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "3")] {
        let d = dir.path().join(run);
        let out = geoflow(&["limit-relaxation", "--config", &cfg, "--out", &d.to_string_lossy(), "--workers", workers]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((fs::read(d.join("relaxation.csv")).unwrap(), fs::read(d.join("relaxation.jsonl")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn wrong_subcommand_for_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pe.ini", PE);
    assert_eq!(geoflow(&["run-sns", "--config", &cfg]).status.code(), Some(2));
}

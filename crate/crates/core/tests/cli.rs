use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use cme_core::cli::{resolve, run, Command, Overrides};
use cme_core::config::{parse_config, RunConfig, SETUP_NAMES};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_cme-wavepack"))
}

#[test]
fn shipped_configs_match_named_setups() {
    for name in SETUP_NAMES {
        let text = fs::read_to_string(configs_dir().join(format!("{name}.ini"))).unwrap();
        let cfg = parse_config(&text).unwrap();
        let named = RunConfig::named(name).unwrap();
        assert_eq!(cfg.hash(), named.hash(), "{name}");
        assert_eq!(cfg.out_dir, format!("out/{name}"));
        // canonical text parses back to the same configuration
        assert_eq!(parse_config(&cfg.serialize()).unwrap().serialize(), cfg.serialize());
    }
}

#[test]
fn overrides_apply_after_file() {
    let o = Overrides {
        config_text: Some("[soliton]\nv = 0.25\n".into()),
        setup: Some("sec62".into()),
        out: Some("elsewhere".into()),
        epsilons: Some(vec![0.02, 0.03, 0.04, 0.05]),
    };
    let cfg = resolve(&o).unwrap();
    assert_eq!(cfg.name, "sec62");
    assert_eq!(cfg.velocity, 0.25);
    assert_eq!(cfg.out_dir, "elsewhere");
    assert_eq!(cfg.epsilons, vec![0.02, 0.03, 0.04, 0.05]);
    assert_eq!(cfg.cells, Some(2));
}

#[test]
fn config_errors_are_reported_together() {
    let text = "[numerics]\ndx = -1\nbogus = 3\n[nowhere]\nx = 1\n";
    let msg = parse_config(text).unwrap_err().to_string();
    for needle in ["bogus", "nowhere", "dx"] {
        assert!(msg.contains(needle), "{msg}");
    }
}

fn run_into(cmd: Command, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut cfg = RunConfig::named("sec611").unwrap();
    cfg.out_dir = dir.to_string_lossy().into_owned();
    cfg.eigenfunctions = true;
    let out = run(cmd, &cfg).unwrap();
    assert!(out.success);
    out.files
        .iter()
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(f).unwrap()))
        .collect()
}

#[test]
fn outputs_are_deterministic_and_tagged() {
    let mut cfg = RunConfig::named("sec611").unwrap();
    cfg.eigenfunctions = true;
    let hash = cfg.hash();
    for cmd in [Command::Bands, Command::Coeffs, Command::Soliton] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = run_into(cmd, a.path());
        let fb = run_into(cmd, b.path());
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{}", cmd.name());
        for (_, bytes) in &fa {
            let text = String::from_utf8_lossy(bytes);
            assert_eq!(text.lines().next().unwrap(), format!("# config_hash={hash}"));
        }
    }
}

#[test]
fn coeffs_file_lists_values() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_into(Command::Coeffs, dir.path());
    let text = String::from_utf8(files[0].1.clone()).unwrap();
    for key in ["c_g=", "kappa=", "alpha=", "case=simple_pair", "omega0="] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn binary_writes_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bands", "--setup", "sec62", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("omega_2(0)=3.428"));
    assert!(dir.path().join("bands/bands.csv").exists());
}

#[test]
fn binary_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    fs::write(&path, "[carrier]\nband = 0\n").unwrap();
    let out = bin().args(["coeffs", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["coeffs", "--setup", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["coeffs", "--setup", "sec611", "--epsilon", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_flags_missed_window() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.ini");
    fs::write(&path, "setup = sec611\n[acceptance]\nrate_min = 5\nrate_max = 6\n").unwrap();
    let out = bin()
        .args(["converge", "--threads", "2", "--epsilon", "0.1,0.12,0.15,0.2", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("converge/summary.txt")).unwrap();
    assert!(summary.contains("pass=false"));
}

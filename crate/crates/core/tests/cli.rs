use std::fs;
use std::path::Path;
use std::process::Command;

use hypfield::fieldmc::RunConfig;
use sha2::{Digest, Sha256};

fn hypfield(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hypfield")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn check_hashes(m: &serde_json::Value) {
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for o in outputs {
        let bytes = fs::read(o["path"].as_str().unwrap()).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

fn small_config() -> RunConfig {
    RunConfig { q_max: 3, n_mc: 2000, orbit_radius: 4.0, ..RunConfig::default() }
}

#[test]
fn tessellate_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = hypfield(&["tessellate", "--radius", "2", "--csv", "tiles.csv", "--svg", "tiles.svg", "--out", d]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("tiles.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "tile_id,word,v1x,v1y,v2x,v2y,v3x,v3y");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((first[0], first[1]), ("0", "e"));
    assert!(fs::read_to_string(dir.path().join("tiles.svg")).unwrap().starts_with("<svg"));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "tessellate");
    assert_eq!(m["status"], "pass");
    check_hashes(&m);
}

#[test]
fn analytic_subcommands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = hypfield(&["green", "--steps", "40", "--out", d]);
    assert_eq!(code, 0, "{err}");
    let green = fs::read_to_string(dir.path().join("green.csv")).unwrap();
    assert_eq!(green.lines().count(), 41);
    let (code, _, err) = hypfield(&["propagator", "--out", d]);
    assert_eq!(code, 0, "{err}");
    let prop = fs::read_to_string(dir.path().join("propagator.csv")).unwrap();
    assert_eq!(prop.lines().next().unwrap(), "z,zeta,h_direct,h_substituted,rel_dev");
    check_hashes(&manifest(dir.path()));
}

#[test]
fn audits_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, stdout, err) = hypfield(&["neumann-audit", "--pairs", "200", "--orbit-radius", "4", "--out", d]);
    assert_eq!(code, 0, "{stdout}{err}");
    let records: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("neumann_audit.json")).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 4);
    let (code, stdout, err) = hypfield(&["sample-audit", "--n", "20000", "--kind", "neumann", "--orbit-radius", "4", "--out", d]);
    assert_eq!(code, 0, "{stdout}{err}");
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sample_audit.json")).unwrap()).unwrap();
    assert_eq!(audit["passed"], true);
    assert_eq!(manifest(dir.path())["seed"], 1);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(hypfield(&["frobnicate"]).0, 2);
    assert_eq!(hypfield(&["green", "--no-such-flag"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let text: String = small_config().to_string().lines().filter(|l| !l.starts_with("seed=")).map(|l| format!("{l}\n")).collect();
    fs::write(&cfg, text).unwrap();
    let (code, _, err) = hypfield(&["triviality", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("missing key `seed`"), "{err}");
    // A missing file is a runtime error.
    assert_eq!(hypfield(&["triviality", "--config", "/nonexistent/x.cfg", "--out", dir.path().to_str().unwrap()]).0, 1);
}

#[test]
fn triviality_is_deterministic_and_round_trips_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, format!("# small run\n{}", small_config())).unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let (code, stdout, err) = hypfield(&["--threads", threads, "triviality", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(code == 0 || code == 1, "{err}");
        assert!(stdout.contains("decay rate"), "{stdout}");
        out
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    for f in ["config.cfg", "triviality.json", "triviality_q.csv", "decay.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let echoed = fs::read_to_string(a.join("config.cfg")).unwrap();
    assert_eq!(RunConfig::parse(&echoed).unwrap(), small_config());
    assert_eq!(echoed, small_config().to_string());
    let csv = fs::read_to_string(a.join("triviality_q.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    check_hashes(&manifest(&a));
}

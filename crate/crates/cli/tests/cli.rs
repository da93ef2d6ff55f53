use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

const LAW: &str = "[distribution]\nkind = \"two_point\"\na = 0.3\n";

fn sinai(dir: &Path, cmd: &str, body: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, format!("{LAW}{body}")).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sinai"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.join("out").display().to_string()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMOKE: &str = "[simulate]\nn = 100\nenv_seed = 1\nwalk_seed = 1\n";

#[test]
fn simulate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "simulate", SMOKE, &["--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/local_time.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema: local_time v1"));
    assert_eq!(lines.next(), Some("site,count"));
    let mass: u64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(mass, 100);
    let stats = json(dir.path().join("out/stats.json"));
    assert_eq!(stats["mass"], 100);
    assert!(stats["l_star"].as_u64().unwrap() >= 1);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = sinai(dir.path(), "simulate", "[simulate]\nn = 5000\n", &["--seed", "11", "--out", &d.display().to_string()]);
        assert!(o.status.success());
    }
    for f in ["local_time.csv", "stats.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn invalid_beta_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMOKE}betas = [0.5, 1.0]\n");
    let o = sinai(dir.path(), "simulate", &body, &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_law_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[distribution]\nkind = \"two_point\"\na = 1.2\n[simulate]\nn = 10\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sinai"))
        .args(["simulate", "--out", &out_arg(dir.path()), "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fixture_valley() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "valley", "[valley]\nn = 10000\nenv_seed = 7\n", &["--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.path().join("out/valley.json"));
    assert_eq!(v["found"], true);
    let b = &v["valley"];
    assert_eq!((b["m_prime"].as_i64(), b["m_n"].as_i64(), b["m_right"].as_i64()), (Some(-1382), Some(1735), Some(2302)));
    assert!((b["depth"].as_f64().unwrap() - 36.433_807_996_649_776).abs() < 1e-9);
    let pot = fs::read_to_string(dir.path().join("out/potential.csv")).unwrap();
    // header lines plus M' - 50 ..= M + 50; the depth is measured on the lower (right) wall
    assert_eq!(pot.lines().count(), 2 + (2302 + 50 - (-1382 - 50) + 1) as usize);
    let bottom = pot.lines().find(|l| l.starts_with("1735,")).unwrap();
    let s: f64 = bottom.split(',').nth(1).unwrap().parse().unwrap();
    let top = pot.lines().find(|l| l.starts_with("2302,")).unwrap();
    let t: f64 = top.split(',').nth(1).unwrap().parse().unwrap();
    assert!((t - s - 36.433_807_996_649_776).abs() < 1e-9);
}

#[test]
fn absent_valley_has_its_own_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "valley", "[valley]\nn = 10000\nenv_seed = 7\ncap = 20\n", &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    let v = json(dir.path().join("out/valley.json"));
    assert_eq!(v["found"], false);
    assert!(v["valley"].is_null());
}

#[test]
fn zero_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "valley", "[valley]\nn = 10000\ncap = 0\n", &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn default_verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[verify]\nenvironments = 40\ntrials = 4000\nreplicas = 20\n";
    let o = sinai(dir.path(), "verify", body, &["--seed", "3", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/verify.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows, ["oracle,true", "sandwich,true", "wald,true", "sqrt_tail,true", "band,true"]);
    let v = json(dir.path().join("out/verify.json"));
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("out/oracle.csv").exists());
}

#[test]
fn failing_check_exits_with_verification_status() {
    let dir = tempfile::tempdir().unwrap();
    // one replica cannot give a standard error, so the band check is flagged
    let body = "[verify]\nchecks = [\"band\"]\nreplicas = 1\n";
    let o = sinai(dir.path(), "verify", body, &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("out/verify.json").exists());
}

#[test]
fn experiment_smoke_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let body = "[experiment]\nprobe = \"concentration\"\nreplicas = 2\nmax_n = 64\n";
    let o = sinai(dir.path(), "experiment", body, &["--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let csv = fs::read_to_string(dir.path().join("out/concentration.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("# schema: concentration v1"));
    // 2 replicas × checkpoints 16, 32, 64
    assert_eq!(csv.lines().count(), 2 + 6);
    let s = json(dir.path().join("out/concentration.json"));
    assert_eq!(s["schedule"], serde_json::json!([16, 32, 64]));
}

#[test]
fn other_probes_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (body, file) in [
        ("probe = \"wald\"\na = 5.0\nd = 5.0\ntrials = 1000\n", "wald.json"),
        ("probe = \"sqrt_tail\"\nr = [4, 16]\ntrials = 500\n", "sqrt_tail.csv"),
        ("probe = \"zero_one\"\nmax_n = 64\nenvironments = 3\nwalks_per_env = 2\n", "zero_one.json"),
        ("probe = \"favorite_sites\"\nreplicas = 2\nmax_n = 64\ntrajectories = 20\ntrajectory_steps = 200\n", "favorite_checks.csv"),
    ] {
        let o = sinai(dir.path(), "experiment", &format!("[experiment]\n{body}"), &["--out", &out_arg(dir.path())]);
        assert!(o.status.success(), "{body}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join("out").join(file).exists(), "{file}");
    }
}

#[test]
fn missing_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "simulate", SMOKE, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("output directory"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMOKE}steps = 4\n");
    let o = sinai(dir.path(), "simulate", &body, &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = sinai(dir.path(), "experiment", "[experiment]\nprobe = \"wald\"\na = 5.0\nd = 5.0\ntrials = 5\nb = 1\n", &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_section_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sinai(dir.path(), "valley", SMOKE, &["--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pacons"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pacons")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn sweep_prints_csv_header() {
    let cfg = configs().join("fig1.cfg");
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("M,mean_pcg,stderr,trials,failures"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first, ["1", "1", "0", "50", "0"]);
}

#[test]
fn precode_with_more_users_than_antennas_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        r#"
scenario = "multi_user_pcg"
channel = "nlos"
antennas = [2]
users = 4
gamma_db = 10.0
sigma_nu = 1.0
trials = 1
seed = 1
precoders = "zf"
"#,
    );
    let out = run(&["precode", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dimension"), "{err}");
}

#[test]
fn profile_is_deterministic() {
    let cfg = configs().join("fig2.cfg");
    let a = run(&["profile", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    let b = run(&["profile", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert!(text.starts_with("antenna,p_conventional,p_efficient\n"));
}

#[test]
fn out_flag_writes_data_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("los.csv");
    let cfg = write_config(
        dir.path(),
        "los.cfg",
        r#"
scenario = "multi_user_pcg"
channel = "los"
antennas = [8]
users = 2
gamma_db = 10.0
sigma_nu = 1.0
trials = 5
seed = 3
precoders = "rzf"
"#,
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("8,"));
    let meta = std::fs::read_to_string(dir.path().join("los.csv.meta.json")).unwrap();
    assert!(meta.contains("los_angle_range"));
    assert!(meta.contains("\"rho\""));
}

#[test]
fn precode_json_has_both_precoders() {
    let cfg = configs().join("fig2.cfg");
    let out = run(&["precode", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"precoder\": \"ZF\""));
    assert!(text.contains("\"precoder\": \"ZF-eff\""));
    assert!(text.contains("\"W_real\""));
}

#[test]
fn rejects_unknown_flag_and_bad_config() {
    let cfg = configs().join("fig2.cfg");
    assert!(!run(&["profile", "--config", cfg.to_str().unwrap(), "--bogus"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "scenario = \"nope\"\n");
    let out = run(&["sweep", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

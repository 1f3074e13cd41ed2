use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_schurblock"));
    cmd.env_remove("SCHURBLOCK_SEED");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Report JSON with the wall-clock field removed, pretty-printed.
fn stable(stdout: &[u8]) -> String {
    let mut v: Value = serde_json::from_slice(stdout).expect("report is JSON");
    v.as_object_mut().unwrap().remove("timings_ms");
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn small_verify() -> Command {
    let mut cmd = bin();
    cmd.args([
        "verify", "--n", "2", "--d", "1", "--k", "1", "--trials", "3", "--seed", "11",
    ]);
    cmd
}

#[test]
fn report_matches_golden_file() {
    let out = run(&mut small_verify());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let actual = stable(&out.stdout);
    let path = fixture("report_n2_d1_k1.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "report drifted from {}", path.display());
}

#[test]
fn report_schema_fields() {
    let out = run(&mut small_verify());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["results"].as_array().unwrap().len(), 10);
    assert!(v["timings_ms"].is_object());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let first = run(&mut small_verify());
    let second = run(&mut small_verify());
    assert_eq!(stable(&first.stdout), stable(&second.stdout));
}

#[test]
fn environment_seed_overrides_flag() {
    let mut flagged = bin();
    flagged.args([
        "verify", "--n", "2", "--d", "1", "--k", "1", "--trials", "3", "--seed", "99",
    ]);
    let flagged = run(&mut flagged);
    let from_env = run(small_verify().env("SCHURBLOCK_SEED", "99"));
    assert_eq!(stable(&flagged.stdout), stable(&from_env.stdout));
    let v: Value = serde_json::from_slice(&from_env.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 99);

    let bad = run(small_verify().env("SCHURBLOCK_SEED", "not-a-number"));
    assert_eq!(code(&bad), 2);
}

#[test]
fn csv_has_one_row_per_property() {
    let out = run(small_verify().args(["--format", "csv", "--properties", "livshits,sandwich"]));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("property_id,trials,failures"));
    assert!(lines[1].starts_with("livshits,3,0,"));
    assert!(lines[2].starts_with("sandwich,3,0,"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(small_verify().arg("--out").arg(&path));
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let stdout = run(&mut small_verify()).stdout;
    assert_eq!(stable(&std::fs::read(&path).unwrap()), stable(&stdout));

    let missing = run(small_verify()
        .arg("--out")
        .arg(dir.path().join("no/such/dir.json")));
    assert_eq!(code(&missing), 3);
}

#[test]
fn verification_failure_exits_one() {
    let out =
        run(small_verify().args(["--properties", "lemma_norms", "--tol.lemma_norms", "1e-300"]));
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["verify", "--n", "9"],
        vec!["verify", "--k", "4"],
        vec!["verify", "--d", "0"],
        vec!["verify", "--properties", "nonsense"],
        vec!["verify", "--ensemble", "wishart"],
        vec!["verify", "--tol.livshits", "-1"],
        vec!["verify", "--bogus-flag"],
    ] {
        let out = run(bin().args(&args));
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn replay_identity_pair_has_zero_residual() {
    let out = run(bin()
        .arg("replay")
        .arg(fixture("identity_pair.json"))
        .args(["--property", "factorization", "--format", "json"]));
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["worst_residual"], 0.0);
    assert_eq!(v["failures"], 0);
}

#[test]
fn replay_hand_checked_livshits_case() {
    let out = run(bin()
        .arg("replay")
        .arg(fixture("livshits_hand.json"))
        .args(["--property", "livshits", "--format", "json"]));
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // ‖A□B‖ for [[5,12],[21,32]]: σ² = (T + √(T² − 4·det²))/2, T = 1634, det = −92.
    let t = 1634.0f64;
    let oracle = ((t + (t * t - 4.0 * 92.0 * 92.0).sqrt()) / 2.0).sqrt();
    let lhs = v["diagnostics"]["lhs"].as_f64().unwrap();
    assert!((lhs - oracle).abs() <= 1e-10 * oracle);
    assert!((lhs - 40.3584).abs() < 1e-4);
    assert_eq!(v["diagnostics"]["rhs"].as_f64().unwrap(), 50.0);

    let text = run(bin()
        .arg("replay")
        .arg(fixture("livshits_hand.json"))
        .args(["--property", "livshits"]));
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("status         pass"), "{text}");
}

#[test]
fn replay_with_vectors() {
    let path = fixture("with_vectors.json");
    let out = run(bin()
        .arg("replay")
        .arg(&path)
        .args(["--property", "cauchy_schwarz"]));
    assert_eq!(code(&out), 0);
    let without = run(bin()
        .arg("replay")
        .arg(fixture("livshits_hand.json"))
        .args(["--property", "cauchy_schwarz"]));
    assert_eq!(code(&without), 2);
}

#[test]
fn replay_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corrupt = dir.path().join("corrupt.json");
    let text = std::fs::read_to_string(fixture("livshits_hand.json")).unwrap();
    std::fs::write(&corrupt, &text[..text.len() / 2]).unwrap();
    let out = run(bin()
        .arg("replay")
        .arg(&corrupt)
        .args(["--property", "livshits"]));
    assert_eq!(code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("line") && stderr.contains("column"),
        "{stderr}"
    );

    let out = run(bin()
        .arg("replay")
        .arg(fixture("mismatched.json"))
        .args(["--property", "livshits"]));
    assert_eq!(code(&out), 4);

    let out = run(bin()
        .arg("replay")
        .arg(dir.path().join("absent.json"))
        .args(["--property", "livshits"]));
    assert_eq!(code(&out), 3);

    let out = run(bin()
        .arg("replay")
        .arg(fixture("livshits_hand.json"))
        .args(["--property", "nope"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn emit_system_dumps_matrices() {
    let out = run(bin().args(["emit-system", "--n", "2", "--d", "1"]));
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["V"]["rows"], 4);
    assert_eq!(v["V"]["cols"], 2);
    assert_eq!(v["F"]["rows"], 4);
    // F swaps (0,0,1) and (1,0,0): flat indices 1 and 2.
    assert_eq!(v["F"]["entries"][1][2], serde_json::json!([1.0, 0.0]));
    assert!(v.get("representations").is_none());

    let out = run(bin()
        .arg("emit-system")
        .arg("--instance")
        .arg(fixture("livshits_hand.json")));
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["lambda_A", "rho_B", "sigma_A", "kronecker_block_AB"] {
        assert_eq!(v["representations"][key]["rows"], 4, "{key}");
    }

    let out = run(bin().args(["emit-system", "--n", "40", "--d", "1"]));
    assert_eq!(code(&out), 2);
}

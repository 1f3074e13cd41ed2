//! Acceptance gate. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p schurblock-cli --test acceptance -- --nocapture` to see them.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use schurblock::blockmat::Lift;
use schurblock::random::derive_seed;
use schurblock::verify::{livshits_sides, sandwich_gaps, verify_cb_level};
use schurblock::{run_suite, BlockMatrix, Ensemble, PropertyId, PropertyResult, TrialConfig};

/// Prints the criterion line, then fails the test if it did not hold.
fn report(criterion: u32, name: &str, ok: bool, detail: String) {
    println!(
        "{} criterion {criterion} ({name}): {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

/// Runs one property over a grid of shapes and merges the per-cell results.
fn sweep(
    property: PropertyId,
    tol: f64,
    cells: &[(usize, usize, usize)],
    per_cell: u64,
    seed: u64,
) -> PropertyResult {
    let mut total = PropertyResult::empty(property.as_str(), tol);
    for (index, &(n, d, k)) in cells.iter().enumerate() {
        let config = TrialConfig {
            n,
            d,
            k,
            trials: per_cell,
            seed: derive_seed(seed, index as u64),
            ensemble: Ensemble::ALL[index % Ensemble::ALL.len()],
            tolerances: [(property, tol)].into_iter().collect(),
            properties: vec![property],
        };
        let report = run_suite(&config).expect("valid config");
        total.merge(&report.results[0]);
    }
    total
}

fn grid(
    ns: std::ops::RangeInclusive<usize>,
    ds: std::ops::RangeInclusive<usize>,
    k: usize,
) -> Vec<(usize, usize, usize)> {
    ns.flat_map(|n| ds.clone().map(move |d| (n, d, k)))
        .collect()
}

fn summary(r: &PropertyResult) -> String {
    format!(
        "{} instances, {} failures, worst residual {:.2e} (tol {:.0e})",
        r.trials, r.failures, r.worst_residual, r.tolerance_used
    )
}

fn scalar_pair(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> (BlockMatrix, BlockMatrix) {
    let to = |m: [[f64; 2]; 2]| BlockMatrix::from_scalars(&m);
    (to(a), to(b))
}

#[test]
fn criterion_1_factorization_identity() {
    let start = Instant::now();
    let r = sweep(
        PropertyId::Factorization,
        1e-10,
        &grid(1..=5, 1..=3, 1),
        34,
        101,
    );
    let elapsed = start.elapsed();
    report(
        1,
        "factorization identity",
        r.trials >= 500 && r.passed() && elapsed < Duration::from_secs(30),
        format!("{}, {:.2} s", summary(&r), elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_2_structural_exactness() {
    let r = sweep(
        PropertyId::Structure,
        1e-12,
        &grid(1..=5, 1..=3, 1),
        14,
        202,
    );
    report(
        2,
        "structural exactness",
        r.trials >= 200 && r.passed(),
        summary(&r),
    );
}

#[test]
fn criterion_3_livshits_inequality() {
    let r = sweep(PropertyId::Livshits, 1e-8, &grid(1..=5, 1..=3, 1), 67, 303);
    let (a, b) = scalar_pair([[1.0, 2.0], [3.0, 4.0]], [[5.0, 6.0], [7.0, 8.0]]);
    let (lhs, rhs) = livshits_sides(&a, &b).unwrap();
    // A□B = [[5,12],[21,32]]: σ_max² = (T + √(T² − 4·det²))/2 with T = ‖·‖_F² = 1634, det = −92.
    let t = 1634.0f64;
    let oracle = ((t + (t * t - 4.0 * 92.0f64.powi(2)).sqrt()) / 2.0).sqrt();
    let hand =
        (lhs - oracle).abs() <= 1e-10 * oracle && (lhs - 40.3584).abs() < 5e-5 && rhs == 50.0;
    report(
        3,
        "Livshits inequality",
        r.trials >= 1000 && r.passed() && hand,
        format!(
            "{}; hand case lhs {lhs:.6} (oracle {oracle:.6}), rhs {rhs}",
            summary(&r)
        ),
    );
}

#[test]
fn criterion_4_sharpness() {
    let r = sweep(PropertyId::Sharpness, 1e-8, &grid(1..=5, 1..=3, 1), 14, 404);
    let rows = r.diagnostic("row_residual").unwrap_or(f64::MAX);
    let max = r.diagnostic("max_residual").unwrap_or(f64::MAX);
    report(
        4,
        "sharpness witness",
        r.trials >= 200 && r.passed() && rows <= 1e-8 && max <= 1e-8,
        format!(
            "{}; worst row gap {rows:.2e}, worst max-over-rows gap {max:.2e}",
            summary(&r)
        ),
    );
}

#[test]
fn criterion_5_sandwich_inequality() {
    let r = sweep(PropertyId::Sandwich, 1e-10, &grid(1..=5, 1..=3, 1), 67, 505);
    let (a, _) = scalar_pair([[1.0, 2.0], [3.0, 4.0]], [[0.0; 2]; 2]);
    let (upper, lower, scale) = sandwich_gaps(&a).unwrap();
    let boundary = upper.abs() <= 1e-12 && lower >= 0.0;
    report(
        5,
        "sandwich inequality",
        r.trials >= 1000 && r.passed() && boundary,
        format!(
            "{}; boundary case upper-gap min eig {upper:.1e}, lower {lower:.4}, ‖diag‖ {scale}",
            summary(&r)
        ),
    );
}

#[test]
fn criterion_6_cauchy_schwarz_bound() {
    let r = sweep(
        PropertyId::CauchySchwarz,
        1e-10,
        &grid(1..=5, 1..=3, 1),
        67,
        606,
    );
    let gap = r.diagnostic("route_gap").unwrap_or(f64::MAX);
    report(
        6,
        "Cauchy-Schwarz bound",
        r.trials >= 1000 && r.passed() && gap <= 1e-10,
        format!("{}; largest route gap {gap:.2e}", summary(&r)),
    );
}

#[test]
fn criterion_7_complete_boundedness() {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        let r = sweep(
            PropertyId::CbLevel,
            1e-8,
            &grid(1..=3, 1..=2, k),
            50,
            700 + k as u64,
        );
        let ratio = r.diagnostic("ratio").unwrap_or(f64::MAX);
        ok &= r.trials >= 300 && r.passed() && ratio <= 1.0 + 1e-8;
        lines.push(format!(
            "k={k}: {} instances, max ratio {ratio:.6}",
            r.trials
        ));
    }
    // ‖E‖ = n and E□E = E, so the unit reaches ratio 1 only for n = 1; the block
    // identity reaches it at every size.
    let unit = BlockMatrix::schur_unit(1, 2);
    let unit_lift = Lift::new(vec![vec![unit]]).unwrap();
    let unit_ratio = verify_cb_level(&unit_lift, &unit_lift, 1e-8)
        .unwrap()
        .diagnostic("ratio")
        .unwrap();
    ok &= unit_ratio == 1.0;
    for k in 1..=3 {
        let id = Lift::schur_identity(k, 1, 2);
        let ratio = verify_cb_level(&id, &id, 1e-8)
            .unwrap()
            .diagnostic("ratio")
            .unwrap();
        ok &= (ratio - 1.0).abs() <= 1e-12;
    }
    let id = Lift::new(vec![vec![BlockMatrix::identity(3, 2)]]).unwrap();
    let id_ratio = verify_cb_level(&id, &id, 1e-8)
        .unwrap()
        .diagnostic("ratio")
        .unwrap();
    ok &= (id_ratio - 1.0).abs() <= 1e-12;
    lines.push(format!(
        "k=1 A=B=E ratio {unit_ratio}, block identity ratio {id_ratio}"
    ));
    report(7, "complete boundedness", ok, lines.join("; "));
}

#[test]
fn criterion_8_lemma_checks() {
    let norms = sweep(
        PropertyId::LemmaNorms,
        1e-8,
        &grid(1..=5, 1..=3, 1),
        20,
        808,
    );
    let diag = sweep(
        PropertyId::LemmaDiag,
        1e-12,
        &grid(1..=5, 1..=3, 1),
        20,
        809,
    );
    report(
        8,
        "column/row norm and diagonal lemmas",
        norms.passed() && diag.passed() && norms.trials > 0 && diag.trials > 0,
        format!("norms: {}; diagonal: {}", summary(&norms), summary(&diag)),
    );
}

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

fn without_timings(out: &Output) -> Vec<u8> {
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("report is JSON");
    v.as_object_mut().unwrap().remove("timings_ms");
    serde_json::to_vec(&v).unwrap()
}

#[test]
fn criterion_9_cli_determinism_and_exit_codes() {
    let verify = || {
        bin()
            .args([
                "verify", "--n", "3", "--d", "2", "--k", "2", "--trials", "20", "--seed", "9",
            ])
            .output()
            .unwrap()
    };
    let (first, second) = (verify(), verify());
    let identical = without_timings(&first) == without_timings(&second);

    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    let hand = fixture("livshits_hand.json");
    let hand = hand.to_str().unwrap();
    let corrupt = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(corrupt.path(), "{\"A\": {\"n\": 2,").unwrap();
    let expected = [
        (first.status.code(), Some(0), "pass"),
        (
            code(&[
                "verify",
                "--trials",
                "2",
                "--properties",
                "lemma_norms",
                "--tol.lemma_norms",
                "1e-300",
            ]),
            Some(1),
            "verification failure",
        ),
        (code(&["verify", "--n", "0"]), Some(2), "config error"),
        (
            code(&[
                "replay",
                "/nonexistent/instance.json",
                "--property",
                "livshits",
            ]),
            Some(3),
            "io error",
        ),
        (
            code(&[
                "replay",
                corrupt.path().to_str().unwrap(),
                "--property",
                "livshits",
            ]),
            Some(4),
            "parse error",
        ),
        (
            code(&["replay", hand, "--property", "livshits"]),
            Some(0),
            "replay pass",
        ),
    ];
    let codes_ok = expected.iter().all(|(got, want, _)| got == want);
    let detail = expected
        .iter()
        .map(|(got, want, what)| format!("{what} {got:?}/{want:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        9,
        "CLI determinism and exit codes",
        identical && codes_ok,
        format!("identical non-timing bytes: {identical}; exit codes {detail}"),
    );
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dimwit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(args)
        .env_remove("DIMWIT_RANK_TOL")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a checked-in file; `DIMWIT_UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, out: &Output) {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let path = golden(name);
    if std::env::var_os("DIMWIT_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&path).expect("golden file present");
    let expected: Value = serde_json::from_str(&expected).unwrap();
    assert_eq!(json(out), expected, "output differs from {}", path.display());
}

fn construct(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut full = vec!["construct"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap(), "--quiet"]);
    let out = dimwit(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    path.to_str().unwrap().to_string()
}

#[test]
fn golden_pm_negligibility() {
    check_golden(
        "negligibility_pm_4x3_n1000_seed7.json",
        &dimwit(&["experiment", "negligibility", "--pm", "--x", "4", "--y", "3", "--n", "1000", "--seed", "7", "--quiet"]),
    );
}

#[test]
fn golden_nonconvexity() {
    check_golden("nonconvexity_2x3.json", &dimwit(&["experiment", "nonconvexity", "--m", "2", "--n", "3", "--quiet"]));
}

#[test]
fn golden_density() {
    check_golden("density_3x2.json", &dimwit(&["experiment", "density", "--m", "3", "--k", "2", "--quiet"]));
}

#[test]
fn negligibility_sequential_matches_parallel() {
    let base = ["experiment", "negligibility", "--bell", "--m", "2", "--outputs", "2", "--n", "40", "--seed", "3", "--quiet"];
    let par = dimwit(&base);
    let mut seq_args = base.to_vec();
    seq_args.push("--sequential");
    let seq = dimwit(&seq_args);
    assert_eq!(code(&par), 0);
    assert_eq!(json(&par), json(&seq));
}

#[test]
fn witness_on_p8() {
    let dir = tempfile::tempdir().unwrap();
    let p = construct(dir.path(), "p8.json", &["--family", "p_k", "--m", "9", "--k", "8"]);
    let out = dimwit(&["witness", "--in", &p, "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["rank"], 9);
    assert_eq!(v["classical_lb"], 9);
    assert_eq!(v["quantum_lb"], 3);
    assert_eq!(v["certified"], true);
    assert_eq!(v["mode"], "exact");
}

#[test]
fn witness_reports_w_verdict_when_x_is_twice_y() {
    let dir = tempfile::tempdir().unwrap();
    let p = construct(dir.path(), "p.json", &["--family", "p_k", "--m", "6", "--k", "3"]);
    let v = json(&dimwit(&["witness", "--in", &p, "--quiet"]));
    assert_eq!(v["rank"], 4);
    assert_eq!(v["w_verdict"]["source"], "w_rank");
    assert_eq!(v["w_rank_relation"]["holds"], true);
}

#[test]
fn rank_modes_and_tolerance_env() {
    let dir = tempfile::tempdir().unwrap();
    let p = construct(dir.path(), "p.json", &["--family", "p_k", "--m", "6", "--k", "5"]);
    let exact = json(&dimwit(&["rank", "--in", &p, "--quiet"]));
    assert_eq!(exact["result"]["rank"], 6);
    let float = json(&dimwit(&["rank", "--in", &p, "--rank-mode", "float", "--quiet"]));
    assert_eq!(float["result"]["rank"], 6);
    assert_eq!(float["result"]["mode"], "float");

    // A huge tolerance collapses the float rank; the env var must reach the solver.
    let out = Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(["rank", "--in", &p, "--rank-mode", "float", "--quiet"])
        .env("DIMWIT_RANK_TOL", "0.9")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(json(&out)["result"]["rank"].as_u64().unwrap() < 6);

    let bad = Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(["rank", "--in", &p])
        .env("DIMWIT_RANK_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
    let neg = dimwit(&["rank", "--in", &p, "--rank-tol=-1", "--quiet"]);
    assert_eq!(code(&neg), 2);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = construct(dir.path(), "good.json", &["--family", "d_zero", "--m", "2", "--k", "2"]);
    assert_eq!(code(&dimwit(&["validate", "--in", &good, "--quiet"])), 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"kind":"pm","scenario":{"n_inputs_a":1,"n_inputs_b":1,"n_outputs":2},"probs":[[["3/4"]],[["1/2"]]]}"#,
    )
    .unwrap();
    let out = dimwit(&["validate", "--in", bad.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["valid"], false);

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{not json").unwrap();
    let out = dimwit(&["validate", "--in", garbled.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 2);
    assert!(json(&out)["error"].is_string());

    assert_eq!(code(&dimwit(&["validate", "--in", "/nonexistent/file.json", "--quiet"])), 2);
}

#[test]
fn membership_separation_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = construct(dir.path(), "p.json", &["--family", "p_k", "--m", "4", "--k", "3"]);
    let out = dimwit(&["membership", "--in", &p, "--d", "2", "--exact", "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["exact_match"], true);

    // D_00 with two inputs on each side is deterministic but has rank 2: one message is not enough.
    let d = construct(dir.path(), "d.json", &["--family", "d_block", "--m", "2", "--k", "2", "--i", "0", "--j", "0"]);
    let out = dimwit(&["membership", "--in", &d, "--d", "1", "--quiet"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["feasible"], false);

    let big = construct(dir.path(), "big.json", &["--family", "p_k", "--m", "9", "--k", "8"]);
    let out = dimwit(&["membership", "--in", &big, "--d", "2", "--cap", "10", "--quiet"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn separation_experiment() {
    let out = dimwit(&["experiment", "separation", "--k", "8", "--m", "9", "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["classical_lb"], 9);
    assert_eq!(v["quantum_lb"], 3);
    assert_eq!(v["reconstructs_exactly"], true);
}

#[test]
fn simulate_then_factorize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("s.json");
    std::fs::write(
        &strategy,
        r#"{"kind":"classical_pm","d":2,
            "sender":[["1","0"],["0","1"],["1/2","1/2"]],
            "responder":[[["1","0"],["0","1"]],[["1/4","3/4"],["1","0"]]]}"#,
    )
    .unwrap();
    let beh = dir.path().join("b.json");
    let out = dimwit(&["simulate", "--in", strategy.to_str().unwrap(), "--out", beh.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let b = beh.to_str().unwrap();
    assert_eq!(json(&dimwit(&["witness", "--in", b, "--quiet"]))["classical_lb"], 2);

    let out = dimwit(&["factorize", "--in", b, "--d", "2", "--seed", "5", "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["status"], "found");
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);

    let out = dimwit(&["factorize", "--in", b, "--d", "1", "--restarts", "2", "--iterations", "200", "--quiet"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["status"], "not_found");
}

#[test]
fn noise_keeps_rank() {
    let dir = tempfile::tempdir().unwrap();
    let p = construct(dir.path(), "p.json", &["--family", "p_k", "--m", "5", "--k", "4"]);
    let noisy = dir.path().join("noisy.json");
    let out = dimwit(&["noise", "--in", &p, "--eta", "1/3", "--out", noisy.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["all_hold"], true);
    assert_eq!(v["rows"][0]["rank"], 5);
    let w = json(&dimwit(&["witness", "--in", noisy.to_str().unwrap(), "--quiet"]));
    assert_eq!(w["rank"], 5);

    let out = dimwit(&["noise", "--in", &p, "--eta", "0,1/2", "--quiet"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["rows"][0]["holds"].is_null());

    let table = dir.path().join("t.json");
    std::fs::write(
        &table,
        r#"{"kind":"pm_measurement","table":[["1/5","4/5"],["1/2","1/2"],["1","0"],["0","1"]]}"#,
    )
    .unwrap();
    let out = dimwit(&["noise", "--in", &p, "--eta", "0.99", "--noise", table.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["rows"][0]["rank"], 5);

    assert_eq!(code(&dimwit(&["noise", "--in", &p, "--eta", "3/2", "--quiet"])), 2);
}

#[test]
fn bell_constructions() {
    let dir = tempfile::tempdir().unwrap();
    let l = construct(dir.path(), "l.json", &["--family", "l_star", "--m", "3", "--n", "3"]);
    let v = json(&dimwit(&["witness", "--in", &l, "--quiet"]));
    assert_eq!(v["rank"], 7);
    assert_eq!(v["quantum_lb"], 3);
    assert!(v["classical_lb"].is_null());
    let d = construct(dir.path(), "d.json", &["--family", "ldb", "--m", "2", "--n", "3", "--f", "2,0", "--g", "1,1"]);
    assert_eq!(json(&dimwit(&["rank", "--in", &d, "--quiet"]))["result"]["rank"], 1);
    let out = dimwit(&["construct", "--family", "ldb", "--m", "2", "--n", "3", "--f", "3,0", "--g", "1,1", "--quiet"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&dimwit(&["frobnicate"])), 2);
    assert_eq!(code(&dimwit(&["experiment", "negligibility", "--n", "3"])), 2);
    assert_eq!(code(&dimwit(&["construct", "--family", "p_k", "--m", "2", "--k", "3", "--quiet"])), 2);
}

#[test]
fn planted_behaviour_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let d0 = construct(dir.path(), "d0.json", &["--family", "d_zero", "--m", "4", "--k", "3"]);
    let out = dimwit(&["experiment", "negligibility", "--pm", "--x", "4", "--y", "3", "--n", "1", "--include", &d0, "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["deficient_fraction"], 1.0);
    assert_eq!(v["deficient_samples"][0]["planted"], true);
}

#[test]
fn bell_negligibility_finds_no_deficient_samples() {
    let out = dimwit(&["experiment", "negligibility", "--bell", "--m", "2", "--outputs", "2", "--n", "1000", "--seed", "7", "--quiet"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["max_rank"], 3);
    assert_eq!(v["deficient"], 0);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

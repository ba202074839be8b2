use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn xorgap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xorgap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn solve_single_constraint() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.xor", "p mx3 1 1 1 1\n1 1 1 1 0\n");
    let out = xorgap(&["solve", "one.xor", "--seed", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["command"], "solve");
    assert_eq!(rows[0]["seed"], 1);
    assert_eq!(rows[1]["id"], "one");
    assert_eq!(rows[1]["final"], 1.0);
    assert_eq!(rows[1]["opt"], 1.0);
}

#[test]
fn report_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.xor", "p mx3 1 1 1 1\n1 1 1 -1 0\n");
    let out = xorgap(&["solve", "one.xor", "--seed", "9", "--seeds", "1"], dir.path());
    let row = &lines(&out)[1];
    for key in [
        "id", "n_vars", "n_cons", "baseline", "sdp1", "sdp2", "final", "opt", "margin",
        "consistency", "seed", "ms",
    ] {
        assert!(row.get(key).is_some(), "missing {key}");
    }
    let csv = xorgap(&["solve", "one.xor", "--seed", "9", "--csv"], dir.path());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("id,n_vars,n_cons,baseline"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn brute_force_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "big.xor", "p mx3 9 9 9 1\n1 1 1 1 0\n");
    let out = xorgap(&["brute", "big.xor"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capped at 26"));

    write(dir.path(), "small.xor", "p mx3 2 2 2 2\n1 1 1 1 0\n1 2 2 -2 0\n");
    let out = xorgap(&["brute", "small.xor"], dir.path());
    assert!(out.status.success());
    assert_eq!(lines(&out)[1]["optimum"], 1.0);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(xorgap(&["solve", "x.xor"], dir.path()).status.code(), Some(1));
    assert_eq!(xorgap(&["frobnicate"], dir.path()).status.code(), Some(1));
    let out = xorgap(
        &["experiment", "--family", "planted", "--sizes", "2,2", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(xorgap(&["verify-dist"], dir.path()).status.code(), Some(1));
    assert_eq!(xorgap(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn malformed_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.xor", "p mx3 1 1 1 1\n1 1 1 2 0\n");
    let out = xorgap(&["solve", "bad.xor", "--seed", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(xorgap(&["fourier", "missing.xor"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_dist_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.dist", "+++ 1/4\n+-- 1/4\n-+- 1/4\n--+ 1/4\n");
    let out = xorgap(&["verify-dist", "c.dist"], dir.path());
    let v = &lines(&out)[1];
    assert_eq!(v["holds"], true);
    assert_eq!(v["ground"].as_array().unwrap().len(), 4);

    let out = xorgap(
        &["verify-dist", "--disguise", "3/4:G3", "--disguise", "1/4:G1"],
        dir.path(),
    );
    let v = &lines(&out)[1];
    assert_eq!(v["holds"], false);
    assert_eq!(v["witness"]["observed"], "5/6");

    write(dir.path(), "mass.dist", "+++ 1\n");
    let v = &lines(&xorgap(&["verify-dist", "mass.dist"], dir.path()))[1];
    assert_eq!(v["holds"], false);
    assert_eq!(v["witness"]["coord"], 1);
}

#[test]
fn gen_planted_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = xorgap(
        &[
            "gen", "--family", "planted", "--eps", "0.1", "--sizes", "6,6,6", "--constraints",
            "60", "--count", "3", "--seed", "11", "--out", "inst",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = lines(&out);
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert_eq!(r["witness"], 0.9);
    }
    let text = std::fs::read_to_string(dir.path().join("inst/planted-000.xor")).unwrap();
    assert!(text.starts_with("c family planted"));

    xorgap(
        &[
            "gen", "--family", "planted", "--eps", "0", "--sizes", "3,3,3", "--constraints", "20",
            "--count", "1", "--seed", "4", "--out", "perfect",
        ],
        dir.path(),
    );
    let out = xorgap(&["brute", "perfect/planted-000.xor"], dir.path());
    assert_eq!(lines(&out)[1]["optimum"], 1.0);
}

#[test]
fn gen_and_compose_gadget() {
    let dir = tempfile::tempdir().unwrap();
    let out = xorgap(
        &[
            "gen", "--family", "composed-gadget", "--r", "1", "--d", "2", "--count", "1",
            "--seed", "2", "--out", "g",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lines(&out)[1]["witness"], 1.0);
    let out = xorgap(
        &[
            "compose", "g/composed-gadget-000.lc", "--r", "1", "--d", "2", "--eta", "0.05",
            "--mode", "sample", "--budget", "10000", "--seed", "3", "--out", "noisy.xor",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(lines(&out)[1]["dictator"].as_f64().unwrap() >= 0.85);
}

#[test]
fn experiment_random_family_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = xorgap(
        &[
            "experiment", "--family", "random-uniform", "--sizes", "4,4,4", "--constraints", "24",
            "--count", "20", "--seeds", "1", "--baseline-trials", "20000", "--seed", "6",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = lines(&out);
    assert_eq!(rows.len(), 22);
    let s = &rows[21]["summary"];
    assert_eq!(s["failed"], 0);
    assert!((s["mean_baseline"].as_f64().unwrap() - 0.5).abs() <= 0.02);
    assert!(s["mean_opt"].as_f64().unwrap() >= s["mean_baseline"].as_f64().unwrap());
}

#[test]
fn fourier_of_single_constraint() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.xor", "p mx3 1 1 1 1\n1 1 1 1 0\n");
    let rows = lines(&xorgap(&["fourier", "one.xor"], dir.path()));
    assert_eq!(rows[1]["monomial"], "");
    assert_eq!(rows[1]["coeff"], "1/2");
    assert_eq!(rows[2]["monomial"], "x1_1 x2_1 x3_1");
    assert_eq!(rows[2]["coeff"], "1/2");
    assert_eq!(rows[3]["summary"]["terms"], 2);
}

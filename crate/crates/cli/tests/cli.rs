use std::fs;
use std::process::{Command, Output};

fn dtq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtq"))
        .args(args)
        .output()
        .expect("run dtq")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn count_prints_exact_integers() {
    let out = dtq(&["count", "--class", "shapes", "--d", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "677\n");
    let out = dtq(&["count", "--class", "labeled", "--d", "2", "--vars", "2"]);
    assert_eq!(stdout(&out), "74\n");
    let out = dtq(&["count", "--class", "structures", "--d", "1", "--vars", "1"]);
    assert_eq!(stdout(&out), "2\n");
    let out = dtq(&["count", "--class", "mindepth", "--d", "3", "--h", "1"]);
    assert_eq!(stdout(&out), "16\n");
}

#[test]
fn count_usage_errors_exit_2() {
    assert_eq!(dtq(&["count", "--class", "labeled", "--d", "2"]).status.code(), Some(2));
    assert_eq!(dtq(&["count", "--class", "labeled", "--d", "3", "--vars", "2"]).status.code(), Some(2));
    assert_eq!(dtq(&["count", "--class", "bogus", "--d", "2"]).status.code(), Some(2));
    assert_eq!(dtq(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sample_then_sens() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("trees.txt");
    let file_str = file.to_str().unwrap();
    let out = dtq(&[
        "sample", "--model", "full-uniform", "--d", "5", "--vars", "7", "--seed", "3", "--count", "5",
        "--out", file_str,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 5);

    // Same seed, same trees; tree i does not depend on how many are drawn.
    let again = dtq(&["sample", "--model", "full-uniform", "--d", "5", "--vars", "7", "--seed", "3", "--count", "2"]);
    let first_two: Vec<&str> = text.lines().take(2).collect();
    assert_eq!(stdout(&again).lines().collect::<Vec<_>>(), first_two);

    let structural = dtq(&["sens", "--in", file_str, "--method", "structural"]);
    let brute = dtq(&["sens", "--in", file_str, "--method", "brute", "--vars", "7"]);
    assert_eq!(structural.status.code(), Some(0));
    assert_eq!(stdout(&structural), stdout(&brute));
    assert_eq!(stdout(&structural).lines().count(), 5);
}

#[test]
fn sens_prints_dyadic_and_decimal() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("and.txt");
    fs::write(&file, r#"{"var":0,"on0":{"leaf":0},"on1":{"var":1,"on0":{"leaf":0},"on1":{"leaf":1}}}"#).unwrap();
    let out = dtq(&["sens", "--in", file.to_str().unwrap()]);
    assert_eq!(stdout(&out), "1/2^0 1\n");
    fs::write(&file, r#"{"var":0,"on0":{"leaf":0}}"#).unwrap();
    let out = dtq(&["sens", "--in", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_print_json() {
    let out = dtq(&["bound", "theorem1", "--d", "12", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let want = 2f64.powi(-3) + (-0.5f64).exp();
    assert!((v["raw"].as_f64().unwrap() - want).abs() < 1e-12);
    assert!(v["log2"].is_number() && v["clamped"].is_number());

    let out = dtq(&["bound", "shi", "--sbar", "18", "--eps", "0.3333333333333333"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["raw"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = dtq(&["bound", "lemma5", "--d", "3", "--h", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["raw"].as_f64(), Some(1.0));
    assert_eq!(v["in_range"].as_bool(), Some(false));

    let out = dtq(&["bound", "mcdiarmid", "--L", "1", "--eta", "1", "--delta", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["raw"].as_f64().unwrap() - (-2f64).exp()).abs() < 1e-15);

    for args in [
        vec!["bound", "alpha", "--eps", "0.5"],
        vec!["bound", "loose", "--d", "32"],
        vec!["bound", "chain", "--d", "30", "--eps", "0.5"],
    ] {
        let out = dtq(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let _: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    }
    assert_eq!(dtq(&["bound", "theorem1", "--d", "12", "--eps", "1.5"]).status.code(), Some(2));
}

#[test]
fn exp_writes_verifiable_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [("csv", "r.csv"), ("json", "r.json")] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let out = dtq(&[
            "exp", "theorem1", "--model", "full-uniform", "--d", "6", "--vars", "8", "--samples", "50",
            "--seed", "9", "--eps", "0.5", "--format", format, "--out", p, "--workers", "2", "--verify",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let first = fs::read(&path).unwrap();
        let out = dtq(&[
            "exp", "theorem1", "--model", "full-uniform", "--d", "6", "--vars", "8", "--samples", "50",
            "--seed", "9", "--eps", "0.5", "--format", format, "--out", p, "--workers", "1",
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(fs::read(&path).unwrap(), first);
        assert_eq!(dtq(&["verify", p]).status.code(), Some(0));
    }
}

#[test]
fn tampered_report_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let p = path.to_str().unwrap();
    let out = dtq(&["exp", "lemma4", "--model", "complete", "--d", "3", "--vars", "4", "--samples", "5", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replace("# aggregate: cases=40", "# aggregate: cases=41")).unwrap();
    let out = dtq(&["verify", p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cases"));
}

#[test]
fn failed_check_exits_1_and_names_it() {
    // Complete depth-5 trees have 32 leaves, so lemma3 samples assignments.
    // With a single assignment the standard error is zero and any deviation
    // from the formula lands outside 3 sigma.
    let out = dtq(&[
        "exp", "lemma3", "--model", "complete", "--d", "5", "--vars", "5", "--samples", "20",
        "--assignments", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lemma3/"));
}

#[test]
fn exp_usage_errors_exit_2() {
    assert_eq!(dtq(&["exp", "lemma9", "--d", "2", "--vars", "2"]).status.code(), Some(2));
    assert_eq!(dtq(&["exp", "theorem1", "--d", "5", "--vars", "3"]).status.code(), Some(2));
    assert_eq!(dtq(&["exp", "theorem1", "--d", "2", "--vars", "2", "--eps", "0"]).status.code(), Some(2));
    assert_eq!(dtq(&["exp", "model-compare", "--d", "5", "--vars", "5"]).status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn focklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_focklab"))
        .args(args)
        .env_remove("FOCKLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const POWER: &str = r#"{"name":"power","pieces":[{"kind":"power","alpha":-1.5,"support":[0,1]}]}"#;

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "p.json", POWER);
    let outs: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("scan{i}.csv"));
            let threads = if i == 0 { "1" } else { "3" };
            let o = focklab(&[
                "kernel-scan", "--spec", &spec, "--format", "csv", "--threads", threads,
                "--out", out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            assert!(dir.path().join(format!("scan{i}.csv.manifest.json")).exists());
            fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert!(outs[0].starts_with("center,value,tail_bound,cumulative_sup\n"));

    let json: Vec<Vec<u8>> = (0..2).map(|_| focklab(&["irreversibility", "--bumps", "3"]).stdout).collect();
    assert_eq!(json[0], json[1]);
}

#[test]
fn suite_json_has_top_level_verdict() {
    let o = focklab(&["annuli-suite", "--n-max", "40", "--probes", "10,20,40"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["passed"].is_boolean());
    assert_eq!(v["manifest"]["command"], "annuli-suite");
    assert_eq!(o.status.code(), Some(if v["passed"].as_bool().unwrap() { 0 } else { 4 }));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_spec(dir.path(), "p.json", POWER);
    let bad_c = write_spec(
        dir.path(),
        "bad.json",
        r#"{"pieces":[{"kind":"annuli","n_min":2,"n_max":200,"c":0.5,"smooth":false}]}"#,
    );
    let typo = write_spec(dir.path(), "typo.json", r#"{"pieces":[{"kind":"power","alpah":1}]}"#);
    let divergent = write_spec(dir.path(), "div.json", r#"{"name":"d","pieces":[{"kind":"power","alpha":-2.5,"support":[0,1]}]}"#);

    assert_eq!(focklab(&["symbol-validate", "--spec", &good]).status.code(), Some(0));
    assert_eq!(focklab(&["symbol-validate", "--spec", &bad_c]).status.code(), Some(2));
    let o = focklab(&["symbol-validate", "--spec", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pieces[0]"));
    assert_eq!(focklab(&["heat", "--spec", &divergent, "--t", "0.25", "--x", "0"]).status.code(), Some(3));
    assert_eq!(focklab(&["irreversibility", "--t0", "0.1", "--t1", "0.2"]).status.code(), Some(2));
    assert_eq!(focklab(&["annuli-suite", "--n-max", "6", "--probes", "4"]).status.code(), Some(4));
}

#[test]
fn spectrum_csv_has_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "p.json", POWER);
    let a = focklab(&["spectrum", "--spec", &spec, "--m-max", "50", "--format", "csv"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("m,eigenvalue,ln_eigenvalue\n"));
    assert_eq!(text.lines().count(), 52);
}

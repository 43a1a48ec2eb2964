use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegsynth")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path, kind: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["fixture", kind, "--output-dir", s(dir)];
    args.extend_from_slice(extra);
    let out = ok(&args);
    PathBuf::from(String::from_utf8(out.stdout).unwrap().lines().next().unwrap())
}

#[test]
fn synth_then_validate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let original = fixture(d, "two-class", &["--rows", "120", "--seed", "3"]);
    let before = fs::read(&original).unwrap();

    let syn = d.join("syn");
    ok(&["synth", "--input", s(&original), "--output-dir", s(&syn), "--seed", "11", "--mode", "row"]);
    let synthetic = syn.join("synthetic.csv");
    let diagnostics: Value = serde_json::from_str(&fs::read_to_string(syn.join("synthesis.json")).unwrap()).unwrap();
    assert_eq!(diagnostics["n_samples"], 70);
    assert!(diagnostics["score_min"].as_f64().unwrap() >= 0.2);

    let validate = |out: &Path| {
        ok(&[
            "validate",
            "--input",
            s(&original),
            "--input",
            s(&synthetic),
            "--output-dir",
            s(out),
            "--seed",
            "5",
            "--permutations",
            "199",
        ]);
        fs::read(out.join("report.json")).unwrap()
    };
    let first = validate(&d.join("v1"));
    let second = validate(&d.join("v1"));
    assert!(first == second, "report.json differs between identical runs");
    assert_eq!(fs::read(&original).unwrap(), before);

    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["features"].as_array().unwrap().len(), 25);
    assert_eq!(report["permanova"]["n_permutations"], 199);
    assert!(report["label_transfer"]["original_to_synthetic"]["accuracy"].as_f64().unwrap() >= 0.85);
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    let text = String::from_utf8(first).unwrap();
    let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\n  \"{k}\"")).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "top-level keys are not sorted");

    let v1 = d.join("v1");
    assert!(v1.join("correlation_original.csv").exists());
    assert!(v1.join("correlation_synthetic.csv").exists());
    assert!(v1.join("plots/hist_frontal_alpha.csv").exists());
    assert!(v1.join("plots/hist_frontal_alpha.svg").exists());
}

#[test]
fn validate_without_labels_skips_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let original = fixture(d, "correlated-gaussian", &[]);
    ok(&["synth", "--input", s(&original), "--output-dir", s(d), "--seed", "1"]);
    let out = d.join("v");
    let o = ok(&[
        "validate",
        "--input",
        &format!("{},{}", s(&original), s(&d.join("synthetic.csv"))),
        "--output-dir",
        s(&out),
        "--seed",
        "1",
        "--permutations",
        "99",
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("label transfer skipped"));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["label_transfer"]["original_to_synthetic"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let table = fixture(d, "correlated-gaussian", &["--rows", "50"]);

    // seed is mandatory
    assert_eq!(code(&["synth", "--input", s(&table), "--output-dir", s(d)]), 2);
    // unknown flag value
    assert_eq!(code(&["synth", "--input", s(&table), "--seed", "1", "--mode", "diagonal"]), 2);
    // missing input file
    assert_eq!(code(&["synth", "--input", s(&d.join("nope.csv")), "--seed", "1"]), 2);

    let broken = d.join("broken.csv");
    fs::write(&broken, "a,b,c\n1,2,3\n4,oops,6\n").unwrap();
    assert_eq!(code(&["synth", "--input", s(&broken), "--seed", "1", "--output-dir", s(d)]), 2);

    // unreachable threshold exhausts the budget
    let args = [
        "synth", "--input", s(&table), "--seed", "1", "--threshold", "0.999", "--max-rounds", "2", "--output-dir",
        s(d),
    ];
    assert_eq!(code(&args), 4);

    // a single-class training table is a statistical precondition failure
    let one_class = d.join("one.csv");
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    let mut out = format!("{},label\n", lines.next().unwrap());
    for l in lines {
        out.push_str(&format!("{l},1\n"));
    }
    fs::write(&one_class, out).unwrap();
    assert_eq!(code(&["label", "--input", s(&one_class), "--input", s(&table), "--output-dir", s(d)]), 3);
}

#[test]
fn schema_mismatch_stops_before_any_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let table = fixture(d, "correlated-gaussian", &["--rows", "40"]);
    let other = d.join("other.csv");
    fs::write(&other, "x,y,z\n1,2,3\n2,3,4\n3,4,5\n4,5,6\n5,6,7\n").unwrap();
    let out = d.join("v");
    let o = run(&["validate", "--input", s(&table), "--input", s(&other), "--seed", "1", "--output-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema mismatch"));
    assert!(!out.join("report.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let table = fixture(d, "correlated-gaussian", &[]);
    let cfg = d.join("run.conf");
    fs::write(
        &cfg,
        format!("# synthesis settings\ninput = {}\nseed = 4\nn-samples = 12\nmode = column\n", s(&table)),
    )
    .unwrap();
    let out = d.join("o");
    ok(&["synth", "--config", s(&cfg), "--n-samples", "9", "--output-dir", s(&out)]);
    let text = fs::read_to_string(out.join("synthetic.csv")).unwrap();
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn raw_recordings_to_features_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = d.join("raw");
    let out = ok(&[
        "fixture", "recording", "--subjects", "2", "--duration", "80", "--output-dir", s(&raw), "--seed", "2",
    ]);
    let files: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(files.len(), 2);

    let clean = d.join("clean");
    ok(&["preprocess", "--input", &files.join(","), "--output-dir", s(&clean), "--seed", "1"]);
    let log: Value = serde_json::from_str(&fs::read_to_string(clean.join("s01.preprocess.json")).unwrap()).unwrap();
    assert_eq!(log["sample_rate_out_hz"], 250.0);
    assert_eq!(log["ica"]["n_components"], 11);
    assert!(!log["ica"]["rejected"].as_array().unwrap().is_empty(), "blink component kept");

    let ann: Vec<PathBuf> = (0..2)
        .map(|k| {
            let p = d.join(format!("ann{k}.csv"));
            let rows: String = (0..8).map(|e| format!("{},{}\n", 70 + e + k, (e + k) % 2)).collect();
            fs::write(&p, format!("hr,label\n{rows}")).unwrap();
            p
        })
        .collect();
    let feats = d.join("feat");
    ok(&[
        "extract",
        "--input",
        s(&clean.join("s01.edf")),
        "--input",
        s(&clean.join("s02.edf")),
        "--annotations",
        s(&ann[0]),
        "--annotations",
        s(&ann[1]),
        "--output-dir",
        s(&feats),
    ]);
    let text = fs::read_to_string(feats.join("features.csv")).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().next().unwrap().ends_with(",hr,label"));

    let labelled = d.join("lab");
    ok(&[
        "label",
        "--input",
        s(&feats.join("features.csv")),
        "--input",
        s(&feats.join("features.csv")),
        "--output-dir",
        s(&labelled),
        "--seed",
        "3",
        "--trees",
        "10",
    ]);
    assert!(labelled.join("labeled.csv").exists());
    assert!(labelled.join("label_model.json").exists());
}

#[test]
fn baseline_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let table = fixture(d, "correlated-gaussian", &[]);
    for kind in ["gan", "vae"] {
        ok(&["baseline", "--input", s(&table), "--baseline", kind, "--seed", "8", "--output-dir", s(d)]);
        for suffix in ["synthetic.csv", "loss.csv", "model.json", "comparison.json"] {
            assert!(d.join(format!("{kind}_{suffix}")).exists(), "{kind}_{suffix}");
        }
        assert!(d.join(format!("plots/{kind}_hist_alpha.svg")).exists());
        let loss = fs::read_to_string(d.join(format!("{kind}_loss.csv"))).unwrap();
        assert_eq!(loss.lines().count(), 51);
    }
    assert_eq!(code(&["baseline", "--input", s(&table), "--output-dir", s(d)]), 2);
}

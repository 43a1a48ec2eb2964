//! End to end on files: raw EDF fixtures, preprocessing, extraction,
//! synthesis and the full validation report.

use eegsynth::pipeline::{self, FixtureKind, FixtureParams, RunConfig};

fn main() -> eegsynth::Result<()> {
    let root = std::env::temp_dir().join("eegsynth-report-example");
    let dir = |name: &str| root.join(name).to_string_lossy().into_owned();
    let config = |pairs: &[(&str, &str)]| -> eegsynth::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    };

    let params = FixtureParams { subjects: 4, duration_s: 300.0, ..FixtureParams::default() };
    let raw = pipeline::cmd_fixture(FixtureKind::Recording, &params, &config(&[("seed", "7"), ("output-dir", &dir("raw"))])?)?;
    let raw: Vec<String> = raw.iter().map(|p| p.to_string_lossy().into_owned()).collect();

    let logs = pipeline::cmd_preprocess(&config(&[("input", &raw.join(",")), ("output-dir", &dir("clean")), ("seed", "7")])?)?;
    let clean: Vec<String> = logs.iter().map(|l| l.output.to_string_lossy().into_owned()).collect();

    let table = pipeline::cmd_extract(&config(&[("input", &clean.join(",")), ("output-dir", &dir("features"))])?)?;
    println!("{} epochs x {} features", table.n_rows(), table.n_features());

    let features = root.join("features/features.csv").to_string_lossy().into_owned();
    pipeline::cmd_synth(&config(&[("input", &features), ("output-dir", &dir("synthetic")), ("seed", "7")])?)?;

    let synthetic = root.join("synthetic/synthetic.csv").to_string_lossy().into_owned();
    let inputs = format!("{features},{synthetic}");
    let report = pipeline::cmd_validate(&config(&[("input", &inputs), ("output-dir", &dir("report")), ("seed", "7")])?)?;
    println!(
        "KS pass {}/{}; PERMANOVA p {:.3}; held-out error {:.3}; mean |dSpearman| {:.3}",
        report.ks_pass_count,
        report.features.len(),
        report.permanova.p_value,
        report.indistinguishability.error_rate,
        report.correlation.diff.mean_abs_diff
    );
    for n in &report.notices {
        println!("note: {n}");
    }
    println!("report written to {}", dir("report"));
    Ok(())
}

//! Subcommand implementations shared by the binary, the examples and the
//! integration tests. Every command reads its inputs from a [`RunConfig`]
//! and writes only under `config.output_dir`.

mod config;
pub mod fixtures;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::RunConfig;
pub use fixtures::FixtureKind;
pub use report::{
    validate_tables, CorrelationSection, FeatureTests, LabelTransferSection, NormalitySummary, ValidationReport,
    REPORT_SCHEMA,
};

use crate::baselines::{train_baseline, BaselineModel, LossHistory};
use crate::dsp::{average_reference, bandpass, epoch, resample, FilterSpec};
use crate::edf_io::{read_csv_recording, read_edf, write_csv_recording, write_edf, EdfFile, Recording};
use crate::error::{Error, Result};
use crate::features::{build_feature_table, EpochAnnotations, FeatureTable};
use crate::forest::fit;
use crate::ica::{fit_fastica, reject_components, IcaConfig};
use crate::stats::{ks_two_sample, HistogramPair};
use crate::synth::{synthesize, SynthesisOutcome};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let value = serde_json::to_value(value)?;
    write_text(path, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn input(config: &RunConfig, i: usize, what: &str) -> Result<PathBuf> {
    config
        .inputs
        .get(i)
        .cloned()
        .ok_or_else(|| Error::InvalidSpec(format!("missing --input for the {what}")))
}

/// Reads an EDF file, or a CSV recording at `config.csv_rate_hz`.
pub fn read_recording(path: &Path, config: &RunConfig) -> Result<Recording> {
    let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
    match ext.as_deref() {
        Some("edf") => read_edf(path),
        Some("csv") => {
            let fs_hz = config.csv_rate_hz.ok_or_else(|| {
                Error::InvalidSpec(format!("{}: CSV recordings need --sample-rate", path.display()))
            })?;
            read_csv_recording(path, fs_hz)
        }
        _ => Err(Error::UnsupportedFormat(format!("{}: expected .edf or .csv", path.display()))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcaLog {
    pub skipped: bool,
    pub n_components: usize,
    pub converged: bool,
    pub iterations: usize,
    pub kurtosis_threshold: f64,
    pub manual: Vec<usize>,
    pub rejected: Vec<usize>,
    pub kurtosis: Vec<f64>,
}

/// What `preprocess` did to one recording.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessLog {
    pub input: PathBuf,
    pub output: PathBuf,
    pub subject: String,
    pub n_channels: usize,
    pub sample_rate_in_hz: f64,
    pub sample_rate_out_hz: f64,
    pub upsampled: bool,
    pub referenced: bool,
    pub filter: Option<FilterSpec>,
    pub ica: IcaLog,
    /// Trailing samples that did not fill a whole one-second EDF record.
    pub samples_dropped: usize,
}

/// Reference, band-pass, ICA clean-up and resampling, in that order.
pub fn preprocess_recording(rec: &Recording, config: &RunConfig) -> Result<(Recording, PreprocessLog)> {
    let fs_in = rec.sample_rate_hz;
    let mut out = rec.clone();
    if config.reference {
        out = average_reference(&out)?;
    }
    if config.bandpass {
        out = bandpass(&out, &config.filter)?;
    }
    let ica = if config.ica {
        // average referencing removes one degree of freedom
        let k = if config.reference { out.n_channels().saturating_sub(1) } else { out.n_channels() };
        let ica_cfg = IcaConfig {
            n_components: Some(k),
            seed: config.seed.unwrap_or(0),
            ..IcaConfig::default()
        };
        let model = fit_fastica(&out, &ica_cfg)?;
        let rejection = reject_components(&model, &out, config.kurtosis_threshold, &config.manual_reject)?;
        out = rejection.recording;
        IcaLog {
            skipped: false,
            n_components: model.k,
            converged: model.converged,
            iterations: model.iterations,
            kurtosis_threshold: config.kurtosis_threshold,
            manual: config.manual_reject.clone(),
            rejected: rejection.rejected,
            kurtosis: rejection.kurtosis,
        }
    } else {
        IcaLog {
            skipped: true,
            n_components: 0,
            converged: false,
            iterations: 0,
            kurtosis_threshold: config.kurtosis_threshold,
            manual: Vec::new(),
            rejected: Vec::new(),
            kurtosis: Vec::new(),
        }
    };
    if config.resample && fs_in != config.target_rate_hz {
        out = resample(&out, config.target_rate_hz)?;
    }
    let spr = out.sample_rate_hz.round() as usize;
    let log = PreprocessLog {
        input: PathBuf::new(),
        output: PathBuf::new(),
        subject: rec.subject_id.clone(),
        n_channels: rec.n_channels(),
        sample_rate_in_hz: fs_in,
        sample_rate_out_hz: out.sample_rate_hz,
        upsampled: out.sample_rate_hz > fs_in,
        referenced: config.reference,
        filter: config.bandpass.then_some(config.filter),
        ica,
        samples_dropped: if spr > 0 { out.n_samples() % spr } else { 0 },
    };
    Ok((out, log))
}

/// Cleans every input and writes `<stem>.edf` plus `<stem>.preprocess.json`.
pub fn cmd_preprocess(config: &RunConfig) -> Result<Vec<PreprocessLog>> {
    config.check_inputs()?;
    if config.inputs.is_empty() {
        return Err(Error::InvalidSpec("preprocess needs at least one --input".into()));
    }
    ensure_dir(&config.output_dir)?;
    let mut logs = Vec::with_capacity(config.inputs.len());
    for path in &config.inputs {
        let rec = read_recording(path, config)?;
        let (clean, mut log) = preprocess_recording(&rec, config)?;
        let name = stem(path);
        let out_path = config.output_dir.join(format!("{name}.edf"));
        write_edf(&out_path, &EdfFile::from_recording(&clean, 1.0)?)?;
        log.input = path.clone();
        log.output = out_path;
        write_json(&config.output_dir.join(format!("{name}.preprocess.json")), &log)?;
        logs.push(log);
    }
    Ok(logs)
}

/// Per-epoch annotations: a CSV with one row per epoch, where a `label`
/// column becomes the label and every other column an aux column.
pub fn read_annotations(path: &Path) -> Result<EpochAnnotations> {
    let table = FeatureTable::read_csv_with_aux(path, &[])?;
    Ok(EpochAnnotations {
        aux_names: table.feature_names.clone(),
        aux: table.features.clone(),
        labels: table.labels,
    })
}

/// Epochs every recording, computes band powers and writes `features.csv`.
pub fn cmd_extract(config: &RunConfig) -> Result<FeatureTable> {
    config.check_inputs()?;
    if config.inputs.is_empty() {
        return Err(Error::InvalidSpec("extract needs at least one --input".into()));
    }
    if !config.annotations.is_empty() && config.annotations.len() != config.inputs.len() {
        return Err(Error::InvalidSpec(format!(
            "{} annotation files for {} inputs",
            config.annotations.len(),
            config.inputs.len()
        )));
    }
    let mut parts = Vec::with_capacity(config.inputs.len());
    for (i, path) in config.inputs.iter().enumerate() {
        let mut rec = read_recording(path, config)?;
        if rec.subject_id.trim().is_empty() {
            rec.subject_id = stem(path);
        }
        let epochs = epoch(&rec, config.epoch_seconds)?;
        let annotations = match config.annotations.get(i) {
            Some(a) => read_annotations(a)?,
            None => EpochAnnotations::default(),
        };
        parts.push(build_feature_table(&epochs, &rec.regions(), &annotations)?);
    }
    let table = FeatureTable::concat(&parts)?;
    ensure_dir(&config.output_dir)?;
    table.write_csv(config.output_dir.join("features.csv"))?;
    Ok(table)
}

/// Generates synthetic rows; writes `synthetic.csv` and `synthesis.json`.
pub fn cmd_synth(config: &RunConfig) -> Result<SynthesisOutcome> {
    config.require_seed("synth")?;
    config.check_inputs()?;
    let table = FeatureTable::read_csv(input(config, 0, "feature table")?)?;
    let outcome = synthesize(&table, &config.synthesis)?;
    ensure_dir(&config.output_dir)?;
    outcome.table.write_csv(config.output_dir.join("synthetic.csv"))?;
    write_json(&config.output_dir.join("synthesis.json"), &outcome.diagnostics())?;
    Ok(outcome)
}

/// Writes `report.json`, `correlation_{original,synthetic}.csv` and one
/// histogram CSV/SVG pair per feature under `plots/`.
pub fn write_validation_outputs(report: &ValidationReport, dir: &Path) -> Result<()> {
    let plots = dir.join("plots");
    ensure_dir(&plots)?;
    write_text(&dir.join("report.json"), &report.to_json()?)?;
    for h in &report.histograms {
        write_text(&plots.join(format!("hist_{}.csv", h.feature)), &h.to_csv_string())?;
        write_text(&plots.join(format!("hist_{}.svg", h.feature)), &h.to_svg())?;
    }
    if let Some(m) = &report.correlation_original {
        write_text(&dir.join("correlation_original.csv"), &m.to_csv_string())?;
    }
    if let Some(m) = &report.correlation_synthetic {
        write_text(&dir.join("correlation_synthetic.csv"), &m.to_csv_string())?;
    }
    Ok(())
}

/// Compares `--input original.csv --input synthetic.csv`.
pub fn cmd_validate(config: &RunConfig) -> Result<ValidationReport> {
    config.require_seed("validate")?;
    config.check_inputs()?;
    let original = FeatureTable::read_csv(input(config, 0, "original table")?)?;
    let synthetic = FeatureTable::read_csv(input(config, 1, "synthetic table")?)?;
    let report = validate_tables(&original, &synthetic, config)?;
    ensure_dir(&config.output_dir)?;
    write_validation_outputs(&report, &config.output_dir)?;
    Ok(report)
}

/// Fits a forest on the labels of the first input and labels the second;
/// writes `labeled.csv` and `label_model.json`.
pub fn cmd_label(config: &RunConfig) -> Result<FeatureTable> {
    config.check_inputs()?;
    let train = FeatureTable::read_csv(input(config, 0, "labelled training table")?)?;
    let target = FeatureTable::read_csv(input(config, 1, "table to label")?)?;
    train.check_same_features(&target)?;
    let mut forest = config.forest;
    forest.seed = config.seed.unwrap_or(forest.seed);
    let model = fit(&train, &forest)?;
    let labels = model.predict(&target.features)?;
    let labeled = target.with_labels(labels)?;
    ensure_dir(&config.output_dir)?;
    labeled.write_csv(config.output_dir.join("labeled.csv"))?;
    model.save(config.output_dir.join("label_model.json"))?;
    Ok(labeled)
}

/// Per-feature KS of a generator's output against the original rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorFit {
    pub generator: String,
    pub ks_statistic: Vec<f64>,
    pub ks_p_value: Vec<f64>,
    pub mean_ks_statistic: f64,
}

impl GeneratorFit {
    pub fn measure(generator: &str, original: &FeatureTable, synthetic: &FeatureTable) -> Result<GeneratorFit> {
        original.check_same_features(synthetic)?;
        let tests = (0..original.n_features())
            .map(|j| ks_two_sample(&original.feature_column(j), &synthetic.feature_column(j)))
            .collect::<Result<Vec<_>>>()?;
        let ks_statistic: Vec<f64> = tests.iter().map(|t| t.statistic).collect();
        Ok(GeneratorFit {
            generator: generator.into(),
            mean_ks_statistic: ks_statistic.iter().sum::<f64>() / ks_statistic.len() as f64,
            ks_p_value: tests.iter().map(|t| t.p_value).collect(),
            ks_statistic,
        })
    }
}

/// Baseline generator against the correlation-thresholded sampler on the
/// same band-level table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub schema: u32,
    pub features: Vec<String>,
    pub n_original: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub baseline: GeneratorFit,
    pub statistical: GeneratorFit,
    /// Whether the baseline's mean KS distance is the larger one.
    pub baseline_worse: bool,
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub model: BaselineModel,
    pub history: LossHistory,
    pub synthetic: FeatureTable,
    pub statistical: FeatureTable,
    pub comparison: BaselineComparison,
}

/// The table baselines work on: five band columns. Region x band tables are
/// averaged over regions; other tables are used as they are.
pub fn baseline_view(table: &FeatureTable) -> Result<FeatureTable> {
    match table.band_summary() {
        Ok(t) => Ok(t),
        Err(Error::SchemaMismatch(_)) => Ok(table.clone()),
        Err(e) => Err(e),
    }
}

/// Trains the configured baseline on `table` and compares it with the
/// statistical sampler. Writes nothing.
pub fn run_baseline(table: &FeatureTable, config: &RunConfig) -> Result<BaselineRun> {
    let seed = config.require_seed("baseline")?;
    let view = baseline_view(table)?;
    let n = config.baseline_samples.unwrap_or(config.synthesis.n_samples);
    let mut train = config.train;
    train.seed = seed;
    let (model, history) = train_baseline(&view, config.baseline, &config.mlp, &train)?;
    let synthetic = model.sample(n, seed)?;
    let mut synth_cfg = config.synthesis;
    synth_cfg.seed = seed;
    synth_cfg.n_samples = n;
    let statistical = synthesize(&view, &synth_cfg)?.table;
    let baseline_fit = GeneratorFit::measure(&config.baseline.to_string(), &view, &synthetic)?;
    let statistical_fit = GeneratorFit::measure(&format!("{}-bootstrap", synth_cfg.mode), &view, &statistical)?;
    let comparison = BaselineComparison {
        schema: REPORT_SCHEMA,
        features: view.feature_names.clone(),
        n_original: view.n_rows(),
        n_samples: n,
        seed,
        baseline_worse: baseline_fit.mean_ks_statistic > statistical_fit.mean_ks_statistic,
        baseline: baseline_fit,
        statistical: statistical_fit,
    };
    Ok(BaselineRun {
        model,
        history,
        synthetic,
        statistical,
        comparison,
    })
}

/// Trains a GAN or VAE baseline and writes `<kind>_synthetic.csv`,
/// `<kind>_loss.csv`, `<kind>_model.json`, `<kind>_comparison.json` and
/// comparison histograms under `plots/`.
pub fn cmd_baseline(config: &RunConfig) -> Result<BaselineRun> {
    config.require_seed("baseline")?;
    config.check_inputs()?;
    let table = FeatureTable::read_csv(input(config, 0, "feature table")?)?;
    let run = run_baseline(&table, config)?;
    let dir = &config.output_dir;
    let plots = dir.join("plots");
    ensure_dir(&plots)?;
    let kind = config.baseline.to_string();
    run.synthetic.write_csv(dir.join(format!("{kind}_synthetic.csv")))?;
    write_text(&dir.join(format!("{kind}_loss.csv")), &run.history.to_csv_string())?;
    write_text(&dir.join(format!("{kind}_model.json")), &run.model.to_json()?)?;
    write_json(&dir.join(format!("{kind}_comparison.json")), &run.comparison)?;
    let view = baseline_view(&table)?;
    for (j, name) in view.feature_names.iter().enumerate() {
        let h = HistogramPair::new(name, &view.feature_column(j), &run.synthetic.feature_column(j), config.bins)?;
        write_text(&plots.join(format!("{kind}_hist_{name}.csv")), &h.to_csv_string())?;
        write_text(&plots.join(format!("{kind}_hist_{name}.svg")), &h.to_svg())?;
    }
    Ok(run)
}

/// Knobs of the fixture generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixtureParams {
    pub rows: usize,
    pub rho: f64,
    pub separation: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub subjects: usize,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            rows: 200,
            rho: 0.5,
            separation: 3.0,
            duration_s: 120.0,
            sample_rate_hz: 256.0,
            subjects: 1,
        }
    }
}

/// Fixture seed when none is given.
pub const DEFAULT_FIXTURE_SEED: u64 = 7;

#[derive(Debug, Clone, Serialize)]
struct MixingTruth {
    sample_rate_hz: f64,
    mixing: [[f64; 2]; 2],
    sources: Vec<Vec<f64>>,
}

/// Writes a fixture under the output directory and returns the file paths.
pub fn cmd_fixture(kind: FixtureKind, params: &FixtureParams, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let seed = config.seed.unwrap_or(DEFAULT_FIXTURE_SEED);
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let mut written = Vec::new();
    match kind {
        FixtureKind::CorrelatedGaussian => {
            let path = dir.join("correlated_gaussian.csv");
            fixtures::correlated_gaussian(params.rows, params.rho, seed)?.write_csv(&path)?;
            written.push(path);
        }
        FixtureKind::TwoClass => {
            let path = dir.join("two_class.csv");
            fixtures::two_class(params.rows, params.separation, seed)?.write_csv(&path)?;
            written.push(path);
        }
        FixtureKind::MixedSources => {
            let n = (params.duration_s * params.sample_rate_hz).round() as usize;
            let m = fixtures::mixed_sources(n, params.sample_rate_hz, seed)?;
            let path = dir.join("mixed_sources.csv");
            write_csv_recording(&path, &m.recording)?;
            let truth = dir.join("mixed_sources_truth.json");
            write_json(
                &truth,
                &MixingTruth {
                    sample_rate_hz: params.sample_rate_hz,
                    mixing: m.mixing,
                    sources: m.sources,
                },
            )?;
            written.extend([path, truth]);
        }
        FixtureKind::Recording => {
            for s in 0..params.subjects {
                let subject = format!("s{:02}", s + 1);
                let rec = fixtures::eeg_recording(
                    params.duration_s,
                    params.sample_rate_hz,
                    seed.wrapping_add(s as u64),
                    &subject,
                )?;
                let path = dir.join(format!("{subject}.edf"));
                write_edf(&path, &EdfFile::from_recording(&rec, 1.0)?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

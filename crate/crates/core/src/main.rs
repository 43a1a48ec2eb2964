use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eegsynth::pipeline::{self, FixtureKind, FixtureParams, RunConfig};
use eegsynth::Result;

#[derive(Parser)]
#[command(name = "eegsynth", version, about = "Correlation-thresholded synthetic EEG features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference, band-pass, ICA and resample raw recordings.
    Preprocess(Flags),
    /// Band power per region and epoch.
    Extract(Flags),
    /// Generate synthetic rows from a feature table.
    Synth(Flags),
    /// Compare an original and a synthetic table.
    Validate(Flags),
    /// Label a table with a forest trained on another.
    Label(Flags),
    /// Train a GAN or VAE baseline and compare it with the sampler.
    Baseline(Flags),
    /// Write a seeded fixture.
    Fixture {
        /// correlated-gaussian, two-class, mixed-sources or recording.
        kind: FixtureKind,
        #[arg(long, default_value_t = 200)]
        rows: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 3.0)]
        separation: f64,
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
        #[arg(long, default_value_t = 256.0)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        subjects: usize,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input file; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    input: Vec<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n_samples: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// row or column.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_rounds: Option<String>,
    #[arg(long)]
    permutations: Option<String>,
    #[arg(long)]
    epoch_seconds: Option<String>,
    #[arg(long)]
    skip_reference: bool,
    #[arg(long)]
    skip_bandpass: bool,
    #[arg(long)]
    skip_ica: bool,
    #[arg(long)]
    skip_resample: bool,
    /// ICA components to drop in addition to the kurtosis rule, e.g. `0,3`.
    #[arg(long)]
    manual_reject: Option<String>,
    #[arg(long)]
    kurtosis_threshold: Option<String>,
    /// Sample rate of CSV recordings.
    #[arg(long)]
    sample_rate: Option<String>,
    #[arg(long)]
    target_rate: Option<String>,
    /// Per-epoch annotation CSV, one per input in the same order.
    #[arg(long)]
    annotations: Vec<String>,
    /// Training fraction of the held-out split.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    trees: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    /// gan or vae.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    lr: Option<String>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.input.is_empty() {
            cfg.inputs.clear();
        }
        let mut pairs: Vec<(&str, String)> = self.input.into_iter().map(|v| ("input", v)).collect();
        pairs.extend(self.annotations.into_iter().map(|v| ("annotations", v)));
        let optional = [
            ("output-dir", self.output_dir),
            ("seed", self.seed),
            ("n-samples", self.n_samples),
            ("threshold", self.threshold),
            ("mode", self.mode),
            ("max-rounds", self.max_rounds),
            ("permutations", self.permutations),
            ("epoch-seconds", self.epoch_seconds),
            ("manual-reject", self.manual_reject),
            ("kurtosis-threshold", self.kurtosis_threshold),
            ("sample-rate", self.sample_rate),
            ("target-rate", self.target_rate),
            ("split", self.split),
            ("trees", self.trees),
            ("bins", self.bins),
            ("baseline", self.baseline),
            ("epochs", self.epochs),
            ("batch-size", self.batch_size),
            ("lr", self.lr),
        ];
        pairs.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        let switches = [
            ("skip-reference", self.skip_reference),
            ("skip-bandpass", self.skip_bandpass),
            ("skip-ica", self.skip_ica),
            ("skip-resample", self.skip_resample),
        ];
        pairs.extend(switches.into_iter().filter(|(_, on)| *on).map(|(k, _)| (k, "true".to_string())));
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(f) => {
            for log in pipeline::cmd_preprocess(&f.into_config()?)? {
                eprintln!(
                    "{} -> {} (rejected components {:?})",
                    log.input.display(),
                    log.output.display(),
                    log.ica.rejected
                );
            }
        }
        Command::Extract(f) => {
            let cfg = f.into_config()?;
            let t = pipeline::cmd_extract(&cfg)?;
            eprintln!("{} epochs -> {}", t.n_rows(), cfg.output_dir.join("features.csv").display());
        }
        Command::Synth(f) => {
            let o = pipeline::cmd_synth(&f.into_config()?)?;
            eprintln!(
                "{} rows after {} candidates (acceptance rate {:.3})",
                o.table.n_rows(),
                o.candidates_tried,
                o.acceptance_rate
            );
        }
        Command::Validate(f) => {
            let r = pipeline::cmd_validate(&f.into_config()?)?;
            eprintln!(
                "PERMANOVA F={:.4} p={:.4}; indistinguishability error {:.3}; mean |dSpearman| {:.3}",
                r.permanova.pseudo_f,
                r.permanova.p_value,
                r.indistinguishability.error_rate,
                r.correlation.diff.mean_abs_diff
            );
            for n in &r.notices {
                eprintln!("note: {n}");
            }
        }
        Command::Label(f) => {
            let t = pipeline::cmd_label(&f.into_config()?)?;
            eprintln!("labelled {} rows", t.n_rows());
        }
        Command::Baseline(f) => {
            let r = pipeline::cmd_baseline(&f.into_config()?)?;
            let c = &r.comparison;
            eprintln!(
                "mean KS D: {} {:.4}, {} {:.4}",
                c.baseline.generator, c.baseline.mean_ks_statistic, c.statistical.generator, c.statistical.mean_ks_statistic
            );
        }
        Command::Fixture {
            kind,
            rows,
            rho,
            separation,
            duration,
            rate,
            subjects,
            flags,
        } => {
            let params = FixtureParams {
                rows,
                rho,
                separation,
                duration_s: duration,
                sample_rate_hz: rate,
                subjects,
            };
            for p in pipeline::cmd_fixture(kind, &params, &flags.into_config()?)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

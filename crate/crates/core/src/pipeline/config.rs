use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::baselines::{BaselineKind, MlpSpec, TrainSpec};
use crate::dsp::FilterSpec;
use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::ica::DEFAULT_KURTOSIS_THRESHOLD;
use crate::stats::DEFAULT_PERMUTATIONS;
use crate::synth::SynthesisConfig;

/// Settings shared by every subcommand.
///
/// Built from defaults, then an optional flat `key = value` file, then
/// command-line flags, each layer overriding the previous one. Keys are the
/// long flag names without dashes prefix, e.g. `n-samples = 70`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,

    pub reference: bool,
    pub bandpass: bool,
    pub ica: bool,
    pub resample: bool,
    pub filter: FilterSpec,
    pub target_rate_hz: f64,
    /// Sample rate assumed for CSV recordings.
    pub csv_rate_hz: Option<f64>,
    pub kurtosis_threshold: f64,
    pub manual_reject: Vec<usize>,

    pub epoch_seconds: f64,
    pub annotations: Vec<PathBuf>,

    pub synthesis: SynthesisConfig,
    pub forest: ForestConfig,
    pub split: f64,
    pub permutations: usize,
    pub bins: usize,

    pub baseline: BaselineKind,
    pub train: TrainSpec,
    pub mlp: MlpSpec,
    /// Rows drawn from a trained baseline; defaults to `n-samples`.
    pub baseline_samples: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: None,
            reference: true,
            bandpass: true,
            ica: true,
            resample: true,
            filter: FilterSpec::default(),
            target_rate_hz: 250.0,
            csv_rate_hz: None,
            kurtosis_threshold: DEFAULT_KURTOSIS_THRESHOLD,
            manual_reject: Vec::new(),
            epoch_seconds: 10.0,
            annotations: Vec::new(),
            synthesis: SynthesisConfig::default(),
            forest: ForestConfig::default(),
            split: 0.7,
            permutations: DEFAULT_PERMUTATIONS,
            bins: 20,
            baseline: BaselineKind::Gan,
            train: TrainSpec::default(),
            mlp: MlpSpec::default(),
            baseline_samples: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "" | "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::InvalidSpec(format!("{key}: {other:?} is not a boolean"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Applies one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--");
        match key {
            "input" => self
                .inputs
                .extend(value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from)),
            "output-dir" => self.output_dir = PathBuf::from(value.trim()),
            "seed" => {
                let seed = parse(key, value)?;
                self.seed = Some(seed);
                self.synthesis.seed = seed;
                self.forest.seed = seed;
                self.train.seed = seed;
            }
            "skip-reference" => self.reference = !parse_bool(key, value)?,
            "skip-bandpass" => self.bandpass = !parse_bool(key, value)?,
            "skip-ica" => self.ica = !parse_bool(key, value)?,
            "skip-resample" => self.resample = !parse_bool(key, value)?,
            "low-hz" => self.filter.low_hz = parse(key, value)?,
            "high-hz" => self.filter.high_hz = parse(key, value)?,
            "filter-order" => self.filter.order = parse(key, value)?,
            "target-rate" => self.target_rate_hz = parse(key, value)?,
            "sample-rate" => self.csv_rate_hz = Some(parse(key, value)?),
            "kurtosis-threshold" => self.kurtosis_threshold = parse(key, value)?,
            "manual-reject" => self.manual_reject = parse_list(key, value)?,
            "epoch-seconds" => self.epoch_seconds = parse(key, value)?,
            "annotations" => self.annotations.push(PathBuf::from(value.trim())),
            "n-samples" => self.synthesis.n_samples = parse(key, value)?,
            "threshold" => self.synthesis.threshold = parse(key, value)?,
            "mode" => self.synthesis.mode = parse(key, value)?,
            "max-rounds" => self.synthesis.max_rounds = parse(key, value)?,
            "drop-labels" => self.synthesis.preserve_labels = !parse_bool(key, value)?,
            "trees" => self.forest.n_trees = parse(key, value)?,
            "min-leaf" => self.forest.min_leaf = parse(key, value)?,
            "split" => self.split = parse(key, value)?,
            "permutations" => self.permutations = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "baseline" => self.baseline = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch-size" => self.train.batch_size = parse(key, value)?,
            "lr" => self.train.lr = parse(key, value)?,
            "baseline-samples" => self.baseline_samples = Some(parse(key, value)?),
            other => return Err(Error::InvalidSpec(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file. Blank lines and
    /// lines starting with `#` are skipped; a bare key means `true`.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').unwrap_or((line, ""));
            self.set(key, value).map_err(|e| match e {
                Error::InvalidSpec(msg) => Error::InvalidSpec(format!("config line {}: {msg}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// The seed, which the stochastic subcommands require.
    pub fn require_seed(&self, command: &str) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidSpec(format!("`{command}` needs an explicit --seed")))
    }

    /// Errors when a listed input does not exist.
    pub fn check_inputs(&self) -> Result<()> {
        match self.inputs.iter().find(|p| !p.exists()) {
            Some(p) => Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthesisMode;

    #[test]
    fn file_then_flags() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\nseed = 7\nthreshold=0.3\nmode = row\nskip-ica\nmanual-reject = 0, 3\n")
            .unwrap();
        cfg.set("--threshold", "0.25").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.forest.seed, 7);
        assert_eq!(cfg.synthesis.threshold, 0.25);
        assert_eq!(cfg.synthesis.mode, SynthesisMode::RowBootstrap);
        assert!(!cfg.ica);
        assert_eq!(cfg.manual_reject, vec![0, 3]);
    }

    #[test]
    fn bad_lines_are_located() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("seed = 1\nthreshold = high\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(cfg.apply_text("colour = blue").is_err());
    }

    #[test]
    fn seed_is_required() {
        assert!(RunConfig::default().require_seed("synth").is_err());
    }
}

//! Correlation-filtered resampling of feature tables.
//!
//! Candidates are drawn from the original table (whole rows, or each column
//! from its own empirical marginal) and kept when their mean Spearman
//! correlation with the original rows, taken across the feature dimension,
//! reaches the threshold.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, Provenance};
use crate::stats::rank_profile;

pub const DEFAULT_THRESHOLD: f64 = 0.20;
pub const DEFAULT_N_SAMPLES: usize = 70;
pub const SYNTHETIC_SOURCE: &str = "synthetic";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SynthesisMode {
    /// Whole existing rows, drawn with replacement.
    #[serde(rename = "row")]
    RowBootstrap,
    /// Every feature column drawn independently from its observed values.
    #[serde(rename = "column")]
    ColumnBootstrap,
}

impl fmt::Display for SynthesisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthesisMode::RowBootstrap => "row",
            SynthesisMode::ColumnBootstrap => "column",
        })
    }
}

impl FromStr for SynthesisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(SynthesisMode::RowBootstrap),
            "column" => Ok(SynthesisMode::ColumnBootstrap),
            other => Err(Error::InvalidSpec(format!("unknown mode {other:?}, expected row or column"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub n_samples: usize,
    pub threshold: f64,
    pub mode: SynthesisMode,
    /// Candidate budget is `max_rounds * n_samples`.
    pub max_rounds: usize,
    pub seed: u64,
    /// Carry aux columns and the label from a donor row.
    pub preserve_labels: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            n_samples: DEFAULT_N_SAMPLES,
            threshold: DEFAULT_THRESHOLD,
            mode: SynthesisMode::ColumnBootstrap,
            max_rounds: 1000,
            seed: 0,
            preserve_labels: true,
        }
    }
}

/// One proposed synthetic row.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub features: Vec<f64>,
    /// Row whose aux block and label travel with the candidate. For
    /// [`SynthesisMode::RowBootstrap`] this is the sampled row itself.
    pub donor_row: usize,
}

/// Draws one candidate.
pub fn candidate<R: Rng + ?Sized>(table: &FeatureTable, mode: SynthesisMode, rng: &mut R) -> Result<Candidate> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::InsufficientData("cannot sample from an empty table".into()));
    }
    Ok(match mode {
        SynthesisMode::RowBootstrap => {
            let r = rng.random_range(0..n);
            Candidate {
                features: table.features[r].clone(),
                donor_row: r,
            }
        }
        SynthesisMode::ColumnBootstrap => {
            let features = (0..table.n_features())
                .map(|j| table.features[rng.random_range(0..n)][j])
                .collect();
            Candidate {
                features,
                donor_row: rng.random_range(0..n),
            }
        }
    })
}

/// Precomputed state for scoring candidates against a table.
///
/// The mean of Spearman correlations with each row equals the dot product
/// of the candidate's rank profile with the mean of the row profiles, so a
/// score costs one ranking of the candidate.
#[derive(Debug, Clone)]
pub struct Scorer {
    mean_profile: Vec<f64>,
    n_features: usize,
    n_rows_used: usize,
}

impl Scorer {
    /// Rows with constant features have no rank correlation and are left
    /// out of the mean.
    pub fn new(table: &FeatureTable) -> Result<Scorer> {
        let p = table.n_features();
        let mut mean_profile = vec![0.0; p];
        let mut used = 0;
        for row in &table.features {
            if let Some(profile) = rank_profile(row) {
                mean_profile.iter_mut().zip(&profile).for_each(|(m, v)| *m += v);
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::DegenerateInput("every row of the table has constant features".into()));
        }
        mean_profile.iter_mut().for_each(|m| *m /= used as f64);
        Ok(Scorer {
            mean_profile,
            n_features: p,
            n_rows_used: used,
        })
    }

    /// Number of original rows entering each score.
    pub fn n_rows_used(&self) -> usize {
        self.n_rows_used
    }

    /// Mean Spearman correlation with the original rows; `None` for a
    /// constant candidate.
    pub fn score(&self, features: &[f64]) -> Result<Option<f64>> {
        if features.len() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "candidate has {} features, table has {}",
                features.len(),
                self.n_features
            )));
        }
        Ok(rank_profile(features).map(|p| p.iter().zip(&self.mean_profile).map(|(a, b)| a * b).sum()))
    }
}

/// Verdict on one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub accepted: bool,
    /// `None` when the candidate was constant and could not be ranked.
    pub score: Option<f64>,
}

impl Acceptance {
    pub fn degenerate(&self) -> bool {
        self.score.is_none()
    }
}

/// Scores `features` against `table` and compares with `threshold`.
pub fn accept(features: &[f64], table: &FeatureTable, threshold: f64) -> Result<Acceptance> {
    Scorer::new(table)?.judge(features, threshold)
}

impl Scorer {
    pub fn judge(&self, features: &[f64], threshold: f64) -> Result<Acceptance> {
        let score = self.score(features)?;
        Ok(Acceptance {
            accepted: score.is_some_and(|s| s >= threshold),
            score,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub table: FeatureTable,
    pub rounds_used: usize,
    pub candidates_tried: usize,
    pub degenerate_candidates: usize,
    pub acceptance_rate: f64,
    /// Acceptance score of each emitted row.
    pub per_row_mean_correlation: Vec<f64>,
    pub config: SynthesisConfig,
}

/// JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisDiagnostics {
    pub mode: SynthesisMode,
    pub threshold: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub rounds_used: usize,
    pub candidates_tried: usize,
    pub degenerate_candidates: usize,
    pub acceptance_rate: f64,
    pub score_min: f64,
    pub score_mean: f64,
    pub score_max: f64,
    pub scores: Vec<f64>,
}

impl SynthesisOutcome {
    pub fn diagnostics(&self) -> SynthesisDiagnostics {
        let s = &self.per_row_mean_correlation;
        SynthesisDiagnostics {
            mode: self.config.mode,
            threshold: self.config.threshold,
            n_samples: self.config.n_samples,
            seed: self.config.seed,
            rounds_used: self.rounds_used,
            candidates_tried: self.candidates_tried,
            degenerate_candidates: self.degenerate_candidates,
            acceptance_rate: self.acceptance_rate,
            score_min: s.iter().copied().fold(f64::INFINITY, f64::min),
            score_mean: s.iter().sum::<f64>() / s.len() as f64,
            score_max: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            scores: s.clone(),
        }
    }
}

/// Runs the draw-score-filter loop until `n_samples` rows are accepted.
///
/// Each round draws `n_samples` candidates from a single seeded stream,
/// scores them in parallel and commits them in draw order, so the outcome
/// depends only on `(table, config)`.
pub fn synthesize(table: &FeatureTable, config: &SynthesisConfig) -> Result<SynthesisOutcome> {
    if config.n_samples == 0 || config.max_rounds == 0 {
        return Err(Error::InvalidSpec("n_samples and max_rounds must be >= 1".into()));
    }
    if !(-1.0..=1.0).contains(&config.threshold) {
        return Err(Error::InvalidSpec(format!("threshold {} outside [-1, 1]", config.threshold)));
    }
    if table.is_empty() {
        return Err(Error::InsufficientData("synthesis needs a non-empty table".into()));
    }
    if table.n_features() < 3 {
        return Err(Error::InsufficientData(format!(
            "synthesis needs >= 3 feature columns, got {}",
            table.n_features()
        )));
    }
    let scorer = Scorer::new(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let budget = config.max_rounds.saturating_mul(config.n_samples);

    let mut accepted: Vec<(Candidate, f64)> = Vec::with_capacity(config.n_samples);
    let mut tried = 0usize;
    let mut degenerate = 0usize;
    let mut rounds = 0usize;
    let mut best = f64::NEG_INFINITY;
    while accepted.len() < config.n_samples && tried < budget {
        rounds += 1;
        let batch_len = config.n_samples.min(budget - tried);
        let batch = (0..batch_len)
            .map(|_| candidate(table, config.mode, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let verdicts = batch
            .par_iter()
            .map(|c| scorer.judge(&c.features, config.threshold))
            .collect::<Result<Vec<_>>>()?;
        for (c, v) in batch.into_iter().zip(verdicts) {
            if accepted.len() == config.n_samples {
                break;
            }
            tried += 1;
            match v.score {
                None => degenerate += 1,
                Some(s) => {
                    best = best.max(s);
                    if v.accepted {
                        accepted.push((c, s));
                    }
                }
            }
        }
    }
    if accepted.len() < config.n_samples {
        return Err(Error::ThresholdUnreachable {
            threshold: config.threshold,
            accepted: accepted.len(),
            required: config.n_samples,
            candidates_tried: tried,
            acceptance_rate: accepted.len() as f64 / tried as f64,
            best_score: best,
        });
    }

    let donors: Vec<usize> = accepted.iter().map(|(c, _)| c.donor_row).collect();
    let (aux_names, aux, labels) = if config.preserve_labels {
        (
            table.aux_names.clone(),
            donors.iter().map(|&d| table.aux[d].clone()).collect(),
            table.labels.as_ref().map(|l| donors.iter().map(|&d| l[d]).collect()),
        )
    } else {
        (Vec::new(), vec![Vec::new(); donors.len()], None)
    };
    let provenance = donors
        .iter()
        .map(|&d| Provenance {
            source: SYNTHETIC_SOURCE.into(),
            epoch_start: None,
            donor_row: config.preserve_labels.then_some(d),
        })
        .collect();
    let scores: Vec<f64> = accepted.iter().map(|(_, s)| *s).collect();
    let out = FeatureTable::new(
        table.feature_names.clone(),
        aux_names,
        accepted.into_iter().map(|(c, _)| c.features).collect(),
        aux,
        labels,
        provenance,
    )?;
    Ok(SynthesisOutcome {
        table: out,
        rounds_used: rounds,
        candidates_tried: tried,
        degenerate_candidates: degenerate,
        acceptance_rate: config.n_samples as f64 / tried as f64,
        per_row_mean_correlation: scores,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::spearman;

    fn table(rows: Vec<Vec<f64>>) -> FeatureTable {
        let p = rows[0].len();
        FeatureTable::from_features((0..p).map(|j| format!("f{j}")).collect(), rows, "t").unwrap()
    }

    fn noisy(n: usize, p: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        table(
            (0..n)
                .map(|_| (0..p).map(|j| j as f64 + rng.random::<f64>() * 4.0).collect())
                .collect(),
        )
    }

    #[test]
    fn single_row_is_returned() {
        let t = table(vec![vec![1.0, 5.0, 2.0, 9.0]]);
        for mode in [SynthesisMode::RowBootstrap, SynthesisMode::ColumnBootstrap] {
            let cfg = SynthesisConfig {
                n_samples: 1,
                mode,
                ..Default::default()
            };
            let out = synthesize(&t, &cfg).unwrap();
            assert_eq!(out.table.features, vec![vec![1.0, 5.0, 2.0, 9.0]]);
            assert!((out.per_row_mean_correlation[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn score_matches_explicit_mean() {
        let t = noisy(30, 8, 1);
        let scorer = Scorer::new(&t).unwrap();
        let c = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0];
        let explicit = t.features.iter().map(|r| spearman(&c, r).unwrap()).sum::<f64>() / 30.0;
        assert!((scorer.score(&c).unwrap().unwrap() - explicit).abs() < 1e-12);
    }

    #[test]
    fn constant_candidate_is_degenerate() {
        let t = noisy(5, 4, 2);
        let a = accept(&[1.0; 4], &t, -1.0).unwrap();
        assert!(a.degenerate() && !a.accepted);
    }

    #[test]
    fn column_support() {
        let t = noisy(2, 25, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let c = candidate(&t, SynthesisMode::ColumnBootstrap, &mut rng).unwrap();
            for (j, v) in c.features.iter().enumerate() {
                assert!(*v == t.features[0][j] || *v == t.features[1][j]);
            }
        }
    }

    #[test]
    fn unreachable_threshold() {
        let t = noisy(40, 10, 4);
        let cfg = SynthesisConfig {
            n_samples: 5,
            threshold: 0.9999,
            max_rounds: 20,
            ..Default::default()
        };
        match synthesize(&t, &cfg) {
            Err(Error::ThresholdUnreachable {
                candidates_tried, accepted, ..
            }) => {
                assert_eq!(candidates_tried, 100);
                assert!(accepted < 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn donor_block_travels() {
        let t = noisy(10, 5, 5);
        let n = t.n_rows();
        let aux: Vec<Vec<f64>> = (0..n).map(|i| vec![100.0 + i as f64]).collect();
        let t = FeatureTable::new(
            t.feature_names.clone(),
            vec!["HR".into()],
            t.features.clone(),
            aux,
            Some((0..n as i64).collect()),
            t.provenance.clone(),
        )
        .unwrap();
        let cfg = SynthesisConfig {
            n_samples: 20,
            threshold: -1.0,
            ..Default::default()
        };
        let out = synthesize(&t, &cfg).unwrap();
        let labels = out.table.labels.as_ref().unwrap();
        for (i, p) in out.table.provenance.iter().enumerate() {
            let d = p.donor_row.unwrap();
            assert_eq!(labels[i], d as i64);
            assert_eq!(out.table.aux[i], vec![100.0 + d as f64]);
        }
        let cfg = SynthesisConfig {
            preserve_labels: false,
            ..cfg
        };
        let out = synthesize(&t, &cfg).unwrap();
        assert!(out.table.labels.is_none() && out.table.aux_names.is_empty());
    }

    #[test]
    fn too_few_columns() {
        let t = table(vec![vec![1.0, 2.0]; 4]);
        assert!(matches!(
            synthesize(&t, &SynthesisConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}

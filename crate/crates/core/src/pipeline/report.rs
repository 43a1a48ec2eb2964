use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::forest::{indistinguishability_test, label_transfer, IndistinguishabilityReport, LabelTransferReport};
use crate::pipeline::RunConfig;
use crate::stats::{
    correlation_matrix, ks_two_sample, permanova, shapiro_wilk, CorrelationMatrix, HistogramPair, MatrixDiff,
    PermanovaResult, TestResult,
};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTests {
    pub feature: String,
    pub ks: TestResult,
    /// `None` when the column is constant.
    pub shapiro_original: Option<TestResult>,
    pub shapiro_synthetic: Option<TestResult>,
}

/// Smallest Shapiro-Wilk p-value per table after Bonferroni adjustment over
/// the feature columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalitySummary {
    pub min_adjusted_p_original: Option<f64>,
    pub min_adjusted_p_synthetic: Option<f64>,
    pub all_normal_at_05: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTransferSection {
    pub original_to_synthetic: Option<LabelTransferReport>,
    pub synthetic_to_original: Option<LabelTransferReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSection {
    #[serde(flatten)]
    pub diff: MatrixDiff,
    pub mean_off_diagonal_original: f64,
    pub mean_off_diagonal_synthetic: f64,
}

/// Everything `validate` computes, in the order it runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub schema: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub n_original: usize,
    pub n_synthetic: usize,
    pub features: Vec<FeatureTests>,
    pub mean_ks_statistic: f64,
    pub ks_pass_count: usize,
    pub normality: NormalitySummary,
    pub permanova: PermanovaResult,
    pub indistinguishability: IndistinguishabilityReport,
    pub label_transfer: LabelTransferSection,
    pub correlation: CorrelationSection,
    pub histograms: Vec<HistogramPair>,
    pub notices: Vec<String>,
    #[serde(skip)]
    pub correlation_original: Option<CorrelationMatrix>,
    #[serde(skip)]
    pub correlation_synthetic: Option<CorrelationMatrix>,
}

impl ValidationReport {
    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}

fn shapiro_or_none(x: &[f64], what: &str, notices: &mut Vec<String>) -> Result<Option<TestResult>> {
    match shapiro_wilk(x) {
        Ok(r) => Ok(Some(r)),
        Err(Error::DegenerateInput(_) | Error::InsufficientData(_)) => {
            notices.push(format!("shapiro-wilk skipped for {what}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn min_adjusted(ps: impl Iterator<Item = Option<f64>>, m: usize) -> Option<f64> {
    ps.flatten().map(|p| (p * m as f64).min(1.0)).reduce(f64::min)
}

/// Runs the validation battery on two tables with the same feature columns.
pub fn validate_tables(original: &FeatureTable, synthetic: &FeatureTable, config: &RunConfig) -> Result<ValidationReport> {
    original.check_same_features(synthetic)?;
    let seed = config.require_seed("validate")?;
    let mut notices = Vec::new();
    let m = original.n_features();

    let mut histograms = Vec::with_capacity(m);
    let mut features = Vec::with_capacity(m);
    for (j, name) in original.feature_names.iter().enumerate() {
        let (a, b) = (original.feature_column(j), synthetic.feature_column(j));
        histograms.push(HistogramPair::new(name, &a, &b, config.bins)?);
        features.push(FeatureTests {
            feature: name.clone(),
            ks: ks_two_sample(&a, &b)?,
            shapiro_original: None,
            shapiro_synthetic: None,
        });
    }
    for (j, f) in features.iter_mut().enumerate() {
        f.shapiro_original = shapiro_or_none(&original.feature_column(j), &format!("original {}", f.feature), &mut notices)?;
        f.shapiro_synthetic =
            shapiro_or_none(&synthetic.feature_column(j), &format!("synthetic {}", f.feature), &mut notices)?;
    }
    let min_o = min_adjusted(features.iter().map(|f| f.shapiro_original.as_ref().map(|t| t.p_value)), m);
    let min_s = min_adjusted(features.iter().map(|f| f.shapiro_synthetic.as_ref().map(|t| t.p_value)), m);
    let normality = NormalitySummary {
        min_adjusted_p_original: min_o,
        min_adjusted_p_synthetic: min_s,
        all_normal_at_05: min_o.is_some_and(|p| p > 0.05) && min_s.is_some_and(|p| p > 0.05),
    };

    let permanova = permanova(&original.features, &synthetic.features, config.permutations, seed)?;

    let mut forest = config.forest;
    forest.seed = seed;
    let indistinguishability = indistinguishability_test(original, synthetic, &forest, config.split)?;

    let label_transfer = if original.labels.is_some() && synthetic.labels.is_some() {
        LabelTransferSection {
            original_to_synthetic: Some(label_transfer(original, synthetic, &forest)?),
            synthetic_to_original: Some(label_transfer(synthetic, original, &forest)?),
        }
    } else {
        notices.push("label transfer skipped: both tables need a label column".into());
        LabelTransferSection {
            original_to_synthetic: None,
            synthetic_to_original: None,
        }
    };

    let corr_o = correlation_matrix(original, false)?;
    let corr_s = correlation_matrix(synthetic, false)?;
    let correlation = CorrelationSection {
        diff: corr_o.compare(&corr_s)?,
        mean_off_diagonal_original: corr_o.mean_off_diagonal(),
        mean_off_diagonal_synthetic: corr_s.mean_off_diagonal(),
    };

    let mean_ks_statistic = features.iter().map(|f| f.ks.statistic).sum::<f64>() / m as f64;
    let ks_pass_count = features.iter().filter(|f| f.ks.p_value > 0.05).count();
    Ok(ValidationReport {
        schema: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: config.clone(),
        n_original: original.n_rows(),
        n_synthetic: synthetic.n_rows(),
        features,
        mean_ks_statistic,
        ks_pass_count,
        normality,
        permanova,
        indistinguishability,
        label_transfer,
        correlation,
        histograms,
        notices,
        correlation_original: Some(corr_o),
        correlation_synthetic: Some(corr_s),
    })
}

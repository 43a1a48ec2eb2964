//! Rank correlation, normality and two-sample tests, PERMANOVA and
//! histograms.

mod correlation;
mod histogram;
mod ks;
mod permanova;
mod rank;
mod shapiro;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_matrix, CorrelationMatrix, MatrixDiff};
pub use histogram::{histogram, histogram_range, Histogram, HistogramPair};
pub use ks::{kolmogorov_sf, ks_statistic, ks_two_sample};
pub use permanova::{permanova, PermanovaResult, DEFAULT_PERMUTATIONS};
pub use rank::{mid_ranks, pearson, rank_profile, spearman};
pub use shapiro::shapiro_wilk;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub test_name: String,
}

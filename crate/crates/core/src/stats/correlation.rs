use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::stats::rank::rank_profile;

/// Square Spearman matrix over table columns. Entries involving a constant
/// column are NaN (serialized as `null`) and the column is listed in
/// `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub n_rows_used: usize,
    pub degenerate: Vec<String>,
}

/// Entrywise comparison of two matrices over the strict upper triangle,
/// skipping NaN entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixDiff {
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Mean of the finite off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.labels.len();
        let vals: Vec<f64> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .filter(|v| v.is_finite())
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn compare(&self, other: &CorrelationMatrix) -> Result<MatrixDiff> {
        if self.labels != other.labels {
            return Err(Error::SchemaMismatch("correlation matrices cover different columns".into()));
        }
        let n = self.labels.len();
        let diffs: Vec<f64> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.values[i][j] - other.values[i][j]).abs())
            .filter(|d| d.is_finite())
            .collect();
        if diffs.is_empty() {
            return Err(Error::DegenerateInput("no comparable correlation entries".into()));
        }
        Ok(MatrixDiff {
            mean_abs_diff: diffs.iter().sum::<f64>() / diffs.len() as f64,
            max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
        })
    }

    /// CSV with a leading label column; NaN entries are written empty.
    pub fn to_csv_string(&self) -> String {
        let mut out = format!(",{}\n", self.labels.join(","));
        for (label, row) in self.labels.iter().zip(&self.values) {
            out.push_str(label);
            for v in row {
                out.push(',');
                if v.is_finite() {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise Spearman over feature columns, plus aux columns when requested.
pub fn correlation_matrix(table: &FeatureTable, include_aux: bool) -> Result<CorrelationMatrix> {
    if table.n_rows() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation matrix needs >= 3 rows, got {}",
            table.n_rows()
        )));
    }
    let mut labels = table.feature_names.clone();
    let mut columns: Vec<Vec<f64>> = (0..table.n_features()).map(|j| table.feature_column(j)).collect();
    if include_aux {
        labels.extend(table.aux_names.iter().cloned());
        columns.extend((0..table.aux_names.len()).map(|j| table.aux_column(j)));
    }
    let profiles: Vec<Option<Vec<f64>>> = columns.iter().map(|c| rank_profile(c)).collect();
    let n = labels.len();
    let mut values = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        let Some(pi) = &profiles[i] else { continue };
        values[i][i] = 1.0;
        for j in i + 1..n {
            if let Some(pj) = &profiles[j] {
                let r = pi.iter().zip(pj).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
                values[i][j] = r;
                values[j][i] = r;
            }
        }
    }
    let degenerate = labels
        .iter()
        .zip(&profiles)
        .filter(|(_, p)| p.is_none())
        .map(|(l, _)| l.clone())
        .collect();
    Ok(CorrelationMatrix {
        labels,
        values,
        n_rows_used: table.n_rows(),
        degenerate,
    })
}

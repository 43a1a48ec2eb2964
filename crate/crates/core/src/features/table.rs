use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::edf_io::csv_rec::csv_error;
use crate::edf_io::Region;
use crate::error::{Error, Result};
use crate::features::{column_name, Band};

/// Name of the label column in serialized tables.
pub const LABEL_COLUMN: &str = "label";

/// Where a row came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Subject id, or a generator name such as `"synthetic"`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_start: Option<usize>,
    /// Row of the original table that donated the aux/label block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub donor_row: Option<usize>,
}

impl Provenance {
    pub fn source(source: impl Into<String>) -> Self {
        Provenance {
            source: source.into(),
            epoch_start: None,
            donor_row: None,
        }
    }
}

/// Epochs x columns: feature columns first, then pass-through aux columns,
/// then an optional integer label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub aux_names: Vec<String>,
    /// `n_rows x n_features`.
    pub features: Vec<Vec<f64>>,
    /// `n_rows x n_aux`.
    pub aux: Vec<Vec<f64>>,
    pub labels: Option<Vec<i64>>,
    pub provenance: Vec<Provenance>,
}

/// JSON written next to a table's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub schema: u32,
    pub feature_columns: Vec<String>,
    pub aux_columns: Vec<String>,
    pub has_label: bool,
    pub provenance: Vec<Provenance>,
}

impl FeatureTable {
    pub fn new(
        feature_names: Vec<String>,
        aux_names: Vec<String>,
        features: Vec<Vec<f64>>,
        aux: Vec<Vec<f64>>,
        labels: Option<Vec<i64>>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        let n = features.len();
        let bad_width = |rows: &[Vec<f64>], width: usize, what: &str| -> Result<()> {
            match rows.iter().position(|r| r.len() != width) {
                Some(i) => Err(Error::SchemaMismatch(format!(
                    "row {i} has {} {what} values, expected {width}",
                    rows[i].len()
                ))),
                None => Ok(()),
            }
        };
        bad_width(&features, feature_names.len(), "feature")?;
        if aux.len() != n || provenance.len() != n {
            return Err(Error::SchemaMismatch(format!(
                "{n} feature rows, {} aux rows, {} provenance entries",
                aux.len(),
                provenance.len()
            )));
        }
        bad_width(&aux, aux_names.len(), "aux")?;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::SchemaMismatch(format!("{} labels for {n} rows", l.len())));
            }
        }
        if features.iter().chain(&aux).flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("table holds non-finite values".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in feature_names.iter().chain(&aux_names) {
            if name == LABEL_COLUMN || !seen.insert(name.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate or reserved column name {name:?}")));
            }
        }
        Ok(FeatureTable {
            feature_names,
            aux_names,
            features,
            aux,
            labels,
            provenance,
        })
    }

    /// Features only, every row attributed to `source`.
    pub fn from_features(feature_names: Vec<String>, features: Vec<Vec<f64>>, source: &str) -> Result<Self> {
        let n = features.len();
        FeatureTable::new(
            feature_names,
            Vec::new(),
            features,
            vec![Vec::new(); n],
            None,
            vec![Provenance::source(source); n],
        )
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::SchemaMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_rows()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_column(&self, j: usize) -> Vec<f64> {
        self.features.iter().map(|r| r[j]).collect()
    }

    pub fn aux_column(&self, j: usize) -> Vec<f64> {
        self.aux.iter().map(|r| r[j]).collect()
    }

    /// New table holding `rows` (repeats allowed) in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            feature_names: self.feature_names.clone(),
            aux_names: self.aux_names.clone(),
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            aux: rows.iter().map(|&i| self.aux[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
            provenance: rows.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }

    /// Stacks tables with identical columns. Labels are kept only when every
    /// part has them.
    pub fn concat(parts: &[FeatureTable]) -> Result<FeatureTable> {
        let Some(first) = parts.first() else {
            return Err(Error::EmptyResult("no tables to concatenate".into()));
        };
        for p in &parts[1..] {
            first.check_same_features(p)?;
            if p.aux_names != first.aux_names {
                return Err(Error::SchemaMismatch(format!(
                    "aux columns differ: {:?} vs {:?}",
                    first.aux_names, p.aux_names
                )));
            }
        }
        let labels = parts
            .iter()
            .map(|p| p.labels.clone())
            .collect::<Option<Vec<_>>>()
            .map(|l| l.concat());
        FeatureTable::new(
            first.feature_names.clone(),
            first.aux_names.clone(),
            parts.iter().flat_map(|p| p.features.iter().cloned()).collect(),
            parts.iter().flat_map(|p| p.aux.iter().cloned()).collect(),
            labels,
            parts.iter().flat_map(|p| p.provenance.iter().cloned()).collect(),
        )
    }

    /// Errors unless `other` has the same feature columns in the same order.
    pub fn check_same_features(&self, other: &FeatureTable) -> Result<()> {
        if self.feature_names != other.feature_names {
            return Err(Error::SchemaMismatch(format!(
                "feature columns differ: {:?} vs {:?}",
                self.feature_names, other.feature_names
            )));
        }
        Ok(())
    }

    /// Collapses region x band columns to one column per band (mean over
    /// regions). Aux, labels and provenance are kept.
    pub fn band_summary(&self) -> Result<FeatureTable> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); Band::ALL.len()];
        for (j, name) in self.feature_names.iter().enumerate() {
            let band = Region::ALL
                .iter()
                .flat_map(|&r| Band::ALL.iter().map(move |&b| (r, b)))
                .find(|&(r, b)| column_name(r, b) == *name)
                .map(|(_, b)| b)
                .ok_or_else(|| Error::SchemaMismatch(format!("{name:?} is not a region_band column")))?;
            members[band as usize].push(j);
        }
        if members.iter().any(Vec::is_empty) {
            return Err(Error::SchemaMismatch("some bands have no columns".into()));
        }
        let features = self
            .features
            .iter()
            .map(|row| {
                members
                    .iter()
                    .map(|cols| cols.iter().map(|&j| row[j]).sum::<f64>() / cols.len() as f64)
                    .collect()
            })
            .collect();
        FeatureTable::new(
            Band::ALL.iter().map(|b| b.name().to_string()).collect(),
            self.aux_names.clone(),
            features,
            self.aux.clone(),
            self.labels.clone(),
            self.provenance.clone(),
        )
    }

    pub fn sidecar(&self) -> TableSidecar {
        TableSidecar {
            schema: 1,
            feature_columns: self.feature_names.clone(),
            aux_columns: self.aux_names.clone(),
            has_label: self.labels.is_some(),
            provenance: self.provenance.clone(),
        }
    }

    /// CSV text: header row, then values in shortest round-trip form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self
            .feature_names
            .iter()
            .chain(&self.aux_names)
            .map(String::as_str)
            .collect();
        if self.labels.is_some() {
            header.push(LABEL_COLUMN);
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n_rows() {
            let mut fields: Vec<String> = self.features[i]
                .iter()
                .chain(&self.aux[i])
                .map(|v| v.to_string())
                .collect();
            if let Some(l) = &self.labels {
                fields.push(l[i].to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `path` and a JSON sidecar at `path` with extension `json`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
    }

    /// Reads a table. Column roles come from the sidecar when present;
    /// otherwise a `label` column is the label and all others are features.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
        let path = path.as_ref();
        let side = sidecar_path(path);
        let sidecar: Option<TableSidecar> = if side.exists() {
            let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            Some(serde_json::from_str(&text)?)
        } else {
            None
        };
        let aux_names = sidecar.as_ref().map(|s| s.aux_columns.clone()).unwrap_or_default();
        let mut table = read_csv_columns(path, &aux_names)?;
        if let Some(s) = sidecar {
            if s.feature_columns != table.feature_names || s.has_label != table.labels.is_some() {
                return Err(Error::SchemaMismatch(format!(
                    "{} disagrees with its sidecar {}",
                    path.display(),
                    side.display()
                )));
            }
            if s.provenance.len() == table.n_rows() {
                table.provenance = s.provenance;
            }
        }
        Ok(table)
    }

    /// Reads a table treating `aux_names` as aux columns.
    pub fn read_csv_with_aux(path: impl AsRef<Path>, aux_names: &[String]) -> Result<FeatureTable> {
        read_csv_columns(path.as_ref(), aux_names)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn read_csv_columns(path: &Path, aux_names: &[String]) -> Result<FeatureTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = names.iter().position(|n| n == LABEL_COLUMN);
    let aux_idx: Vec<usize> = aux_names
        .iter()
        .map(|a| {
            names
                .iter()
                .position(|n| n == a)
                .ok_or_else(|| Error::SchemaMismatch(format!("aux column {a:?} not found in {}", path.display())))
        })
        .collect::<Result<_>>()?;
    let feature_idx: Vec<usize> = (0..names.len())
        .filter(|i| Some(*i) != label_idx && !aux_idx.contains(i))
        .collect();

    let mut features = Vec::new();
    let mut aux = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let line = r as u64 + 2;
        let record = record.map_err(|e| csv_error(&e, line))?;
        let parse = |i: usize| -> Result<f64> {
            let field = record[i].trim();
            field.parse().map_err(|_| Error::CsvParse {
                line,
                reason: format!("column {:?}: {field:?} is not a number", names[i]),
            })
        };
        features.push(feature_idx.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?);
        aux.push(aux_idx.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?);
        if let (Some(labels), Some(i)) = (labels.as_mut(), label_idx) {
            let v = parse(i)?;
            if v.fract() != 0.0 {
                return Err(Error::CsvParse {
                    line,
                    reason: format!("label {v} is not an integer"),
                });
            }
            labels.push(v as i64);
        }
    }
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let n = features.len();
    FeatureTable::new(
        feature_idx.iter().map(|&i| names[i].clone()).collect(),
        aux_names.to_vec(),
        features,
        aux,
        labels,
        vec![Provenance::source(source); n],
    )
}

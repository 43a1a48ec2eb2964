//! Random Forest classifier (Gini splits, bootstrap, out-of-bag error) and
//! the classifier-based fidelity checks built on it.

mod eval;
mod tree;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;

pub use eval::{
    auc, indistinguishability_test, label_transfer, stratified_split, IndistinguishabilityReport,
    LabelTransferReport,
};
pub use tree::{DecisionTree, TreeNode};

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    /// `ceil(sqrt(n_features))`.
    Sqrt,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_leaf: 2,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    fn max_features(&self, n_features: usize) -> usize {
        match self.features_per_split {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().ceil() as usize).max(1),
            FeaturesPerSplit::Count(k) => k.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub trees: Vec<DecisionTree>,
    /// Class values in ascending order; probability columns follow it.
    pub classes: Vec<i64>,
    pub n_features: usize,
    pub oob_error: Option<f64>,
    pub config: ForestConfig,
}

/// Fits a forest on the feature columns and labels of `table`.
pub fn fit(table: &FeatureTable, config: &ForestConfig) -> Result<ForestModel> {
    let labels = table
        .labels
        .as_ref()
        .ok_or_else(|| Error::SchemaMismatch("training table has no label column".into()))?;
    fit_matrix(&table.features, labels, config)
}

/// Fits a forest on rows `x` with class values `labels`.
pub fn fit_matrix(x: &[Vec<f64>], labels: &[i64], config: &ForestConfig) -> Result<ForestModel> {
    if config.n_trees == 0 || config.min_leaf == 0 {
        return Err(Error::InvalidSpec("n_trees and min_leaf must be >= 1".into()));
    }
    if x.len() != labels.len() {
        return Err(Error::SchemaMismatch(format!("{} rows, {} labels", x.len(), labels.len())));
    }
    if x.len() < 10 {
        return Err(Error::InsufficientData(format!("forest needs >= 10 rows, got {}", x.len())));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::SchemaMismatch("rows must share a non-zero width".into()));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).unwrap()).collect();
    let params = tree::GrowParams {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        max_features: config.max_features(n_features),
        n_classes: classes.len(),
    };
    let n = x.len();
    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let mut in_bag = vec![!config.bootstrap; n];
            let samples: Vec<usize> = if config.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            (DecisionTree::grow(x, &y, samples, &params, &mut rng), in_bag)
        })
        .collect();

    let oob_error = config.bootstrap.then(|| oob_error(x, &y, &grown, classes.len())).flatten();
    Ok(ForestModel {
        version: MODEL_VERSION,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        classes,
        n_features,
        oob_error,
        config: *config,
    })
}

fn oob_error(x: &[Vec<f64>], y: &[usize], grown: &[(DecisionTree, Vec<bool>)], n_classes: usize) -> Option<f64> {
    let mut wrong = 0usize;
    let mut scored = 0usize;
    for (i, row) in x.iter().enumerate() {
        let mut acc = vec![0.0; n_classes];
        let mut votes = 0;
        for (tree, in_bag) in grown {
            if !in_bag[i] {
                acc.iter_mut().zip(tree.predict_proba(row)).for_each(|(a, p)| *a += p);
                votes += 1;
            }
        }
        if votes > 0 {
            scored += 1;
            wrong += usize::from(argmax(&acc) != y[i]);
        }
    }
    (scored > 0).then(|| wrong as f64 / scored as f64)
}

fn argmax(v: &[f64]) -> usize {
    // first maximum, so ties go to the lower class value
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

impl ForestModel {
    fn check_width(&self, rows: &[Vec<f64>]) -> Result<()> {
        match rows.iter().find(|r| r.len() != self.n_features) {
            Some(r) => Err(Error::SchemaMismatch(format!(
                "model expects {} features, row has {}",
                self.n_features,
                r.len()
            ))),
            None => Ok(()),
        }
    }

    /// Class probabilities per row, columns ordered as `classes`.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_width(rows)?;
        Ok(rows
            .par_iter()
            .map(|row| {
                let mut acc = vec![0.0; self.classes.len()];
                for t in &self.trees {
                    acc.iter_mut().zip(t.predict_proba(row)).for_each(|(a, p)| *a += p);
                }
                let n = self.trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                acc
            })
            .collect())
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<i64>> {
        Ok(self
            .predict_proba(rows)?
            .iter()
            .map(|p| self.classes[argmax(p)])
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<ForestModel> {
        let model: ForestModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(Error::UnsupportedFormat(format!("forest model version {}", model.version)));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ForestModel> {
        let path = path.as_ref();
        ForestModel::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::forest::{fit_matrix, ForestConfig};
use crate::stats::mid_ranks;

/// Mann-Whitney AUC: probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let ranks = mid_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Per-class shuffled split; `round(fraction * n_class)` rows of each class
/// go to the first part. Both parts keep at least one row of each class
/// that has two or more.
pub fn stratified_split(labels: &[i64], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidSpec(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let k = ((fraction * n as f64).round() as usize).clamp(usize::from(n >= 2), n.saturating_sub(1).max(1));
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndistinguishabilityReport {
    /// Held-out misclassification rate of original (0) vs synthetic (1).
    pub error_rate: f64,
    pub auc: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Rows per class after subsampling the larger class.
    pub n_per_class: usize,
    pub split: f64,
}

/// Trains a forest to tell original rows (class 0) from synthetic rows
/// (class 1) and scores it on a stratified held-out part.
///
/// The larger table is first subsampled to the size of the smaller so that
/// chance level is an error of one half.
pub fn indistinguishability_test(
    original: &FeatureTable,
    synthetic: &FeatureTable,
    config: &ForestConfig,
    split: f64,
) -> Result<IndistinguishabilityReport> {
    original.check_same_features(synthetic)?;
    let n = original.n_rows().min(synthetic.n_rows());
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "indistinguishability test needs >= 5 rows per table, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pick = |t: &FeatureTable| -> Vec<Vec<f64>> {
        let mut idx: Vec<usize> = (0..t.n_rows()).collect();
        if idx.len() > n {
            idx.shuffle(&mut rng);
            idx.truncate(n);
            idx.sort_unstable();
        }
        idx.iter().map(|&i| t.features[i].clone()).collect()
    };
    let mut rows = pick(original);
    rows.extend(pick(synthetic));
    let labels: Vec<i64> = (0..2 * n).map(|i| i64::from(i >= n)).collect();

    let (train, test) = stratified_split(&labels, split, config.seed ^ 0x5eed)?;
    let take = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i64>) {
        (idx.iter().map(|&i| rows[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (x_train, y_train) = take(&train);
    let (x_test, y_test) = take(&test);
    let model = fit_matrix(&x_train, &y_train, config)?;
    let proba = model.predict_proba(&x_test)?;
    let pred = model.predict(&x_test)?;
    let wrong = pred.iter().zip(&y_test).filter(|(p, y)| p != y).count();
    let scores: Vec<f64> = proba.iter().map(|p| p[1]).collect();
    let positive: Vec<bool> = y_test.iter().map(|&y| y == 1).collect();
    Ok(IndistinguishabilityReport {
        error_rate: wrong as f64 / y_test.len() as f64,
        auc: auc(&scores, &positive)?,
        n_train: train.len(),
        n_test: test.len(),
        n_per_class: n,
        split,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTransferReport {
    pub accuracy: f64,
    /// Present for two-class problems when both classes occur in `eval`.
    pub auc: Option<f64>,
    pub n_train: usize,
    pub n_eval: usize,
    pub learner: String,
}

/// Fits on `train` labels and scores predictions against `eval` labels.
pub fn label_transfer(train: &FeatureTable, eval: &FeatureTable, config: &ForestConfig) -> Result<LabelTransferReport> {
    train.check_same_features(eval)?;
    let (Some(y_train), Some(y_eval)) = (&train.labels, &eval.labels) else {
        return Err(Error::SchemaMismatch("label transfer needs labels on both tables".into()));
    };
    let model = fit_matrix(&train.features, y_train, config)?;
    if let Some(unseen) = y_eval.iter().find(|l| model.classes.binary_search(l).is_err()) {
        return Err(Error::SchemaMismatch(format!("label {unseen} does not occur in the training table")));
    }
    let proba = model.predict_proba(&eval.features)?;
    let pred = model.predict(&eval.features)?;
    let correct = pred.iter().zip(y_eval).filter(|(p, y)| p == y).count();
    let auc = if model.classes.len() == 2 {
        let scores: Vec<f64> = proba.iter().map(|p| p[1]).collect();
        let positive: Vec<bool> = y_eval.iter().map(|&y| y == model.classes[1]).collect();
        auc(&scores, &positive).ok()
    } else {
        None
    };
    Ok(LabelTransferReport {
        accuracy: correct as f64 / y_eval.len() as f64,
        auc,
        n_train: train.n_rows(),
        n_eval: eval.n_rows(),
        learner: "random-forest".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_edges() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap(), 0.0);
        assert_eq!(auc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<i64> = (0..100).map(|i| i64::from(i % 4 == 0)).collect();
        let (train, test) = stratified_split(&labels, 0.7, 3).unwrap();
        assert_eq!(train.len() + test.len(), 100);
        let ones = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(ones(&train), 18);
        assert_eq!(ones(&test), 7);
    }
}

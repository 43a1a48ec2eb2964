#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

#[derive(Deserialize)]
pub struct ShapiroCase {
    pub x: Vec<f64>,
    pub w: f64,
    pub p: f64,
}

/// Shapiro-Wilk values computed with scipy.stats.shapiro.
#[derive(Deserialize)]
pub struct ShapiroReference {
    pub one_to_ten: ShapiroCase,
    pub cases: Vec<ShapiroCase>,
}

pub fn shapiro_reference() -> ShapiroReference {
    serde_json::from_str(include_str!("../data/shapiro_reference.json")).unwrap()
}

/// Spearman from the textbook definition: ranks by counting, ties averaged,
/// then the Pearson formula written out.
pub fn hand_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// AUC by comparing every positive with every negative; ties count half.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

pub fn normal_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, mean: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| mean + Distribution::<f64>::sample(&StandardNormal, &mut *rng)).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

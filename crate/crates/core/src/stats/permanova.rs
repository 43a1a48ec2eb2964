//! Two-group PERMANOVA on Euclidean distances between pooled z-scored rows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 999;

/// Slack when counting permuted statistics at least as large as the
/// observed one, so exact ties are not lost to rounding.
const TIE_EPS: f64 = 1.49e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermanovaResult {
    pub pseudo_f: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

/// Pseudo-F of groups `a` and `b` and its permutation p-value.
///
/// Permutation `i` shuffles group labels with stream `i` of a ChaCha8
/// generator seeded from `seed`, so the result does not depend on the
/// number of worker threads.
pub fn permanova(a: &[Vec<f64>], b: &[Vec<f64>], n_permutations: usize, seed: u64) -> Result<PermanovaResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "PERMANOVA needs >= 2 rows per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let p = a[0].len();
    if a.iter().chain(b).any(|r| r.len() != p) {
        return Err(Error::SchemaMismatch("PERMANOVA rows differ in width".into()));
    }
    if a.iter().chain(b).flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("PERMANOVA input holds non-finite values".into()));
    }
    let rows: Vec<Vec<f64>> = a.iter().chain(b).cloned().collect();
    let z = zscore(&rows);
    let d2 = squared_distances(&z);
    let n = rows.len();
    let labels: Vec<bool> = (0..n).map(|i| i >= a.len()).collect();

    let observed = pseudo_f(&d2, &labels);
    let n_ge = (0..n_permutations)
        .into_par_iter()
        .map_init(
            || labels.clone(),
            |perm, i| {
                perm.copy_from_slice(&labels);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                perm.shuffle(&mut rng);
                usize::from(pseudo_f(&d2, perm) >= observed - TIE_EPS)
            },
        )
        .sum::<usize>();
    Ok(PermanovaResult {
        pseudo_f: observed,
        p_value: (1 + n_ge) as f64 / (1 + n_permutations) as f64,
        n_permutations,
        seed,
    })
}

/// Columns centred on the pooled mean and divided by the pooled standard
/// deviation; constant columns become zero.
fn zscore(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut out = rows.to_vec();
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        for r in out.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn squared_distances(z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = z[i].iter().zip(&z[j]).map(|(x, y)| (x - y) * (x - y)).sum();
            d2[i][j] = d;
            d2[j][i] = d;
        }
    }
    d2
}

/// Anderson's pseudo-F for two groups given squared distances.
fn pseudo_f(d2: &[Vec<f64>], in_b: &[bool]) -> f64 {
    let n = d2.len();
    let (mut total, mut within_a, mut within_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let row = &d2[i];
        for j in i + 1..n {
            let d = row[j];
            total += d;
            match (in_b[i], in_b[j]) {
                (false, false) => within_a += d,
                (true, true) => within_b += d,
                _ => {}
            }
        }
    }
    let n_b = in_b.iter().filter(|&&x| x).count() as f64;
    let n_a = n as f64 - n_b;
    let ss_t = total / n as f64;
    let ss_w = within_a / n_a + within_b / n_b;
    let ss_a = ss_t - ss_w;
    if ss_a.abs() <= 1e-12 * ss_t || ss_t == 0.0 {
        return 0.0;
    }
    let f = ss_a / (ss_w / (n as f64 - 2.0));
    if ss_w <= 0.0 {
        f64::INFINITY
    } else {
        f.max(0.0)
    }
}

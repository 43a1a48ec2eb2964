//! FastICA (symmetric decorrelation, log-cosh contrast) and artifact
//! component rejection by excess kurtosis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::edf_io::Recording;
use crate::error::{Error, Result};

/// Excess kurtosis above which a component is treated as an artifact.
pub const DEFAULT_KURTOSIS_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaConfig {
    /// Number of components; `None` keeps one per channel.
    pub n_components: Option<usize>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        IcaConfig {
            n_components: None,
            seed: 0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Fitted decomposition. Matrices are row-major `Vec<Vec<f64>>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaModel {
    /// `k x n_channels`; sources = unmixing * (data - means).
    pub unmixing: Vec<Vec<f64>>,
    /// `n_channels x k`.
    pub mixing: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// `k x n_channels`.
    pub whitener: Vec<Vec<f64>>,
    pub k: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl IcaModel {
    /// Component time courses, `k x n_samples`.
    pub fn sources(&self, rec: &Recording) -> Result<Vec<Vec<f64>>> {
        if rec.n_channels() != self.means.len() {
            return Err(Error::SchemaMismatch(format!(
                "model fitted on {} channels, recording has {}",
                self.means.len(),
                rec.n_channels()
            )));
        }
        let x = centered(rec, &self.means);
        let s = to_matrix(&self.unmixing) * x;
        Ok(from_matrix(&s))
    }
}

/// Fits FastICA with `k` components.
pub fn fit_fastica(rec: &Recording, config: &IcaConfig) -> Result<IcaModel> {
    let n_ch = rec.n_channels();
    let n = rec.n_samples();
    let k = config.n_components.unwrap_or(n_ch);
    if k == 0 || k > n_ch {
        return Err(Error::InvalidSpec(format!("{k} components requested from {n_ch} channels")));
    }
    if n <= n_ch {
        return Err(Error::InsufficientData(format!(
            "{n} samples is too few for {n_ch} channels"
        )));
    }

    let means: Vec<f64> = rec.data.iter().map(|row| row.iter().sum::<f64>() / n as f64).collect();
    let x = centered(rec, &means);
    let cov = (&x * x.transpose()) / n as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n_ch).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > top * 1e-10 && eig.eigenvalues[i] > 0.0)
        .count();
    if rank < k {
        return Err(Error::RankDeficient { rank, k });
    }

    // whitener K = D^-1/2 E^T, dewhitener = E D^1/2 over the top-k eigenpairs
    let mut whitener = DMatrix::zeros(k, n_ch);
    let mut dewhitener = DMatrix::zeros(n_ch, k);
    for (row, &i) in order.iter().take(k).enumerate() {
        let d = eig.eigenvalues[i];
        let mut v = eig.eigenvectors.column(i).into_owned();
        // deterministic eigenvector sign: largest-magnitude entry positive
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        for c in 0..n_ch {
            whitener[(row, c)] = v[c] / d.sqrt();
            dewhitener[(c, row)] = v[c] * d.sqrt();
        }
    }
    let z = &whitener * &x;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init);
    let mut converged = false;
    let mut iterations = 0;
    let inv_n = 1.0 / n as f64;
    while iterations < config.max_iter {
        iterations += 1;
        let wz = &w * &z;
        let g = wz.map(f64::tanh);
        let g_prime_mean = DVector::from_iterator(
            k,
            (0..k).map(|r| g.row(r).iter().map(|t| 1.0 - t * t).sum::<f64>() * inv_n),
        );
        let mut w_new = (&g * z.transpose()) * inv_n;
        for r in 0..k {
            for c in 0..k {
                w_new[(r, c)] -= g_prime_mean[r] * w[(r, c)];
            }
        }
        let w_new = symmetric_decorrelation(&w_new);
        let lim = (&w_new * w.transpose())
            .diagonal()
            .iter()
            .map(|d| (d.abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < config.tol {
            converged = true;
            break;
        }
    }

    let unmixing = &w * &whitener;
    let mixing = &dewhitener * w.transpose();
    Ok(IcaModel {
        unmixing: from_matrix(&unmixing),
        mixing: from_matrix(&mixing),
        means,
        whitener: from_matrix(&whitener),
        k,
        converged,
        iterations,
    })
}

/// Outcome of [`reject_components`].
#[derive(Debug, Clone)]
pub struct Rejection {
    pub recording: Recording,
    /// Sorted indices of the zeroed components.
    pub rejected: Vec<usize>,
    /// Excess kurtosis of every component.
    pub kurtosis: Vec<f64>,
}

/// Zeroes components whose excess kurtosis exceeds `kurtosis_threshold`, plus
/// every index in `manual`, and reconstructs the channels from the rest.
pub fn reject_components(
    model: &IcaModel,
    rec: &Recording,
    kurtosis_threshold: f64,
    manual: &[usize],
) -> Result<Rejection> {
    if let Some(&bad) = manual.iter().find(|&&i| i >= model.k) {
        return Err(Error::InvalidSpec(format!(
            "manual component {bad} is out of range for {} components",
            model.k
        )));
    }
    let sources = model.sources(rec)?;
    let kurtosis: Vec<f64> = sources.iter().map(|s| excess_kurtosis(s)).collect();
    let rejected: Vec<usize> = (0..model.k)
        .filter(|&i| kurtosis[i] > kurtosis_threshold || manual.contains(&i))
        .collect();
    if rejected.len() == model.k {
        return Err(Error::AllComponentsRejected);
    }
    let n = rec.n_samples();
    let mut data: Vec<Vec<f64>> = model.means.iter().map(|&m| vec![m; n]).collect();
    for (c, row) in data.iter_mut().enumerate() {
        for (j, src) in sources.iter().enumerate() {
            if rejected.contains(&j) {
                continue;
            }
            let a = model.mixing[c][j];
            for (v, s) in row.iter_mut().zip(src) {
                *v += a * s;
            }
        }
    }
    Ok(Rejection {
        recording: rec.with_data(data, rec.sample_rate_hz),
        rejected,
        kurtosis,
    })
}

/// Fourth standardized moment minus three; zero for a constant series.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(m2, m4), &v| {
        let d = (v - mean) * (v - mean);
        (m2 + d, m4 + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 {
        0.0
    } else {
        m4 / (m2 * m2) - 3.0
    }
}

/// W <- (W W^T)^(-1/2) W
fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|d| 1.0 / d.max(f64::MIN_POSITIVE).sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}

fn centered(rec: &Recording, means: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rec.n_channels(), rec.n_samples(), |r, c| rec.data[r][c] - means[r])
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows.first().map_or(0, Vec::len), |r, c| rows[r][c])
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use rand::Rng;

    fn recording(data: Vec<Vec<f64>>) -> Recording {
        let labels = ["Fp1", "C3", "P3", "T7", "O1", "Fp2"];
        Recording::from_labels(&labels[..data.len()], data, 250.0, "s").unwrap()
    }

    /// Rows are exactly independent, zero-mean, unit-variance binary patterns.
    fn hadamard_sources(k: usize, n: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|j| (0..n).map(|t| if (t >> j) & 1 == 0 { 1.0 } else { -1.0 }).collect())
            .collect()
    }

    #[test]
    fn independent_white_data_gives_signed_permutation() {
        let rec = recording(hadamard_sources(3, 8 * 2000));
        let model = fit_fastica(&rec, &IcaConfig { tol: 1e-12, ..IcaConfig::default() }).unwrap();
        assert!(model.converged);
        for row in &model.unmixing {
            let mut mags: Vec<f64> = row.iter().map(|v| v.abs()).collect();
            mags.sort_by(f64::total_cmp);
            assert!((mags[2] - 1.0).abs() < 1e-3, "{row:?}");
            assert!(mags[0] < 1e-3 && mags[1] < 1e-3, "{row:?}");
        }
    }

    #[test]
    fn whitened_sources_have_unit_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mix: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mixed: Vec<Vec<f64>> = (0..4)
            .map(|r| {
                (0..4000)
                    .map(|t| (0..4).map(|c| mix[r][c] * data[c][t]).sum())
                    .collect()
            })
            .collect();
        let rec = recording(mixed);
        let model = fit_fastica(&rec, &IcaConfig::default()).unwrap();
        let s = model.sources(&rec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let cov: f64 = s[i].iter().zip(&s[j]).map(|(a, b)| a * b).sum::<f64>() / 4000.0;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((cov - expected).abs() < 1e-6, "cov[{i}][{j}] = {cov}");
            }
        }
        // unmixing * mixing = I
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|c| model.unmixing[i][c] * model.mixing[c][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_component_tracks_dominant_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 5000;
        let source: Vec<f64> = (0..n).map(|t| (t as f64 * 0.05).sin() + 0.5 * (t as f64 * 0.011).sin()).collect();
        let data: Vec<Vec<f64>> = [1.0, -0.7, 0.4]
            .iter()
            .map(|&a| source.iter().map(|s| a * s + 0.01 * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rec = recording(data);
        let model = fit_fastica(&rec, &IcaConfig { n_components: Some(1), ..IcaConfig::default() }).unwrap();
        let s = model.sources(&rec).unwrap();
        assert!(pearson(&s[0], &source).abs() >= 0.99);
    }

    #[test]
    fn rank_deficiency_detected() {
        let a: Vec<f64> = (0..500).map(|t| (t as f64 * 0.1).sin()).collect();
        let rec = recording(vec![a.clone(), a.iter().map(|v| 2.0 * v).collect()]);
        assert!(matches!(
            fit_fastica(&rec, &IcaConfig::default()),
            Err(Error::RankDeficient { rank: 1, k: 2 })
        ));
    }

    #[test]
    fn no_rejection_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..3000).map(|t| (t as f64 * 0.01 * (c + 1) as f64).sin() * 10.0 + rng.random_range(-1.0..1.0) + 5.0).collect())
            .collect();
        let rec = recording(data.clone());
        let model = fit_fastica(&rec, &IcaConfig::default()).unwrap();
        let out = reject_components(&model, &rec, f64::INFINITY, &[]).unwrap();
        assert!(out.rejected.is_empty());
        for (a, b) in out.recording.data.iter().flatten().zip(data.iter().flatten()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn manual_rejection_leaves_other_mixing_column() {
        let n = 4000;
        let s1: Vec<f64> = (0..n).map(|t| (t as f64 * 0.07).sin()).collect();
        let s2: Vec<f64> = (0..n).map(|t| ((t % 97) as f64 / 97.0) - 0.5).collect();
        let data = vec![
            s1.iter().zip(&s2).map(|(a, b)| a + 0.5 * b).collect(),
            s1.iter().zip(&s2).map(|(a, b)| 0.3 * a - b).collect(),
        ];
        let rec = recording(data);
        let model = fit_fastica(&rec, &IcaConfig::default()).unwrap();
        let out = reject_components(&model, &rec, f64::INFINITY, &[0]).unwrap();
        assert_eq!(out.rejected, vec![0]);
        // residual (output - means) is parallel to mixing column 1
        let col = [model.mixing[0][1], model.mixing[1][1]];
        for t in 0..n {
            let r0 = out.recording.data[0][t] - model.means[0];
            let r1 = out.recording.data[1][t] - model.means[1];
            assert!((r0 * col[1] - r1 * col[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejecting_everything_fails() {
        let rec = recording(hadamard_sources(2, 800));
        let model = fit_fastica(&rec, &IcaConfig::default()).unwrap();
        assert!(matches!(
            reject_components(&model, &rec, f64::INFINITY, &[0, 1]),
            Err(Error::AllComponentsRejected)
        ));
        assert!(matches!(
            reject_components(&model, &rec, f64::INFINITY, &[2]),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn kurtosis_of_known_shapes() {
        let binary: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((excess_kurtosis(&binary) + 2.0).abs() < 1e-12);
        assert_eq!(excess_kurtosis(&[3.0; 10]), 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2000).map(|_| rng.random_range(-1.0..1.0f64).powi(3)).collect())
            .collect();
        let rec = recording(data);
        let a = fit_fastica(&rec, &IcaConfig { seed: 42, ..IcaConfig::default() }).unwrap();
        let b = fit_fastica(&rec, &IcaConfig { seed: 42, ..IcaConfig::default() }).unwrap();
        assert_eq!(a, b);
    }
}

//! GAN and VAE comparison generators over band-power features, with
//! hand-written backprop and Adam.

mod gan;
pub mod nn;
mod vae;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, Provenance};

pub use gan::{train_gan, Gan, GanEpoch};
pub use vae::{train_vae, Vae, VaeEpoch, VaeGradients};

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub latent_dim: usize,
    pub hidden: usize,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            latent_dim: 16,
            hidden: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            epochs: 50,
            batch_size: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainSpec {
    fn check(&self, data: &[Vec<f64>]) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::InvalidSpec("epochs, batch size and learning rate must be positive".into()));
        }
        if data.len() < 2 * self.batch_size {
            return Err(Error::InsufficientData(format!(
                "training needs >= {} rows (two batches), got {}",
                2 * self.batch_size,
                data.len()
            )));
        }
        if data.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidSpec("training data must be scaled to [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Gan,
    Vae,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Gan => "gan",
            BaselineKind::Vae => "vae",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(BaselineKind::Gan),
            "vae" => Ok(BaselineKind::Vae),
            other => Err(Error::InvalidSpec(format!("unknown baseline {other:?}, expected gan or vae"))),
        }
    }
}

/// Per-column min-max scaling to `[0, 1]`. Constant columns map to 0.5 and
/// are listed in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub degenerate: Vec<usize>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<MinMaxScaler> {
        let Some(first) = rows.first() else {
            return Err(Error::InsufficientData("cannot scale an empty table".into()));
        };
        let p = first.len();
        let mut mins = vec![f64::INFINITY; p];
        let mut maxs = vec![f64::NEG_INFINITY; p];
        for r in rows {
            for j in 0..p {
                mins[j] = mins[j].min(r[j]);
                maxs[j] = maxs[j].max(r[j]);
            }
        }
        let degenerate = (0..p).filter(|&j| mins[j] == maxs[j]).collect();
        Ok(MinMaxScaler { mins, maxs, degenerate })
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let span = self.maxs[j] - self.mins[j];
                        if span == 0.0 {
                            0.5
                        } else {
                            (v - self.mins[j]) / span
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn inverse(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| self.mins[j] + v * (self.maxs[j] - self.mins[j]))
                    .collect()
            })
            .collect()
    }
}

/// Scales the feature columns of `table`; aux columns and labels are kept.
pub fn minmax_scale(table: &FeatureTable) -> Result<(FeatureTable, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(&table.features)?;
    let mut scaled = table.clone();
    scaled.features = scaler.transform(&table.features);
    Ok((scaled, scaler))
}

pub(crate) fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // row-major draw order so a batch does not depend on storage layout
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

pub(crate) fn rows_to_matrix(data: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let p = data[0].len();
    DMatrix::from_fn(idx.len(), p, |i, j| data[idx[i]][j])
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A trained generator with the scaler that maps its output back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub version: u32,
    pub kind: BaselineKind,
    pub feature_names: Vec<String>,
    pub scaler: MinMaxScaler,
    pub gan: Option<Gan>,
    pub vae: Option<Vae>,
    pub train: TrainSpec,
}

/// Per-epoch training losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LossHistory {
    Gan(Vec<GanEpoch>),
    Vae(Vec<VaeEpoch>),
}

impl LossHistory {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        match self {
            LossHistory::Gan(h) => {
                out.push_str("epoch,d_loss,g_loss\n");
                for e in h {
                    out.push_str(&format!("{},{},{}\n", e.epoch, e.d_loss, e.g_loss));
                }
            }
            LossHistory::Vae(h) => {
                out.push_str("epoch,loss,reconstruction,kl\n");
                for e in h {
                    out.push_str(&format!("{},{},{},{}\n", e.epoch, e.loss, e.reconstruction, e.kl));
                }
            }
        }
        out
    }

    /// Headline loss per epoch: generator loss for a GAN, total loss for a VAE.
    pub fn main_series(&self) -> Vec<f64> {
        match self {
            LossHistory::Gan(h) => h.iter().map(|e| e.g_loss).collect(),
            LossHistory::Vae(h) => h.iter().map(|e| e.loss).collect(),
        }
    }
}

/// Scales the feature columns of `table` and trains the chosen generator.
pub fn train_baseline(
    table: &FeatureTable,
    kind: BaselineKind,
    mlp: &MlpSpec,
    train: &TrainSpec,
) -> Result<(BaselineModel, LossHistory)> {
    let (scaled, scaler) = minmax_scale(table)?;
    let (gan, vae, history) = match kind {
        BaselineKind::Gan => {
            let (g, h) = train_gan(&scaled.features, mlp, train)?;
            (Some(g), None, LossHistory::Gan(h))
        }
        BaselineKind::Vae => {
            let (v, h) = train_vae(&scaled.features, mlp, train)?;
            (None, Some(v), LossHistory::Vae(h))
        }
    };
    let model = BaselineModel {
        version: MODEL_VERSION,
        kind,
        feature_names: table.feature_names.clone(),
        scaler,
        gan,
        vae,
        train: *train,
    };
    Ok((model, history))
}

impl BaselineModel {
    /// `n` rows in scaled space, each value in `[0, 1]`.
    pub fn sample_scaled(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = match (&self.gan, &self.vae) {
            (Some(g), _) => g.generate(n, &mut rng),
            (_, Some(v)) => v.generate(n, &mut rng),
            _ => unreachable!("baseline model without a network"),
        };
        matrix_to_rows(&m)
    }

    /// `n` rows mapped back to the original feature units.
    pub fn sample(&self, n: usize, seed: u64) -> Result<FeatureTable> {
        let rows = self.scaler.inverse(&self.sample_scaled(n, seed));
        FeatureTable::from_features(self.feature_names.clone(), rows, &self.kind.to_string())
            .map(|t| {
                let source = self.kind.to_string();
                let n = t.n_rows();
                FeatureTable {
                    provenance: vec![Provenance::source(source); n],
                    ..t
                }
            })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<BaselineModel> {
        let m: BaselineModel = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::UnsupportedFormat(format!("baseline model version {}", m.version)));
        }
        Ok(m)
    }
}

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub n_checked: usize,
}

const FD_STEP: f64 = 1e-5;
const REL_FLOOR: f64 = 1e-6;

/// Compares `analytic` with central differences of `loss` (step 1e-5) on
/// up to `max_params` parameters chosen with `seed`. The relative error is
/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(
    params: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> f64,
    max_params: usize,
    seed: u64,
) -> GradientCheck {
    assert_eq!(params.len(), analytic.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = max_params.min(params.len());
    let mut idx = sample_indices(&mut rng, params.len(), k).into_vec();
    idx.sort_unstable();
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for &i in &idx {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let up = loss(&p);
        p[i] = orig - FD_STEP;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    GradientCheck {
        max_rel_error: worst,
        n_checked: k,
    }
}

/// Which parameter block a gradient check perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Generator,
    Discriminator,
    Encoder,
    Decoder,
}

impl Gan {
    /// Checks the discriminator or generator gradient on a fixed batch.
    pub fn gradient_check(
        &self,
        network: Network,
        real: &DMatrix<f64>,
        z: &DMatrix<f64>,
        max_params: usize,
        seed: u64,
    ) -> Result<GradientCheck> {
        let mut probe = self.clone();
        match network {
            Network::Discriminator => {
                let (_, grad) = self.discriminator_loss(real, z);
                Ok(gradient_check(
                    &self.discriminator.params(),
                    &grad,
                    |p| {
                        probe.discriminator.set_params(p);
                        probe.discriminator_loss(real, z).0
                    },
                    max_params,
                    seed,
                ))
            }
            Network::Generator => {
                let (_, grad) = self.generator_loss(z);
                Ok(gradient_check(
                    &self.generator.params(),
                    &grad,
                    |p| {
                        probe.generator.set_params(p);
                        probe.generator_loss(z).0
                    },
                    max_params,
                    seed,
                ))
            }
            other => Err(Error::InvalidSpec(format!("a GAN has no {other:?} network"))),
        }
    }
}

impl Vae {
    /// Checks the encoder (through the reparameterization) or decoder
    /// gradient on a fixed batch and noise draw.
    pub fn gradient_check(
        &self,
        network: Network,
        x: &DMatrix<f64>,
        eps: &DMatrix<f64>,
        max_params: usize,
        seed: u64,
    ) -> Result<GradientCheck> {
        let mut probe = self.clone();
        let g = self.loss(x, eps);
        match network {
            Network::Encoder => Ok(gradient_check(
                &self.encoder_params(),
                &g.encoder,
                |p| {
                    probe.set_encoder_params(p);
                    probe.loss(x, eps).loss
                },
                max_params,
                seed,
            )),
            Network::Decoder => Ok(gradient_check(
                &self.decoder.params(),
                &g.decoder,
                |p| {
                    probe.decoder.set_params(p);
                    probe.loss(x, eps).loss
                },
                max_params,
                seed,
            )),
            other => Err(Error::InvalidSpec(format!("a VAE has no {other:?} network"))),
        }
    }
}

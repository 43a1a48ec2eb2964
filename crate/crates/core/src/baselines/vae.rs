use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::nn::{bce_with_logits, flatten, Activation, Adam, Dense, Mlp};
use crate::baselines::{gaussian, rows_to_matrix, MlpSpec, TrainSpec};
use crate::error::{Error, Result};

/// Encoder `data -> hidden (ReLU)` with linear heads for the latent mean and
/// log-variance; decoder `latent -> hidden (ReLU) -> data (Sigmoid)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vae {
    pub encoder: Mlp,
    pub mean_head: Dense,
    pub logvar_head: Dense,
    pub decoder: Mlp,
    pub latent_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaeEpoch {
    pub epoch: usize,
    /// Reconstruction BCE plus KL, per row.
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

/// Loss of one batch with gradients for each part.
pub struct VaeGradients {
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
    /// Encoder trunk, then mean head, then log-variance head.
    pub encoder: Vec<f64>,
    pub decoder: Vec<f64>,
    /// Gradient with respect to the latent mean (rows x latent).
    pub d_mean: DMatrix<f64>,
}

impl Vae {
    pub fn new(n_features: usize, spec: &MlpSpec, rng: &mut ChaCha8Rng) -> Vae {
        let encoder = Mlp::new(&[n_features, spec.hidden], &[Activation::Relu], rng);
        let mean_head = Dense::new(spec.hidden, spec.latent_dim, rng);
        let logvar_head = Dense::new(spec.hidden, spec.latent_dim, rng);
        let decoder = Mlp::new(
            &[spec.latent_dim, spec.hidden, n_features],
            &[Activation::Relu, Activation::Sigmoid],
            rng,
        );
        Vae {
            encoder,
            mean_head,
            logvar_head,
            decoder,
            latent_dim: spec.latent_dim,
        }
    }

    pub fn encoder_params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend(flatten(&[self.mean_head.clone(), self.logvar_head.clone()]));
        p
    }

    pub fn set_encoder_params(&mut self, p: &[f64]) {
        let n = self.encoder.n_params();
        self.encoder.set_params(&p[..n]);
        let mut heads = Mlp {
            layers: vec![self.mean_head.clone(), self.logvar_head.clone()],
            activations: vec![Activation::Identity; 2],
        };
        heads.set_params(&p[n..]);
        self.logvar_head = heads.layers.pop().unwrap();
        self.mean_head = heads.layers.pop().unwrap();
    }

    /// Batch loss `mean_rows(sum_features BCE + sum_latent KL)` with
    /// `z = mean + exp(logvar / 2) * eps`.
    pub fn loss(&self, x: &DMatrix<f64>, eps: &DMatrix<f64>) -> VaeGradients {
        let b = x.nrows() as f64;
        let t_enc = self.encoder.forward(x);
        let h = t_enc.output();
        let mu = self.mean_head.forward(h);
        let lv = self.logvar_head.forward(h);
        let sigma = lv.map(|v| (0.5 * v).exp());
        let z = &mu + sigma.component_mul(eps);

        let (t_dec, logits) = self.decoder.forward_logits(&z);
        let (reconstruction, g_logits) = bce_with_logits(&logits, x, b);
        let (dec_grads, dz) = self.decoder.backward(&t_dec, &g_logits, false);

        let kl = -0.5 * mu.zip_map(&lv, |m, l| 1.0 + l - m * m - l.exp()).sum() / b;
        let d_mu = &dz + &mu / b;
        let d_lv = dz.component_mul(&sigma.component_mul(eps)) * 0.5 + lv.map(|l| 0.5 * (l.exp() - 1.0) / b);

        let (g_mean, dh_mean) = self.mean_head.backward(h, &d_mu);
        let (g_lv, dh_lv) = self.logvar_head.backward(h, &d_lv);
        let (enc_grads, _) = self.encoder.backward(&t_enc, &(dh_mean + dh_lv), true);
        let mut encoder = flatten(&enc_grads);
        encoder.extend(flatten(&[g_mean, g_lv]));
        VaeGradients {
            loss: reconstruction + kl,
            reconstruction,
            kl,
            encoder,
            decoder: flatten(&dec_grads),
            d_mean: d_mu,
        }
    }

    /// Decoded rows from `n` standard normal latent draws.
    pub fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        self.decoder.predict(&gaussian(n, self.latent_dim, rng))
    }
}

pub fn train_vae(data: &[Vec<f64>], mlp: &MlpSpec, train: &TrainSpec) -> Result<(Vae, Vec<VaeEpoch>)> {
    train.check(data)?;
    let mut init = ChaCha8Rng::seed_from_u64(train.seed);
    let mut vae = Vae::new(data[0].len(), mlp, &mut init);
    let mut opt = Adam::new(
        vae.encoder_params().len() + vae.decoder.n_params(),
        train.lr,
        train.beta1,
        train.beta2,
        train.eps,
    );
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
        rng.set_stream(1 + epoch as u64);
        order.shuffle(&mut rng);
        let (mut loss, mut rec, mut kl, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for chunk in order.chunks(train.batch_size) {
            let x = rows_to_matrix(data, chunk);
            let eps = gaussian(chunk.len(), vae.latent_dim, &mut rng);
            let g = vae.loss(&x, &eps);
            if !g.loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            let n_enc = g.encoder.len();
            let mut p = vae.encoder_params();
            p.extend(vae.decoder.params());
            let mut grad = g.encoder;
            grad.extend(g.decoder);
            opt.step(&mut p, &grad);
            vae.set_encoder_params(&p[..n_enc]);
            vae.decoder.set_params(&p[n_enc..]);
            loss += g.loss;
            rec += g.reconstruction;
            kl += g.kl;
            batches += 1;
        }
        let n = batches as f64;
        history.push(VaeEpoch {
            epoch,
            loss: loss / n,
            reconstruction: rec / n,
            kl: kl / n,
        });
    }
    Ok((vae, history))
}

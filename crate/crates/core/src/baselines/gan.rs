use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::nn::{bce_with_logits, flatten, Activation, Adam, Mlp};
use crate::baselines::{gaussian, rows_to_matrix, MlpSpec, TrainSpec};
use crate::error::{Error, Result};

/// Generator `latent -> hidden (ReLU) -> data (Sigmoid)` and discriminator
/// `data -> hidden (ReLU) -> 1 (Sigmoid)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gan {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub latent_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanEpoch {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

impl Gan {
    pub fn new(n_features: usize, spec: &MlpSpec, rng: &mut ChaCha8Rng) -> Gan {
        let generator = Mlp::new(
            &[spec.latent_dim, spec.hidden, n_features],
            &[Activation::Relu, Activation::Sigmoid],
            rng,
        );
        let discriminator = Mlp::new(&[n_features, spec.hidden, 1], &[Activation::Relu, Activation::Sigmoid], rng);
        Gan {
            generator,
            discriminator,
            latent_dim: spec.latent_dim,
        }
    }

    /// Discriminator loss `BCE(D(real), 1) + BCE(D(G(z)), 0)` and its
    /// gradient with respect to the discriminator parameters.
    pub fn discriminator_loss(&self, real: &DMatrix<f64>, z: &DMatrix<f64>) -> (f64, Vec<f64>) {
        let fake = self.generator.predict(z);
        let b = real.nrows() as f64;
        let (t_real, l_real) = self.discriminator.forward_logits(real);
        let (t_fake, l_fake) = self.discriminator.forward_logits(&fake);
        let (loss_r, g_r) = bce_with_logits(&l_real, &DMatrix::from_element(real.nrows(), 1, 1.0), b);
        let (loss_f, g_f) = bce_with_logits(&l_fake, &DMatrix::zeros(fake.nrows(), 1), fake.nrows() as f64);
        let (gr, _) = self.discriminator.backward(&t_real, &g_r, false);
        let (gf, _) = self.discriminator.backward(&t_fake, &g_f, false);
        let grad = flatten(&gr).iter().zip(flatten(&gf)).map(|(a, b)| a + b).collect();
        (loss_r + loss_f, grad)
    }

    /// Generator loss `BCE(D(G(z)), 1)` and its gradient with respect to the
    /// generator parameters.
    pub fn generator_loss(&self, z: &DMatrix<f64>) -> (f64, Vec<f64>) {
        let t_gen = self.generator.forward(z);
        let (t_disc, logits) = self.discriminator.forward_logits(t_gen.output());
        let (loss, g) = bce_with_logits(&logits, &DMatrix::from_element(z.nrows(), 1, 1.0), z.nrows() as f64);
        let (_, d_fake) = self.discriminator.backward(&t_disc, &g, false);
        let (gg, _) = self.generator.backward(&t_gen, &d_fake, true);
        (loss, flatten(&gg))
    }

    /// Rows generated from `n` standard normal latent draws.
    pub fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        self.generator.predict(&gaussian(n, self.latent_dim, rng))
    }
}

/// Alternating Adam updates: one discriminator step then one generator
/// step per batch.
pub fn train_gan(data: &[Vec<f64>], mlp: &MlpSpec, train: &TrainSpec) -> Result<(Gan, Vec<GanEpoch>)> {
    train.check(data)?;
    let mut init = ChaCha8Rng::seed_from_u64(train.seed);
    let mut gan = Gan::new(data[0].len(), mlp, &mut init);
    let mut d_opt = Adam::new(gan.discriminator.n_params(), train.lr, train.beta1, train.beta2, train.eps);
    let mut g_opt = Adam::new(gan.generator.n_params(), train.lr, train.beta1, train.beta2, train.eps);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
        rng.set_stream(1 + epoch as u64);
        order.shuffle(&mut rng);
        let (mut d_sum, mut g_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(train.batch_size) {
            let real = rows_to_matrix(data, chunk);
            let z = gaussian(chunk.len(), gan.latent_dim, &mut rng);

            let (d_loss, d_grad) = gan.discriminator_loss(&real, &z);
            let mut p = gan.discriminator.params();
            d_opt.step(&mut p, &d_grad);
            gan.discriminator.set_params(&p);

            let (g_loss, g_grad) = gan.generator_loss(&z);
            let mut p = gan.generator.params();
            g_opt.step(&mut p, &g_grad);
            gan.generator.set_params(&p);

            if !(d_loss.is_finite() && g_loss.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            d_sum += d_loss;
            g_sum += g_loss;
            batches += 1;
        }
        history.push(GanEpoch {
            epoch,
            d_loss: d_sum / batches as f64,
            g_loss: g_sum / batches as f64,
        });
    }
    Ok((gan, history))
}

use nalgebra::{DMatrix, RowDVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, m: &mut DMatrix<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => m.apply(|v| *v = v.max(0.0)),
            Activation::Sigmoid => m.apply(|v| *v = sigmoid(*v)),
        }
    }

    /// Multiplies `grad` by the derivative, given the activation output.
    fn backprop(self, out: &DMatrix<f64>, grad: &mut DMatrix<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => grad.zip_apply(out, |g, o| {
                if o <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Sigmoid => grad.zip_apply(out, |g, o| *g *= o * (1.0 - o)),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer, `y = x W^T + b` on row-major batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out x in`.
    pub weight: DMatrix<f64>,
    pub bias: RowDVector<f64>,
}

impl Dense {
    /// Uniform initialization on `+-1/sqrt(fan_in)` for weights and biases.
    pub fn new<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Dense {
        let bound = 1.0 / (n_in as f64).sqrt();
        let weight = DMatrix::from_fn(n_out, n_in, |_, _| rng.random_range(-bound..bound));
        let bias = RowDVector::from_fn(n_out, |_, _| rng.random_range(-bound..bound));
        Dense { weight, bias }
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Dense {
        Dense {
            weight: DMatrix::zeros(n_out, n_in),
            bias: RowDVector::zeros(n_out),
        }
    }

    pub fn n_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x * self.weight.transpose();
        for mut row in y.row_iter_mut() {
            row += &self.bias;
        }
        y
    }

    /// Parameter gradients and input gradient for output gradient `dy`.
    pub fn backward(&self, x: &DMatrix<f64>, dy: &DMatrix<f64>) -> (Dense, DMatrix<f64>) {
        let dw = dy.transpose() * x;
        let db = dy.row_sum();
        let dx = dy * &self.weight;
        (Dense { weight: dw, bias: db }, dx)
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        out.extend(self.weight.iter());
        out.extend(self.bias.iter());
    }

    fn read_params(&mut self, p: &[f64]) -> usize {
        let nw = self.weight.len();
        self.weight.as_mut_slice().copy_from_slice(&p[..nw]);
        let nb = self.bias.len();
        self.bias.as_mut_slice().copy_from_slice(&p[nw..nw + nb]);
        nw + nb
    }
}

/// Stack of dense layers, each followed by its activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activations: Vec<Activation>,
}

/// Inputs to every layer plus the final output, kept for backprop.
pub struct Trace {
    pub inputs: Vec<DMatrix<f64>>,
    pub outputs: Vec<DMatrix<f64>>,
}

impl Trace {
    pub fn output(&self) -> &DMatrix<f64> {
        self.outputs.last().unwrap()
    }
}

impl Mlp {
    /// `widths[0]` inputs, then one layer per further width.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], activations: &[Activation], rng: &mut R) -> Mlp {
        assert_eq!(widths.len(), activations.len() + 1);
        Mlp {
            layers: widths.windows(2).map(|w| Dense::new(w[0], w[1], rng)).collect(),
            activations: activations.to_vec(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().weight.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let mut y = layer.forward(&h);
            act.apply(&mut y);
            inputs.push(h);
            h = y.clone();
            outputs.push(y);
        }
        Trace { inputs, outputs }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).outputs.pop().unwrap()
    }

    /// Backprop from the gradient with respect to the last layer's
    /// pre-activation when `through_last` is false (loss written on logits),
    /// or its output when true.
    pub fn backward(&self, trace: &Trace, grad: &DMatrix<f64>, through_last: bool) -> (Vec<Dense>, DMatrix<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i + 1 < self.layers.len() || through_last {
                self.activations[i].backprop(&trace.outputs[i], &mut g);
            }
            let (dl, dx) = layer.backward(&trace.inputs[i], &g);
            grads.push(dl);
            g = dx;
        }
        grads.reverse();
        (grads, g)
    }

    /// Forward pass returning the last layer's pre-activation.
    pub fn forward_logits(&self, x: &DMatrix<f64>) -> (Trace, DMatrix<f64>) {
        let mut trace = self.forward(x);
        let last = self.layers.len() - 1;
        let logits = self.layers[last].forward(&trace.inputs[last]);
        // keep the trace consistent: output of the last layer is its activation
        let mut out = logits.clone();
        self.activations[last].apply(&mut out);
        trace.outputs[last] = out;
        (trace, logits)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            l.write_params(&mut p);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut off = 0;
        for l in &mut self.layers {
            off += l.read_params(&p[off..]);
        }
    }
}

pub fn flatten(grads: &[Dense]) -> Vec<f64> {
    let mut out = Vec::new();
    for g in grads {
        g.write_params(&mut out);
    }
    out
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Adam {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Mean binary cross-entropy of `sigmoid(logits)` against `targets`, and
/// its gradient with respect to the logits. `scale` divides both.
pub fn bce_with_logits(logits: &DMatrix<f64>, targets: &DMatrix<f64>, scale: f64) -> (f64, DMatrix<f64>) {
    let mut loss = 0.0;
    let grad = DMatrix::from_fn(logits.nrows(), logits.ncols(), |i, j| {
        let (z, t) = (logits[(i, j)], targets[(i, j)]);
        // max(z, 0) - z t + log(1 + exp(-|z|))
        loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
        (sigmoid(z) - t) / scale
    });
    (loss / scale, grad)
}

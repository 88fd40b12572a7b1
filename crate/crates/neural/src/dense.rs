//! Fully connected layers and the plain feed-forward stacks built from them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One dense layer: y = act(x.W^T + b).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseLayer {
    /// [out, in]
    pub weights: Tensor2,
    /// [1, out]
    pub bias: Tensor2,
    pub activation: Activation,
}

impl DenseLayer {
    /// Xavier-uniform weights, zero bias.
    pub fn xavier(input: usize, output: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let weights = Tensor2::from_fn(output, input, |_, _| rng.gen_range(-limit..limit));
        DenseLayer {
            weights,
            bias: Tensor2::zeros(1, output),
            activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weights.rows()
    }

    /// Forward over a batch [n, in] -> [n, out].
    pub fn forward(&self, x: &Tensor2) -> Tensor2 {
        assert_eq!(
            x.cols(),
            self.input_size(),
            "dense layer fed {} features, expects {}",
            x.cols(),
            self.input_size()
        );
        let mut z = x.matmul_nt(&self.weights);
        z.add_row_broadcast(&self.bias);
        let act = self.activation;
        let y = z.map(|v| act.apply(v));
        y.assert_finite("dense forward");
        y
    }

    /// Backprop one layer. `x` is the layer input, `y` its output, `dy` the
    /// loss gradient at the output. Returns (dW, db, dx).
    pub fn backward(&self, x: &Tensor2, y: &Tensor2, dy: &Tensor2) -> (Tensor2, Tensor2, Tensor2) {
        let act = self.activation;
        let dz = dy.zip_map(y, |g, out| g * act.deriv_from_output(out));
        let dw = dz.matmul_tn(x);
        let db = dz.sum_rows();
        let dx = dz.matmul_nn(&self.weights);
        (dw, db, dx)
    }
}

/// A stack of dense layers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer activations kept from a cached forward pass; `outputs[0]` is the
/// network input, `outputs[i]` the output of layer i-1.
pub struct MlpCache {
    pub outputs: Vec<Tensor2>,
}

impl Mlp {
    /// Build input -> hidden.. -> output with one activation for hidden layers
    /// and a separate output activation.
    pub fn new(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let mut layers = Vec::new();
        let mut prev = input;
        for &h in hidden {
            layers.push(DenseLayer::xavier(prev, h, hidden_act, rng));
            prev = h;
        }
        layers.push(DenseLayer::xavier(prev, output, output_act, rng));
        Mlp { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map(|l| l.input_size()).unwrap_or(0)
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map(|l| l.output_size()).unwrap_or(0)
    }

    pub fn forward(&self, x: &Tensor2) -> Tensor2 {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur);
        }
        cur
    }

    pub fn forward_cached(&self, x: &Tensor2) -> (Tensor2, MlpCache) {
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x.clone());
        for layer in &self.layers {
            let y = layer.forward(outputs.last().unwrap());
            outputs.push(y);
        }
        let out = outputs.last().unwrap().clone();
        (out, MlpCache { outputs })
    }

    /// Backprop from the output gradient; returns parameter gradients in
    /// `params()` order plus the gradient w.r.t. the network input.
    pub fn backward(&self, cache: &MlpCache, dy: &Tensor2) -> (Gradients, Tensor2) {
        assert_eq!(
            cache.outputs.len(),
            self.layers.len() + 1,
            "stale forward cache"
        );
        let mut tensors = vec![Tensor2::zeros(0, 0); self.layers.len() * 2];
        let mut grad = dy.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.outputs[i];
            let y = &cache.outputs[i + 1];
            let (dw, db, dx) = layer.backward(x, y, &grad);
            tensors[2 * i] = dw;
            tensors[2 * i + 1] = db;
            grad = dx;
        }
        grad.assert_finite("mlp backward");
        (Gradients { tensors }, grad)
    }

    pub fn params(&self) -> Vec<&Tensor2> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &self.layers {
            out.push(&layer.weights);
            out.push(&layer.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(&mut layer.weights);
            out.push(&mut layer.bias);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for p in self.params() {
            out.extend_from_slice(p.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }
}

/// Parameter gradients in the owning network's `params()` order.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub tensors: Vec<Tensor2>,
}

impl Gradients {
    pub fn zeros_like(params: &[&Tensor2]) -> Self {
        Gradients {
            tensors: params
                .iter()
                .map(|p| Tensor2::zeros(p.rows(), p.cols()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        assert_eq!(self.tensors.len(), other.tensors.len());
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn scale_assign(&mut self, s: f64) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v *= s;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in &self.tensors {
            out.extend_from_slice(t.data());
        }
        out
    }
}

/// target <- tau * main + (1 - tau) * target, parameterwise.
pub fn soft_update_params(main: &[&Tensor2], target: &mut [&mut Tensor2], tau: f64) {
    assert_eq!(main.len(), target.len(), "soft update shape list mismatch");
    for (m, t) in main.iter().zip(target.iter_mut()) {
        assert_eq!(m.shape(), t.shape(), "soft update tensor shape mismatch");
        for (mv, tv) in m.data().iter().zip(t.data_mut()) {
            *tv = tau * *mv + (1.0 - tau) * *tv;
        }
    }
}

pub fn soft_update_mlp(main: &Mlp, target: &mut Mlp, tau: f64) {
    let main_params = main.params();
    let mut target_params = target.params_mut();
    soft_update_params(&main_params, &mut target_params, tau);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer {
            weights: Tensor2::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.0 }),
            bias: Tensor2::zeros(1, 3),
            activation: Activation::Identity,
        };
        let x = Tensor2::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.0, 0.5, -0.5]);
        assert_eq!(layer.forward(&x), x);
    }

    #[test]
    fn relu_zeroes_negative_preactivations() {
        let layer = DenseLayer {
            weights: Tensor2::from_fn(2, 2, |_, _| 1.0),
            bias: Tensor2::row_vector(&[-100.0, -100.0]),
            activation: Activation::Relu,
        };
        let y = layer.forward(&Tensor2::from_vec(1, 2, vec![1.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0]);
    }

    #[test]
    fn random_dense_matches_naive_matmul_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let layer = DenseLayer::xavier(3, 4, Activation::Identity, &mut rng);
        let x = Tensor2::from_fn(2, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y = layer.forward(&x);
        for i in 0..2 {
            for o in 0..4 {
                // independent scalar recomputation
                let mut acc = 0.0f64;
                for k in 0..3 {
                    acc += x.get(i, k) * layer.weights.get(o, k);
                }
                let rel = (y.get(i, o) - acc).abs() / acc.abs().max(1e-13);
                assert!(rel < 1e-13, "rel err {rel}");
            }
        }
    }

    #[test]
    fn soft_update_endpoints() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let main = Mlp::new(2, &[3], 1, Activation::Tanh, Activation::Identity, &mut rng);
        let mut target = Mlp::new(2, &[3], 1, Activation::Tanh, Activation::Identity, &mut rng);
        let before = target.flatten_params();
        soft_update_mlp(&main, &mut target, 0.0);
        assert_eq!(target.flatten_params(), before);
        soft_update_mlp(&main, &mut target, 1.0);
        assert_eq!(target.flatten_params(), main.flatten_params());
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let net = Mlp::new(4, &[8, 8], 2, Activation::Relu, Activation::Sigmoid, &mut rng);
        let x = Tensor2::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let a = net.forward(&x);
        let b = net.forward(&x);
        assert_eq!(a, b);
    }
}

//! Stacked LSTM layers with a linear regression head, trained by
//! backpropagation through time.
//!
//! Gate layout per layer: forget f, input i, candidate g, output o.
//!   f = sig(x.Wf^T + h.Uf^T + bf)        i = sig(x.Wi^T + h.Ui^T + bi)
//!   g = tanh(x.Wg^T + h.Ug^T + bg)       o = sig(x.Wo^T + h.Uo^T + bo)
//!   c' = f*c + i*g                       h' = o*tanh(c')
//! The head maps the final hidden state of the top layer to a scalar.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{sigmoid, Gradients};
use crate::tensor::Tensor2;

/// All parameters of one LSTM layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmCellParams {
    /// Input weights, [hidden, input] each.
    pub w_f: Tensor2,
    pub w_i: Tensor2,
    pub w_g: Tensor2,
    pub w_o: Tensor2,
    /// Recurrent weights, [hidden, hidden] each.
    pub u_f: Tensor2,
    pub u_i: Tensor2,
    pub u_g: Tensor2,
    pub u_o: Tensor2,
    /// Biases, [1, hidden] each.
    pub b_f: Tensor2,
    pub b_i: Tensor2,
    pub b_g: Tensor2,
    pub b_o: Tensor2,
}

impl LstmCellParams {
    /// Xavier-uniform weights, zero biases except forget bias = 1.
    pub fn xavier(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let win = |inp: usize, rng: &mut dyn rand::RngCore| {
            let limit = (6.0 / (inp + hidden) as f64).sqrt();
            Tensor2::from_fn(hidden, inp, |_, _| rng.gen_range(-limit..limit))
        };
        let mut forget_bias = Tensor2::zeros(1, hidden);
        for v in forget_bias.data_mut() {
            *v = 1.0;
        }
        LstmCellParams {
            w_f: win(input, rng),
            w_i: win(input, rng),
            w_g: win(input, rng),
            w_o: win(input, rng),
            u_f: win(hidden, rng),
            u_i: win(hidden, rng),
            u_g: win(hidden, rng),
            u_o: win(hidden, rng),
            b_f: forget_bias,
            b_i: Tensor2::zeros(1, hidden),
            b_g: Tensor2::zeros(1, hidden),
            b_o: Tensor2::zeros(1, hidden),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_f.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_f.rows()
    }

    pub fn params(&self) -> Vec<&Tensor2> {
        vec![
            &self.w_f, &self.u_f, &self.b_f, &self.w_i, &self.u_i, &self.b_i, &self.w_g, &self.u_g,
            &self.b_g, &self.w_o, &self.u_o, &self.b_o,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![
            &mut self.w_f, &mut self.u_f, &mut self.b_f, &mut self.w_i, &mut self.u_i,
            &mut self.b_i, &mut self.w_g, &mut self.u_g, &mut self.b_g, &mut self.w_o,
            &mut self.u_o, &mut self.b_o,
        ]
    }
}

/// Activation record for one time step of one layer.
pub struct LstmStepCache {
    pub x: Tensor2,
    pub h_prev: Tensor2,
    pub c_prev: Tensor2,
    pub f: Tensor2,
    pub i: Tensor2,
    pub g: Tensor2,
    pub o: Tensor2,
    pub c: Tensor2,
    pub tanh_c: Tensor2,
}

/// One forward step of the cell over a batch.
pub fn lstm_cell_forward(
    p: &LstmCellParams,
    x: &Tensor2,
    h_prev: &Tensor2,
    c_prev: &Tensor2,
) -> (Tensor2, Tensor2, LstmStepCache) {
    assert_eq!(x.cols(), p.input_size(), "lstm input width mismatch");
    assert_eq!(h_prev.cols(), p.hidden_size(), "lstm hidden width mismatch");
    let gate = |w: &Tensor2, u: &Tensor2, b: &Tensor2| {
        let mut z = x.matmul_nt(w);
        z.add_assign(&h_prev.matmul_nt(u));
        z.add_row_broadcast(b);
        z
    };
    let f = gate(&p.w_f, &p.u_f, &p.b_f).map(sigmoid);
    let i = gate(&p.w_i, &p.u_i, &p.b_i).map(sigmoid);
    let g = gate(&p.w_g, &p.u_g, &p.b_g).map(f64::tanh);
    let o = gate(&p.w_o, &p.u_o, &p.b_o).map(sigmoid);
    let c = f.hadamard(c_prev).add(&i.hadamard(&g));
    let tanh_c = c.map(f64::tanh);
    let h = o.hadamard(&tanh_c);
    h.assert_finite("lstm cell forward");
    let cache = LstmStepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        f,
        i,
        g,
        o,
        c: c.clone(),
        tanh_c,
    };
    (h, c, cache)
}

/// Gradients for one layer in `LstmCellParams::params` order.
struct LayerGrads {
    tensors: Vec<Tensor2>,
}

impl LayerGrads {
    fn zeros(p: &LstmCellParams) -> Self {
        LayerGrads {
            tensors: p
                .params()
                .iter()
                .map(|t| Tensor2::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }
}

/// One step of cell backprop. Returns (dx, dh_prev, dc_prev) and accumulates
/// parameter gradients.
fn lstm_cell_backward(
    p: &LstmCellParams,
    cache: &LstmStepCache,
    dh: &Tensor2,
    dc_future: &Tensor2,
    grads: &mut LayerGrads,
) -> (Tensor2, Tensor2, Tensor2) {
    let dzo = dh
        .hadamard(&cache.tanh_c)
        .zip_map(&cache.o, |d, o| d * o * (1.0 - o));
    let dc = dh
        .hadamard(&cache.o)
        .zip_map(&cache.tanh_c, |d, t| d * (1.0 - t * t))
        .add(dc_future);
    let dzf = dc
        .hadamard(&cache.c_prev)
        .zip_map(&cache.f, |d, f| d * f * (1.0 - f));
    let dzi = dc
        .hadamard(&cache.g)
        .zip_map(&cache.i, |d, i| d * i * (1.0 - i));
    let dzg = dc
        .hadamard(&cache.i)
        .zip_map(&cache.g, |d, g| d * (1.0 - g * g));
    let dc_prev = dc.hadamard(&cache.f);

    // params order: w_f,u_f,b_f, w_i,u_i,b_i, w_g,u_g,b_g, w_o,u_o,b_o
    for (slot, dz) in [(0, &dzf), (3, &dzi), (6, &dzg), (9, &dzo)] {
        grads.tensors[slot].add_assign(&dz.matmul_tn(&cache.x));
        grads.tensors[slot + 1].add_assign(&dz.matmul_tn(&cache.h_prev));
        grads.tensors[slot + 2].add_assign(&dz.sum_rows());
    }

    let mut dx = dzf.matmul_nn(&p.w_f);
    dx.add_assign(&dzi.matmul_nn(&p.w_i));
    dx.add_assign(&dzg.matmul_nn(&p.w_g));
    dx.add_assign(&dzo.matmul_nn(&p.w_o));

    let mut dh_prev = dzf.matmul_nn(&p.u_f);
    dh_prev.add_assign(&dzi.matmul_nn(&p.u_i));
    dh_prev.add_assign(&dzg.matmul_nn(&p.u_g));
    dh_prev.add_assign(&dzo.matmul_nn(&p.u_o));

    (dx, dh_prev, dc_prev)
}

/// Stacked LSTM layers plus a linear scalar head on the final hidden state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmNetwork {
    pub layers: Vec<LstmCellParams>,
    /// Regression coefficients, [1, hidden of last layer].
    pub head: Tensor2,
}

pub struct LstmCache {
    /// [layer][time]
    steps: Vec<Vec<LstmStepCache>>,
    /// Final hidden state of the top layer.
    last_h: Tensor2,
}

impl LstmNetwork {
    pub fn new(input: usize, hidden: usize, layers: usize, rng: &mut impl Rng) -> Self {
        assert!(layers >= 1, "need at least one lstm layer");
        let mut cells = Vec::with_capacity(layers);
        cells.push(LstmCellParams::xavier(input, hidden, rng));
        for _ in 1..layers {
            cells.push(LstmCellParams::xavier(hidden, hidden, rng));
        }
        let limit = (6.0 / (hidden + 1) as f64).sqrt();
        let head = Tensor2::from_fn(1, hidden, |_, _| rng.gen_range(-limit..limit));
        LstmNetwork {
            layers: cells,
            head,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.layers[0].hidden_size()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    /// Run a sequence of [n, input] steps; returns the scalar head output
    /// [n, 1] from the final step.
    pub fn forward(&self, seq: &[Tensor2]) -> Tensor2 {
        self.forward_cached(seq).0
    }

    pub fn forward_cached(&self, seq: &[Tensor2]) -> (Tensor2, LstmCache) {
        assert!(!seq.is_empty(), "empty input sequence");
        let n = seq[0].rows();
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        let mut inputs: Vec<Tensor2> = seq.to_vec();
        for cell in &self.layers {
            let h0 = Tensor2::zeros(n, cell.hidden_size());
            let c0 = Tensor2::zeros(n, cell.hidden_size());
            let mut h = h0;
            let mut c = c0;
            let mut steps = Vec::with_capacity(inputs.len());
            let mut outputs = Vec::with_capacity(inputs.len());
            for x in &inputs {
                let (nh, nc, cache) = lstm_cell_forward(cell, x, &h, &c);
                h = nh;
                c = nc;
                outputs.push(h.clone());
                steps.push(cache);
            }
            layer_caches.push(steps);
            inputs = outputs;
        }
        let last_h = inputs.last().unwrap().clone();
        let y = last_h.matmul_nt(&self.head);
        y.assert_finite("lstm head");
        (
            y,
            LstmCache {
                steps: layer_caches,
                last_h,
            },
        )
    }

    /// BPTT from the head-output gradient dy [n, 1]. Gradient order:
    /// layer 0 params.., layer 1 params.., head.
    pub fn backward(&self, cache: &LstmCache, dy: &Tensor2) -> Gradients {
        let seq_len = cache.steps[0].len();
        let n = dy.rows();

        let d_head = dy.matmul_tn(&cache.last_h);
        // split head grad out; dh into the top layer's final step
        let mut dh_top: Vec<Tensor2> = vec![Tensor2::zeros(n, self.hidden_size()); seq_len];
        dh_top[seq_len - 1] = dy.matmul_nn(&self.head);

        let mut per_layer: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for cell in &self.layers {
            per_layer.push(LayerGrads::zeros(cell));
        }

        let mut dh_seq = dh_top;
        for (li, cell) in self.layers.iter().enumerate().rev() {
            let steps = &cache.steps[li];
            let hidden = cell.hidden_size();
            let mut dx_seq: Vec<Tensor2> = Vec::with_capacity(seq_len);
            let mut dh_next = Tensor2::zeros(n, hidden);
            let mut dc_next = Tensor2::zeros(n, hidden);
            for t in (0..seq_len).rev() {
                let dh_total = dh_seq[t].add(&dh_next);
                let (dx, dh_prev, dc_prev) =
                    lstm_cell_backward(cell, &steps[t], &dh_total, &dc_next, &mut per_layer[li]);
                dh_next = dh_prev;
                dc_next = dc_prev;
                dx_seq.push(dx);
            }
            dx_seq.reverse();
            dh_seq = dx_seq;
        }

        let mut tensors = Vec::new();
        for lg in per_layer {
            tensors.extend(lg.tensors);
        }
        tensors.push(d_head);
        Gradients { tensors }
    }

    pub fn params(&self) -> Vec<&Tensor2> {
        let mut out = Vec::new();
        for cell in &self.layers {
            out.extend(cell.params());
        }
        out.push(&self.head);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::new();
        for cell in &mut self.layers {
            out.extend(cell.params_mut());
        }
        out.push(&mut self.head);
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

    /// Turn scalar windows into the per-step batch sequence the network eats.
    pub fn window_batch(windows: &[&[f64]]) -> Vec<Tensor2> {
        assert!(!windows.is_empty());
        let t_s = windows[0].len();
        let n = windows.len();
        (0..t_s)
            .map(|t| Tensor2::from_fn(n, 1, |r, _| windows[r][t]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn zero_params(input: usize, hidden: usize) -> LstmCellParams {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut p = LstmCellParams::xavier(input, hidden, &mut rng);
        for t in p.params_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        p
    }

    #[test]
    fn zero_parameter_cell_has_closed_form() {
        // f = i = o = 0.5, g = 0, c' = 0.5 c_prev, h' = 0.5 tanh(0.5 c_prev)
        let p = zero_params(1, 3);
        let x = Tensor2::from_vec(1, 1, vec![0.7]);
        let h_prev = Tensor2::from_vec(1, 3, vec![0.3, -0.1, 0.9]);
        let c_prev = Tensor2::from_vec(1, 3, vec![0.4, -0.8, 0.0]);
        let (h, c, cache) = lstm_cell_forward(&p, &x, &h_prev, &c_prev);
        for k in 0..3 {
            assert_abs_diff_eq!(cache.f.get(0, k), 0.5);
            assert_abs_diff_eq!(cache.i.get(0, k), 0.5);
            assert_abs_diff_eq!(cache.o.get(0, k), 0.5);
            assert_abs_diff_eq!(cache.g.get(0, k), 0.0);
            assert_abs_diff_eq!(c.get(0, k), 0.5 * c_prev.get(0, k));
            assert_abs_diff_eq!(h.get(0, k), 0.5 * (0.5 * c_prev.get(0, k)).tanh());
        }
    }

    #[test]
    fn saturated_forget_gate_keeps_memory() {
        let mut p = zero_params(1, 2);
        for v in p.b_f.data_mut() {
            *v = 50.0;
        }
        let x = Tensor2::from_vec(1, 1, vec![0.2]);
        let h_prev = Tensor2::zeros(1, 2);
        let c_prev = Tensor2::from_vec(1, 2, vec![1.5, -2.0]);
        let (_, c, cache) = lstm_cell_forward(&p, &x, &h_prev, &c_prev);
        for k in 0..2 {
            let expected = c_prev.get(0, k) + cache.i.get(0, k) * cache.g.get(0, k);
            assert_abs_diff_eq!(c.get(0, k), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_cell_matches_scalar_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let p = LstmCellParams::xavier(2, 4, &mut rng);
        let x = Tensor2::from_fn(1, 2, |_, _| rng.gen_range(-1.0..1.0));
        let h_prev = Tensor2::from_fn(1, 4, |_, _| rng.gen_range(-1.0..1.0));
        let c_prev = Tensor2::from_fn(1, 4, |_, _| rng.gen_range(-1.0..1.0));
        let (h, c, _) = lstm_cell_forward(&p, &x, &h_prev, &c_prev);

        // step-by-step scalar re-evaluation
        for k in 0..4 {
            let z = |w: &Tensor2, u: &Tensor2, b: &Tensor2| -> f64 {
                let mut acc = b.get(0, k);
                for j in 0..2 {
                    acc += w.get(k, j) * x.get(0, j);
                }
                for j in 0..4 {
                    acc += u.get(k, j) * h_prev.get(0, j);
                }
                acc
            };
            let f = sigmoid(z(&p.w_f, &p.u_f, &p.b_f));
            let i = sigmoid(z(&p.w_i, &p.u_i, &p.b_i));
            let g = z(&p.w_g, &p.u_g, &p.b_g).tanh();
            let o = sigmoid(z(&p.w_o, &p.u_o, &p.b_o));
            let ck = f * c_prev.get(0, k) + i * g;
            let hk = o * ck.tanh();
            let rel_c = (c.get(0, k) - ck).abs() / ck.abs().max(1e-12);
            let rel_h = (h.get(0, k) - hk).abs() / hk.abs().max(1e-12);
            assert!(rel_c < 1e-12 && rel_h < 1e-12, "cell oracle mismatch");
        }
    }

    #[test]
    fn window_batch_transposes_windows() {
        let w1 = [0.1, 0.2, 0.3];
        let w2 = [0.4, 0.5, 0.6];
        let seq = LstmNetwork::window_batch(&[&w1, &w2]);
        assert_eq!(seq.len(), 3);
        assert_eq!(seq[1].get(0, 0), 0.2);
        assert_eq!(seq[1].get(1, 0), 0.5);
    }
}

//! RMSprop and Adam with accumulators mirroring the parameter shapes.

use serde::{Deserialize, Serialize};

use crate::dense::Gradients;
use crate::tensor::Tensor2;

/// RMSprop: acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/sqrt(acc + eps).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    acc: Vec<Tensor2>,
}

impl RmsProp {
    pub fn new(lr: f64) -> Self {
        RmsProp {
            lr,
            rho: 0.9,
            eps: 1e-8,
            acc: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Tensor2], grads: &Gradients) {
        assert_eq!(params.len(), grads.tensors.len(), "optimizer arity mismatch");
        if self.acc.is_empty() {
            self.acc = params
                .iter()
                .map(|p| Tensor2::zeros(p.rows(), p.cols()))
                .collect();
        }
        for ((p, g), a) in params.iter_mut().zip(&grads.tensors).zip(&mut self.acc) {
            assert_eq!(p.shape(), g.shape(), "gradient shape mismatch");
            for ((pv, gv), av) in p.data_mut().iter_mut().zip(g.data()).zip(a.data_mut()) {
                *av = self.rho * *av + (1.0 - self.rho) * gv * gv;
                *pv -= self.lr * gv / (*av + self.eps).sqrt();
            }
        }
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor2>,
    v: Vec<Tensor2>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Tensor2], grads: &Gradients) {
        assert_eq!(params.len(), grads.tensors.len(), "optimizer arity mismatch");
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| Tensor2::zeros(p.rows(), p.cols()))
                .collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(&grads.tensors).enumerate() {
            assert_eq!(p.shape(), g.shape(), "gradient shape mismatch");
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((pv, gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> Tensor2 {
        Tensor2::from_vec(1, 1, vec![v])
    }

    fn scalar_grad(g: f64) -> Gradients {
        Gradients {
            tensors: vec![scalar_param(g)],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = scalar_param(1.5);
        let mut opt = RmsProp::new(0.001);
        opt.step(&mut [&mut p], &scalar_grad(0.0));
        assert_eq!(p.get(0, 0), 1.5);
        let mut p2 = scalar_param(-0.25);
        let mut adam = Adam::new(0.001);
        adam.step(&mut [&mut p2], &scalar_grad(0.0));
        assert_eq!(p2.get(0, 0), -0.25);
    }

    #[test]
    fn rmsprop_first_step_matches_hand_recurrence() {
        // acc = 0.9*0 + 0.1*1 = 0.1; delta = -0.001/sqrt(0.1 + 1e-8)
        let mut p = scalar_param(0.0);
        let mut opt = RmsProp::new(0.001);
        opt.step(&mut [&mut p], &scalar_grad(1.0));
        let expected = -0.001 / (0.1f64 + 1e-8).sqrt();
        assert!((p.get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_moves_monotonically_against_sign() {
        let mut p = scalar_param(0.0);
        let mut opt = RmsProp::new(0.01);
        let mut last = 0.0;
        for _ in 0..20 {
            opt.step(&mut [&mut p], &scalar_grad(2.5));
            assert!(p.get(0, 0) < last);
            last = p.get(0, 0);
        }
        let mut q = scalar_param(0.0);
        let mut adam = Adam::new(0.01);
        let mut last = 0.0;
        for _ in 0..20 {
            adam.step(&mut [&mut q], &scalar_grad(-1.0));
            assert!(q.get(0, 0) > last);
            last = q.get(0, 0);
        }
    }
}

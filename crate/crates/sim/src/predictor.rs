//! Per-user LSTM predictors of communication probability: trained on sliding
//! windows of observed probabilities, then applied one slot at a time with a
//! rolling window of true past observations.

use neural::{Checkpoint, Gradients, LstmNetwork, RmsProp, Tensor2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{SimError, SimResult};
use crate::rng::{substream_rng, SimRng, Stream};
use crate::ucs::UcsDataset;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PredictorConfig {
    /// Units per LSTM layer.
    pub hidden: usize,
    /// Stacked LSTM layers.
    pub layers: usize,
    /// Input window length.
    pub t_s: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            hidden: 64,
            layers: 2,
            t_s: crate::ucs::DEFAULT_WINDOW,
            epochs: 60,
            lr: 0.005,
            batch: 32,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> SimResult<()> {
        if self.hidden == 0 || self.layers == 0 || self.t_s == 0 {
            return Err(SimError::config("lstm: hidden, layers, t_s must be >= 1"));
        }
        if self.epochs == 0 || self.batch == 0 {
            return Err(SimError::config("lstm: epochs and batch must be >= 1"));
        }
        if !(self.lr > 0.0) {
            return Err(SimError::config("lstm.lr: must be > 0"));
        }
        Ok(())
    }
}

/// How a probability estimate becomes a binary state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    /// Active iff p >= 0.5; the boundary counts as active.
    Threshold,
    /// Active with probability p.
    Bernoulli,
}

impl Default for StateMode {
    fn default() -> Self {
        StateMode::Threshold
    }
}

/// One small LSTM per user.
#[derive(Clone, Debug)]
pub struct UcsPredictor {
    pub models: Vec<LstmNetwork>,
    pub t_s: usize,
    pub trained: bool,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    /// Mean squared training loss per epoch, per user.
    pub loss_history: Vec<Vec<f64>>,
}

fn batch_loss_grad(y: &Tensor2, target: &Tensor2) -> (f64, Tensor2) {
    let n = y.rows() as f64;
    let loss = y
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    (loss, y.zip_map(target, |a, b| 2.0 * (a - b) / n))
}

fn train_single(
    model: &mut LstmNetwork,
    data: &UcsDataset,
    cfg: &PredictorConfig,
    rng: &mut SimRng,
) -> Vec<f64> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut opt = RmsProp::new(cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        // deterministic Fisher-Yates reshuffle each epoch
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let windows: Vec<&[f64]> = chunk.iter().map(|&i| data.windows[i].as_slice()).collect();
            let seq = LstmNetwork::window_batch(&windows);
            let target = Tensor2::from_fn(chunk.len(), 1, |r, _| data.labels[chunk[r]]);
            let (y, cache) = model.forward_cached(&seq);
            let (loss, dy) = batch_loss_grad(&y, &target);
            let grads: Gradients = model.backward(&cache, &dy);
            let mut params = model.params_mut();
            opt.step(&mut params, &grads);
            epoch_loss += loss;
            batches += 1.0;
        }
        history.push(epoch_loss / batches);
    }
    history
}

impl UcsPredictor {
    pub fn new(k_users: usize, cfg: &PredictorConfig, seed: u64) -> SimResult<Self> {
        cfg.validate()?;
        let models = (0..k_users)
            .map(|u| {
                let mut rng = substream_rng(seed, Stream::PredictorInit, u as u64);
                LstmNetwork::new(1, cfg.hidden, cfg.layers, &mut rng)
            })
            .collect();
        Ok(UcsPredictor {
            models,
            t_s: cfg.t_s,
            trained: false,
        })
    }

    pub fn users(&self) -> usize {
        self.models.len()
    }

    /// Train every user's model on its own dataset. Users train in parallel;
    /// each owns an independent RNG stream, so results do not depend on the
    /// schedule.
    pub fn train(
        &mut self,
        datasets: &[UcsDataset],
        cfg: &PredictorConfig,
        seed: u64,
    ) -> SimResult<TrainReport> {
        if datasets.len() != self.models.len() {
            return Err(SimError::config(format!(
                "predictor: {} datasets for {} users",
                datasets.len(),
                self.models.len()
            )));
        }
        if datasets.iter().any(|d| d.is_empty()) {
            return Err(SimError::config("predictor: empty training dataset"));
        }
        if datasets.iter().any(|d| d.t_s != self.t_s) {
            return Err(SimError::config("predictor: dataset window length mismatch"));
        }
        let loss_history: Vec<Vec<f64>> = self
            .models
            .par_iter_mut()
            .zip(datasets.par_iter())
            .enumerate()
            .map(|(u, (model, data))| {
                let mut rng = substream_rng(seed, Stream::PredictorTrain, u as u64);
                train_single(model, data, cfg, &mut rng)
            })
            .collect();
        self.trained = true;
        Ok(TrainReport { loss_history })
    }

    /// Probability estimate for one user from its recent-window, clamped to
    /// [0, 1].
    pub fn predict(&self, user: usize, window: &[f64]) -> SimResult<f64> {
        if !self.trained {
            return Err(SimError::invariant("predictor used before training"));
        }
        if window.len() != self.t_s {
            return Err(SimError::invariant(format!(
                "prediction window length {} != {}",
                window.len(),
                self.t_s
            )));
        }
        let seq = LstmNetwork::window_batch(&[window]);
        let y = self.models[user].forward(&seq);
        Ok(y.get(0, 0).clamp(0.0, 1.0))
    }

    /// Binary state from the probability estimate.
    pub fn predict_state(
        &self,
        user: usize,
        window: &[f64],
        mode: StateMode,
        rng: &mut SimRng,
    ) -> SimResult<bool> {
        let p = self.predict(user, window)?;
        Ok(match mode {
            StateMode::Threshold => p >= 0.5,
            StateMode::Bernoulli => rng.gen::<f64>() < p,
        })
    }

    /// Mean squared prediction error over a dataset.
    pub fn test_mse(&self, user: usize, data: &UcsDataset) -> SimResult<f64> {
        let mut acc = 0.0;
        for (w, &label) in data.windows.iter().zip(&data.labels) {
            let p = self.predict(user, w)?;
            acc += (p - label) * (p - label);
        }
        Ok(acc / data.len() as f64)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new(
            "ucs-predictor",
            json!({
                "users": self.users(),
                "t_s": self.t_s,
                "hidden": self.models.first().map(|m| m.hidden_size()).unwrap_or(0),
                "layers": self.models.first().map(|m| m.layers.len()).unwrap_or(0),
            }),
        );
        for (u, model) in self.models.iter().enumerate() {
            ckpt.push_params(&format!("user{u}"), &model.params());
        }
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> SimResult<Self> {
        if ckpt.kind != "ucs-predictor" {
            return Err(SimError::config(format!(
                "checkpoint kind {} is not ucs-predictor",
                ckpt.kind
            )));
        }
        let users = ckpt.meta["users"].as_u64().unwrap_or(0) as usize;
        let t_s = ckpt.meta["t_s"].as_u64().unwrap_or(0) as usize;
        let hidden = ckpt.meta["hidden"].as_u64().unwrap_or(0) as usize;
        let layers = ckpt.meta["layers"].as_u64().unwrap_or(0) as usize;
        if users == 0 || t_s == 0 || hidden == 0 || layers == 0 {
            return Err(SimError::config("predictor checkpoint header incomplete"));
        }
        let mut models = Vec::with_capacity(users);
        for u in 0..users {
            let mut rng = substream_rng(0, Stream::PredictorInit, u as u64);
            let mut model = LstmNetwork::new(1, hidden, layers, &mut rng);
            ckpt.load_params(&format!("user{u}"), &mut model.params_mut())?;
            models.push(model);
        }
        Ok(UcsPredictor {
            models,
            t_s,
            trained: true,
        })
    }
}

/// Baseline that predicts the next value as the last observed value.
pub fn persistence_mse(data: &UcsDataset) -> f64 {
    let mut acc = 0.0;
    for (w, &label) in data.windows.iter().zip(&data.labels) {
        let p = *w.last().unwrap();
        acc += (p - label) * (p - label);
    }
    acc / data.len() as f64
}

//! Minimal reverse-mode differentiable numeric core: dense stacks, LSTM
//! layers, losses, and optimizers. f64 everywhere; CPU only; built for
//! reproducible small-network training rather than throughput.

pub mod checkpoint;
pub mod dense;
pub mod gradcheck;
pub mod lstm;
pub mod optim;
pub mod tensor;

pub use checkpoint::{Checkpoint, CheckpointError, TensorRecord};
pub use dense::{sigmoid, soft_update_mlp, soft_update_params, Activation, DenseLayer, Gradients, Mlp, MlpCache};
pub use lstm::{lstm_cell_forward, LstmCache, LstmCellParams, LstmNetwork, LstmStepCache};
pub use optim::{Adam, RmsProp};
pub use tensor::Tensor2;

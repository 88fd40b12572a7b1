//! Deterministic, seedable simulator of an active-RIS-aided energy-harvesting
//! NOMA downlink, with an LSTM predictor of user communication state and a
//! DDPG agent controlling the RIS amplification and phase-shift matrices.

pub mod channel;
pub mod energy;
pub mod error;
pub mod noma;
pub mod predictor;
pub mod ris;
pub mod rng;
pub mod ucs;

pub use error::{SimError, SimResult};

//! Seeded randomness. Every subsystem draws from its own ChaCha stream so a
//! (seed, config) pair fixes the whole simulation regardless of call order
//! elsewhere.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Stream ids per subsystem. Streams of one seed never collide.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    Geometry = 1,
    Channel = 2,
    Ucs = 3,
    UcsDataset = 4,
    PredictorInit = 5,
    PredictorTrain = 6,
    AgentInit = 7,
    AgentNoise = 8,
    Replay = 9,
    Policy = 10,
    Solar = 11,
    EnvReset = 12,
}

pub type SimRng = ChaCha12Rng;

/// Independent generator for (seed, stream).
pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Indexed substream, e.g. one per user or per worker. Base streams live
/// below 256 so shifted substreams never collide with them.
pub fn substream_rng(seed: u64, stream: Stream, index: u64) -> SimRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((stream as u64) | ((index + 1) << 8));
    rng
}

/// Standard normal pair via Box-Muller on uniform draws; avoids ln(0) by
/// mapping the open interval onto (0, 1].
pub fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

pub fn normal(rng: &mut impl Rng, mean: f64, std: f64) -> f64 {
    mean + std * normal_pair(rng).0
}

/// Circularly-symmetric complex normal with E[|z|^2] = 1.
pub fn standard_complex(rng: &mut impl Rng) -> Complex64 {
    let (re, im) = normal_pair(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

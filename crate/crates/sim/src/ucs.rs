//! Dynamic user communication state: per-user communication probabilities
//! evolving by independent clamped random walks, Bernoulli activity sampling,
//! and windowed dataset construction for the predictor.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::rng::SimRng;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_INITIAL_PROB: f64 = 0.6;
pub const DEFAULT_STEP_AMPLITUDE: f64 = 0.1;

/// Per-user communication probabilities and the sampled on/off indicators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcsState {
    pub prob: Vec<f64>,
    pub active: Vec<bool>,
}

impl UcsState {
    /// All users start at the same probability; activity sampled from it.
    pub fn init(k: usize, initial_prob: f64, rng: &mut SimRng) -> Self {
        let prob = vec![initial_prob; k];
        let active = prob.iter().map(|&p| rng.gen::<f64>() < p).collect();
        UcsState { prob, active }
    }

    pub fn users(&self) -> usize {
        self.prob.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// One slot of the walk: each probability moves by an independent uniform
/// step, clamps to [0, 1], and activity is resampled fresh from it.
pub fn walk_step(state: &UcsState, step_amplitude: f64, rng: &mut SimRng) -> UcsState {
    let prob: Vec<f64> = state
        .prob
        .iter()
        .map(|&p| {
            let u = rng.gen_range(-step_amplitude..=step_amplitude);
            (p + u).clamp(0.0, 1.0)
        })
        .collect();
    let active = prob.iter().map(|&p| rng.gen::<f64>() < p).collect();
    UcsState { prob, active }
}

/// Independent per-user probability series of the given length; element 0 is
/// the initial probability.
pub fn generate_series(
    k_users: usize,
    length: usize,
    initial: f64,
    step_amplitude: f64,
    rng: &mut SimRng,
) -> Vec<Vec<f64>> {
    let mut series = vec![Vec::with_capacity(length); k_users];
    let mut state = UcsState {
        prob: vec![initial; k_users],
        active: vec![false; k_users],
    };
    for t in 0..length {
        if t > 0 {
            state = walk_step(&state, step_amplitude, rng);
        }
        for (s, &p) in series.iter_mut().zip(&state.prob) {
            s.push(p);
        }
    }
    series
}

/// Sliding windows over one user's series plus the matching next-slot labels.
#[derive(Clone, Debug, PartialEq)]
pub struct UcsDataset {
    pub windows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub t_s: usize,
}

impl UcsDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Chronological train/test split of the sliding-window dataset. Window i
/// covers slots [i, i + t_s) and is labelled with slot i + t_s; the first
/// `split` fraction of windows trains, the rest tests, with no shuffling
/// across the boundary.
pub fn make_dataset(
    series: &[f64],
    t_s: usize,
    split: f64,
) -> SimResult<(UcsDataset, UcsDataset)> {
    if t_s == 0 {
        return Err(SimError::config("ucs.t_s: window length must be >= 1"));
    }
    if series.len() <= t_s {
        return Err(SimError::config(format!(
            "ucs series of length {} is too short for window length {t_s}",
            series.len()
        )));
    }
    if !(0.0..=1.0).contains(&split) {
        return Err(SimError::config(format!(
            "ucs.train_split: must be in [0, 1], got {split}"
        )));
    }
    let n = series.len() - t_s;
    let mut windows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        windows.push(series[i..i + t_s].to_vec());
        labels.push(series[i + t_s]);
    }
    let cut = ((n as f64) * split).floor() as usize;
    let train = UcsDataset {
        windows: windows[..cut].to_vec(),
        labels: labels[..cut].to_vec(),
        t_s,
    };
    let test = UcsDataset {
        windows: windows[cut..].to_vec(),
        labels: labels[cut..].to_vec(),
        t_s,
    };
    Ok((train, test))
}

/// Write per-user series as CSV, one column per user.
pub fn series_to_csv(series: &[Vec<f64>], mut out: impl Write) -> SimResult<()> {
    let header: Vec<String> = (0..series.len()).map(|k| format!("user_{k}")).collect();
    writeln!(out, "slot,{}", header.join(","))?;
    let length = series.first().map(|s| s.len()).unwrap_or(0);
    for t in 0..length {
        let row: Vec<String> = series.iter().map(|s| format!("{}", s[t])).collect();
        writeln!(out, "{t},{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn walk_clamps_at_boundaries() {
        let mut rng = stream_rng(1, Stream::Ucs);
        let mut state = UcsState {
            prob: vec![0.0, 1.0],
            active: vec![false, true],
        };
        for _ in 0..500 {
            state = walk_step(&state, 0.1, &mut rng);
            assert!(state.prob.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn probability_one_always_activates() {
        let mut rng = stream_rng(2, Stream::Ucs);
        let state = UcsState {
            prob: vec![1.0],
            active: vec![false],
        };
        for _ in 0..200 {
            // zero step keeps prob at 1; activity must follow
            let next = walk_step(&state, 0.0, &mut rng);
            assert!(next.active[0]);
        }
    }

    #[test]
    fn activity_frequency_tracks_probability_average() {
        let mut rng = stream_rng(3, Stream::Ucs);
        let mut state = UcsState {
            prob: vec![0.6],
            active: vec![false],
        };
        let n = 100_000;
        let mut active_count = 0u64;
        let mut prob_sum = 0.0;
        for _ in 0..n {
            state = walk_step(&state, 0.1, &mut rng);
            prob_sum += state.prob[0];
            if state.active[0] {
                active_count += 1;
            }
        }
        let mean_active = active_count as f64 / n as f64;
        let mean_prob = prob_sum / n as f64;
        assert!(
            (mean_active - mean_prob).abs() < 0.01,
            "activity {mean_active} vs probability {mean_prob}"
        );
    }

    #[test]
    fn series_starts_at_initial_and_is_reproducible() {
        let a = generate_series(4, 1000, 0.6, 0.1, &mut stream_rng(5, Stream::Ucs));
        let b = generate_series(4, 1000, 0.6, 0.1, &mut stream_rng(5, Stream::Ucs));
        assert_eq!(a, b);
        for s in &a {
            assert_eq!(s.len(), 1000);
            assert_eq!(s[0], 0.6);
        }
    }

    #[test]
    fn users_walk_independently() {
        let series = generate_series(2, 20_000, 0.5, 0.1, &mut stream_rng(6, Stream::Ucs));
        // empirical correlation of the two walks' increments
        let inc = |s: &Vec<f64>| -> Vec<f64> { s.windows(2).map(|w| w[1] - w[0]).collect() };
        let (a, b) = (inc(&series[0]), inc(&series[1]));
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(&b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma).powi(2);
            vb += (y - mb).powi(2);
        }
        let corr = cov / (va.sqrt() * vb.sqrt());
        assert!(corr.abs() < 0.03, "cross-user correlation {corr}");
    }

    #[test]
    fn window_count_is_length_minus_window() {
        let series: Vec<f64> = (0..1000).map(|i| (i as f64 / 1000.0) % 1.0).collect();
        let (train, test) = make_dataset(&series, 5, 0.7).unwrap();
        assert_eq!(train.len() + test.len(), 995);
        // floor split
        assert_eq!(train.len(), 696);
        assert_eq!(test.len(), 299);
    }

    #[test]
    fn split_of_955_pairs_is_668_train_287_test() {
        // a 960-slot series yields exactly 955 window/label pairs
        let series: Vec<f64> = (0..960).map(|i| (i as f64).sin().abs()).collect();
        let (train, test) = make_dataset(&series, 5, 0.7).unwrap();
        assert_eq!(train.len() + test.len(), 955);
        assert_eq!(train.len(), 668);
        assert_eq!(test.len(), 287);
    }

    #[test]
    fn window_indexing_contract() {
        let series: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let (train, test) = make_dataset(&series, 5, 0.7).unwrap();
        let all: Vec<(&Vec<f64>, &f64)> = train
            .windows
            .iter()
            .zip(&train.labels)
            .chain(test.windows.iter().zip(&test.labels))
            .collect();
        for (i, (w, &label)) in all.iter().enumerate() {
            assert_eq!(w.as_slice(), &series[i..i + 5]);
            assert_eq!(label, series[i + 5]);
        }
    }

    #[test]
    fn degenerate_split_leaves_empty_test() {
        let series: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let (train, test) = make_dataset(&series, 5, 1.0).unwrap();
        assert_eq!(train.len(), 45);
        assert!(test.is_empty());
    }

    #[test]
    fn too_short_series_is_config_error() {
        let series = vec![0.5; 5];
        assert!(make_dataset(&series, 5, 0.7).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let series = generate_series(3, 10, 0.6, 0.1, &mut stream_rng(8, Stream::Ucs));
        let mut buf = Vec::new();
        series_to_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[0], "slot,user_0,user_1,user_2");
    }
}

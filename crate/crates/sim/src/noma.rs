//! NOMA downlink rates: signal strengths, successive interference
//! cancellation with imperfect cancellation, QoS success counting, and the
//! orthogonal (equal time-share) baseline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NomaParams {
    /// Per-user transmit power (W).
    pub p_tx: Vec<f64>,
    /// SIC quality factor in (0, 1]; 1 = perfect cancellation.
    pub xi: f64,
    /// Receiver noise power (W).
    pub sigma_sq: f64,
    /// Rate threshold (bits/s/Hz).
    pub r0: f64,
    /// Reporting only; rates stay in bits/s/Hz.
    pub bandwidth_hz: f64,
}

impl NomaParams {
    pub fn validate(&self) -> SimResult<()> {
        if self.p_tx.is_empty() {
            return Err(SimError::config("noma.p_tx: need at least one user"));
        }
        for (k, &p) in self.p_tx.iter().enumerate() {
            if !(p > 0.0) {
                return Err(SimError::config(format!("noma.p_tx[{k}]: must be > 0, got {p}")));
            }
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(SimError::config(format!(
                "noma.xi: must be in (0, 1], got {}",
                self.xi
            )));
        }
        if !(self.sigma_sq > 0.0) {
            return Err(SimError::config("noma.sigma_sq: must be > 0"));
        }
        if !(self.r0 > 0.0) {
            return Err(SimError::config("noma.r0: must be > 0"));
        }
        Ok(())
    }
}

/// Per-slot decode outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRates {
    /// Achievable rate per user (bits/s/Hz); 0 for inactive users.
    pub rates: Vec<f64>,
    /// Whether user k met the threshold.
    pub decoded: Vec<bool>,
    /// Active users in decode order (strongest first).
    pub order: Vec<usize>,
    /// Count of active users meeting the threshold.
    pub successes: usize,
    /// Count of active users.
    pub active: usize,
}

impl SlotRates {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Received signal strength g_k = U_k |h_k|^2 p_k.
pub fn signal_strengths(active: &[bool], h: &[Complex64], params: &NomaParams) -> Vec<f64> {
    active
        .iter()
        .zip(h)
        .zip(&params.p_tx)
        .map(|((&u, hk), &p)| if u { hk.norm_sqr() * p } else { 0.0 })
        .collect()
}

/// Active user indices sorted by descending strength; ties keep index order.
fn decode_order(active: &[bool], strength: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..active.len()).filter(|&k| active[k]).collect();
    order.sort_by(|&a, &b| strength[b].partial_cmp(&strength[a]).unwrap());
    order
}

/// Sequential SIC decode. Users are processed strongest-first; stronger users
/// already decoded are cancelled down to a (1 - xi) residue, everyone else
/// interferes at full power. Decoding continues past failures, which remain
/// full interferers.
pub fn sic_decode(
    strengths: &[f64],
    h: &[Complex64],
    active: &[bool],
    ris_noise: &[f64],
    params: &NomaParams,
) -> SlotRates {
    let k_users = active.len();
    debug_assert_eq!(strengths.len(), k_users);
    debug_assert_eq!(h.len(), k_users);
    debug_assert_eq!(ris_noise.len(), k_users);

    // strength regardless of activity; equals g_k for active users
    let w: Vec<f64> = h
        .iter()
        .zip(&params.p_tx)
        .map(|(hk, &p)| hk.norm_sqr() * p)
        .collect();

    let order = decode_order(active, &w);
    let mut rates = vec![0.0; k_users];
    let mut decoded = vec![false; k_users];
    for &k in &order {
        let mut interference = 0.0;
        for j in 0..k_users {
            if j == k || !active[j] {
                continue;
            }
            let chi = w[j] > w[k];
            let cancel = if chi && decoded[j] { params.xi } else { 0.0 };
            interference += (1.0 - cancel) * w[j];
        }
        let denom = interference + ris_noise[k] + params.sigma_sq;
        let rate = (1.0 + strengths[k] / denom).log2();
        rates[k] = rate;
        decoded[k] = rate >= params.r0;
    }

    let successes = decoded.iter().filter(|&&d| d).count();
    let active_count = order.len();
    SlotRates {
        rates,
        decoded,
        order,
        successes,
        active: active_count,
    }
}

/// Fraction of active users meeting the threshold; a slot with nobody active
/// counts as vacuously successful and is excluded from episode averages.
pub fn success_ratio(slot: &SlotRates) -> f64 {
    if slot.active == 0 {
        1.0
    } else {
        slot.successes as f64 / slot.active as f64
    }
}

/// Orthogonal baseline: active users get equal interference-free time shares
/// against the same threshold.
pub fn oma_rates(
    strengths: &[f64],
    active: &[bool],
    ris_noise: &[f64],
    params: &NomaParams,
) -> SlotRates {
    let k_users = active.len();
    let order = decode_order(active, strengths);
    let n_active = order.len();
    let mut rates = vec![0.0; k_users];
    let mut decoded = vec![false; k_users];
    for &k in &order {
        let share = 1.0 / n_active as f64;
        let snr = strengths[k] / (ris_noise[k] + params.sigma_sq);
        let rate = share * (1.0 + snr).log2();
        rates[k] = rate;
        decoded[k] = rate >= params.r0;
    }
    let successes = decoded.iter().filter(|&&d| d).count();
    SlotRates {
        rates,
        decoded,
        order,
        successes,
        active: n_active,
    }
}

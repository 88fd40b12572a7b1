//! Hybrid harvesting (nonlinear RF rectifier + empirical solar) and battery
//! evolution for the RIS power supply.
//!
//! Slot duration is fixed at 1 s so per-slot powers (W) and energies (J)
//! coincide numerically; all battery bookkeeping is in joules.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{SimError, SimResult};
use crate::ris::{RisControl, RisNoiseParams};

/// Logistic rectifier constants.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RfHarvestParams {
    /// Saturation power E_M (W).
    pub e_max: f64,
    /// Circuit steepness (per W).
    pub a: f64,
    /// Circuit turn-on midpoint (W).
    pub b: f64,
}

impl RfHarvestParams {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.e_max > 0.0) {
            return Err(SimError::config("energy.rf.e_max: must be > 0"));
        }
        if !(self.a > 0.0) {
            return Err(SimError::config("energy.rf.a: must be > 0"));
        }
        if !self.b.is_finite() {
            return Err(SimError::config("energy.rf.b: must be finite"));
        }
        Ok(())
    }
}

/// Seasonal quadratic solar profile with cloud-cover attenuation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolarParams {
    /// Panel area (m^2).
    pub s_sol: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Cloud-cover fraction in [0, 1].
    pub sigma_sol: f64,
}

impl SolarParams {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.s_sol >= 0.0) {
            return Err(SimError::config("energy.solar.s_sol: must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.sigma_sol) {
            return Err(SimError::config(format!(
                "energy.solar.sigma_sol: must be in [0, 1], got {}",
                self.sigma_sol
            )));
        }
        Ok(())
    }
}

/// Battery state plus the last slot's ledger entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    /// Stored energy E(t) (J).
    pub battery: f64,
    /// Battery capacity E_max (J).
    pub e_max_battery: f64,
    /// Raw harvested energy of the last step, before efficiency (J).
    pub last_harvest: f64,
    /// Energy consumed by the RIS in the last step (J).
    pub last_consume: f64,
    /// Energy lost to the capacity cap in the last step (J).
    pub last_overflow: f64,
    /// Harvest efficiency applied to incoming energy.
    pub eta: f64,
}

impl EnergyState {
    pub fn new(initial: f64, capacity: f64, eta: f64) -> SimResult<Self> {
        if !(capacity > 0.0) {
            return Err(SimError::config("energy.e_max_battery: must be > 0"));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(SimError::config(format!(
                "energy.eta: must be in [0, 1], got {eta}"
            )));
        }
        if !(0.0..=capacity).contains(&initial) {
            return Err(SimError::config(format!(
                "energy.initial_battery: must be in [0, {capacity}], got {initial}"
            )));
        }
        Ok(EnergyState {
            battery: initial,
            e_max_battery: capacity,
            last_harvest: 0.0,
            last_consume: 0.0,
            last_overflow: 0.0,
            eta,
        })
    }
}

/// Nonlinear RF rectifier output. Exactly zero at zero input; saturates at
/// `e_max` for large input.
///
/// The two logistic evaluations share the identical expression at p_rf = 0
/// so the subtraction cancels bitwise.
pub fn harvest_rf(p_rf: f64, params: &RfHarvestParams) -> f64 {
    let denom_zero = 1.0 + (params.a * params.b).exp();
    let denom_p = 1.0 + (-params.a * (p_rf - params.b)).exp();
    let psi = params.e_max / denom_p;
    let psi_zero = params.e_max / denom_zero;
    let omega = 1.0 / denom_zero;
    (psi - psi_zero) / (1.0 - omega)
}

/// Empirical solar profile: area * (a1 (t + a2)^2 + a3) * (1 - cloud cover),
/// floored at zero for night hours.
pub fn harvest_solar(t_hours: f64, params: &SolarParams) -> f64 {
    let level = params.a1 * (t_hours + params.a2).powi(2) + params.a3;
    (params.s_sol * level * (1.0 - params.sigma_sol)).max(0.0)
}

/// Energy consumed by the active RIS: amplified forwarding of the incident
/// channel plus amplified dynamic noise.
pub fn ris_consumption(ch: &ChannelRealization, ctrl: &RisControl, noise: &RisNoiseParams) -> f64 {
    let mut signal = 0.0;
    let mut amp_sq = 0.0;
    for (a, h) in ctrl.amp.iter().zip(&ch.h_bs_ris) {
        signal += a * a * h.norm_sqr();
        amp_sq += a * a;
    }
    signal + amp_sq * noise.sigma_z_sq
}

/// Consumption at unit amplification, the affordability floor used by the
/// action-adjustment rule.
pub fn ris_consumption_unit_amp(ch: &ChannelRealization, noise: &RisNoiseParams) -> f64 {
    let mut signal = 0.0;
    for h in &ch.h_bs_ris {
        signal += h.norm_sqr();
    }
    signal + ch.elements() as f64 * noise.sigma_z_sq
}

/// One battery step: E' = min(E + eta*e_h - e_c, E_max). The consumption must
/// already be affordable; that is the action-adjustment contract.
pub fn battery_step(state: &EnergyState, e_h: f64, e_c: f64) -> SimResult<EnergyState> {
    if e_c > state.battery {
        return Err(SimError::invariant(format!(
            "battery_step: consumption {e_c} J exceeds stored {} J; action adjustment is broken",
            state.battery
        )));
    }
    if !(e_h >= 0.0) || !(e_c >= 0.0) {
        return Err(SimError::invariant(format!(
            "battery_step: negative energy (e_h={e_h}, e_c={e_c})"
        )));
    }
    let unclipped = state.battery + state.eta * e_h - e_c;
    let battery = unclipped.min(state.e_max_battery);
    Ok(EnergyState {
        battery,
        e_max_battery: state.e_max_battery,
        last_harvest: e_h,
        last_consume: e_c,
        last_overflow: unclipped - battery,
        eta: state.eta,
    })
}

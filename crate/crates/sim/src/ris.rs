//! Active-RIS physical layer: amplification and phase control, the cascaded
//! equivalent channel, and the dynamic noise the amplifiers inject.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{SimError, SimResult};

/// Per-slot control: amplification factor and phase shift per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisControl {
    /// Amplification factors in [0, L].
    pub amp: Vec<f64>,
    /// Phase shifts in [0, 2*pi).
    pub phase: Vec<f64>,
}

impl RisControl {
    pub fn off(m: usize) -> Self {
        RisControl {
            amp: vec![0.0; m],
            phase: vec![0.0; m],
        }
    }

    pub fn passive(m: usize, phase: Vec<f64>) -> Self {
        RisControl {
            amp: vec![1.0; m],
            phase,
        }
    }

    pub fn elements(&self) -> usize {
        self.amp.len()
    }

    pub fn validate(&self, max_amp: f64) -> SimResult<()> {
        if self.amp.len() != self.phase.len() {
            return Err(SimError::invariant("ris control amp/phase length mismatch"));
        }
        for (i, &a) in self.amp.iter().enumerate() {
            if !(0.0..=max_amp).contains(&a) {
                return Err(SimError::invariant(format!(
                    "amp[{i}] = {a} outside [0, {max_amp}]"
                )));
            }
        }
        for (i, &p) in self.phase.iter().enumerate() {
            if !(0.0..std::f64::consts::TAU).contains(&p) {
                return Err(SimError::invariant(format!(
                    "phase[{i}] = {p} outside [0, 2pi)"
                )));
            }
        }
        Ok(())
    }
}

/// Noise injected by the active elements. The static term is kept
/// configurable but defaults to zero.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RisNoiseParams {
    /// Dynamic-noise power per element (W), scaled by amplification.
    pub sigma_z_sq: f64,
    /// Static-noise power (W).
    #[serde(default)]
    pub sigma_s_sq: f64,
}

impl RisNoiseParams {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.sigma_z_sq >= 0.0) {
            return Err(SimError::config("ris.sigma_z_sq: must be >= 0"));
        }
        if !(self.sigma_s_sq >= 0.0) {
            return Err(SimError::config("ris.sigma_s_sq: must be >= 0"));
        }
        Ok(())
    }
}

/// Equivalent channel from the BS to user k: the direct link plus the
/// amplified, phase-shifted cascade through every element.
pub fn equivalent_channel(
    k: usize,
    ch: &ChannelRealization,
    ctrl: &RisControl,
) -> SimResult<Complex64> {
    if ctrl.elements() != ch.elements() {
        return Err(SimError::invariant(format!(
            "ris control sized {} for {} elements",
            ctrl.elements(),
            ch.elements()
        )));
    }
    if k >= ch.users() {
        return Err(SimError::invariant(format!(
            "user index {k} out of range {}",
            ch.users()
        )));
    }
    let row = &ch.h_ris_user[k];
    let mut cascade = Complex64::new(0.0, 0.0);
    for m in 0..ctrl.elements() {
        cascade += row[m] * ctrl.amp[m] * Complex64::from_polar(1.0, ctrl.phase[m]) * ch.h_bs_ris[m];
    }
    Ok(ch.h_direct[k] + cascade)
}

/// Equivalent channels for every user at once.
pub fn equivalent_channels(
    ch: &ChannelRealization,
    ctrl: &RisControl,
) -> SimResult<Vec<Complex64>> {
    (0..ch.users()).map(|k| equivalent_channel(k, ch, ctrl)).collect()
}

/// Dynamic-noise power seen by user k: sum_m |H_{S,k}[m]|^2 amp[m]^2 times
/// the per-element noise power. Unit-modulus phases drop out.
pub fn ris_noise_power(
    k: usize,
    ch: &ChannelRealization,
    ctrl: &RisControl,
    noise: &RisNoiseParams,
) -> f64 {
    let row = &ch.h_ris_user[k];
    let mut acc = 0.0;
    for m in 0..ctrl.elements() {
        acc += row[m].norm_sqr() * ctrl.amp[m] * ctrl.amp[m];
    }
    acc * noise.sigma_z_sq + noise.sigma_s_sq
}

pub fn ris_noise_powers(
    ch: &ChannelRealization,
    ctrl: &RisControl,
    noise: &RisNoiseParams,
) -> Vec<f64> {
    (0..ch.users()).map(|k| ris_noise_power(k, ch, ctrl, noise)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{correlation_matrix, ChannelModel, PathLossParams, Position3D};
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn draw(m: usize, seed: u64) -> ChannelRealization {
        let bs = Position3D::new(0.0, 0.0, 0.0);
        let ris = Position3D::new(50.0, 40.0, 20.0);
        let users = vec![Position3D::new(200.0, 0.0, 0.0), Position3D::new(250.0, 60.0, 0.0)];
        let pl = PathLossParams {
            c0_db: -30.0,
            alpha_direct: 3.5,
            alpha_bs_ris: 2.2,
            alpha_ris_user: 2.2,
        };
        let corr = correlation_matrix(m, 0.25).unwrap();
        ChannelModel::new(bs, ris, &users, &pl, &corr, 1.0)
            .unwrap()
            .sample(&mut stream_rng(seed, Stream::Channel))
    }

    #[test]
    fn zero_amplification_reduces_to_direct_link() {
        let ch = draw(4, 1);
        let ctrl = RisControl::off(4);
        for k in 0..2 {
            assert_eq!(equivalent_channel(k, &ch, &ctrl).unwrap(), ch.h_direct[k]);
        }
        assert_eq!(ris_noise_power(0, &ch, &ctrl, &RisNoiseParams { sigma_z_sq: 1e-12, sigma_s_sq: 0.0 }), 0.0);
    }

    #[test]
    fn single_element_phase_flip() {
        let ch = ChannelRealization {
            h_direct: vec![Complex64::new(0.0, 0.0)],
            h_bs_ris: vec![Complex64::new(1.0, 0.0)],
            h_ris_user: vec![vec![Complex64::new(1.0, 0.0)]],
        };
        let ctrl = RisControl {
            amp: vec![2.0],
            phase: vec![std::f64::consts::PI],
        };
        let h = equivalent_channel(0, &ch, &ctrl).unwrap();
        assert_relative_eq!(h.re, -2.0, max_relative = 1e-15);
        assert!(h.im.abs() < 1e-15);
    }

    #[test]
    fn random_instance_matches_triple_product_oracle() {
        let m = 8;
        let ch = draw(m, 7);
        let mut rng = stream_rng(8, Stream::Policy);
        let ctrl = RisControl {
            amp: (0..m).map(|_| rng.gen_range(0.0..25.0)).collect(),
            phase: (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        };
        for k in 0..ch.users() {
            let got = equivalent_channel(k, &ch, &ctrl).unwrap();
            // term-by-term oracle
            let mut want = ch.h_direct[k];
            for i in 0..m {
                let phase = Complex64::new(ctrl.phase[i].cos(), ctrl.phase[i].sin());
                want += ch.h_ris_user[k][i] * ctrl.amp[i] * phase * ch.h_bs_ris[i];
            }
            assert_relative_eq!(got.re, want.re, max_relative = 1e-12);
            assert_relative_eq!(got.im, want.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_element_noise_expansion() {
        let ch = ChannelRealization {
            h_direct: vec![Complex64::new(0.0, 0.0)],
            h_bs_ris: vec![Complex64::new(1.0, 0.0)],
            h_ris_user: vec![vec![Complex64::new(1.0, 0.0)]],
        };
        let ctrl = RisControl {
            amp: vec![3.0],
            phase: vec![1.0],
        };
        let noise = RisNoiseParams {
            sigma_z_sq: 1e-12,
            sigma_s_sq: 0.0,
        };
        assert_relative_eq!(ris_noise_power(0, &ch, &ctrl, &noise), 9e-12, max_relative = 1e-15);
    }

    #[test]
    fn noise_power_matches_elementwise_oracle_and_ignores_phase() {
        let m = 16;
        let ch = draw(m, 3);
        let mut rng = stream_rng(4, Stream::Policy);
        let amp: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..5.0)).collect();
        let p1: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let p2: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let noise = RisNoiseParams {
            sigma_z_sq: 2.5e-13,
            sigma_s_sq: 0.0,
        };
        let c1 = RisControl { amp: amp.clone(), phase: p1 };
        let c2 = RisControl { amp: amp.clone(), phase: p2 };
        for k in 0..ch.users() {
            let got = ris_noise_power(k, &ch, &c1, &noise);
            let mut want = 0.0;
            for i in 0..m {
                want += ch.h_ris_user[k][i].norm_sqr() * amp[i] * amp[i];
            }
            want *= noise.sigma_z_sq;
            assert_relative_eq!(got, want, max_relative = 1e-12);
            // phase-only change leaves it untouched
            assert_eq!(got, ris_noise_power(k, &ch, &c2, &noise));
        }
    }

    #[test]
    fn equivalent_channel_linear_in_each_amp() {
        let m = 4;
        let ch = draw(m, 5);
        let base = RisControl {
            amp: vec![1.0; m],
            phase: vec![0.3; m],
        };
        let mut doubled = base.clone();
        doubled.amp[2] = 2.0;
        let h_base = equivalent_channel(0, &ch, &base).unwrap();
        let h_doubled = equivalent_channel(0, &ch, &doubled).unwrap();
        // difference equals one extra copy of element 2's term
        let phase = Complex64::from_polar(1.0, 0.3);
        let term = ch.h_ris_user[0][2] * phase * ch.h_bs_ris[2];
        let diff = h_doubled - h_base;
        assert_relative_eq!(diff.re, term.re, max_relative = 1e-12);
        assert_relative_eq!(diff.im, term.im, max_relative = 1e-12);
    }

    #[test]
    fn control_validation_bounds() {
        let ok = RisControl {
            amp: vec![0.0, 25.0],
            phase: vec![0.0, 6.28],
        };
        assert!(ok.validate(25.0).is_ok());
        let bad_amp = RisControl {
            amp: vec![25.1, 0.0],
            phase: vec![0.0, 0.0],
        };
        assert!(bad_amp.validate(25.0).is_err());
        let bad_phase = RisControl {
            amp: vec![1.0],
            phase: vec![std::f64::consts::TAU],
        };
        assert!(bad_phase.validate(25.0).is_err());
    }
}

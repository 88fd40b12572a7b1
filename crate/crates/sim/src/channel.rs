//! Node placement, large-scale path loss, and spatially correlated
//! block-fading channel generation.
//!
//! Direct links are i.i.d. Rayleigh with variance equal to the link path
//! loss. RIS-side vectors are drawn as sqrt(A*mu) * R^(1/2) w with w
//! standard complex Gaussian and R the correlation kernel of the element
//! grid, so their covariance converges to A*mu*R.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::rng::{standard_complex, SimRng};

pub const REFERENCE_DISTANCE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position3D { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Large-scale path-loss parameters: gain at the 1 m reference distance plus
/// one exponent per link class.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PathLossParams {
    pub c0_db: f64,
    pub alpha_direct: f64,
    pub alpha_bs_ris: f64,
    pub alpha_ris_user: f64,
}

impl PathLossParams {
    pub fn validate(&self) -> SimResult<()> {
        for (name, a) in [
            ("alpha_direct", self.alpha_direct),
            ("alpha_bs_ris", self.alpha_bs_ris),
            ("alpha_ris_user", self.alpha_ris_user),
        ] {
            if !(a > 0.0) {
                return Err(SimError::config(format!(
                    "channel.{name}: must be > 0, got {a}"
                )));
            }
        }
        if !self.c0_db.is_finite() {
            return Err(SimError::config("channel.c0_db: must be finite"));
        }
        Ok(())
    }
}

/// Linear power gain 10^(c0_db/10) * d^(-alpha). Distances inside the
/// reference distance signal misconfigured geometry.
pub fn path_loss(d: f64, alpha: f64, c0_db: f64) -> SimResult<f64> {
    if !(d >= REFERENCE_DISTANCE) {
        return Err(SimError::config(format!(
            "path_loss: distance {d} m is inside the reference distance {REFERENCE_DISTANCE} m"
        )));
    }
    Ok(10f64.powf(c0_db / 10.0) * d.powf(-alpha))
}

/// Real-valued spatial correlation kernel of the element grid; Hermitian with
/// zero imaginary part and unit diagonal by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    m: usize,
    /// Row-major MxM.
    r: Vec<f64>,
}

/// sin(pi x)/(pi x) with sinc(0) = 1.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Grid coordinate of element i on a near-square panel.
fn grid_position(i: usize, cols: usize) -> (f64, f64) {
    ((i % cols) as f64, (i / cols) as f64)
}

/// Isotropic-scattering correlation R[m][n] = sinc(2 d_mn / lambda) over a
/// rectangular grid with the given element spacing in wavelengths.
pub fn correlation_matrix(m: usize, spacing_wavelengths: f64) -> SimResult<CorrelationMatrix> {
    if m < 1 {
        return Err(SimError::config("correlation_matrix: need m >= 1 elements"));
    }
    if !(spacing_wavelengths > 0.0) {
        return Err(SimError::config(format!(
            "correlation_matrix: element spacing must be > 0 wavelengths, got {spacing_wavelengths}"
        )));
    }
    let cols = (m as f64).sqrt().ceil() as usize;
    let mut r = vec![0.0; m * m];
    for a in 0..m {
        let (ax, ay) = grid_position(a, cols);
        for b in 0..m {
            let (bx, by) = grid_position(b, cols);
            let dist_wl = spacing_wavelengths * ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            r[a * m + b] = sinc(2.0 * dist_wl);
        }
    }
    Ok(CorrelationMatrix { m, r })
}

impl CorrelationMatrix {
    pub fn identity(m: usize) -> Self {
        let mut r = vec![0.0; m * m];
        for i in 0..m {
            r[i * m + i] = 1.0;
        }
        CorrelationMatrix { m, r }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.r[a * self.m + b]
    }

    pub fn as_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |a, b| self.get(a, b))
    }

    /// Eigenvalues of the (symmetric) kernel, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.as_dmatrix().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    /// PSD square root via eigen-decomposition; negative eigenvalues from
    /// round-off are clamped at zero.
    pub fn psd_sqrt(&self) -> DMatrix<f64> {
        let eig = self.as_dmatrix().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
    }
}

/// One block-fading draw of every channel in the system.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// BS -> user k, length K.
    pub h_direct: Vec<Complex64>,
    /// BS -> RIS, length M.
    pub h_bs_ris: Vec<Complex64>,
    /// RIS -> user k, K rows of length M.
    pub h_ris_user: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.h_direct.len()
    }

    pub fn elements(&self) -> usize {
        self.h_bs_ris.len()
    }

    pub fn is_finite(&self) -> bool {
        self.h_direct.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.h_bs_ris.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self
                .h_ris_user
                .iter()
                .flatten()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Precomputed generator for channel draws: per-link variances plus the PSD
/// square root of the correlation kernel.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    pub k: usize,
    pub m: usize,
    /// Per-user direct-link variance mu_{B,k}.
    pub var_direct: Vec<f64>,
    /// Per-element variance scale A * mu_{B,S}.
    pub var_bs_ris: f64,
    /// Per-user, per-element variance scale A * mu_{S,k}.
    pub var_ris_user: Vec<f64>,
    /// Row-major MxM square root of R.
    sqrt_r: Vec<f64>,
}

impl ChannelModel {
    pub fn new(
        bs: Position3D,
        ris: Position3D,
        users: &[Position3D],
        pl: &PathLossParams,
        corr: &CorrelationMatrix,
        element_area: f64,
    ) -> SimResult<Self> {
        pl.validate()?;
        if !(element_area > 0.0) {
            return Err(SimError::config(format!(
                "channel.element_area: must be > 0, got {element_area}"
            )));
        }
        if !(ris.z > 0.0) {
            return Err(SimError::config(
                "geometry.ris: z must be > 0 (panel mounted above ground)",
            ));
        }
        let m = corr.size();
        let k = users.len();
        let mut var_direct = Vec::with_capacity(k);
        let mut var_ris_user = Vec::with_capacity(k);
        for (idx, u) in users.iter().enumerate() {
            if !u.is_finite() {
                return Err(SimError::config(format!("geometry.users[{idx}]: non-finite")));
            }
            var_direct.push(path_loss(bs.distance(u), pl.alpha_direct, pl.c0_db)?);
            var_ris_user
                .push(element_area * path_loss(ris.distance(u), pl.alpha_ris_user, pl.c0_db)?);
        }
        let var_bs_ris = element_area * path_loss(bs.distance(&ris), pl.alpha_bs_ris, pl.c0_db)?;
        let sqrt = corr.psd_sqrt();
        let mut sqrt_r = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                sqrt_r[a * m + b] = sqrt[(a, b)];
            }
        }
        Ok(ChannelModel {
            k,
            m,
            var_direct,
            var_bs_ris,
            var_ris_user,
            sqrt_r,
        })
    }

    /// sqrt(scale) * R^(1/2) w with w i.i.d. standard complex Gaussian.
    fn correlated_vector(&self, scale: f64, rng: &mut SimRng) -> Vec<Complex64> {
        let w: Vec<Complex64> = (0..self.m).map(|_| standard_complex(rng)).collect();
        let amp = scale.sqrt();
        (0..self.m)
            .map(|a| {
                let row = &self.sqrt_r[a * self.m..(a + 1) * self.m];
                let mut acc = Complex64::new(0.0, 0.0);
                for (r, z) in row.iter().zip(&w) {
                    acc += z * *r;
                }
                acc * amp
            })
            .collect()
    }

    /// One block-fading draw. Identical (seed, model) gives an identical
    /// realization.
    pub fn sample(&self, rng: &mut SimRng) -> ChannelRealization {
        let h_direct = self
            .var_direct
            .iter()
            .map(|&v| standard_complex(rng) * v.sqrt())
            .collect();
        let h_bs_ris = self.correlated_vector(self.var_bs_ris, rng);
        let h_ris_user = self
            .var_ris_user
            .iter()
            .map(|&v| self.correlated_vector(v, rng))
            .collect();
        ChannelRealization {
            h_direct,
            h_bs_ris,
            h_ris_user,
        }
    }
}

/// Place K users uniformly in an annular half-disc on the +x side of the BS,
/// at ground level.
pub fn place_users(
    k: usize,
    bs: Position3D,
    radius_min: f64,
    radius_max: f64,
    rng: &mut SimRng,
) -> SimResult<Vec<Position3D>> {
    use rand::Rng;
    if !(radius_min >= REFERENCE_DISTANCE) {
        return Err(SimError::config(format!(
            "geometry.user_radius_min: must be >= {REFERENCE_DISTANCE} m, got {radius_min}"
        )));
    }
    if !(radius_max >= radius_min) {
        return Err(SimError::config(
            "geometry.user_radius_max: must be >= user_radius_min",
        ));
    }
    Ok((0..k)
        .map(|_| {
            let r = rng.gen_range(radius_min..=radius_max);
            let phi = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
            Position3D::new(bs.x + r * phi.cos(), bs.y + r * phi.sin(), 0.0)
        })
        .collect())
}

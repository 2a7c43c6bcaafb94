//! Homodyne detection of the cavity output: the quadrature spectrum
//! S_zout(ω, φ) obtained from the input–output relation c_out = √(2κ) c − c_in,
//! and the frequency band around ω = 0 where it drops below the vacuum
//! level ½.
//!
//! φ = 0 selects the amplitude quadrature and φ = π/2 the phase quadrature.
//!
//! The mechanical-noise coefficients are E_z = −√γ_m (A₁ cos φ + B₁ sin φ)
//! and F_z = −√γ_m (A₂ cos φ + B₂ sin φ), built from the mirror response
//! coefficients exactly in this form. Whether the cavity-response rows were
//! meant instead cannot be settled from the expressions alone; the
//! implementation keeps this form and is checked against the quoted band
//! edge 0.0187κ.

use crate::error::Result;
use crate::exec::Execution;
use crate::mech_spectra::{real_spectrum, transfer_at};
use crate::params::{SteadyState, SystemParams};
use num_complex::Complex64;
use serde::Serialize;

/// S(0) must lie this far below ½ for a band to be reported.
pub const BAND_THRESHOLD_EPS: f64 = 1e-9;
/// Bisection tolerance on the band edge, in units of κ.
pub const BAND_EDGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputCoeffs {
    pub omega: f64,
    pub phi: f64,
    pub a_z: Complex64,
    pub b_z: Complex64,
    pub e_z: Complex64,
    pub f_z: Complex64,
    pub i: Complex64,
    pub r: Complex64,
    pub j: Complex64,
}

pub fn output_coeffs(omega: f64, phi: f64, ss: &SteadyState, p: &SystemParams) -> Result<OutputCoeffs> {
    let t = transfer_at(omega, ss, p)?;
    let k = p.kappa;
    let gain = p.gain;
    let g2 = ss.coupling_sq();
    let (sin_t, cos_t) = p.theta.sin_cos();
    let one = Complex64::new(1.0, 0.0);
    let i = 2.0 * k / t.d * t.v * (g2 + (t.u + 2.0 * gain * cos_t) * t.v) - one;
    let r = 4.0 * k / t.d * gain * sin_t * t.v * t.v;
    let j = 2.0 * k / t.d * t.v * (g2 + (t.u - 2.0 * gain * cos_t) * t.v) - one;
    let (s, c) = phi.sin_cos();
    let sg = p.gamma_m.sqrt();
    Ok(OutputCoeffs {
        omega,
        phi,
        a_z: i * c + r * s,
        b_z: r * c + j * s,
        e_z: -sg * (t.a1 * c + t.b1 * s),
        f_z: -sg * (t.a2 * c + t.b2 * s),
        i,
        r,
        j,
    })
}

pub fn spectrum_zout(omega: f64, phi: f64, ss: &SteadyState, p: &SystemParams) -> Result<f64> {
    let pos = output_coeffs(omega, phi, ss, p)?;
    let neg = output_coeffs(-omega, phi, ss, p)?;
    let s = (pos.a_z * neg.a_z + pos.b_z * neg.b_z) * (ss.n_th_c + 0.5)
        + (pos.e_z * neg.e_z + pos.f_z * neg.f_z) * (ss.n_th_m + 0.5);
    Ok(real_spectrum(omega, s)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingBand {
    pub phi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub min_s: f64,
    pub min_at: f64,
}

impl SqueezingBand {
    pub fn half_width(&self) -> f64 {
        self.omega_hi
    }
}

const MARCH_START: f64 = 1e-7;
const MARCH_RATIO: f64 = 1.02;
const MARCH_END: f64 = 1e3;

/// Connected sub-vacuum band around ω = 0, or `None` when S(0) is not
/// below ½. The spectrum is even, so the band is symmetric.
pub fn find_band(phi: f64, ss: &SteadyState, p: &SystemParams) -> Result<Option<SqueezingBand>> {
    let s0 = spectrum_zout(0.0, phi, ss, p)?;
    if !(s0 < 0.5 - BAND_THRESHOLD_EPS) {
        return Ok(None);
    }
    let (mut min_s, mut min_at) = (s0, 0.0);
    let scale = p.kappa;
    let mut inside = 0.0;
    let mut w = MARCH_START * scale;
    let mut edge = None;
    while w <= MARCH_END * scale {
        let s = spectrum_zout(w, phi, ss, p)?;
        if s >= 0.5 {
            edge = Some((inside, w));
            break;
        }
        if s < min_s {
            min_s = s;
            min_at = w;
        }
        inside = w;
        w *= MARCH_RATIO;
    }
    let omega_hi = match edge {
        None => f64::INFINITY,
        Some((mut lo, mut hi)) => {
            while hi - lo > BAND_EDGE_TOL * scale {
                let mid = 0.5 * (lo + hi);
                if spectrum_zout(mid, phi, ss, p)? < 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(Some(SqueezingBand { phi, omega_lo: -omega_hi, omega_hi, min_s, min_at }))
}

/// S_zout on a φ × ω grid, stored row-major with one row per φ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionMap {
    pub omegas: Vec<f64>,
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
}

impl DetectionMap {
    pub fn get(&self, phi_idx: usize, omega_idx: usize) -> f64 {
        self.values[phi_idx * self.omegas.len() + omega_idx]
    }

    /// (φ, ω, S) at the smallest value.
    pub fn argmin(&self) -> Option<(f64, f64, f64)> {
        let n = self.omegas.len();
        self.values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, s)| (self.phis[k / n], self.omegas[k % n], *s))
    }
}

pub fn detection_map(
    omegas: &[f64],
    phis: &[f64],
    ss: &SteadyState,
    p: &SystemParams,
    exec: Execution,
) -> Result<DetectionMap> {
    let rows = exec.map(phis, |&phi| {
        omegas
            .iter()
            .map(|&w| spectrum_zout(w, phi, ss, p))
            .collect::<Result<Vec<f64>>>()
    });
    let mut values = Vec::with_capacity(omegas.len() * phis.len());
    for row in rows {
        values.extend(row?);
    }
    Ok(DetectionMap { omegas: omegas.to_vec(), phis: phis.to_vec(), values })
}

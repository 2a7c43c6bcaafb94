//! Reference case: a parametric amplifier inside the cavity with no
//! optomechanical coupling.

use crate::error::{Error, Result};
use crate::mech_spectra::real_spectrum;
use crate::params::SystemParams;
use crate::quadrature::{geometric_ladder, integrate_real_line, QuadratureOptions};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityCoeffs {
    pub omega: f64,
    pub a3: Complex64,
    pub b3: Complex64,
    pub a4: Complex64,
    pub b4: Complex64,
}

fn check_threshold(p: &SystemParams) -> Result<()> {
    if p.gain >= p.kappa / 2.0 {
        return Err(Error::AboveThreshold { gain: p.gain, threshold: p.kappa / 2.0 });
    }
    Ok(())
}

pub fn cavity_coeffs(omega: f64, p: &SystemParams) -> CavityCoeffs {
    let u = Complex64::new(p.kappa, -omega);
    let (s, c) = p.theta.sin_cos();
    let pre = (2.0 * p.kappa).sqrt() / (u * u - 4.0 * p.gain * p.gain);
    let off = pre * 2.0 * p.gain * s;
    CavityCoeffs {
        omega,
        a3: pre * (u + 2.0 * p.gain * c),
        b3: off,
        a4: off,
        b4: pre * (u - 2.0 * p.gain * c),
    }
}

/// (S_x(ω), S_y(ω)) with n_c from the parameters.
pub fn cavity_spectra(omega: f64, p: &SystemParams) -> Result<(f64, f64)> {
    check_threshold(p)?;
    let n = p.thermal_cavity() + 0.5;
    let pos = cavity_coeffs(omega, p);
    let neg = cavity_coeffs(-omega, p);
    let sx = (pos.a3 * neg.a3 + pos.b3 * neg.b3) * n;
    let sy = (pos.a4 * neg.a4 + pos.b4 * neg.b4) * n;
    Ok((real_spectrum(omega, sx)?.0, real_spectrum(omega, sy)?.0))
}

/// (⟨δx²⟩, ⟨δy²⟩) by integrating the spectra.
pub fn cavity_variances(p: &SystemParams) -> Result<(f64, f64)> {
    check_threshold(p)?;
    let opts = QuadratureOptions::default();
    let slow = p.kappa - 2.0 * p.gain;
    let fast = p.kappa + 2.0 * p.gain;
    let breaks = geometric_ladder(slow / 8.0, 64.0 * fast, 4.0);
    let vx = integrate_real_line(|w| Ok(cavity_spectra(w, p)?.0), &breaks, &opts)?;
    let vy = integrate_real_line(|w| Ok(cavity_spectra(w, p)?.1), &breaks, &opts)?;
    Ok((vx.value / (2.0 * PI), vy.value / (2.0 * PI)))
}

//! Frequency-domain response of the mirror quadratures, their noise spectra
//! and the variances obtained by integrating the spectra.

use crate::error::{Error, Result};
use crate::params::{SteadyState, SystemParams};
use crate::quadrature::{geometric_ladder, integrate_real_line, QuadratureOptions};
use crate::stability::{build_drift, routh_hurwitz, DriftModel};
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this |d(ω)| the response is treated as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-300;
/// Imaginary dust tolerated in a spectrum before it is treated as an error.
pub const IMAGINARY_TOLERANCE: f64 = 1e-6;
/// Variances are refused when the smallest normalized stability margin is
/// below this value.
pub const INSTABILITY_GUARD: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Response coefficients of δQ and δP to (x_in, y_in, Q_in, P_in) at one
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSet {
    pub omega: f64,
    pub a1: Complex64,
    pub b1: Complex64,
    pub e1: Complex64,
    pub f1: Complex64,
    pub a2: Complex64,
    pub b2: Complex64,
    pub e2: Complex64,
    pub f2: Complex64,
    pub d: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub u: Complex64,
    pub v: Complex64,
}

pub fn transfer_at(omega: f64, ss: &SteadyState, p: &SystemParams) -> Result<TransferSet> {
    let g = ss.g;
    let gc = g.conj();
    let gain = p.gain;
    let e_plus = Complex64::from_polar(1.0, p.theta);
    let e_minus = e_plus.conj();
    let alpha = e_plus * gc - e_minus * g;
    let beta = e_plus * gc + e_minus * g;
    let gamma = g * g * e_minus + gc * gc * e_plus;
    let u = Complex64::new(p.kappa, -omega);
    let v = Complex64::new(p.gamma_m / 2.0, -omega);
    let g2 = g.norm_sqr();
    let d = (u * v + g2).powi(2) - 4.0 * gain * gain * v * v;
    if !(d.norm() >= SINGULAR_DENOMINATOR) {
        return Err(Error::SingularDenominator { omega });
    }

    let s2k = (2.0 * p.kappa).sqrt();
    let sg = p.gamma_m.sqrt();
    let (re, im) = (g.re, g.im);
    let cross = I * gain * (g * g * e_minus - gc * gc * e_plus);
    let mech_diag = (u * u - 4.0 * gain * gain) * v + g2 * u;

    let a1 = s2k * I / d * (v * (gain * alpha - I * u * im) - I * g2 * im);
    let b1 = s2k / d * (v * (gain * beta - u * re) - g2 * re);
    let e1 = sg / d * (mech_diag + gain * gamma);
    let f1 = sg / d * cross;
    let a2 = s2k / d * (v * (gain * beta + u * re) + g2 * re);
    let b2 = -s2k * I / d * (v * (gain * alpha + I * u * im) + I * g2 * im);
    let e2 = sg / d * cross;
    let f2 = sg / d * (mech_diag - gain * gamma);

    Ok(TransferSet { omega, a1, b1, e1, f1, a2, b2, e2, f2, d, alpha, beta, gamma, u, v })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub omega: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub im_residual: f64,
}

/// Checks the imaginary part of a symmetrized spectrum and returns the real
/// part.
pub(crate) fn real_spectrum(omega: f64, z: Complex64) -> Result<(f64, f64)> {
    let residual = z.im.abs();
    if residual > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidual { omega, residual });
    }
    Ok((z.re, residual))
}

pub fn spectrum(omega: f64, ss: &SteadyState, p: &SystemParams) -> Result<SpectrumSample> {
    let pos = transfer_at(omega, ss, p)?;
    let neg = transfer_at(-omega, ss, p)?;
    let nc = ss.n_th_c + 0.5;
    let nm = ss.n_th_m + 0.5;
    let sq = (pos.a1 * neg.a1 + pos.b1 * neg.b1) * nc + (pos.e1 * neg.e1 + pos.f1 * neg.f1) * nm;
    let sp = (pos.a2 * neg.a2 + pos.b2 * neg.b2) * nc + (pos.e2 * neg.e2 + pos.f2 * neg.f2) * nm;
    let (s_q, rq) = real_spectrum(omega, sq)?;
    let (s_p, rp) = real_spectrum(omega, sp)?;
    Ok(SpectrumSample { omega, s_q, s_p, im_residual: rq.max(rp) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

/// Frequencies where spectra of the drift `m` have structure: the resonance
/// centres ±Im λ with offsets in units of |Re λ|, and a geometric ladder
/// from the slowest decay rate up to well beyond the fastest mode.
pub fn spectral_breakpoints(m: &Matrix4<f64>) -> Vec<f64> {
    let eig = crate::stability::eigenvalues(m);
    let mut out = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for z in &eig {
        let w = z.re.abs().max(1e-300);
        lo = lo.min(w);
        hi = hi.max(z.norm());
        let centre = z.im.abs();
        for k in [0.0, 1.0, 3.0, 10.0] {
            for sign in [-1.0, 1.0] {
                out.push(sign * (centre + k * w));
                out.push(sign * (centre - k * w));
            }
        }
    }
    if lo.is_finite() && hi > 0.0 {
        out.extend(geometric_ladder(lo / 8.0, 64.0 * hi, 4.0));
    }
    out
}

/// ⟨δZ²⟩ = (1/2π) ∫ S_Z(ω) dω.
pub fn variance(ss: &SteadyState, p: &SystemParams, quadrature: Quadrature) -> Result<f64> {
    variance_with(ss, p, quadrature, &QuadratureOptions::default())
}

pub fn variance_with(
    ss: &SteadyState,
    p: &SystemParams,
    quadrature: Quadrature,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let rh = routh_hurwitz(p, ss);
    if rh.margin() < INSTABILITY_GUARD {
        return Err(Error::UnstableSystem { margin: rh.margin() });
    }
    let DriftModel { drift, .. } = build_drift(ss, p);
    let breaks = spectral_breakpoints(&drift);
    let integral = integrate_real_line(
        |w| {
            let s = spectrum(w, ss, p)?;
            Ok(match quadrature {
                Quadrature::Q => s.s_q,
                Quadrature::P => s.s_p,
            })
        },
        &breaks,
        opts,
    )?;
    Ok(integral.value / (2.0 * PI))
}

/// Both mirror variances (⟨δQ²⟩, ⟨δP²⟩).
pub fn variances(ss: &SteadyState, p: &SystemParams) -> Result<(f64, f64)> {
    Ok((variance(ss, p, Quadrature::Q)?, variance(ss, p, Quadrature::P)?))
}

/// Squeezing in dB relative to the vacuum variance ½; positive = squeezed.
pub fn squeezing_db(var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::NonPositiveVariance(var));
    }
    Ok(-10.0 * (var / 0.5).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::solve_steady_state;
    use std::f64::consts::PI;

    fn fig3(gain: f64, theta: f64) -> (SystemParams, SteadyState) {
        let p = SystemParams::default().with_gain(gain).with_theta(theta);
        let ss = solve_steady_state(&p).unwrap();
        (p, ss)
    }

    #[test]
    fn uncoupled_mirror_is_brownian() {
        let p = SystemParams::default().with_cooperativity(0.0).with_gain(0.3);
        let ss = solve_steady_state(&p).unwrap();
        let t = transfer_at(0.7, &ss, &p).unwrap();
        assert_eq!(t.a1, Complex64::new(0.0, 0.0));
        assert_eq!(t.b1, Complex64::new(0.0, 0.0));
        let want = Complex64::new(p.gamma_m.sqrt(), 0.0) / t.v;
        assert!((t.e1 - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn cross_terms_vanish_without_gain() {
        let (p, ss) = fig3(0.0, 0.4);
        let t = transfer_at(0.2, &ss, &p).unwrap();
        assert_eq!(t.f1, Complex64::new(0.0, 0.0));
        assert_eq!(t.e2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn denominator_identity() {
        let (p, ss) = fig3(0.4, PI / 16.0);
        for w in [-2.0, -0.01, 0.0, 0.3, 5.0] {
            let t = transfer_at(w, &ss, &p).unwrap();
            let d = (t.u * t.v + ss.coupling_sq()).powi(2) - 4.0 * 0.16 * t.v * t.v;
            assert!((t.d - d).norm() <= 1e-15 * d.norm());
            assert_eq!(t.f1, t.e2);
        }
    }

    #[test]
    fn singular_denominator_is_reported() {
        // γ_m/2 − iω and κ − iω vanish only off the real axis, but with
        // |g| = 0 and G = κ/2, d(0) = v²(κ² − 4G²) = 0.
        let p = SystemParams::default().with_cooperativity(0.0).with_gain(0.5);
        let ss = solve_steady_state(&p).unwrap();
        assert!(matches!(transfer_at(0.0, &ss, &p), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn brownian_spectrum_shape() {
        let p = SystemParams::default().with_cooperativity(0.0).with_gamma_m(1e-3).with_temperature(0.0);
        let p = SystemParams { n_th_m: Some(2.0), ..p };
        let ss = solve_steady_state(&p).unwrap();
        let gm = 1e-3;
        let peak = spectrum(0.0, &ss, &p).unwrap().s_p;
        assert!((peak - 4.0 * 2.5 / gm).abs() < 1e-9 * peak);
        let half = spectrum(gm / 2.0, &ss, &p).unwrap().s_p;
        assert!((half - peak / 2.0).abs() < 1e-9 * peak);
    }

    #[test]
    fn vacuum_without_parametric_gain() {
        let (p, ss) = fig3(0.0, 0.0);
        let v = variance(&ss, &p, Quadrature::P).unwrap();
        assert!((v - 0.5).abs() < 1e-7, "{v}");
    }

    #[test]
    fn even_in_frequency() {
        let (p, ss) = fig3(0.45, 0.3);
        for w in [1e-4, 0.01, 0.2, 3.0] {
            let a = spectrum(w, &ss, &p).unwrap();
            let b = spectrum(-w, &ss, &p).unwrap();
            assert!((a.s_q - b.s_q).abs() <= 1e-12 * a.s_q.abs());
            assert!((a.s_p - b.s_p).abs() <= 1e-12 * a.s_p.abs());
        }
    }

    #[test]
    fn quoted_momentum_variances() {
        let (p, ss) = fig3(0.49, PI / 16.0);
        let v = variance(&ss, &p, Quadrature::P).unwrap();
        assert!((v - 0.253).abs() < 0.003, "{v}");

        let (p, ss) = fig3(0.46, 0.0);
        let v = variance(&ss, &p, Quadrature::P).unwrap();
        assert!((v - 0.320).abs() < 0.003, "{v}");

        let p = SystemParams::default().with_gamma_m(1e-3).with_gain(0.46).with_theta(PI / 6.0);
        let ss = solve_steady_state(&p).unwrap();
        let v = variance(&ss, &p, Quadrature::P).unwrap();
        assert!((v - 0.416).abs() < 0.003, "{v}");
    }

    #[test]
    fn unstable_variance_is_refused() {
        let (p, ss) = fig3(0.6, 0.0);
        assert!(matches!(variance(&ss, &p, Quadrature::P), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn decibels() {
        assert!((squeezing_db(0.253).unwrap() - 2.96).abs() < 0.005);
        assert_eq!(squeezing_db(0.5).unwrap(), 0.0);
        assert!((squeezing_db(0.395).unwrap() - 1.02).abs() < 0.005);
        assert!(matches!(squeezing_db(0.0), Err(Error::NonPositiveVariance(_))));
        assert!(squeezing_db(-1.0).is_err());
    }
}

//! Drift and diffusion of the linearized fluctuations (δQ, δP, δx, δy) and
//! the stability test, both through the closed-form Routh–Hurwitz
//! inequalities and through the eigenvalues of the drift matrix.

use crate::params::{SteadyState, SystemParams};
use crate::poly;
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

/// Conditions within this (normalized) distance of zero are marginal.
pub const MARGINAL_EPS: f64 = 1e-12;

/// Linear Langevin system ḟ = M f + n with ⟨n nᵀ⟩ symmetrized to D δ(t − t').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
}

pub fn build_drift(ss: &SteadyState, p: &SystemParams) -> DriftModel {
    let g = ss.g;
    let gm = p.gamma_m;
    let k = p.kappa;
    let (s, c) = p.theta.sin_cos();
    // i(g* − g)/2 = Im g, (g + g*)/2 = Re g
    let im = g.im;
    let re = g.re;
    #[rustfmt::skip]
    let drift = Matrix4::new(
        -gm / 2.0, 0.0,       im,                       -re,
        0.0,       -gm / 2.0, re,                       im,
        -im,       -re,       -(k - 2.0 * p.gain * c),  2.0 * p.gain * s,
        re,        -im,       2.0 * p.gain * s,         -(k + 2.0 * p.gain * c),
    );
    let mech = gm * (ss.n_th_m + 0.5);
    let cav = 2.0 * k * (ss.n_th_c + 0.5);
    let diffusion = Matrix4::from_diagonal(&nalgebra::Vector4::new(mech, mech, cav, cav));
    DriftModel { drift, diffusion }
}

impl DriftModel {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        eigenvalues(&self.drift)
    }
}

/// Eigenvalues of a 4×4 real matrix from its characteristic quartic.
pub fn eigenvalues(m: &Matrix4<f64>) -> Vec<Complex64> {
    poly::roots(&poly::characteristic_polynomial(m))
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa(m: &Matrix4<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// True iff every eigenvalue has real part below −1e-12.
pub fn eigen_stable(m: &Matrix4<f64>) -> bool {
    m.iter().all(|x| x.is_finite()) && spectral_abscissa(m) < -MARGINAL_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouthHurwitz {
    /// Left-hand sides of the three inequalities.
    pub conditions: [f64; 3],
    /// Each condition divided by its value at G = 0 (all terms positive).
    pub normalized: [f64; 3],
    pub stable: bool,
    pub marginal: bool,
}

impl RouthHurwitz {
    /// Smallest normalized condition.
    pub fn margin(&self) -> f64 {
        self.normalized.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn conditions(kappa: f64, gamma_m: f64, g2: f64, q: f64) -> [f64; 3] {
    let k = kappa;
    let gm = gamma_m;
    let c1 = 0.25 * gm.powi(3) + 2.0 * k * q + (2.0 * k + gm) * (g2 + 2.0 * k * gm);
    let c2 = 2.0 * k * gm * q * q
        + ((2.0 * k + gm).powi(2) * g2 + (4.0 * k + gm) * k * gm * gm) * q
        + gm.powi(3) / 4.0 * (k * gm * gm / 2.0 + (2.0 * k + gm) * g2)
        + k * gm * (2.0 * k + gm) * (k * gm * gm + (2.0 * k + 1.5 * gm) * g2);
    let c3 = 0.25 * gm * gm * q + g2 * (g2 + k * gm);
    [c1, c2, c3]
}

/// Routh–Hurwitz conditions for the drift matrix. They depend on the gain
/// only through κ² − 4G² and never on θ.
pub fn routh_hurwitz(p: &SystemParams, ss: &SteadyState) -> RouthHurwitz {
    let g2 = ss.coupling_sq();
    let q = p.kappa * p.kappa - 4.0 * p.gain * p.gain;
    let raw = conditions(p.kappa, p.gamma_m, g2, q);
    let scale = conditions(p.kappa, p.gamma_m, g2, p.kappa * p.kappa);
    let normalized = [raw[0] / scale[0], raw[1] / scale[1], raw[2] / scale[2]];
    let marginal = normalized.iter().any(|c| c.abs() <= MARGINAL_EPS);
    let stable = normalized.iter().all(|c| *c > MARGINAL_EPS);
    RouthHurwitz { conditions: raw, normalized, stable, marginal }
}

//! Closed-form mirror momentum variance when the cavity follows the mirror
//! adiabatically (κ ≫ |g|), plus the variance reduction from quadrature
//! feedback.
//!
//! With G₀ = 2G/κ and the pump phase chosen so that e^{iθ} g*² = −|g|², the
//! momentum obeys δṖ = −Γ δP + h + f with Γ = |g|²/(κ(1 + G₀)). The γ_m
//! contribution to Γ is dropped, which is accurate for C ≫ 1.
//!
//! The Bogoliubov drift of δb̃ has diagonal |g|²/((1 − G₀²)κ) and off-diagonal
//! G₀|g|²/((1 − G₀²)κ); their difference is exactly Γ.

use crate::error::{Error, Result};
use crate::params::{SteadyState, SystemParams};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticInputs {
    /// G₀ = 2G/κ.
    pub g0_gain: f64,
    pub cooperativity: f64,
    pub n_th_m: f64,
    pub n_th_c: f64,
    pub gamma_m: f64,
    pub kappa: f64,
    /// |g|².
    pub coupling_sq: f64,
    /// Dimensionless feedback gain η.
    pub eta: f64,
}

impl AdiabaticInputs {
    pub fn new(p: &SystemParams, ss: &SteadyState, eta: f64) -> Result<Self> {
        let coupling_sq = ss.coupling_sq();
        let inputs = Self {
            g0_gain: 2.0 * p.gain / p.kappa,
            cooperativity: coupling_sq / (p.kappa * p.gamma_m),
            n_th_m: ss.n_th_m,
            n_th_c: ss.n_th_c,
            gamma_m: p.gamma_m,
            kappa: p.kappa,
            coupling_sq,
            eta,
        };
        inputs.check()?;
        Ok(inputs)
    }

    /// Cooperativity-only inputs with κ = 1 and γ_m = 1e-5.
    pub fn from_cooperativity(g0_gain: f64, cooperativity: f64, n_th_m: f64, n_th_c: f64, eta: f64) -> Result<Self> {
        let gamma_m = 1e-5;
        let inputs = Self {
            g0_gain,
            cooperativity,
            n_th_m,
            n_th_c,
            gamma_m,
            kappa: 1.0,
            coupling_sq: cooperativity * gamma_m,
            eta,
        };
        inputs.check()?;
        Ok(inputs)
    }

    fn check(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.g0_gain) {
            return Err(Error::DomainError(format!("G0 = {} must lie in [0, 1)", self.g0_gain)));
        }
        if !(self.coupling_sq > 0.0) {
            return Err(Error::DomainError("effective coupling must be nonzero".into()));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::DomainError(format!("eta = {} must be non-negative", self.eta)));
        }
        if self.eta > 4.0 * self.cooperativity {
            return Err(Error::FeedbackUnstable { eta: self.eta, bound: 4.0 * self.cooperativity });
        }
        Ok(())
    }

    /// Γ = |g|²/(κ(1 + G₀)).
    pub fn momentum_decay_rate(&self) -> f64 {
        self.coupling_sq / (self.kappa * (1.0 + self.g0_gain))
    }

    /// Diagonal and off-diagonal rates of the eliminated mirror equation.
    pub fn bogoliubov_rates(&self) -> (f64, f64) {
        let denom = (1.0 - self.g0_gain * self.g0_gain) * self.kappa;
        (self.coupling_sq / denom, self.g0_gain * self.coupling_sq / denom)
    }

    /// ⟨f(t) f(t')⟩ coefficient: |g|²(1 + 2n_c)/(κ(1 + G₀)²).
    pub fn cavity_force_strength(&self) -> f64 {
        self.coupling_sq * (1.0 + 2.0 * self.n_th_c) / (self.kappa * (1.0 + self.g0_gain).powi(2))
    }

    /// ⟨h(t) h(t')⟩ coefficient: γ_m(1 + 2n_m)/2.
    pub fn thermal_force_strength(&self) -> f64 {
        self.gamma_m * (1.0 + 2.0 * self.n_th_m) / 2.0
    }

    /// Solution of d⟨δP²⟩/dt = −2Γ⟨δP²⟩ + F + H from `initial` after `t`.
    pub fn variance_at(&self, initial: f64, t: f64) -> f64 {
        let rate = 2.0 * self.momentum_decay_rate();
        let target = (self.cavity_force_strength() + self.thermal_force_strength()) / rate;
        target + (initial - target) * (-rate * t).exp()
    }

    /// Feedback reduction factor 1 + (1/2C)(1 + G₀)(1 + η/2).
    pub fn feedback_factor(&self) -> f64 {
        1.0 + (1.0 + self.g0_gain) * (1.0 + self.eta / 2.0) / (2.0 * self.cooperativity)
    }
}

/// ⟨δP²⟩ = (1 + 2n_c)/(2(1 + G₀)) + γ_m κ(1 + G₀)(1 + 2n_m)/(4|g|²).
pub fn adiabatic_variance_p(inp: &AdiabaticInputs) -> Result<f64> {
    inp.check()?;
    let g0 = inp.g0_gain;
    Ok((1.0 + 2.0 * inp.n_th_c) / (2.0 * (1.0 + g0))
        + inp.gamma_m * inp.kappa * (1.0 + g0) * (1.0 + 2.0 * inp.n_th_m) / (4.0 * inp.coupling_sq))
}

/// The C = 400, G₀ → 1 approximation ¼(1 + 2n_c) + (1/800)(1 + 2n_m).
pub fn adiabatic_variance_p_approx(n_th_c: f64, n_th_m: f64) -> f64 {
    0.25 * (1.0 + 2.0 * n_th_c) + (1.0 + 2.0 * n_th_m) / 800.0
}

/// Adiabatic variance divided by the feedback reduction factor.
pub fn feedback_variance_p(inp: &AdiabaticInputs) -> Result<f64> {
    Ok(adiabatic_variance_p(inp)? / inp.feedback_factor())
}

/// Operator amplitudes (treated as c-numbers) driving the eliminated cavity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CavityDrive {
    pub b: Complex64,
    pub b_dag: Complex64,
    pub c_in: Complex64,
    pub c_in_dag: Complex64,
}

/// δc̃ when the cavity follows the mirror adiabatically.
pub fn adiabatic_cavity_fluctuation(drive: &CavityDrive, g: Complex64, p: &SystemParams) -> Complex64 {
    let k = p.kappa;
    let gain = p.gain;
    let i = Complex64::new(0.0, 1.0);
    let phase = Complex64::from_polar(1.0, p.theta);
    let s2k = (2.0 * k).sqrt();
    (i * k * g * drive.b - i * 2.0 * gain * phase * g.conj() * drive.b_dag
        + 2.0 * gain * phase * s2k * drive.c_in_dag
        + k * s2k * drive.c_in)
        / (k * k - 4.0 * gain * gain)
}

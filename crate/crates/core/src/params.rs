//! Physical inputs, thermal occupations and the mean-field steady state.
//!
//! All rates are expressed in units of the cavity decay rate κ (which is 1
//! unless set otherwise). Temperature is in kelvin and the two physical
//! frequencies used for thermal occupations are angular frequencies in
//! rad/s.

use crate::error::{Error, Result};
use crate::poly;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// How the cavity is driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Drive {
    /// Cooperativity C = |g|²/(κγ_m); the steady state is not solved.
    Cooperativity(f64),
    /// Explicit drive: amplitude ε_l, single-photon coupling g₀ and bare
    /// detuning ω_c − ω_l, all in units of κ.
    Power {
        amplitude: f64,
        g0: f64,
        bare_detuning: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub kappa: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    /// Parametric gain G.
    pub gain: f64,
    /// Parametric pump phase θ in radians.
    pub theta: f64,
    pub drive: Drive,
    /// Bath temperature in kelvin.
    pub temperature: f64,
    /// Physical mechanical angular frequency (rad/s), for n_m^th.
    pub omega_m_phys: f64,
    /// Physical cavity angular frequency (rad/s), for n_c^th.
    pub omega_c_phys: f64,
    /// Effective detuning Δ; defaults to ω_m (red sideband).
    pub detuning: Option<f64>,
    pub n_th_m: Option<f64>,
    pub n_th_c: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            omega_m: 10.0,
            gamma_m: 1e-5,
            gain: 0.0,
            theta: 0.0,
            drive: Drive::Cooperativity(400.0),
            temperature: 0.0,
            omega_m_phys: 2.0 * PI * 3.6e6,
            omega_c_phys: 2.0 * PI * 6.23e9,
            detuning: None,
            n_th_m: None,
            n_th_c: None,
        }
    }
}

/// Keys accepted by [`SystemParams::set`] and usable as sweep axes.
pub const SCALAR_KEYS: &[&str] = &[
    "kappa",
    "omega_m",
    "gamma_m",
    "gain",
    "theta",
    "cooperativity",
    "temperature",
    "omega_m_phys",
    "omega_c_phys",
    "detuning",
    "n_th_m",
    "n_th_c",
];

impl SystemParams {
    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_cooperativity(mut self, c: f64) -> Self {
        self.drive = Drive::Cooperativity(c);
        self
    }

    pub fn with_gamma_m(mut self, gamma_m: f64) -> Self {
        self.gamma_m = gamma_m;
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn cooperativity(&self) -> Option<f64> {
        match self.drive {
            Drive::Cooperativity(c) => Some(c),
            Drive::Power { .. } => None,
        }
    }

    pub fn effective_detuning(&self) -> f64 {
        self.detuning.unwrap_or(self.omega_m)
    }

    /// Sets a scalar parameter by its config key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "kappa" => self.kappa = value,
            "omega_m" => self.omega_m = value,
            "gamma_m" => self.gamma_m = value,
            "gain" | "G" => self.gain = value,
            "theta" => self.theta = value,
            "cooperativity" | "C" => self.drive = Drive::Cooperativity(value),
            "temperature" | "T" => self.temperature = value,
            "omega_m_phys" => self.omega_m_phys = value,
            "omega_c_phys" => self.omega_c_phys = value,
            "detuning" => self.detuning = Some(value),
            "n_th_m" => self.n_th_m = Some(value),
            "n_th_c" => self.n_th_c = Some(value),
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "kappa" => Some(self.kappa),
            "omega_m" => Some(self.omega_m),
            "gamma_m" => Some(self.gamma_m),
            "gain" | "G" => Some(self.gain),
            "theta" => Some(self.theta),
            "cooperativity" | "C" => self.cooperativity(),
            "temperature" | "T" => Some(self.temperature),
            "omega_m_phys" => Some(self.omega_m_phys),
            "omega_c_phys" => Some(self.omega_c_phys),
            "detuning" => Some(self.effective_detuning()),
            "n_th_m" => Some(self.thermal_mechanical()),
            "n_th_c" => Some(self.thermal_cavity()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: reason.to_string() })
            }
        }
        check(self.kappa > 0.0 && self.kappa.is_finite(), "kappa", "must be positive")?;
        check(self.omega_m > 0.0 && self.omega_m.is_finite(), "omega_m", "must be positive")?;
        check(self.gamma_m > 0.0 && self.gamma_m.is_finite(), "gamma_m", "must be positive")?;
        check(self.gain >= 0.0 && self.gain.is_finite(), "gain", "must be non-negative")?;
        check(self.theta.is_finite(), "theta", "must be finite")?;
        check(self.temperature >= 0.0, "temperature", "must be non-negative")?;
        check(self.omega_m_phys > 0.0, "omega_m_phys", "must be positive")?;
        check(self.omega_c_phys > 0.0, "omega_c_phys", "must be positive")?;
        if let Some(n) = self.n_th_m {
            check(n >= 0.0, "n_th_m", "must be non-negative")?;
        }
        if let Some(n) = self.n_th_c {
            check(n >= 0.0, "n_th_c", "must be non-negative")?;
        }
        match self.drive {
            Drive::Cooperativity(c) => check(c >= 0.0 && c.is_finite(), "cooperativity", "must be non-negative"),
            Drive::Power { amplitude, g0, bare_detuning } => {
                check(amplitude.is_finite(), "drive_amplitude", "must be finite")?;
                check(g0 >= 0.0 && g0.is_finite(), "g0", "must be non-negative")?;
                check(bare_detuning.is_finite(), "bare_detuning", "must be finite")
            }
        }
    }

    pub fn thermal_mechanical(&self) -> f64 {
        self.n_th_m
            .unwrap_or_else(|| thermal_occupation(self.omega_m_phys, self.temperature))
    }

    pub fn thermal_cavity(&self) -> f64 {
        self.n_th_c
            .unwrap_or_else(|| thermal_occupation(self.omega_c_phys, self.temperature))
    }
}

/// Bose–Einstein occupation 1/(exp(ħω/k_B T) − 1) for an angular frequency
/// in rad/s. Exactly zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (BOLTZMANN * temperature);
    // exp_m1 overflows to inf for large x, giving an exact zero.
    1.0 / x.exp_m1()
}

/// ε_l = sqrt(2κ℘/(ħω_l)) in units of κ, from SI laser power and angular
/// frequencies.
pub fn drive_amplitude_from_power(power: f64, kappa_phys: f64, omega_laser: f64) -> f64 {
    (2.0 * kappa_phys * power / (HBAR * omega_laser)).sqrt() / kappa_phys
}

/// g₀ = (ω_c/L) sqrt(ħ/(2mω_m)) in units of κ.
pub fn single_photon_coupling(omega_c: f64, length: f64, mass: f64, omega_m: f64, kappa_phys: f64) -> f64 {
    omega_c / length * (HBAR / (2.0 * mass * omega_m)).sqrt() / kappa_phys
}

/// Mean-field steady state and effective linear coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Intracavity amplitude; `None` in cooperativity mode.
    pub c_s: Option<Complex64>,
    /// Mirror amplitude; `None` in cooperativity mode.
    pub b_s: Option<Complex64>,
    pub delta_eff: f64,
    /// Effective coupling g = g₀ c_s, carrying the phase of c_s.
    pub g: Complex64,
    pub n_th_m: f64,
    pub n_th_c: f64,
    /// Self-consistency residual of the fixed point (0 in cooperativity mode).
    pub residual: f64,
    /// The photon-number cubic has three positive real roots.
    pub bistable: bool,
}

impl SteadyState {
    pub fn coupling_sq(&self) -> f64 {
        self.g.norm_sqr()
    }
}

const PICARD_DAMPING: f64 = 0.5;
const PICARD_MAX_ITER: usize = 10_000;
const PICARD_TOL: f64 = 1e-12;

pub fn solve_steady_state(p: &SystemParams) -> Result<SteadyState> {
    p.validate()?;
    let n_th_m = p.thermal_mechanical();
    let n_th_c = p.thermal_cavity();
    match p.drive {
        Drive::Cooperativity(c) => {
            let delta = p.effective_detuning();
            let magnitude = (c * p.kappa * p.gamma_m).sqrt();
            let g = Complex64::from_polar(magnitude, -(delta / p.kappa).atan());
            Ok(SteadyState {
                c_s: None,
                b_s: None,
                delta_eff: delta,
                g,
                n_th_m,
                n_th_c,
                residual: 0.0,
                bistable: false,
            })
        }
        Drive::Power { amplitude, g0, bare_detuning } => {
            let fp = FixedPoint { p, amplitude, g0, bare_detuning };
            let (delta, residual) = fp.iterate()?;
            let (c_s, b_s) = fp.amplitudes(delta);
            Ok(SteadyState {
                c_s: Some(c_s),
                b_s: Some(b_s),
                delta_eff: delta,
                g: c_s * g0,
                n_th_m,
                n_th_c,
                residual,
                bistable: fp.positive_photon_roots().len() == 3,
            })
        }
    }
}

struct FixedPoint<'a> {
    p: &'a SystemParams,
    amplitude: f64,
    g0: f64,
    bare_detuning: f64,
}

impl FixedPoint<'_> {
    fn amplitudes(&self, delta: f64) -> (Complex64, Complex64) {
        let p = self.p;
        let c_s = Complex64::new(self.amplitude, 0.0) / Complex64::new(p.kappa, delta);
        let b_s = Complex64::new(0.0, self.g0 * c_s.norm_sqr()) / Complex64::new(p.gamma_m / 2.0, p.omega_m);
        (c_s, b_s)
    }

    fn detuning_of(&self, b_s: Complex64) -> f64 {
        self.bare_detuning - self.g0 * 2.0 * b_s.re
    }

    /// Relative mismatch of (c_s, b_s) under one undamped application of the
    /// steady-state equations.
    fn residual(&self, delta: f64) -> f64 {
        let (c_s, b_s) = self.amplitudes(delta);
        let (c_next, b_next) = self.amplitudes(self.detuning_of(b_s));
        let rc = (c_next - c_s).norm() / c_s.norm().max(1.0);
        let rb = (b_next - b_s).norm() / b_s.norm().max(1.0);
        rc.max(rb)
    }

    fn iterate(&self) -> Result<(f64, f64)> {
        let mut delta = self.bare_detuning;
        let mut residual = f64::INFINITY;
        for _ in 0..PICARD_MAX_ITER {
            let (_, b_s) = self.amplitudes(delta);
            let target = self.detuning_of(b_s);
            delta = (1.0 - PICARD_DAMPING) * delta + PICARD_DAMPING * target;
            residual = self.residual(delta);
            if residual < PICARD_TOL {
                return Ok((delta, residual));
            }
        }
        Err(Error::NonConvergence { residual, iterations: PICARD_MAX_ITER })
    }

    /// Positive roots n = |c_s|² of K²n³ − 2Δ₀Kn² + (κ² + Δ₀²)n − ε² = 0,
    /// with K = 2g₀²ω_m/(γ_m²/4 + ω_m²).
    fn positive_photon_roots(&self) -> Vec<f64> {
        let p = self.p;
        let k = 2.0 * self.g0 * self.g0 * p.omega_m / (p.gamma_m * p.gamma_m / 4.0 + p.omega_m * p.omega_m);
        let d0 = self.bare_detuning;
        let coeffs = [
            -self.amplitude * self.amplitude,
            p.kappa * p.kappa + d0 * d0,
            -2.0 * d0 * k,
            k * k,
        ];
        poly::real_roots(&coeffs, 1e-9)
            .into_iter()
            .filter(|n| *n > 0.0)
            .collect()
    }
}

/// Pump phase θ ∈ [0, 2π) with e^{iθ} g*² = −|g|².
pub fn optimal_theta(g: Complex64) -> Result<f64> {
    if g.norm() == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    Ok((PI - 2.0 * g.conj().arg()).rem_euclid(2.0 * PI))
}

/// Validity of the rotating-wave approximation; "≫" means a factor of ten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RwaFlags {
    pub resolved_sideband: bool,
    pub high_q: bool,
    pub weak_coupling: bool,
    pub weak_gain: bool,
}

impl RwaFlags {
    pub fn evaluate(p: &SystemParams, ss: &SteadyState) -> Self {
        Self {
            resolved_sideband: p.omega_m >= 10.0 * p.kappa,
            high_q: p.omega_m >= 10.0 * p.gamma_m,
            weak_coupling: p.omega_m >= 10.0 * ss.g.norm(),
            weak_gain: p.omega_m >= 10.0 * 2.0 * p.gain,
        }
    }

    pub fn warnings(&self) -> Vec<&'static str> {
        let mut w = Vec::new();
        if !self.resolved_sideband {
            w.push("rwa:omega_m<10kappa");
        }
        if !self.high_q {
            w.push("rwa:omega_m~gamma_m");
        }
        if !self.weak_coupling {
            w.push("rwa:omega_m~|g|");
        }
        if !self.weak_gain {
            w.push("rwa:omega_m~2G");
        }
        w
    }
}

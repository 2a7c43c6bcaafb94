//! Cross-checks between the independent variance routes on random
//! parameter draws: Routh–Hurwitz against eigenvalues, frequency-domain
//! quadrature against the Lyapunov solve, and the stochastic oracle against
//! the Lyapunov solve.

use crate::error::Result;
use crate::exec::Execution;
use crate::lyapunov::steady_covariance;
use crate::mech_spectra::{variance, Quadrature};
use crate::params::{solve_steady_state, SystemParams};
use crate::sde::{simulate, SdeEstimate, SimConfig};
use crate::stability::{build_drift, eigen_stable, routh_hurwitz, spectral_abscissa};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Which family of random parameters to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Wide log-uniform ranges, including points beyond threshold.
    Grid,
    /// Broad stable draws for the deterministic comparison.
    Analytic,
    /// Faster-relaxing stable draws that keep stochastic runs short.
    Stochastic,
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// One random parameter set; `Grid` draws may be unstable.
pub fn random_params(rng: &mut impl Rng, regime: Regime) -> SystemParams {
    let mut p = SystemParams::default().with_theta(rng.random_range(0.0..2.0 * PI));
    match regime {
        Regime::Grid => {
            p.gamma_m = log_uniform(rng, 1e-5, 1.0);
            p.gain = rng.random_range(0.0..1.0);
            p = p.with_cooperativity(log_uniform(rng, 1e-2, 1e4));
            p.detuning = Some(rng.random_range(-20.0..20.0));
        }
        Regime::Analytic => {
            p.gamma_m = log_uniform(rng, 1e-4, 1e-1);
            p.gain = rng.random_range(0.0..0.495);
            p = p.with_cooperativity(log_uniform(rng, 1.0, 1e3));
            p.detuning = Some(rng.random_range(2.0..20.0));
            p.n_th_m = Some(rng.random_range(0.0..20.0));
            p.n_th_c = Some(rng.random_range(0.0..0.5));
        }
        Regime::Stochastic => {
            p.gamma_m = log_uniform(rng, 0.05, 0.2);
            p.gain = rng.random_range(0.0..0.4);
            p = p.with_cooperativity(log_uniform(rng, 1.0, 20.0));
            p.detuning = Some(rng.random_range(2.0..20.0));
            p.n_th_m = Some(rng.random_range(0.0..2.0));
            p.n_th_c = Some(rng.random_range(0.0..0.2));
        }
    }
    p
}

/// Draws until a point with spectral abscissa below −1e-6 is found.
pub fn random_stable_params(rng: &mut impl Rng, regime: Regime) -> SystemParams {
    loop {
        let p = random_params(rng, regime);
        if let Ok(ss) = solve_steady_state(&p) {
            if spectral_abscissa(&build_drift(&ss, &p).drift) < -1e-6 {
                return p;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub stability_draws: usize,
    pub analytic_draws: usize,
    pub sde_draws: usize,
    pub sde_trajectories: usize,
    /// Total sampled time per draw, in slowest relaxation times, summed
    /// over trajectories.
    pub sde_relaxation_times: f64,
    pub quadrature_rel_tol: f64,
    pub z_limit: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            stability_draws: 10_000,
            analytic_draws: 100,
            sde_draws: 20,
            sde_trajectories: 4,
            sde_relaxation_times: 2500.0,
            quadrature_rel_tol: 1e-6,
            z_limit: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticDraw {
    pub params: SystemParams,
    pub lyapunov: [f64; 2],
    pub quadrature: [f64; 2],
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeDraw {
    pub params: SystemParams,
    pub lyapunov: [f64; 2],
    pub estimate: SdeEstimate,
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub stability_disagreements: usize,
    pub analytic: Vec<AnalyticDraw>,
    pub sde: Vec<SdeDraw>,
}

impl ValidationReport {
    pub fn max_rel_err(&self) -> f64 {
        self.analytic.iter().map(|d| d.rel_err).fold(0.0, f64::max)
    }

    /// Draws whose ⟨δP²⟩ z-score is within the limit.
    pub fn sde_within_limit(&self) -> usize {
        self.sde.iter().filter(|d| d.z[1].abs() < self.config.z_limit).count()
    }

    pub fn stability_ok(&self) -> bool {
        self.stability_disagreements == 0
    }

    pub fn analytic_ok(&self) -> bool {
        self.max_rel_err() <= self.config.quadrature_rel_tol
    }

    pub fn sde_ok(&self) -> bool {
        self.sde_within_limit() == self.sde.len()
    }

    pub fn passed(&self) -> bool {
        self.stability_ok() && self.analytic_ok() && self.sde_ok()
    }

    pub fn summary(&self) -> String {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        format!(
            "stability: {} disagreements in {} draws [{}]\n\
             quadrature vs lyapunov: max relative error {:.3e} over {} draws (limit {:.0e}) [{}]\n\
             sde vs lyapunov: {}/{} draws with |z_P| < {} [{}]\n",
            self.stability_disagreements,
            self.config.stability_draws,
            verdict(self.stability_ok()),
            self.max_rel_err(),
            self.analytic.len(),
            self.config.quadrature_rel_tol,
            verdict(self.analytic_ok()),
            self.sde_within_limit(),
            self.sde.len(),
            self.config.z_limit,
            verdict(self.sde_ok()),
        )
    }
}

/// Number of random draws on which the algebraic and eigenvalue stability
/// tests disagree.
pub fn stability_disagreements(seed: u64, draws: usize, exec: Execution) -> usize {
    exec.map_range(draws, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let p = random_params(&mut rng, Regime::Grid);
        let ss = solve_steady_state(&p).expect("cooperativity mode always solves");
        let rh = routh_hurwitz(&p, &ss);
        usize::from(!rh.marginal && rh.stable != eigen_stable(&build_drift(&ss, &p).drift))
    })
    .into_iter()
    .sum()
}

pub fn analytic_draw(p: &SystemParams) -> Result<AnalyticDraw> {
    let ss = solve_steady_state(p)?;
    let cov = steady_covariance(&build_drift(&ss, p))?;
    let lyapunov = [cov.var_q(), cov.var_p()];
    let quadrature = [variance(&ss, p, Quadrature::Q)?, variance(&ss, p, Quadrature::P)?];
    let rel_err = (0..2).map(|i| ((quadrature[i] - lyapunov[i]) / lyapunov[i]).abs()).fold(0.0, f64::max);
    Ok(AnalyticDraw { params: *p, lyapunov, quadrature, rel_err })
}

/// Runs the oracle with the automatic step and burn-in, splitting
/// `relaxation_times` evenly over `n_traj` trajectories.
pub fn sde_draw(p: &SystemParams, relaxation_times: f64, n_traj: usize, seed: u64, exec: Execution) -> Result<SdeDraw> {
    let ss = solve_steady_state(p)?;
    let dm = build_drift(&ss, p);
    let cov = steady_covariance(&dm)?;
    let cfg = SimConfig::auto(&dm, relaxation_times / n_traj as f64, n_traj, seed);
    let estimate = simulate(&dm, &cfg, exec)?;
    let (zq, zp) = estimate.z_scores(cov.var_q(), cov.var_p());
    Ok(SdeDraw { params: *p, lyapunov: [cov.var_q(), cov.var_p()], estimate, z: [zq, zp] })
}

pub fn validate(cfg: &ValidationConfig, exec: Execution) -> Result<ValidationReport> {
    let stability_disagreements = stability_disagreements(cfg.seed, cfg.stability_draws, exec);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let analytic_params: Vec<SystemParams> =
        (0..cfg.analytic_draws).map(|_| random_stable_params(&mut rng, Regime::Analytic)).collect();
    let analytic = exec.map(&analytic_params, analytic_draw).into_iter().collect::<Result<Vec<_>>>()?;

    let sde_params: Vec<SystemParams> =
        (0..cfg.sde_draws).map(|_| random_stable_params(&mut rng, Regime::Stochastic)).collect();
    let sde = sde_params
        .iter()
        .enumerate()
        .map(|(k, p)| sde_draw(p, cfg.sde_relaxation_times, cfg.sde_trajectories, cfg.seed.wrapping_add(k as u64), exec))
        .collect::<Result<Vec<_>>>()?;

    Ok(ValidationReport { config: *cfg, stability_disagreements, analytic, sde })
}

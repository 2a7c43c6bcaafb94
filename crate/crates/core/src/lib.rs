//! Mechanical squeezing of a mirror coupled to a cavity with an intracavity
//! degenerate parametric amplifier, in the linearized, resolved-sideband
//! regime.
//!
//! The steady-state mirror variances are available three ways: adaptive
//! quadrature of the fluctuation spectra ([`mech_spectra`]), the Lyapunov
//! equation ([`lyapunov`]) and stochastic simulation ([`sde`]). The
//! [`output`] module computes homodyne spectra of the transmitted field and
//! [`cavity_pa`] the bare parametric-amplifier cavity.
//!
//! Rates are in units of the cavity decay rate κ.
//!
//! ```
//! use optomech_squeeze::{params::{solve_steady_state, SystemParams}, mech_spectra::variances};
//! let p = SystemParams::default().with_gain(0.49).with_theta(std::f64::consts::PI / 16.0);
//! let ss = solve_steady_state(&p).unwrap();
//! let (_, var_p) = variances(&ss, &p).unwrap();
//! assert!((var_p - 0.253).abs() < 0.003);
//! ```

// Negated comparisons deliberately treat NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod adiabatic;
pub mod cavity_pa;
pub mod config;
pub mod error;
pub mod exec;
pub mod expr;
pub mod lyapunov;
pub mod mech_spectra;
pub mod output;
pub mod params;
pub mod poly;
pub mod quadrature;
pub mod sde;
pub mod stability;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{solve_steady_state, SteadyState, SystemParams};
pub use stability::{build_drift, DriftModel};

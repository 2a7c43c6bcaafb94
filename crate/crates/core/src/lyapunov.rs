//! Steady-state covariance of the linear fluctuation dynamics.
//!
//! For ḟ = M f + n with white noise, the symmetrized covariance
//! V_ij = ½⟨f_i f_j + f_j f_i⟩ of the stationary state solves
//!
//! ```text
//! M V + V Mᵀ + D = 0,
//! ```
//!
//! where D is the symmetrized noise matrix. The input-noise correlations
//! also contain ⟨Q_in P_in⟩ = −⟨P_in Q_in⟩ = i/2 (and the same for x_in,
//! y_in). Those parts are antisymmetric, so they drop out of the symmetrized
//! D, leaving diag(γ_m(n_m + ½), γ_m(n_m + ½), 2κ(n_c + ½), 2κ(n_c + ½)).
//!
//! The primary solve uses the 10 independent entries of the symmetric V.
//! The full 16×16 Kronecker form is kept as an independent cross-check.

use crate::error::{Error, Result};
use crate::stability::{eigen_stable, spectral_abscissa, DriftModel};
use nalgebra::{Matrix4, SMatrix, SVector};

const N: usize = 4;
const SYM: usize = N * (N + 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    pub v: Matrix4<f64>,
    /// ‖M V + V Mᵀ + D‖_F.
    pub residual: f64,
    /// Largest entrywise difference to the 16×16 solve.
    pub cross_check: f64,
}

impl Covariance {
    pub fn var_q(&self) -> f64 {
        self.v[(0, 0)]
    }

    pub fn var_p(&self) -> f64 {
        self.v[(1, 1)]
    }

    pub fn var_x(&self) -> f64 {
        self.v[(2, 2)]
    }

    pub fn var_y(&self) -> f64 {
        self.v[(3, 3)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.v.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle
    a * N - a * (a + 1) / 2 + b
}

pub fn lyapunov_residual(m: &Matrix4<f64>, v: &Matrix4<f64>, d: &Matrix4<f64>) -> f64 {
    (m * v + v * m.transpose() + d).norm()
}

fn solve_reduced(m: &Matrix4<f64>, d: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    let mut a = SMatrix::<f64, SYM, SYM>::zeros();
    let mut rhs = SVector::<f64, SYM>::zeros();
    for i in 0..N {
        for j in i..N {
            let row = sym_index(i, j);
            for k in 0..N {
                a[(row, sym_index(k, j))] += m[(i, k)];
                a[(row, sym_index(i, k))] += m[(j, k)];
            }
            rhs[row] = -d[(i, j)];
        }
    }
    let x = a.lu().solve(&rhs)?;
    Some(Matrix4::from_fn(|i, j| x[sym_index(i, j)]))
}

fn solve_vectorized(m: &Matrix4<f64>, d: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    let eye = Matrix4::<f64>::identity();
    let op: SMatrix<f64, 16, 16> = eye.kronecker(m) + m.kronecker(&eye);
    let rhs = SVector::<f64, 16>::from_iterator(d.iter().map(|x| -x));
    let x = op.lu().solve(&rhs)?;
    // column-major vec
    Some(Matrix4::from_iterator(x.iter().copied()))
}

/// Stationary covariance via the 10-unknown symmetric reduction.
pub fn steady_covariance(dm: &DriftModel) -> Result<Covariance> {
    let m = &dm.drift;
    let d = &dm.diffusion;
    if !eigen_stable(m) {
        return Err(Error::UnstableSystem { margin: -spectral_abscissa(m) });
    }
    let v = solve_reduced(m, d).ok_or(Error::SingularSolve { residual: f64::INFINITY })?;
    let residual = lyapunov_residual(m, &v, d);
    if !(residual <= 1e-10 * d.norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularSolve { residual });
    }
    let cross_check = match solve_vectorized(m, d) {
        Some(full) => (full - v).amax(),
        None => f64::INFINITY,
    };
    Ok(Covariance { v, residual, cross_check })
}

/// Stationary covariance via the 16×16 Kronecker system.
pub fn steady_covariance_vectorized(dm: &DriftModel) -> Result<Covariance> {
    let m = &dm.drift;
    let d = &dm.diffusion;
    if !eigen_stable(m) {
        return Err(Error::UnstableSystem { margin: -spectral_abscissa(m) });
    }
    let v = solve_vectorized(m, d).ok_or(Error::SingularSolve { residual: f64::INFINITY })?;
    let residual = lyapunov_residual(m, &v, d);
    if !(residual <= 1e-10 * d.norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularSolve { residual });
    }
    Ok(Covariance { v, residual, cross_check: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{solve_steady_state, SystemParams};
    use crate::stability::build_drift;
    use std::f64::consts::PI;

    fn solve(p: &SystemParams) -> Covariance {
        let ss = solve_steady_state(p).unwrap();
        steady_covariance(&build_drift(&ss, p)).unwrap()
    }

    #[test]
    fn index_map_is_a_bijection() {
        let mut seen = [false; SYM];
        for i in 0..N {
            for j in i..N {
                let k = sym_index(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, sym_index(j, i));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn independent_thermal_modes() {
        let p = SystemParams { n_th_m: Some(3.0), n_th_c: Some(0.25), ..SystemParams::default() }.with_cooperativity(0.0);
        let cov = solve(&p);
        let want = Matrix4::from_diagonal(&nalgebra::Vector4::new(3.5, 3.5, 0.75, 0.75));
        assert!((cov.v - want).amax() < 1e-9);
    }

    #[test]
    fn optimum_momentum_variance() {
        let cov = solve(&SystemParams::default().with_gain(0.49).with_theta(PI / 16.0));
        assert!((cov.var_p() - 0.253).abs() < 0.003);
        assert!(cov.residual < 1e-10 * 2.0);
        assert!(cov.cross_check < 1e-8 * cov.v.amax());
        assert!(cov.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn routes_agree_and_residual_is_small() {
        let p = SystemParams { n_th_m: Some(40.0), ..SystemParams::default() }
            .with_gamma_m(1e-3)
            .with_gain(0.3)
            .with_theta(1.1)
            .with_cooperativity(80.0);
        let ss = solve_steady_state(&p).unwrap();
        let dm = build_drift(&ss, &p);
        let a = steady_covariance(&dm).unwrap();
        let b = steady_covariance_vectorized(&dm).unwrap();
        assert!((a.v - b.v).amax() <= 1e-9 * a.v.amax());
        assert!(a.residual / dm.diffusion.norm() < 1e-10);
        assert!((a.v - a.v.transpose()).amax() == 0.0);
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let p = SystemParams::default().with_gain(0.55);
        let ss = solve_steady_state(&p).unwrap();
        assert!(matches!(steady_covariance(&build_drift(&ss, &p)), Err(Error::UnstableSystem { .. })));
    }
}

//! Real-coefficient polynomials: characteristic polynomials of small
//! matrices and simultaneous root finding (Aberth–Ehrlich).

use nalgebra::Matrix4;
use num_complex::Complex64;

/// Coefficients of det(λI − A), lowest degree first, via Faddeev–LeVerrier.
/// The result is monic: `c[4] == 1`.
pub fn characteristic_polynomial(a: &Matrix4<f64>) -> [f64; 5] {
    let n = 4;
    let mut c = [0.0; 5];
    c[n] = 1.0;
    let mut m = Matrix4::<f64>::zeros();
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        m = a * m + Matrix4::identity() * c[n - k + 1];
        let am = a * m;
        c[n - k] = -am.trace() / k as f64;
    }
    c
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of the polynomial `sum coeffs[k] x^k`.
///
/// Trailing (highest-degree) zero coefficients are dropped. Returns an empty
/// vector for constant polynomials.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    // Zero roots factor out exactly.
    let zeros = coeffs.iter().take_while(|c| **c == 0.0).count().min(deg);
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs[zeros..=deg].iter().map(|c| c / lead).collect();
    let d = monic.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if d == 0 {
        return out;
    }
    if d == 1 {
        out.push(Complex64::new(-monic[0], 0.0));
        return out;
    }

    // Cauchy bound and a rotated start circle to avoid symmetric stalls.
    let radius = 1.0 + monic[..d].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let scale = monic[..d]
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs().powf(1.0 / (d - k) as f64))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let r0 = scale.min(radius);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(r0, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / d as f64))
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let (p, dp) = horner(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if w.is_finite() {
                z[i] -= w;
                max_step = max_step.max(w.norm() / z[i].norm().max(r0));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }

    // Newton polish against the original coefficients.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * zi.norm().max(1e-300) {
                break;
            }
            *zi -= step;
        }
    }
    out.extend(z);
    out
}

/// Real roots (imaginary part below `tol` relative to magnitude).
pub fn real_roots(coeffs: &[f64], tol: f64) -> Vec<f64> {
    let mut r: Vec<f64> = roots(coeffs)
        .into_iter()
        .filter(|z| z.im.abs() <= tol * z.norm().max(1.0))
        .map(|z| z.re)
        .collect();
    r.sort_by(|a, b| a.total_cmp(b));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(roots: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        c
    }

    #[test]
    fn quartic_with_distinct_real_roots() {
        let want = [-3.0, -0.5, 0.25, 2.0];
        let got = real_roots(&expand(&want), 1e-9);
        assert_eq!(got.len(), 4);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn complex_pair_and_zero_root() {
        // x (x^2 + 1)
        let z = roots(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(z.len(), 3);
        let mut ims: Vec<f64> = z.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.total_cmp(b));
        assert!((ims[0] + 1.0).abs() < 1e-12 && ims[1].abs() < 1e-12 && (ims[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadruple_root_is_located() {
        let z = roots(&expand(&[-1.0; 4]));
        for r in z {
            assert!((r - Complex64::new(-1.0, 0.0)).norm() < 1e-3);
        }
    }

    #[test]
    fn widely_separated_scales() {
        let want = [-5e-6, -5e-6, -0.51, -1.49];
        let z = roots(&expand(&want));
        let max_re = z.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!((max_re + 5e-6).abs() < 1e-9, "{max_re}");
    }

    #[test]
    fn characteristic_polynomial_of_diagonal() {
        let a = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, 3.0, 4.0));
        let c = characteristic_polynomial(&a);
        let want = expand(&[1.0, 2.0, 3.0, 4.0]);
        for (g, w) in c.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

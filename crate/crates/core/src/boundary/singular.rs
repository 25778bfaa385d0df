//! Principal-value Cauchy operator on the unit circle.
//!
//! `S_0 w(z) = (1/pi) p.v. \int w(zeta) / (zeta - z) d zeta`, so that
//! `(I - i S_0) z^n = 2 z^n` for `n >= 0` and `(I - i S_0) z^{-n} = 0` for `n >= 1`.
//! Targets are the sample nodes, sources sit half a step away; the source values
//! are obtained by trigonometric interpolation. With this placement the rule is
//! exact on trigonometric polynomials of degree below `m / 2`.

use super::{fourier_coefficients, fourier_synthesis, signed_mode, BoundaryFunction};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Samples shifted by half a grid step, `f(theta_j + pi / m)`.
pub(crate) fn half_step_shift(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let mut c = fourier_coefficients(values);
    for (p, v) in c.iter_mut().enumerate() {
        if p == m / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::from_polar(1.0, signed_mode(p, m) as f64 * PI / m as f64);
        }
    }
    fourier_synthesis(&c)
}

/// `S_0` applied to raw samples.
pub(crate) fn singular_w_values(w: &[Complex64]) -> Vec<Complex64> {
    let m = w.len();
    let sources = half_step_shift(w);
    // kernel zeta / (zeta - z) depends only on the index offset
    let kernel: Vec<Complex64> = (0..m)
        .map(|d| {
            let x = 2.0 * PI * (d as f64 + 0.5) / m as f64;
            1.0 / (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -x))
        })
        .collect();
    let scale = Complex64::new(0.0, 2.0 / m as f64);
    (0..m)
        .map(|j| {
            let acc: Complex64 = (0..m).map(|l| sources[l] * kernel[(l + m - j) % m]).sum();
            acc * scale
        })
        .collect()
}

/// `S_0 w`.
pub fn singular_w(w: &BoundaryFunction) -> BoundaryFunction {
    BoundaryFunction::new(singular_w_values(w.values())).expect("same sample count as the input")
}

/// `S_k h = e^{izk} S_0(e^{-izk} h)`.
pub fn cauchy_singular(hb: &BoundaryFunction, k: Complex64) -> BoundaryFunction {
    let w = hb.map(|z, v| (-Complex64::i() * z * k).exp() * v);
    singular_w(&w).map(|z, v| (Complex64::i() * z * k).exp() * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_gives_two() {
        let one = BoundaryFunction::from_fn(64, |_, _| c(1.0, 0.0)).unwrap();
        let s = singular_w(&one);
        for v in s.values() {
            assert!((1.0 - Complex64::i() * v - 2.0).norm() < 1e-13);
        }
    }

    #[test]
    fn plemelj_projections_on_monomials() {
        let m = 64;
        for n in -20i32..=20 {
            let f = BoundaryFunction::from_fn(m, |_, z| z.powi(n)).unwrap();
            let s = singular_w(&f);
            let target = if n >= 0 { 2.0 } else { 0.0 };
            for (j, v) in s.values().iter().enumerate() {
                let lhs = f.values()[j] - Complex64::i() * v;
                assert!((lhs - target * f.values()[j]).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn free_field_exponential_satisfies_the_jump_relation() {
        let k = c(1.5, -0.7);
        let h = BoundaryFunction::from_fn(128, |_, z| (Complex64::i() * z * k).exp()).unwrap();
        let s = cauchy_singular(&h, k);
        for (j, v) in s.values().iter().enumerate() {
            let z = h.point(j);
            let lhs = h.values()[j] - Complex64::i() * v;
            assert!((lhs - 2.0 * (Complex64::i() * z * k).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn half_step_shift_interpolates() {
        let f = BoundaryFunction::from_fn(64, |t, _| c((3.0 * t).sin(), t.cos())).unwrap();
        let g = half_step_shift(f.values());
        for (j, v) in g.iter().enumerate() {
            let t = f.theta(j) + PI / 64.0;
            assert!((v - c((3.0 * t).sin(), t.cos())).norm() < 1e-13);
        }
    }
}

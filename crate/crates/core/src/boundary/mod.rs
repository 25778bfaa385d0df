//! Boundary operators on the unit circle.
//!
//! The domain is the unit disk, so arc length is the angle `theta` and the
//! outer normal is `nu(z) = z`. Functions on the circle are sampled at
//! `theta_j = 2 pi j / m`.

mod dtn;
mod singular;
mod traces;

pub use dtn::{assemble_dtn, dtn_apply, hilbert_hb, solve_bvp, DtnSolver, DtnOptions, DtnOperator, PolarSolution};
pub use singular::{cauchy_singular, singular_w};
pub use traces::{
    boundary_scattering_transform, boundary_transform_w, circle_einvb, circle_w_trace, einvb_limit,
    recover_traces, TraceOptions, TraceSolveReport, Traces,
};

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Smallest admissible sample count.
pub const MIN_BOUNDARY_SAMPLES: usize = 64;

/// Equispaced samples of a complex function on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    values: Vec<Complex64>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        let m = values.len();
        if m < MIN_BOUNDARY_SAMPLES || m % 2 != 0 {
            return Err(Error::Precondition(format!(
                "boundary sample count must be even and at least {MIN_BOUNDARY_SAMPLES}, got {m}"
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Precondition("boundary samples must be finite".into()));
        }
        Ok(BoundaryFunction { values })
    }

    /// Samples `f(theta, z)` with `z = e^{i theta}`.
    pub fn from_fn(m: usize, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        Self::new(
            (0..m)
                .map(|j| {
                    let theta = 2.0 * PI * j as f64 / m as f64;
                    f(theta, Complex64::from_polar(1.0, theta))
                })
                .collect(),
        )
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    pub fn point(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta(j))
    }

    pub fn map(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let values = (0..self.len()).map(|j| f(self.point(j), self.values[j])).collect();
        BoundaryFunction { values }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.len(), other.len(), "boundary functions of different length");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        BoundaryFunction { values }
    }

    /// Mean value `(1 / 2 pi) \int f ds`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Fourier coefficients `c_n`, `f = sum c_n e^{i n theta}`, in FFT order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        fourier_coefficients(&self.values)
    }

    /// Inverse of [`coefficients`](Self::coefficients).
    pub fn from_coefficients(coeffs: &[Complex64]) -> Result<Self> {
        Self::new(fourier_synthesis(coeffs))
    }

    /// Trigonometric interpolation at arbitrary angles.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let c = self.coefficients();
        let m = c.len();
        c.iter()
            .enumerate()
            .map(|(p, cp)| {
                let n = signed_mode(p, m);
                if p == m / 2 {
                    cp * (n as f64 * theta).cos()
                } else {
                    cp * Complex64::from_polar(1.0, n as f64 * theta)
                }
            })
            .sum()
    }
}

pub(crate) fn signed_mode(p: usize, m: usize) -> i64 {
    if p < m / 2 {
        p as i64
    } else {
        p as i64 - m as i64
    }
}

pub(crate) fn fourier_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter_mut().for_each(|c| *c /= m as f64);
    buf
}

pub(crate) fn fourier_synthesis(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Mean-zero tolerance of [`ds_inverse`], relative to `max(1, max |f|)`.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Spectral antiderivative `\int_0^theta f ds` of a zero-mean boundary function.
pub fn ds_inverse(fb: &BoundaryFunction) -> Result<BoundaryFunction> {
    let mean = fb.mean();
    if mean.norm() > ZERO_MEAN_TOL * fb.max_abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "antiderivative needs zero-mean data, mean is {mean:.3e}"
        )));
    }
    Ok(BoundaryFunction::new(antiderivative(&fb.coefficients()))?)
}

/// `sum_{n != 0} c_n (e^{in theta} - 1) / (i n)` sampled on the grid; `c_0` and the Nyquist mode are dropped.
pub(crate) fn antiderivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    let m = coeffs.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let mut at_zero = Complex64::new(0.0, 0.0);
    for (p, c) in coeffs.iter().enumerate() {
        if p == 0 || p == m / 2 {
            continue;
        }
        let n = signed_mode(p, m) as f64;
        let a = c / (Complex64::i() * n);
        out[p] = a;
        at_zero += a;
    }
    let mut values = fourier_synthesis(&out);
    values.iter_mut().for_each(|v| *v -= at_zero);
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sample_count_is_validated() {
        assert!(BoundaryFunction::zeros(62).is_err());
        assert!(BoundaryFunction::zeros(65).is_err());
        assert!(BoundaryFunction::zeros(64).is_ok());
    }

    #[test]
    fn antiderivative_of_sine() {
        let f = BoundaryFunction::from_fn(64, |t, _| c(t.sin(), 0.0)).unwrap();
        let g = ds_inverse(&f).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            assert!((v - (1.0 - f.theta(j).cos())).norm() < 1e-13);
        }
        let zero = ds_inverse(&BoundaryFunction::zeros(64).unwrap()).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let f = BoundaryFunction::from_fn(64, |t, _| c(1.0 + t.cos(), 0.0)).unwrap();
        assert!(matches!(ds_inverse(&f), Err(Error::Precondition(_))));
    }

    #[test]
    fn derivative_inverts_antiderivative() {
        let f = BoundaryFunction::from_fn(128, |t, _| c((3.0 * t).cos() * t.sin(), (2.0 * t).sin().powi(3))).unwrap();
        let g = ds_inverse(&f).unwrap();
        let coeffs = g.coefficients();
        let m = coeffs.len();
        let d: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(p, cp)| if p == m / 2 { c(0.0, 0.0) } else { cp * Complex64::i() * signed_mode(p, m) as f64 })
            .collect();
        let back = fourier_synthesis(&d);
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_exact_for_trigonometric_polynomials() {
        let f = BoundaryFunction::from_fn(64, |t, _| c((5.0 * t).cos(), (2.0 * t).sin())).unwrap();
        let t = 0.123;
        assert!((f.eval(t) - c((5.0 * t).cos(), (2.0 * t).sin())).norm() < 1e-13);
    }
}

//! Uniform square grids of complex samples and the operators acting on them.
//!
//! A [`ComplexGrid`] with `n` samples per axis and half-width `L` stores the
//! values at the nodes
//!
//! ```text
//! z(i, j) = (-L + i h) + i (-L + j h),   h = 2L / n,
//! ```
//!
//! row-major with `i` (the real part) as the slow index. The same type is used
//! for functions of the physical variable `z` and of the spectral variable `k`.
//!
//! # Integrability exponents
//!
//! The analysis this crate follows works with a family of Lebesgue exponents
//! (`p~ > 2` with `1/p~ = 1/p - 1/2`, the `t`-space exponents `r < 2`,
//! `1/r~ = 1/r - 1/2`, `1/r + 1/r' = 1`, and a smoothness gain `eps > 0`).
//! None of them has a finite-grid analogue: every discrete norm here is
//! available for any `p >= 1` through [`grid_norm`], and decay in `|k|` is
//! observed empirically rather than enforced.

mod cauchy;
mod deriv;
mod fft2;
mod interp;

pub use cauchy::{
    anti_cauchy_transform, cauchy_transform, cauchy_transform_at, cauchy_transform_padded,
    CauchyPlan,
};
pub use deriv::{d_derivative, dbar_derivative, fd_d, fd_dbar, fd_partial_x, fd_partial_y, FD_HALF_WIDTH};
pub use interp::TrigInterpolant;

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Fraction of the half-width inside which compactly supported data must live.
pub const SUPPORT_FRACTION: f64 = 0.8;

/// `e(z, k) = exp(i (z k + conj(z k)))`, a unimodular phase.
pub fn e_phase(z: Complex64, k: Complex64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * (z * k).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count {n} must be a power of two and at least 8"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} must be positive and finite"
            )));
        }
        Ok(GridSpec { n, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.coordinate(i), self.coordinate(j))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// All nodes in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| self.node(i, j)))
    }

    /// Radius beyond which compactly supported data must vanish.
    pub fn support_limit(&self) -> f64 {
        SUPPORT_FRACTION * self.half_width
    }
}

/// Samples of a complex function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    spec: GridSpec,
    samples: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        ComplexGrid {
            spec,
            samples: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    pub fn constant(spec: GridSpec, value: Complex64) -> Self {
        ComplexGrid {
            spec,
            samples: vec![value; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        let samples = spec.nodes().map(&mut f).collect();
        ComplexGrid { spec, samples }
    }

    /// Wraps existing samples, rejecting wrong lengths and non-finite values.
    pub fn from_samples(spec: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidGrid(format!("non-finite sample at index {pos}")));
        }
        Ok(ComplexGrid { spec, samples })
    }

    pub(crate) fn from_samples_unchecked(spec: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), spec.len());
        ComplexGrid { spec, samples }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.samples[i * self.spec.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        let n = self.spec.n;
        self.samples[i * n + j] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexGrid {
            spec: self.spec,
            samples: self.samples.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Pointwise map that also sees the node coordinate.
    pub fn map_nodes(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        ComplexGrid {
            spec: self.spec,
            samples: self
                .spec
                .nodes()
                .zip(&self.samples)
                .map(|(z, &c)| f(z, c))
                .collect(),
        }
    }

    pub fn zip_map(&self, other: &ComplexGrid, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.spec, other.spec, "grid mismatch");
        ComplexGrid {
            spec: self.spec,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    /// Largest radius `|z|` at which a sample is nonzero (0 for the zero grid).
    pub fn support_radius(&self) -> f64 {
        self.spec
            .nodes()
            .zip(&self.samples)
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(z, _)| z.norm())
            .fold(0.0, f64::max)
    }

    /// Errors unless every nonzero sample lies within `SUPPORT_FRACTION * L`.
    pub fn check_support(&self) -> Result<()> {
        let limit = self.spec.support_limit();
        let radius = self.support_radius();
        if radius > limit * (1.0 + 1e-9) {
            return Err(Error::SupportViolation { radius, limit });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// A compactly supported [`ComplexGrid`]; samples outside the support disk are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: ComplexGrid,
    support_radius: f64,
}

impl Potential {
    /// Masks `grid` to the disk of radius `support_radius`.
    pub fn new(mut grid: ComplexGrid, support_radius: f64) -> Result<Self> {
        let limit = grid.spec().support_limit();
        if !(support_radius > 0.0) || support_radius > limit * (1.0 + 1e-12) {
            return Err(Error::SupportViolation {
                radius: support_radius,
                limit,
            });
        }
        if !grid.is_finite() {
            return Err(Error::InvalidGrid("potential has non-finite samples".into()));
        }
        let spec = grid.spec();
        for (z, c) in spec.nodes().zip(grid.samples_mut()) {
            if z.norm() > support_radius {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Potential {
            grid,
            support_radius,
        })
    }

    pub fn zero(spec: GridSpec) -> Self {
        Potential {
            grid: ComplexGrid::zeros(spec),
            support_radius: spec.support_limit(),
        }
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.grid
    }

    pub fn into_grid(self) -> ComplexGrid {
        self.grid
    }

    pub fn spec(&self) -> GridSpec {
        self.grid.spec()
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn is_zero(&self) -> bool {
        self.grid.samples().iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Nodes (flat indices) inside the support disk, in storage order.
    pub fn support_indices(&self) -> Vec<usize> {
        let r = self.support_radius;
        self.spec()
            .nodes()
            .enumerate()
            .filter(|(_, z)| z.norm() <= r)
            .map(|(idx, _)| idx)
            .collect()
    }
}

/// Discrete `L^p` norm `(h^2 sum |f|^p)^(1/p)`; `p = f64::INFINITY` gives the max norm.
pub fn grid_norm(f: &ComplexGrid, p: f64) -> f64 {
    assert!(p >= 1.0, "norm exponent must be at least 1");
    if p.is_infinite() {
        return f.max_abs();
    }
    let h2 = f.spacing() * f.spacing();
    if p == 2.0 {
        return (h2 * f.samples().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
    }
    (h2 * f.samples().iter().map(|c| c.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `||a - b|| / ||a||` in the discrete `L^p` norm; 0 when both vanish.
pub fn relative_error(reference: &ComplexGrid, other: &ComplexGrid, p: f64) -> f64 {
    let diff = reference.zip_map(other, |a, b| a - b);
    let num = grid_norm(&diff, p);
    let den = grid_norm(reference, p);
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

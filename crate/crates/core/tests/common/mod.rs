#![allow(dead_code)]

use dbar::convection::ConvectionField;
use dbar::grid::{ComplexGrid, GridSpec, Potential};
use dbar::pipeline::{make_phantom, smooth_cutoff, Phantom};
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn spec(n: usize, half_width: f64) -> GridSpec {
    GridSpec::new(n, half_width).unwrap()
}

/// `amp * exp(-|z - center|^2 / width^2)`, rolled off smoothly between radii 0.6 and 0.8.
pub fn gauss_potential(n: usize, amp: Complex64, width: f64, center: Complex64) -> Potential {
    let g = ComplexGrid::from_fn(spec(n, 1.0), |z| {
        amp * (-(z - center).norm_sqr() / (width * width)).exp() * smooth_cutoff(z.norm(), 0.6, 0.8)
    });
    Potential::new(g, 0.8).unwrap()
}

/// The Gaussian convection field used by the boundary checks.
pub fn gauss_field(n: usize) -> ConvectionField {
    make_phantom(&Phantom::gauss(0.3, 0.15, 0.25), n, 1.0).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

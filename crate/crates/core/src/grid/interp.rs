use super::fft2::{signed_frequency, Fft2};
use super::ComplexGrid;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Trigonometric interpolant of grid data on its periodic box `[-L, L)^2`.
///
/// Spectrally accurate for smooth data that is compactly supported inside the box.
pub struct TrigInterpolant {
    n: usize,
    half_width: f64,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(f: &ComplexGrid) -> Self {
        let n = f.n();
        let mut coeffs = f.samples().to_vec();
        Fft2::new(n).forward(&mut coeffs);
        let scale = 1.0 / (n * n) as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        TrigInterpolant {
            n,
            half_width: f.half_width(),
            coeffs,
        }
    }

    fn basis(&self, x: f64) -> Vec<Complex64> {
        let step = PI / self.half_width;
        let t = x + self.half_width;
        (0..self.n)
            .map(|p| {
                let m = signed_frequency(p, self.n);
                if p == self.n / 2 {
                    // symmetric treatment of the Nyquist mode
                    Complex64::new((step * m as f64 * t).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, step * m as f64 * t)
                }
            })
            .collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let bx = self.basis(z.re);
        let by = self.basis(z.im);
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, ex) in bx.iter().enumerate() {
            let row = &self.coeffs[p * n..(p + 1) * n];
            let inner: Complex64 = row.iter().zip(&by).map(|(c, e)| c * e).sum();
            acc += ex * inner;
        }
        acc
    }
}

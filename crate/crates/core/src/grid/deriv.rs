use super::fft2::{signed_frequency, Fft2};
use super::ComplexGrid;
use num_complex::Complex64;
use std::f64::consts::PI;

fn spectral(f: &ComplexGrid, symbol: impl Fn(f64, f64) -> Complex64) -> ComplexGrid {
    let n = f.n();
    let fft = Fft2::new(n);
    let mut buf = f.samples().to_vec();
    fft.forward(&mut buf);
    let step = PI / f.half_width();
    for p in 0..n {
        for q in 0..n {
            let idx = p * n + q;
            if p == n / 2 || q == n / 2 {
                buf[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let xi1 = step * signed_frequency(p, n) as f64;
            let xi2 = step * signed_frequency(q, n) as f64;
            buf[idx] *= symbol(xi1, xi2);
        }
    }
    fft.inverse(&mut buf);
    let scale = 1.0 / (n * n) as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    ComplexGrid::from_samples_unchecked(f.spec(), buf)
}

/// Spectral `dbar = (d_x + i d_y) / 2` of periodic data; Nyquist modes are dropped.
pub fn dbar_derivative(f: &ComplexGrid) -> ComplexGrid {
    spectral(f, |a, b| 0.5 * Complex64::i() * Complex64::new(a, b))
}

/// Spectral `d = (d_x - i d_y) / 2` of periodic data; Nyquist modes are dropped.
pub fn d_derivative(f: &ComplexGrid) -> ComplexGrid {
    spectral(f, |a, b| 0.5 * Complex64::i() * Complex64::new(a, -b))
}

/// Nodes within this distance of the edge get no finite-difference value.
pub const FD_HALF_WIDTH: usize = 4;

const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn fd_partial(f: &ComplexGrid, along_x: bool) -> ComplexGrid {
    let n = f.n();
    let h = f.spacing();
    let mut out = ComplexGrid::zeros(f.spec());
    for i in FD_HALF_WIDTH..n - FD_HALF_WIDTH {
        for j in FD_HALF_WIDTH..n - FD_HALF_WIDTH {
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, w) in FD8.iter().enumerate() {
                let s = s + 1;
                let (plus, minus) = if along_x {
                    (f.get(i + s, j), f.get(i - s, j))
                } else {
                    (f.get(i, j + s), f.get(i, j - s))
                };
                acc += (plus - minus) * *w;
            }
            out.set(i, j, acc / h);
        }
    }
    out
}

/// Eighth-order central difference in `x`; for data that is not periodic.
pub fn fd_partial_x(f: &ComplexGrid) -> ComplexGrid {
    fd_partial(f, true)
}

pub fn fd_partial_y(f: &ComplexGrid) -> ComplexGrid {
    fd_partial(f, false)
}

pub fn fd_dbar(f: &ComplexGrid) -> ComplexGrid {
    fd_partial_x(f).zip_map(&fd_partial_y(f), |dx, dy| 0.5 * (dx + Complex64::i() * dy))
}

pub fn fd_d(f: &ComplexGrid) -> ComplexGrid {
    fd_partial_x(f).zip_map(&fd_partial_y(f), |dx, dy| 0.5 * (dx - Complex64::i() * dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn bump(z: Complex64) -> f64 {
        // 1 on |z| <= 0.3, smooth transition to 0 at |z| = 0.8
        let r = z.norm();
        if r <= 0.3 {
            return 1.0;
        }
        if r >= 0.8 {
            return 0.0;
        }
        let t = (r - 0.3) / 0.5;
        let a = (-1.0 / (1.0 - t)).exp();
        let b = (-1.0 / t).exp();
        a / (a + b)
    }

    #[test]
    fn constants_have_zero_derivative() {
        let spec = GridSpec::new(16, 1.0).unwrap();
        let f = ComplexGrid::constant(spec, Complex64::new(2.0, -1.0));
        assert!(dbar_derivative(&f).max_abs() < 1e-14);
        assert!(d_derivative(&f).max_abs() < 1e-14);
    }

    #[test]
    fn conj_z_times_bump() {
        let spec = GridSpec::new(256, 1.0).unwrap();
        let f = ComplexGrid::from_fn(spec, |z| z.conj() * bump(z));
        let g = ComplexGrid::from_fn(spec, |z| z * bump(z));
        let df = dbar_derivative(&f);
        let dg = dbar_derivative(&g);
        let dz = d_derivative(&g);
        for (z, ((a, b), c)) in spec
            .nodes()
            .zip(df.samples().iter().zip(dg.samples()).zip(dz.samples()))
        {
            if z.norm() < 0.25 {
                assert!((a - 1.0).norm() < 1e-7, "{z} {a}");
                assert!(b.norm() < 1e-7);
                assert!((c - 1.0).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn finite_differences_exact_on_polynomials() {
        let spec = GridSpec::new(32, 1.0).unwrap();
        let f = ComplexGrid::from_fn(spec, |z| z * z * z.conj() + z.conj().powi(3));
        let df = fd_dbar(&f);
        for i in FD_HALF_WIDTH..32 - FD_HALF_WIDTH {
            for j in FD_HALF_WIDTH..32 - FD_HALF_WIDTH {
                let z = spec.node(i, j);
                let expected = z * z + 3.0 * z.conj().powi(2);
                assert!((df.get(i, j) - expected).norm() < 1e-11);
            }
        }
    }
}

//! Solid Cauchy transform `dbar^{-1} f(z) = (1/pi) \int f(w) / (z - w) dA(w)`.
//!
//! The free-space kernel `1/(pi z)` is truncated to the disk of radius `2L`
//! and periodized on a box of side `4L` (the grid zero-padded to `2n`). The
//! exact Fourier coefficients of the truncated kernel are (Nyquist modes dropped)
//!
//! ```text
//! K(xi) = 2 (1 - J0(2L |xi|)) / (i (xi_1 + i xi_2)),   K(0) = 0,
//! ```
//!
//! so the discrete transform is the exact Cauchy transform of the
//! trigonometric interpolant of the data. For data supported in the disk of
//! radius `s` the result coincides with the free-space transform at every
//! node with `|z| <= 2L - s`, which covers the whole inscribed disk when
//! `s <= 0.8 L`.

use super::fft2::{signed_frequency, transpose_in_place, Fft2};
use super::{ComplexGrid, GridSpec};
use crate::error::Result;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

pub struct CauchyPlan {
    spec: GridSpec,
    fft: Fft2,
    /// Kernel coefficients in transposed layout: `[q * np + p]`, `p` the x-frequency bin.
    kernel_t: Vec<Complex64>,
}

impl CauchyPlan {
    pub fn new(spec: GridSpec) -> Self {
        let np = 2 * spec.n;
        let period = np as f64 * spec.spacing();
        let radius = 2.0 * spec.half_width;
        let mut kernel_t = vec![Complex64::new(0.0, 0.0); np * np];
        for q in 0..np {
            let xi2 = 2.0 * PI * signed_frequency(q, np) as f64 / period;
            for p in 0..np {
                let xi1 = 2.0 * PI * signed_frequency(p, np) as f64 / period;
                if (p == 0 && q == 0) || p == np / 2 || q == np / 2 {
                    continue;
                }
                let rho = xi1.hypot(xi2);
                let taper = 1.0 - libm::j0(radius * rho);
                kernel_t[q * np + p] = 2.0 * taper / (Complex64::i() * Complex64::new(xi1, xi2));
            }
        }
        CauchyPlan {
            spec,
            fft: Fft2::new(np),
            kernel_t,
        }
    }

    /// Process-wide plan for `spec`, built on first use.
    pub fn shared(spec: GridSpec) -> Arc<CauchyPlan> {
        static PLANS: OnceLock<Mutex<HashMap<(usize, u64), Arc<CauchyPlan>>>> = OnceLock::new();
        let key = (spec.n, spec.half_width.to_bits());
        let plans = PLANS.get_or_init(Default::default);
        if let Some(plan) = plans.lock().unwrap().get(&key) {
            return plan.clone();
        }
        let plan = Arc::new(CauchyPlan::new(spec));
        plans.lock().unwrap().entry(key).or_insert(plan).clone()
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// FFT transform without the support check or corner correction.
    ///
    /// Exact (free-space) at nodes with `|z| <= 2L - s` for data supported in radius `s`.
    pub fn apply_unchecked(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.apply_rows(f, 0..self.spec.n)
    }

    /// Like [`apply_unchecked`](Self::apply_unchecked) but only for the node rows `rows`
    /// (first index), returned row-major as `rows.len() x n`.
    pub fn apply_rows(&self, f: &[Complex64], rows: Range<usize>) -> Vec<Complex64> {
        let n = self.spec.n;
        assert!(rows.end <= n);
        let np = 2 * n;
        let off = n / 2;
        let mut buf = self.spectrum(f);
        for q in 0..np {
            self.fft.row_inverse(&mut buf[q * np..(q + 1) * np]);
        }
        transpose_in_place(&mut buf, np);
        let scale = 1.0 / (np * np) as f64;
        let mut out = Vec::with_capacity(rows.len() * n);
        for i in rows {
            let row = &mut buf[(off + i) * np..(off + i + 1) * np];
            self.fft.row_inverse(row);
            out.extend(row[off..off + n].iter().map(|c| c * scale));
        }
        out
    }

    /// Free-space transform at every node.
    ///
    /// Nodes beyond the periodization-exact disk are filled in by direct summation.
    pub fn apply(&self, f: &ComplexGrid) -> Result<ComplexGrid> {
        assert_eq!(f.spec(), self.spec, "plan/grid mismatch");
        f.check_support()?;
        let mut g = ComplexGrid::from_samples_unchecked(self.spec, self.apply_unchecked(f.samples()));
        let exact = 2.0 * self.spec.half_width - f.support_radius();
        for (idx, z) in self.spec.nodes().enumerate() {
            if z.norm() > exact {
                g.samples_mut()[idx] = cauchy_transform_at(f, z);
            }
        }
        Ok(g)
    }

    /// The transform on the whole zero-padded box `[-2L, 2L)^2`, where it is exactly periodic.
    pub fn apply_padded(&self, f: &ComplexGrid) -> Result<ComplexGrid> {
        assert_eq!(f.spec(), self.spec, "plan/grid mismatch");
        f.check_support()?;
        let np = 2 * self.spec.n;
        let mut buf = self.spectrum(f.samples());
        for q in 0..np {
            self.fft.row_inverse(&mut buf[q * np..(q + 1) * np]);
        }
        transpose_in_place(&mut buf, np);
        for row in buf.chunks_mut(np) {
            self.fft.row_inverse(row);
        }
        let scale = 1.0 / (np * np) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        let spec = GridSpec::new(np, 2.0 * self.spec.half_width)?;
        Ok(ComplexGrid::from_samples_unchecked(spec, buf))
    }

    /// Real-space weight `w(di, dj)` with `(T f)_{i,j} = sum w(i - i', j - j') f_{i',j'}`.
    pub fn real_space_kernel(&self) -> KernelTable {
        let n = self.spec.n;
        let np = 2 * n;
        let mut buf = vec![Complex64::new(0.0, 0.0); np * np];
        for q in 0..np {
            for p in 0..np {
                buf[p * np + q] = self.kernel_t[q * np + p];
            }
        }
        self.fft.inverse(&mut buf);
        let scale = 1.0 / (np * np) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        KernelTable { np, weights: buf }
    }

    /// Forward spectrum of the zero-padded data times the kernel, transposed layout.
    fn spectrum(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.spec.n;
        let np = 2 * n;
        let off = n / 2;
        assert_eq!(f.len(), n * n);
        let mut buf = vec![Complex64::new(0.0, 0.0); np * np];
        for i in 0..n {
            let src = &f[i * n..(i + 1) * n];
            if src.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            let row = &mut buf[(off + i) * np..(off + i + 1) * np];
            row[off..off + n].copy_from_slice(src);
            self.fft.row_forward(row);
        }
        transpose_in_place(&mut buf, np);
        for (row, krow) in buf.chunks_mut(np).zip(self.kernel_t.chunks(np)) {
            self.fft.row_forward(row);
            row.iter_mut().zip(krow).for_each(|(c, k)| *c *= k);
        }
        buf
    }
}

/// Tabulated real-space convolution weights of a [`CauchyPlan`].
pub struct KernelTable {
    np: usize,
    weights: Vec<Complex64>,
}

impl KernelTable {
    pub fn weight(&self, di: i64, dj: i64) -> Complex64 {
        let np = self.np as i64;
        let p = di.rem_euclid(np) as usize;
        let q = dj.rem_euclid(np) as usize;
        self.weights[p * self.np + q]
    }
}

/// `dbar^{-1} f`, so that `dbar g = f` and `g -> 0` at infinity.
pub fn cauchy_transform(f: &ComplexGrid) -> Result<ComplexGrid> {
    CauchyPlan::shared(f.spec()).apply(f)
}

/// `d^{-1} f = conj(dbar^{-1} conj f)`.
pub fn anti_cauchy_transform(f: &ComplexGrid) -> Result<ComplexGrid> {
    Ok(cauchy_transform(&f.conj())?.conj())
}

/// The Cauchy transform on the `2n x 2n` padded box of half-width `2L`.
pub fn cauchy_transform_padded(f: &ComplexGrid) -> Result<ComplexGrid> {
    CauchyPlan::shared(f.spec()).apply_padded(f)
}

/// Direct trapezoid sum `(h^2 / pi) sum f(w) / (z - w)` at an arbitrary point.
///
/// Spectrally accurate for `z` outside the support of smooth data; nodes
/// coinciding with `z` are skipped.
pub fn cauchy_transform_at(f: &ComplexGrid, z: Complex64) -> Complex64 {
    let spec = f.spec();
    let weight = spec.spacing() * spec.spacing() / PI;
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, &v) in spec.nodes().zip(f.samples()) {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let d = z - w;
        if d.re == 0.0 && d.im == 0.0 {
            continue;
        }
        acc += v / d;
    }
    acc * weight
}

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Square 2-D FFT of side `n` built from row transforms and transposes.
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn row_forward(&self, rows: &mut [Complex64]) {
        self.forward.process(rows);
    }

    pub(crate) fn row_inverse(&self, rows: &mut [Complex64]) {
        self.inverse.process(rows);
    }

    /// Unnormalized forward transform in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse transform in place (scale by `1/n^2` to invert `forward`).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n);
        fft.process(data);
        transpose_in_place(data, self.n);
        fft.process(data);
        transpose_in_place(data, self.n);
    }
}

pub(crate) fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Signed integer frequency of FFT bin `p` for a transform of length `n`.
pub(crate) fn signed_frequency(p: usize, n: usize) -> i64 {
    if p < n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

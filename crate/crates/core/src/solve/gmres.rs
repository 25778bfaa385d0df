//! Restarted GMRES for real-linear operators on complex vectors.
//!
//! Conjugate-linear integral operators are only linear over the reals, so the
//! Krylov space is built with the real inner product `Re <x, y>`. This is
//! GMRES on the `2N`-dimensional real system without materializing the split.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GmresOptions {
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
    /// Total operator applications allowed across restarts.
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-10,
            max_iter: 500,
            restart: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Final relative residual, recomputed from the operator.
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual_vec(op: &mut impl FnMut(&[Complex64]) -> Vec<Complex64>, b: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let ax = op(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves `A x = b` for a real-linear `A` given as a closure.
///
/// A zero right-hand side returns `x = 0` without applying the operator.
pub fn gmres(
    mut op: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let dim = b.len();
    let bnorm = norm(b);
    let mut x = vec![Complex64::new(0.0, 0.0); dim];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(GmresOutcome {
                x,
                iterations,
                residual: rel,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: rel,
            });
        }
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|c| c / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut cols = 0;
        for j in 0..m {
            let mut w = op(&basis[j]);
            iterations += 1;
            // modified Gram-Schmidt, applied twice for stability
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(v, &w);
                    h[i][j] += hij;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= vk * hij);
                }
            }
            let hnext = norm(&w);
            h[j + 1][j] = hnext;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            let done = g[j + 1].abs() / bnorm <= opts.tol || iterations >= opts.max_iter;
            if done || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|c| c / hnext).collect());
        }
        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= h[i][l] * yl;
            }
            y[i] = if h[i][i] == 0.0 { 0.0 } else { acc / h[i][i] };
        }
        for (v, yi) in basis.iter().zip(&y) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += vk * *yi);
        }
        r = residual_vec(&mut op, b, &x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let out = gmres(|_| unreachable!(), &[c(0.0, 0.0); 4], &GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn solves_conjugate_linear_system() {
        // x + a * conj(x) = b has the closed form x = (b - a conj b) / (1 - |a|^2)
        let a = [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.7)];
        let b = [c(1.0, -2.0), c(0.5, 0.5), c(-1.0, 0.25)];
        let op = |x: &[Complex64]| x.iter().zip(&a).map(|(xi, ai)| xi + ai * xi.conj()).collect();
        let out = gmres(op, &b, &GmresOptions::default()).unwrap();
        for ((xi, ai), bi) in out.x.iter().zip(&a).zip(&b) {
            let expected = (bi - ai * bi.conj()) / (1.0 - ai.norm_sqr());
            assert!((xi - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let opts = GmresOptions {
            tol: 1e-14,
            max_iter: 2,
            restart: 1,
        };
        let diag: Vec<f64> = (1..=20).map(|v| v as f64).collect();
        let op = |x: &[Complex64]| x.iter().zip(&diag).map(|(v, d)| v * d).collect();
        let err = gmres(op, &vec![c(1.0, 1.0); 20], &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, .. }));
    }

    proptest! {
        #[test]
        fn restarts_still_converge(seed in proptest::collection::vec(-1.0..1.0f64, 16)) {
            let n = 8;
            let op = |x: &[Complex64]| {
                (0..n).map(|i| {
                    let mut acc = x[i] * 3.0;
                    for j in 0..n {
                        acc += x[j].conj() * Complex64::new(seed[(i + j) % 16], seed[(i * j) % 16]) * 0.2;
                    }
                    acc
                }).collect::<Vec<_>>()
            };
            let b: Vec<Complex64> = (0..n).map(|i| c(seed[i], seed[i + 8])).collect();
            let opts = GmresOptions { tol: 1e-11, max_iter: 400, restart: 3 };
            let out = gmres(op, &b, &opts).unwrap();
            let ax = op(&out.x);
            let err: f64 = ax.iter().zip(&b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-10 * bn.max(1e-300) + 1e-300);
        }
    }
}

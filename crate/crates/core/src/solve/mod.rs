//! Krylov solution of whole-plane pseudo-analytic equations
//!
//! ```text
//! dbar w + alpha w + beta conj(w) = 0,   w -> 1 at infinity,
//! ```
//!
//! with `alpha`, `beta` compactly supported. Writing `w = 1 - dbar^{-1}(alpha w + beta conj w)`
//! the unknown only needs to be carried on the support of the coefficients,
//! which keeps the Krylov vectors short. The equation is conjugate-linear, so
//! it is solved with the real-linear [`gmres`].

mod gmres;

pub use gmres::{gmres, GmresOptions, GmresOutcome};

use crate::error::{Error, Result};
use crate::grid::{CauchyPlan, ComplexGrid};
use num_complex::Complex64;
use rayon::prelude::*;

/// Which of the two normalized solutions is meant.
///
/// `Real` is the solution behaving like `e^{izk}`, `Imag` the one behaving
/// like `i e^{izk}`. After factoring out the exponential both reduce to
/// `dbar w + ... + sign * (...) conj(w) = 0` with `sign` given by [`Branch::sign`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Real,
    Imag,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Real => 1.0,
            Branch::Imag => -1.0,
        }
    }

    /// `1` or `i`, the constant multiplying `e^{izk}` at infinity.
    pub fn unit(self) -> Complex64 {
        match self {
            Branch::Real => Complex64::new(1.0, 0.0),
            Branch::Imag => Complex64::i(),
        }
    }
}

/// Runs independent solves in parallel, keeping input order.
///
/// Failures are collected into [`Error::Batch`] carrying every failing point.
pub fn run_batch<T: Send>(
    points: &[Complex64],
    f: impl Fn(Complex64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = points.par_iter().map(|&p| f(p)).collect();
    let total = results.len();
    let mut out = Vec::with_capacity(total);
    let mut failures: Vec<(Complex64, Error)> = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push((*p, e)),
        }
    }
    if failures.is_empty() {
        return Ok(out);
    }
    let failed_points: Vec<Complex64> = failures.iter().map(|(p, _)| *p).collect();
    let (first_point, first_error) = failures.swap_remove(0);
    Err(Error::Batch {
        count: failed_points.len(),
        total,
        first_point,
        first_error: Box::new(first_error),
        failed_points,
    })
}

/// Solution values on the coefficient support.
#[derive(Debug, Clone)]
pub struct SupportSolution {
    /// Row-major node indices where a coefficient is nonzero.
    pub indices: Vec<usize>,
    /// `w` at `indices`.
    pub values: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

struct Coefficients<'a> {
    alpha: Option<&'a ComplexGrid>,
    beta: &'a ComplexGrid,
}

impl Coefficients<'_> {
    fn source(&self, idx: usize, w: Complex64) -> Complex64 {
        let mut s = self.beta.samples()[idx] * w.conj();
        if let Some(a) = self.alpha {
            s += a.samples()[idx] * w;
        }
        s
    }
}

/// Solves `dbar w + alpha w + beta conj(w) = 0`, `w -> 1`, on the support of the coefficients.
pub fn solve_on_support(
    alpha: Option<&ComplexGrid>,
    beta: &ComplexGrid,
    opts: &GmresOptions,
) -> Result<SupportSolution> {
    let spec = beta.spec();
    beta.check_support()?;
    if let Some(a) = alpha {
        assert_eq!(a.spec(), spec, "coefficient grids differ");
        a.check_support()?;
    }
    let zero = |c: &Complex64| c.re == 0.0 && c.im == 0.0;
    let indices: Vec<usize> = (0..spec.len())
        .filter(|&idx| !zero(&beta.samples()[idx]) || alpha.is_some_and(|a| !zero(&a.samples()[idx])))
        .collect();
    if indices.is_empty() {
        return Ok(SupportSolution {
            indices,
            values: Vec::new(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let n = spec.n;
    let rows = indices[0] / n..indices[indices.len() - 1] / n + 1;
    let plan = CauchyPlan::shared(spec);
    let coeffs = Coefficients { alpha, beta };
    let mut scratch = vec![Complex64::new(0.0, 0.0); spec.len()];
    // u -> [dbar^{-1}(alpha u + beta conj u)] restricted to the support
    let mut transform = |u: &[Complex64], affine: bool| -> Vec<Complex64> {
        for (&idx, &v) in indices.iter().zip(u) {
            let w = if affine { v + 1.0 } else { v };
            scratch[idx] = coeffs.source(idx, w);
        }
        let band = plan.apply_rows(&scratch, rows.clone());
        indices.iter().map(|&idx| band[idx - rows.start * n]).collect()
    };
    let zeros = vec![Complex64::new(0.0, 0.0); indices.len()];
    let rhs: Vec<Complex64> = transform(&zeros, true).iter().map(|c| -c).collect();
    let outcome = gmres(
        |u| {
            let tu = transform(u, false);
            u.iter().zip(&tu).map(|(a, b)| a + b).collect()
        },
        &rhs,
        opts,
    )?;
    Ok(SupportSolution {
        values: outcome.x.iter().map(|u| u + 1.0).collect(),
        indices,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

/// Extends a support solution to every grid node via `w = 1 - dbar^{-1}(alpha w + beta conj w)`.
pub fn extend_to_grid(
    sol: &SupportSolution,
    alpha: Option<&ComplexGrid>,
    beta: &ComplexGrid,
) -> Result<ComplexGrid> {
    let spec = beta.spec();
    let coeffs = Coefficients { alpha, beta };
    let mut source = ComplexGrid::zeros(spec);
    for (&idx, &w) in sol.indices.iter().zip(&sol.values) {
        source.samples_mut()[idx] = coeffs.source(idx, w);
    }
    let t = CauchyPlan::shared(spec).apply(&source)?;
    Ok(t.map(|v| 1.0 - v))
}

/// Full-grid solve: [`solve_on_support`] followed by [`extend_to_grid`].
pub fn solve_pseudo_analytic(
    alpha: Option<&ComplexGrid>,
    beta: &ComplexGrid,
    opts: &GmresOptions,
) -> Result<(ComplexGrid, SupportSolution)> {
    let sol = solve_on_support(alpha, beta, opts)?;
    let w = extend_to_grid(&sol, alpha, beta)?;
    Ok((w, sol))
}

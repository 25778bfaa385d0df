//! Convection coefficients and the potential they induce.
//!
//! For `Delta u + b1 u_x + b2 u_y = 0` set `b = (b1 + i b2) / 4`. Then `w = du`
//! solves `dbar w + b w + conj(b) conj(w) = 0`, and with
//!
//! ```text
//! q = conj(b) exp(dbar^{-1} b - d^{-1} conj(b)) = conj(b) exp(2i Im dbar^{-1} b)
//! ```
//!
//! the whole-plane solutions are related by `W = e^{-dbar^{-1} b} Psi`.
//!
//! Phase unwrapping inverts `b -> q`: the solution of `dbar v + conj(q) conj(v) = 0`,
//! `v -> 1`, is `v = e^{-dbar^{-1} b}` and `b = conj(q) conj(v) / v`.

use crate::error::{Error, Result};
use crate::grid::{
    cauchy_transform, e_phase, fd_d, fd_dbar, fd_partial_x, fd_partial_y, ComplexGrid, Potential, FD_HALF_WIDTH,
};
use crate::solve::{extend_to_grid, solve_on_support, Branch, GmresOptions};
use num_complex::Complex64;

/// Real coefficients `b1`, `b2` (stored with zero imaginary part) and `b = (b1 + i b2) / 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvectionField {
    b1: ComplexGrid,
    b2: ComplexGrid,
    b: Potential,
}

fn is_real(g: &ComplexGrid) -> bool {
    g.samples().iter().all(|c| c.im == 0.0)
}

impl ConvectionField {
    /// Builds the field from real grids, masking outside `support_radius`.
    pub fn new(b1: ComplexGrid, b2: ComplexGrid, support_radius: f64) -> Result<Self> {
        if b1.spec() != b2.spec() {
            return Err(Error::Precondition("b1 and b2 live on different grids".into()));
        }
        if !is_real(&b1) || !is_real(&b2) {
            return Err(Error::Precondition("convection coefficients must be real".into()));
        }
        let b1 = Potential::new(b1, support_radius)?.into_grid();
        let b2 = Potential::new(b2, support_radius)?.into_grid();
        let b = Potential::new(b1.zip_map(&b2, |x, y| 0.25 * (x + Complex64::i() * y)), support_radius)?;
        Ok(ConvectionField { b1, b2, b })
    }

    /// Inverse of the `b = (b1 + i b2) / 4` packing.
    pub fn from_b(b: Potential) -> Self {
        let b1 = b.grid().map(|v| Complex64::new(4.0 * v.re, 0.0));
        let b2 = b.grid().map(|v| Complex64::new(4.0 * v.im, 0.0));
        ConvectionField { b1, b2, b }
    }

    pub fn b1(&self) -> &ComplexGrid {
        &self.b1
    }

    pub fn b2(&self) -> &ComplexGrid {
        &self.b2
    }

    pub fn b(&self) -> &Potential {
        &self.b
    }

    pub fn support_radius(&self) -> f64 {
        self.b.support_radius()
    }

    /// `e^{-dbar^{-1} b}` on the grid.
    pub fn einvb(&self) -> Result<ComplexGrid> {
        Ok(cauchy_transform(self.b.grid())?.map(|v| (-v).exp()))
    }
}

/// `q = conj(b) exp(2i Im dbar^{-1} b)`.
pub fn q_from_b(f: &ConvectionField) -> Result<Potential> {
    let tb = cauchy_transform(f.b().grid())?;
    let q = f
        .b()
        .grid()
        .zip_map(&tb, |b, t| b.conj() * Complex64::from_polar(1.0, 2.0 * t.im));
    Potential::new(q, f.support_radius())
}

/// Normalized whole-plane solutions `w_r = e^{-izk} W_r`, `w_i = -i e^{-izk} W_i`.
#[derive(Debug, Clone)]
pub struct WPair {
    pub w_r: ComplexGrid,
    pub w_i: ComplexGrid,
    pub k: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

impl WPair {
    pub fn big_w_r(&self) -> ComplexGrid {
        let k = self.k;
        self.w_r.map_nodes(|z, v| (Complex64::i() * z * k).exp() * v)
    }

    pub fn big_w_i(&self) -> ComplexGrid {
        let k = self.k;
        self.w_i.map_nodes(|z, v| Complex64::i() * (Complex64::i() * z * k).exp() * v)
    }
}

/// `(alpha, beta) = (b, sign * e(z,-k) conj(b))`.
pub(crate) fn w_coefficients(f: &ConvectionField, k: Complex64, branch: Branch) -> (ComplexGrid, ComplexGrid) {
    let s = branch.sign();
    let b = f.b().grid();
    let beta = b.map_nodes(|z, v| {
        if v.re == 0.0 && v.im == 0.0 {
            v
        } else {
            s * e_phase(z, -k) * v.conj()
        }
    });
    (b.clone(), beta)
}

/// Solves `dbar w + b w + sign * e(z,-k) conj(b) conj(w) = 0`, `w -> 1`.
///
/// `Branch::Real` gives `W_r = e^{izk} w`, `Branch::Imag` gives `W_i = i e^{izk} w`.
pub fn solve_w(f: &ConvectionField, k: Complex64, branch: Branch, opts: &GmresOptions) -> Result<ComplexGrid> {
    Ok(solve_w_with_report(f, k, branch, opts)?.0)
}

fn solve_w_with_report(
    f: &ConvectionField,
    k: Complex64,
    branch: Branch,
    opts: &GmresOptions,
) -> Result<(ComplexGrid, usize, f64)> {
    let (alpha, beta) = w_coefficients(f, k, branch);
    let sol = solve_on_support(Some(&alpha), &beta, opts)?;
    let w = extend_to_grid(&sol, Some(&alpha), &beta)?;
    Ok((w, sol.iterations, sol.residual))
}

pub fn solve_w_pair(f: &ConvectionField, k: Complex64, opts: &GmresOptions) -> Result<WPair> {
    let (w_r, it_r, res_r) = solve_w_with_report(f, k, Branch::Real, opts)?;
    let (w_i, it_i, res_i) = solve_w_with_report(f, k, Branch::Imag, opts)?;
    Ok(WPair {
        w_r,
        w_i,
        k,
        iterations: it_r + it_i,
        residual: res_r.max(res_i),
    })
}

/// Result of [`phase_unwrap`].
#[derive(Debug, Clone)]
pub struct Unwrapped {
    pub field: ConvectionField,
    /// The auxiliary solution `v = e^{-dbar^{-1} b}`.
    pub v: ComplexGrid,
    /// Nodes where `|v| <= tau` and the fallback `b = q` was used.
    pub below_threshold: usize,
    pub min_abs_v: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Relative vanishing threshold for `v`: `tau = VANISHING_THRESHOLD * max |v|`.
pub const VANISHING_THRESHOLD: f64 = 1e-8;

/// Recovers `b` from `q`.
pub fn phase_unwrap(q: &Potential, opts: &GmresOptions) -> Result<Unwrapped> {
    let beta = q.grid().conj();
    let sol = solve_on_support(None, &beta, opts)?;
    let v = extend_to_grid(&sol, None, &beta)?;
    let tau = VANISHING_THRESHOLD * v.max_abs();
    let mut below = 0;
    let mut b = ComplexGrid::zeros(q.spec());
    for ((out, &qv), &vv) in b.samples_mut().iter_mut().zip(q.grid().samples()).zip(v.samples()) {
        if qv.re == 0.0 && qv.im == 0.0 {
            continue;
        }
        *out = if vv.norm() > tau {
            qv.conj() * vv.conj() / vv
        } else {
            below += 1;
            qv
        };
    }
    let min_abs_v = v.samples().iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
    Ok(Unwrapped {
        field: ConvectionField::from_b(Potential::new(b, q.support_radius())?),
        v,
        below_threshold: below,
        min_abs_v,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Residuals of `Delta u + b1 u_x + b2 u_y` and of `4 (dbar w + conj(b) conj(w) + b w)`
/// with `w = du`, as discrete `L^2` norms over nodes at least `2 * FD_HALF_WIDTH` from the edge.
///
/// The factor 4 makes the two agree for exact derivatives. `u` must be real.
pub fn elliptic_residual(f: &ConvectionField, u: &ComplexGrid) -> Result<(f64, f64)> {
    if u.spec() != f.b().spec() {
        return Err(Error::Precondition("u and the convection field live on different grids".into()));
    }
    if !is_real(u) {
        return Err(Error::Precondition("u must be real".into()));
    }
    let ux = fd_partial_x(u);
    let uy = fd_partial_y(u);
    let uxx = fd_partial_x(&ux);
    let uyy = fd_partial_y(&uy);
    let w = fd_d(u);
    let dw = fd_dbar(&w);
    let spec = u.spec();
    let n = spec.n;
    let h2 = spec.spacing() * spec.spacing();
    let m = 2 * FD_HALF_WIDTH;
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in m..n - m {
        for j in m..n - m {
            let b1 = f.b1().get(i, j).re;
            let b2 = f.b2().get(i, j).re;
            let full = uxx.get(i, j) + uyy.get(i, j) + b1 * ux.get(i, j) + b2 * uy.get(i, j);
            let b = f.b().grid().get(i, j);
            let wv = w.get(i, j);
            let reduced = 4.0 * (dw.get(i, j) + b.conj() * wv.conj() + b * wv);
            r1 += full.norm_sqr();
            r2 += reduced.norm_sqr();
        }
    }
    Ok(((r1 * h2).sqrt(), (r2 * h2).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{relative_error, GridSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(n: usize) -> ConvectionField {
        let spec = GridSpec::new(n, 1.0).unwrap();
        let g = |center: Complex64, amp: f64| {
            ComplexGrid::from_fn(spec, move |z| c(amp * (-(z - center).norm_sqr() / 0.04).exp(), 0.0))
        };
        ConvectionField::new(g(c(0.1, 0.0), 1.2), g(c(-0.05, 0.1), -0.8), 0.8).unwrap()
    }

    #[test]
    fn packing_round_trip() {
        let f = field(32);
        let g = ConvectionField::from_b(f.b().clone());
        assert!(relative_error(f.b1(), g.b1(), 2.0) < 1e-15);
        assert!(relative_error(f.b2(), g.b2(), 2.0) < 1e-15);
    }

    #[test]
    fn rejects_complex_coefficients() {
        let spec = GridSpec::new(16, 1.0).unwrap();
        let z = ComplexGrid::zeros(spec);
        let bad = ComplexGrid::constant(spec, c(0.0, 1e-3));
        assert!(ConvectionField::new(bad, z, 0.5).is_err());
    }

    #[test]
    fn zero_field() {
        let spec = GridSpec::new(16, 1.0).unwrap();
        let f = ConvectionField::from_b(Potential::zero(spec));
        assert!(q_from_b(&f).unwrap().is_zero());
        let pair = solve_w_pair(&f, c(1.0, 2.0), &GmresOptions::default()).unwrap();
        assert!(pair.w_r.samples().iter().all(|v| *v == c(1.0, 0.0)));
        assert!(pair.w_i.samples().iter().all(|v| *v == c(1.0, 0.0)));
        let un = phase_unwrap(&Potential::zero(spec), &GmresOptions::default()).unwrap();
        assert!(un.field.b().is_zero());
        assert_eq!(un.below_threshold, 0);
    }

    #[test]
    fn modulus_is_preserved() {
        let f = field(64);
        let q = q_from_b(&f).unwrap();
        for (a, b) in q.grid().samples().iter().zip(f.b().grid().samples()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15);
        }
    }

    #[test]
    fn reduction_of_harmonic_functions() {
        let spec = GridSpec::new(64, 1.0).unwrap();
        let f = ConvectionField::from_b(Potential::zero(spec));
        let u = ComplexGrid::from_fn(spec, |z| c((z * z).re + z.re, 0.0));
        let (r1, r2) = elliptic_residual(&f, &u).unwrap();
        assert!(r1 < 1e-9 && r2 < 1e-9, "{r1} {r2}");
    }
}

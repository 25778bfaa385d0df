//! Forward scattering: exponentially growing solutions of `dbar Psi + q conj(Psi) = 0`
//! and the scattering transform `t(k)`.
//!
//! With `Psi_r = e^{izk} psi_r` and `Psi_i = i e^{izk} psi_i` the normalized
//! solutions satisfy
//!
//! ```text
//! dbar psi + sign * q e(z,-k) conj(psi) = 0,   psi -> 1,
//! ```
//!
//! `sign = +1` for `psi_r`, `-1` for `psi_i`. The transform is
//!
//! ```text
//! t(k) = -(i / 2 pi) sum e^{i conj(zk)} conj(q) (Psi_r - i Psi_i) h^2
//!      = -(i / 2 pi) sum e(z,k) conj(q) (psi_r + psi_i) h^2,
//! ```
//!
//! normalized so that `t(k) = -(i/pi) sum e(z,k) conj(q) m1 h^2` with the Jost
//! column `m1`, which makes the `k`-space equation `dbar_k Phi + t conj(Phi) = 0`
//! and the inversion formula in [`crate::inverse`] exact mirrors of this one.

use crate::error::{Error, Result};
use crate::grid::{e_phase, fd_d, fd_dbar, ComplexGrid, GridSpec, Potential, FD_HALF_WIDTH};
use crate::solve::{extend_to_grid, run_batch, solve_on_support, Branch, GmresOptions, SupportSolution};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `psi_r`, `psi_i` over the `z`-grid for one `k`.
#[derive(Debug, Clone)]
pub struct PsiPair {
    pub psi_r: ComplexGrid,
    pub psi_i: ComplexGrid,
    pub k: Complex64,
    /// Krylov iterations summed over both solves.
    pub iterations: usize,
    /// Larger of the two relative residuals.
    pub residual: f64,
}

impl PsiPair {
    /// `Psi_r(z) = e^{izk} psi_r(z)`.
    pub fn big_psi_r(&self) -> ComplexGrid {
        let k = self.k;
        self.psi_r.map_nodes(|z, v| (Complex64::i() * z * k).exp() * v)
    }

    /// `Psi_i(z) = i e^{izk} psi_i(z)`.
    pub fn big_psi_i(&self) -> ComplexGrid {
        let k = self.k;
        self.psi_i.map_nodes(|z, v| Complex64::i() * (Complex64::i() * z * k).exp() * v)
    }
}

/// First column `(m1, m2)` of the Jost matrix.
#[derive(Debug, Clone)]
pub struct JostColumns {
    pub m1: ComplexGrid,
    pub m2: ComplexGrid,
    pub k: Complex64,
}

/// Coefficient `sign * q e(z,-k)` of the conjugate term.
fn psi_coefficient(q: &Potential, k: Complex64, branch: Branch) -> ComplexGrid {
    let s = branch.sign();
    q.grid().map_nodes(|z, v| {
        if v.re == 0.0 && v.im == 0.0 {
            v
        } else {
            s * v * e_phase(z, -k)
        }
    })
}

pub(crate) fn solve_psi_support(
    q: &Potential,
    k: Complex64,
    branch: Branch,
    opts: &GmresOptions,
) -> Result<SupportSolution> {
    solve_on_support(None, &psi_coefficient(q, k, branch), opts)
}

/// Solves for `psi_r` (`Branch::Real`, sign `+1`) or `psi_i` (`Branch::Imag`, sign `-1`) on the whole grid.
pub fn solve_psi(q: &Potential, k: Complex64, branch: Branch, opts: &GmresOptions) -> Result<ComplexGrid> {
    let beta = psi_coefficient(q, k, branch);
    let sol = solve_on_support(None, &beta, opts)?;
    extend_to_grid(&sol, None, &beta)
}

pub fn solve_psi_pair(q: &Potential, k: Complex64, opts: &GmresOptions) -> Result<PsiPair> {
    let beta_r = psi_coefficient(q, k, Branch::Real);
    let beta_i = psi_coefficient(q, k, Branch::Imag);
    let sol_r = solve_on_support(None, &beta_r, opts)?;
    let sol_i = solve_on_support(None, &beta_i, opts)?;
    Ok(PsiPair {
        psi_r: extend_to_grid(&sol_r, None, &beta_r)?,
        psi_i: extend_to_grid(&sol_i, None, &beta_i)?,
        k,
        iterations: sol_r.iterations + sol_i.iterations,
        residual: sol_r.residual.max(sol_i.residual),
    })
}

/// `-(i / 2 pi) h^2 sum_{supp q} e(z,k) conj(q) (psi_r + psi_i)` in storage order.
pub(crate) fn transform_sum(q: &Potential, k: Complex64, psi_sum: impl Fn(usize) -> Complex64) -> Complex64 {
    let spec = q.spec();
    let n = spec.n;
    let h2 = spec.spacing() * spec.spacing();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, v) in q.grid().samples().iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let z = spec.node(idx / n, idx % n);
        acc += e_phase(z, k) * v.conj() * psi_sum(idx);
    }
    -Complex64::i() / (2.0 * PI) * h2 * acc
}

/// Scattering transform `t(k)` from the volume formula.
pub fn scattering_transform_volume(q: &Potential, k: Complex64, opts: &GmresOptions) -> Result<Complex64> {
    if q.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r = solve_psi_support(q, k, Branch::Real, opts)?;
    let i = solve_psi_support(q, k, Branch::Imag, opts)?;
    debug_assert_eq!(r.indices, i.indices);
    let mut sums = vec![Complex64::new(0.0, 0.0); q.spec().len()];
    for ((&idx, a), b) in r.indices.iter().zip(&r.values).zip(&i.values) {
        sums[idx] = a + b;
    }
    Ok(transform_sum(q, k, |idx| sums[idx]))
}

/// The transform with `psi_r = psi_i = 1`: `-(i/pi) h^2 sum e(z,k) conj(q)`.
///
/// This is the linearization of `t` in `q`, a rescaled Fourier transform of `conj(q)`.
pub fn born_transform(q: &Potential, k: Complex64) -> Complex64 {
    transform_sum(q, k, |_| Complex64::new(2.0, 0.0))
}

/// `t(k)` tabulated on a `k`-grid, zero outside the disk `|k| <= radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringTransform {
    grid: ComplexGrid,
    radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformMeta {
    #[serde(rename = "K")]
    pub radius: f64,
    pub nx: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl ScatteringTransform {
    /// Wraps `grid`, zeroing samples with `|k| > radius`.
    ///
    /// The radius must leave the data admissible for the `k`-space Cauchy transform.
    pub fn new(grid: ComplexGrid, radius: f64) -> Result<Self> {
        let pot = Potential::new(grid, radius)?;
        Ok(ScatteringTransform {
            radius,
            grid: pot.into_grid(),
        })
    }

    pub fn zero(spec: GridSpec, radius: f64) -> Result<Self> {
        Self::new(ComplexGrid::zeros(spec), radius)
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.grid
    }

    pub fn spec(&self) -> GridSpec {
        self.grid.spec()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Always true: samples beyond `radius` are dropped rather than computed.
    pub fn truncated(&self) -> bool {
        true
    }

    pub fn meta(&self) -> TransformMeta {
        TransformMeta {
            radius: self.radius,
            nx: self.grid.n(),
            half_width: self.grid.half_width(),
        }
    }

    pub fn as_potential(&self) -> Potential {
        Potential::new(self.grid.clone(), self.radius).expect("radius validated at construction")
    }
}

/// Nodes of `spec` inside the closed disk of radius `radius`, with their flat indices.
pub(crate) fn disk_nodes(spec: GridSpec, radius: f64) -> (Vec<usize>, Vec<Complex64>) {
    spec.nodes()
        .enumerate()
        .filter(|(_, z)| z.norm() <= radius)
        .unzip()
}

/// Applies [`scattering_transform_volume`] at every `k` node with `|k| <= radius` (in parallel).
pub fn scattering_grid(
    q: &Potential,
    kspec: GridSpec,
    radius: f64,
    opts: &GmresOptions,
) -> Result<ScatteringTransform> {
    let (indices, points) = disk_nodes(kspec, radius);
    let values = run_batch(&points, |k| scattering_transform_volume(q, k, opts))?;
    let mut grid = ComplexGrid::zeros(kspec);
    for (idx, v) in indices.into_iter().zip(values) {
        grid.samples_mut()[idx] = v;
    }
    ScatteringTransform::new(grid, radius)
}

/// `m1 = (psi_r + psi_i) / 2`, `m2 = e(z,-k) (conj psi_i - conj psi_r) / 2`.
pub fn jost_columns(pair: &PsiPair) -> JostColumns {
    let m1 = pair.psi_r.zip_map(&pair.psi_i, |a, b| 0.5 * (a + b));
    let k = pair.k;
    let diff = pair.psi_i.zip_map(&pair.psi_r, |a, b| 0.5 * (a.conj() - b.conj()));
    let m2 = diff.map_nodes(|z, v| e_phase(z, -k) * v);
    JostColumns { m1, m2, k }
}

/// Discrete `L^2` norms of `dbar m1 - q m2` and `(d + ik) m2 - conj(q) m1` on interior nodes.
///
/// The columns are not periodic, so derivatives are eighth-order finite differences.
pub fn dsys_residual(j: &JostColumns, q: &Potential) -> Result<(f64, f64)> {
    if j.m1.spec() != q.spec() {
        return Err(Error::Precondition("Jost columns and potential live on different grids".into()));
    }
    let spec = q.spec();
    let n = spec.n;
    let h2 = spec.spacing() * spec.spacing();
    let dm1 = fd_dbar(&j.m1);
    let dm2 = fd_d(&j.m2);
    let ik = Complex64::i() * j.k;
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in FD_HALF_WIDTH..n - FD_HALF_WIDTH {
        for jj in FD_HALF_WIDTH..n - FD_HALF_WIDTH {
            let qv = q.grid().get(i, jj);
            let m1 = j.m1.get(i, jj);
            let m2 = j.m2.get(i, jj);
            r1 += (dm1.get(i, jj) - qv * m2).norm_sqr();
            r2 += (dm2.get(i, jj) + ik * m2 - qv.conj() * m1).norm_sqr();
        }
    }
    Ok(((r1 * h2).sqrt(), (r2 * h2).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cauchy_transform, GridSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_q(n: usize, amp: Complex64) -> Potential {
        let spec = GridSpec::new(n, 1.0).unwrap();
        let grid = ComplexGrid::from_fn(spec, |z| {
            amp * (-(z - c(0.05, -0.03)).norm_sqr() / 0.04).exp()
        });
        Potential::new(grid, 0.8).unwrap()
    }

    #[test]
    fn zero_potential_gives_unit_solutions() {
        let q = Potential::zero(GridSpec::new(32, 1.0).unwrap());
        let pair = solve_psi_pair(&q, c(1.5, -2.0), &GmresOptions::default()).unwrap();
        assert!(pair.psi_r.samples().iter().all(|v| *v == c(1.0, 0.0)));
        assert!(pair.psi_i.samples().iter().all(|v| *v == c(1.0, 0.0)));
        assert_eq!(scattering_transform_volume(&q, c(3.0, 1.0), &GmresOptions::default()).unwrap(), c(0.0, 0.0));
        let j = jost_columns(&pair);
        assert!(j.m2.max_abs() == 0.0);
        assert_eq!(dsys_residual(&j, &q).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn first_born_term() {
        // psi_r - 1 + dbar^{-1}(q e(.,-k)) is the second Neumann term, quadratic in q
        let opts = GmresOptions::default();
        let k = c(0.7, 0.4);
        let dev = |amp: f64| {
            let q = gaussian_q(64, c(amp, 0.5 * amp));
            let psi = solve_psi(&q, k, Branch::Real, &opts).unwrap();
            let born = cauchy_transform(&q.grid().map_nodes(|z, v| v * e_phase(z, -k))).unwrap();
            psi.zip_map(&born, |p, b| p - 1.0 + b).max_abs()
        };
        let ratio = dev(1e-2) / dev(1e-3);
        assert!((ratio - 100.0).abs() < 5.0, "{ratio}");
    }

    #[test]
    fn jost_system_holds() {
        let q = gaussian_q(128, c(0.4, 0.2));
        let pair = solve_psi_pair(&q, c(1.0, -0.5), &GmresOptions::default()).unwrap();
        let j = jost_columns(&pair);
        let (r1, r2) = dsys_residual(&j, &q).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "{r1} {r2}");
        // m1 - 1 = dbar^{-1}(q m2)
        let qm2 = q.grid().zip_map(&j.m2, |a, b| a * b);
        let t = cauchy_transform(&qm2).unwrap();
        let dev = j.m1.zip_map(&t, |a, b| a - 1.0 - b).max_abs();
        assert!(dev < 1e-7, "{dev}");
    }

    #[test]
    fn born_transform_is_linear_limit() {
        let k = c(1.0, 0.5);
        let opts = GmresOptions::default();
        let q = gaussian_q(64, c(1e-4, 0.0));
        let t = scattering_transform_volume(&q, k, &opts).unwrap();
        let tl = born_transform(&q, k);
        assert!((t - tl).norm() / tl.norm() < 1e-6);
    }
}

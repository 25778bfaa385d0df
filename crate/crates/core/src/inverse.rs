//! Inverse scattering: the `k`-space equation `dbar_k Phi + t conj(Phi) = 0` and
//! the nonlinear Fourier inversion
//!
//! ```text
//! q(z) = -(i / 2 pi) sum_k e^{i conj(zk)} conj(t) (Phi_r - i Phi_i) h_k^2
//!      = -(i / 2 pi) sum_k e(z,k) conj(t) (phi_r + phi_i) h_k^2,
//! ```
//!
//! with `Phi_r = e^{izk} phi_r`, `Phi_i = i e^{izk} phi_i` and
//! `dbar_k phi + sign * t(k) e(z,-k) conj(phi) = 0` (`sign = +1` for `phi_r`).
//! In terms of the Jost columns `phi_r = m1 - m2` and `phi_i = m1 + m2`.

use crate::error::{Error, Result};
use crate::forward::{disk_nodes, PsiPair, ScatteringTransform};
use crate::grid::{e_phase, ComplexGrid, GridSpec, Potential};
use crate::solve::{extend_to_grid, run_batch, solve_on_support, Branch, GmresOptions, SupportSolution};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `phi_r`, `phi_i` over the `k`-grid for one `z`.
#[derive(Debug, Clone)]
pub struct PhiPair {
    pub phi_r: ComplexGrid,
    pub phi_i: ComplexGrid,
    pub z: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

impl PhiPair {
    /// `Phi_r(k) = e^{izk} phi_r(k)`.
    pub fn big_phi_r(&self) -> ComplexGrid {
        let z = self.z;
        self.phi_r.map_nodes(|k, v| (Complex64::i() * z * k).exp() * v)
    }

    /// `Phi_i(k) = i e^{izk} phi_i(k)`.
    pub fn big_phi_i(&self) -> ComplexGrid {
        let z = self.z;
        self.phi_i.map_nodes(|k, v| Complex64::i() * (Complex64::i() * z * k).exp() * v)
    }
}

fn phi_coefficient(t: &ScatteringTransform, z: Complex64, branch: Branch) -> ComplexGrid {
    let s = branch.sign();
    t.grid().map_nodes(|k, v| {
        if v.re == 0.0 && v.im == 0.0 {
            v
        } else {
            s * v * e_phase(z, -k)
        }
    })
}

fn solve_phi_support(t: &ScatteringTransform, z: Complex64, branch: Branch, opts: &GmresOptions) -> Result<SupportSolution> {
    solve_on_support(None, &phi_coefficient(t, z, branch), opts)
}

/// Solves for `phi_r` (`Branch::Real`) or `phi_i` (`Branch::Imag`) over the whole `k`-grid.
pub fn solve_phi(t: &ScatteringTransform, z: Complex64, branch: Branch, opts: &GmresOptions) -> Result<ComplexGrid> {
    let beta = phi_coefficient(t, z, branch);
    let sol = solve_on_support(None, &beta, opts)?;
    extend_to_grid(&sol, None, &beta)
}

pub fn solve_phi_pair(t: &ScatteringTransform, z: Complex64, opts: &GmresOptions) -> Result<PhiPair> {
    let beta_r = phi_coefficient(t, z, Branch::Real);
    let beta_i = phi_coefficient(t, z, Branch::Imag);
    let sol_r = solve_on_support(None, &beta_r, opts)?;
    let sol_i = solve_on_support(None, &beta_i, opts)?;
    Ok(PhiPair {
        phi_r: extend_to_grid(&sol_r, None, &beta_r)?,
        phi_i: extend_to_grid(&sol_i, None, &beta_i)?,
        z,
        iterations: sol_r.iterations + sol_i.iterations,
        residual: sol_r.residual.max(sol_i.residual),
    })
}

/// `q(z)` at a single point from the inversion formula.
pub fn reconstruct_point(t: &ScatteringTransform, z: Complex64, opts: &GmresOptions) -> Result<Complex64> {
    let grid = t.grid();
    let spec = grid.spec();
    let zero = Complex64::new(0.0, 0.0);
    if grid.samples().iter().all(|v| *v == zero) {
        return Ok(zero);
    }
    let r = solve_phi_support(t, z, Branch::Real, opts)?;
    let i = solve_phi_support(t, z, Branch::Imag, opts)?;
    let n = spec.n;
    let h2 = spec.spacing() * spec.spacing();
    let mut acc = zero;
    for ((&idx, a), b) in r.indices.iter().zip(&r.values).zip(&i.values) {
        let k = spec.node(idx / n, idx % n);
        acc += e_phase(z, k) * grid.samples()[idx].conj() * (a + b);
    }
    Ok(-Complex64::i() / (2.0 * PI) * h2 * acc)
}

/// Reconstructs `q` on `zspec` at the nodes with `|z| <= radius`; zero elsewhere.
///
/// Per-node solves run in parallel; each node sums in a fixed order.
pub fn reconstruct_q(
    t: &ScatteringTransform,
    zspec: GridSpec,
    radius: f64,
    opts: &GmresOptions,
) -> Result<Potential> {
    if radius > zspec.support_limit() * (1.0 + 1e-12) {
        return Err(Error::SupportViolation {
            radius,
            limit: zspec.support_limit(),
        });
    }
    let (indices, points) = disk_nodes(zspec, radius);
    let values = run_batch(&points, |z| reconstruct_point(t, z, opts))?;
    let mut grid = ComplexGrid::zeros(zspec);
    for (idx, v) in indices.into_iter().zip(values) {
        grid.samples_mut()[idx] = v;
    }
    Potential::new(grid, radius)
}

/// Flat index of the node at `p`, if `p` is (to rounding) a node of `spec`.
fn node_index(spec: GridSpec, p: Complex64) -> Option<usize> {
    let h = spec.spacing();
    let fi = (p.re + spec.half_width) / h;
    let fj = (p.im + spec.half_width) / h;
    let (i, j) = (fi.round(), fj.round());
    let close = (fi - i).abs() < 1e-6 && (fj - j).abs() < 1e-6;
    let inside = i >= 0.0 && j >= 0.0 && (i as usize) < spec.n && (j as usize) < spec.n;
    (close && inside).then(|| i as usize * spec.n + j as usize)
}

/// Maximum deviation in the relations between the `Psi` and `Phi` solutions at
/// the common point `(phi.z, psi.k)`:
///
/// ```text
/// Re Phi_i = -Im Psi_r,  Re Phi_r = Re Psi_r,  Im Phi_i = Im Psi_i,  Im Phi_r = -Re Psi_i,
/// Phi_r - i Phi_i = Psi_r - i Psi_i.
/// ```
///
/// `phi.z` must be a node of the `psi` grids and `psi.k` a node of the `phi` grids.
pub fn identities_check(psi: &PsiPair, phi: &PhiPair) -> Result<f64> {
    let (z, k) = (phi.z, psi.k);
    let zi = node_index(psi.psi_r.spec(), z)
        .ok_or_else(|| Error::Precondition(format!("z = {z} is not a node of the z-grid")))?;
    let ki = node_index(phi.phi_r.spec(), k)
        .ok_or_else(|| Error::Precondition(format!("k = {k} is not a node of the k-grid")))?;
    let ez = (Complex64::i() * z * k).exp();
    let big_psi_r = ez * psi.psi_r.samples()[zi];
    let big_psi_i = Complex64::i() * ez * psi.psi_i.samples()[zi];
    let big_phi_r = ez * phi.phi_r.samples()[ki];
    let big_phi_i = Complex64::i() * ez * phi.phi_i.samples()[ki];
    let deviations = [
        (big_phi_i.re + big_psi_r.im).abs(),
        (big_phi_r.re - big_psi_r.re).abs(),
        (big_phi_i.im - big_psi_i.im).abs(),
        (big_phi_r.im + big_psi_i.re).abs(),
        ((big_phi_r - Complex64::i() * big_phi_i) - (big_psi_r - Complex64::i() * big_psi_i)).norm(),
    ];
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

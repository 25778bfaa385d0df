//! Dirichlet-to-Neumann map of `Delta u + b1 u_x + b2 u_y = 0` on the unit disk.
//!
//! Polar spectral collocation on the doubled disk: Chebyshev in `r in [-1, 1]`
//! with odd degree (so the origin is not a node) and Fourier in `theta` with an
//! even number of nodes, identifying `u(-r, theta) = u(r, theta + pi)`. The
//! interior unknowns live at `r > 0`; the resulting dense real system is
//! LU-factored once per coefficient field.

use super::{antiderivative, fourier_coefficients, fourier_synthesis, signed_mode, BoundaryFunction};
use crate::convection::ConvectionField;
use crate::error::{Error, Result};
use crate::grid::TrigInterpolant;
use nalgebra::{DMatrix, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtnOptions {
    /// Highest Fourier mode `M`; the angular grid has `2M + 2` nodes.
    pub modes: usize,
    /// Chebyshev degree in `r`; must be odd.
    pub radial_degree: usize,
}

impl Default for DtnOptions {
    fn default() -> Self {
        DtnOptions {
            modes: 32,
            radial_degree: 81,
        }
    }
}

/// Chebyshev points `cos(pi j / n)` and the differentiation matrix.
fn chebyshev(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let weight = |j: usize| {
        let c = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            c
        } else {
            -c
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = weight(i) / weight(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    (x, d)
}

/// First and second Fourier differentiation matrices on `nt` (even) periodic nodes.
fn fourier_matrices(nt: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / nt as f64;
    let mut d1 = DMatrix::zeros(nt, nt);
    let mut d2 = DMatrix::zeros(nt, nt);
    for i in 0..nt {
        for j in 0..nt {
            if i == j {
                d2[(i, j)] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            let diff = i as f64 - j as f64;
            let sign = if (i + nt - j) % 2 == 0 { 1.0 } else { -1.0 };
            d1[(i, j)] = 0.5 * sign / (0.5 * diff * h).tan();
            d2[(i, j)] = -0.5 * sign / (0.5 * diff * h).sin().powi(2);
        }
    }
    (d1, d2)
}

fn check_options(opts: DtnOptions) -> Result<()> {
    if opts.radial_degree % 2 == 0 || opts.radial_degree < 5 {
        return Err(Error::Precondition(format!(
            "radial degree must be odd and at least 5, got {}",
            opts.radial_degree
        )));
    }
    if opts.modes < 2 {
        return Err(Error::Precondition("at least two Fourier modes are required".into()));
    }
    Ok(())
}

/// Interior solution on the polar collocation grid (`r > 0` nodes plus the boundary).
#[derive(Debug, Clone)]
pub struct PolarSolution {
    /// Radii, first entry is the boundary `r = 1`.
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// `values[a * angles.len() + t]` at `(radii[a], angles[t])`.
    pub values: Vec<f64>,
    /// `du/dr` at `r = 1` on `angles`.
    pub normal_derivative: Vec<f64>,
}

/// Factored collocation system for one coefficient field.
pub struct DtnSolver {
    opts: DtnOptions,
    nt: usize,
    interior: usize,
    radii: Vec<f64>,
    d: DMatrix<f64>,
    /// LU factors of the interior collocation matrix.
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Boundary coupling of each interior row: coefficients on `g(theta_t)` and `g(theta_t + pi)`.
    boundary_weights: Vec<(f64, f64)>,
    condition: f64,
}

impl DtnSolver {
    pub fn new(field: &ConvectionField, opts: DtnOptions) -> Result<Self> {
        check_options(opts)?;
        if field.support_radius() > crate::grid::SUPPORT_FRACTION * (1.0 + 1e-12) {
            return Err(Error::SupportViolation {
                radius: field.support_radius(),
                limit: crate::grid::SUPPORT_FRACTION,
            });
        }
        let n = opts.radial_degree;
        let nt = 2 * opts.modes + 2;
        let half = nt / 2;
        let interior = (n - 1) / 2;
        let (r, d) = chebyshev(n);
        let d2 = &d * &d;
        let (f1, f2) = fourier_matrices(nt);
        let angles: Vec<f64> = (0..nt).map(|t| 2.0 * PI * t as f64 / nt as f64).collect();
        let zero_field = field.b().is_zero();
        let (i1, i2) = if zero_field {
            (None, None)
        } else {
            (Some(TrigInterpolant::new(field.b1())), Some(TrigInterpolant::new(field.b2())))
        };
        let size = interior * nt;
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut boundary_weights = vec![(0.0, 0.0); size];
        let unknown = |ra: usize, t: usize| (ra - 1) * nt + t;
        for ra in 1..=interior {
            let rr = r[ra];
            for t in 0..nt {
                let row = unknown(ra, t);
                let theta = angles[t];
                let z = Complex64::from_polar(rr, theta);
                let (b1, b2) = match (&i1, &i2) {
                    (Some(p), Some(q)) => (p.eval(z).re, q.eval(z).re),
                    _ => (0.0, 0.0),
                };
                let cr = b1 * theta.cos() + b2 * theta.sin();
                let ct = (-b1 * theta.sin() + b2 * theta.cos()) / rr;
                // radial line through (r, theta): l = 0 boundary, 1..=interior unknowns at theta,
                // interior+1..n-1 unknowns at theta + pi, n the boundary at theta + pi
                for l in 0..=n {
                    let w = d2[(ra, l)] + (1.0 / rr + cr) * d[(ra, l)];
                    if l == 0 {
                        boundary_weights[row].0 += w;
                    } else if l == n {
                        boundary_weights[row].1 += w;
                    } else if l <= interior {
                        a[(row, unknown(l, t))] += w;
                    } else {
                        a[(row, unknown(n - l, (t + half) % nt))] += w;
                    }
                }
                for s in 0..nt {
                    a[(row, unknown(ra, s))] += f2[(t, s)] / (rr * rr) + ct * f1[(t, s)];
                }
            }
        }
        let factored = {
            // inexpensive estimate from the LU pivots
            let lu = a.clone().lu();
            let u = lu.u();
            let diag: Vec<f64> = (0..size).map(|i| u[(i, i)].abs()).collect();
            let max = diag.iter().cloned().fold(0.0, f64::max);
            let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            (lu, if min == 0.0 { f64::INFINITY } else { max / min })
        };
        let (lu, condition) = factored;
        if !condition.is_finite() || condition > 1e14 {
            return Err(Error::Singular { condition });
        }
        Ok(DtnSolver {
            opts,
            nt,
            interior,
            radii: r,
            d,
            lu,
            boundary_weights,
            condition,
        })
    }

    pub fn options(&self) -> DtnOptions {
        self.opts
    }

    /// Number of angular nodes `2M + 2`.
    pub fn angular_nodes(&self) -> usize {
        self.nt
    }

    /// Ratio of extreme LU pivots, a cheap conditioning indicator.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Solves with real Dirichlet data `g` given on the angular nodes.
    pub fn solve_nodes(&self, g: &[f64]) -> PolarSolution {
        assert_eq!(g.len(), self.nt);
        let nt = self.nt;
        let half = nt / 2;
        let n = self.opts.radial_degree;
        let interior = self.interior;
        let size = interior * nt;
        let mut rhs = nalgebra::DVector::<f64>::zeros(size);
        for (row, (w0, wn)) in self.boundary_weights.iter().enumerate() {
            let t = row % nt;
            rhs[row] = -(w0 * g[t] + wn * g[(t + half) % nt]);
        }
        let u = self.lu.solve(&rhs).expect("factorization checked at construction");
        let mut normal = vec![0.0; nt];
        for (t, out) in normal.iter_mut().enumerate() {
            let mut acc = self.d[(0, 0)] * g[t] + self.d[(0, n)] * g[(t + half) % nt];
            for l in 1..n {
                let v = if l <= interior {
                    u[(l - 1) * nt + t]
                } else {
                    u[(n - l - 1) * nt + (t + half) % nt]
                };
                acc += self.d[(0, l)] * v;
            }
            *out = acc;
        }
        let mut values = g.to_vec();
        values.extend(u.iter());
        PolarSolution {
            radii: self.radii[..=interior].to_vec(),
            angles: (0..nt).map(|t| 2.0 * PI * t as f64 / nt as f64).collect(),
            values,
            normal_derivative: normal,
        }
    }

    /// `Lambda` on Fourier coefficients `c_n`, `|n| <= M`, ordered `n = -M..=M`.
    fn apply_modes(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let m = self.opts.modes as i64;
        let nt = self.nt;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); nt];
        for (idx, c) in coeffs.iter().enumerate() {
            let n = idx as i64 - m;
            spectrum[n.rem_euclid(nt as i64) as usize] = *c;
        }
        let samples = fourier_synthesis(&spectrum);
        let re: Vec<f64> = samples.iter().map(|v| v.re).collect();
        let im: Vec<f64> = samples.iter().map(|v| v.im).collect();
        let dre = self.solve_nodes(&re).normal_derivative;
        let dim = self.solve_nodes(&im).normal_derivative;
        let out: Vec<Complex64> = dre.iter().zip(&dim).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let c = fourier_coefficients(&out);
        (-m..=m).map(|n| c[n.rem_euclid(nt as i64) as usize]).collect()
    }

    /// Assembles the DtN matrix in the Fourier basis.
    pub fn operator(&self) -> DtnOperator {
        let m = self.opts.modes;
        let size = 2 * m + 1;
        let columns: Vec<Vec<Complex64>> = (0..size)
            .into_par_iter()
            .map(|col| {
                let mut e = vec![Complex64::new(0.0, 0.0); size];
                e[col] = Complex64::new(1.0, 0.0);
                self.apply_modes(&e)
            })
            .collect();
        let mut matrix = vec![Complex64::new(0.0, 0.0); size * size];
        for (col, image) in columns.into_iter().enumerate() {
            for (row, v) in image.into_iter().enumerate() {
                matrix[row * size + col] = v;
            }
        }
        DtnOperator {
            modes: m,
            matrix,
            phantom_id: None,
        }
    }
}

/// The DtN map as a dense matrix on Fourier coefficients `c_n`, `n = -M..=M`.
///
/// Modes beyond `M` are mapped by the unperturbed symbol `|n|`; the perturbation
/// by compactly supported coefficients is smoothing, so high modes see `Lambda_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DtnFile", try_from = "DtnFile")]
pub struct DtnOperator {
    pub modes: usize,
    /// Row-major `(2M+1) x (2M+1)`, entry `[(m + M) * (2M+1) + (n + M)]` maps mode `n` to mode `m`.
    pub matrix: Vec<Complex64>,
    pub phantom_id: Option<String>,
}

/// On-disk layout: real and imaginary parts as separate row-major arrays.
#[derive(Serialize, Deserialize)]
struct DtnFile {
    modes: usize,
    matrix_re: Vec<f64>,
    matrix_im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phantom_id: Option<String>,
}

impl From<DtnOperator> for DtnFile {
    fn from(op: DtnOperator) -> Self {
        DtnFile {
            modes: op.modes,
            matrix_re: op.matrix.iter().map(|c| c.re).collect(),
            matrix_im: op.matrix.iter().map(|c| c.im).collect(),
            phantom_id: op.phantom_id,
        }
    }
}

impl TryFrom<DtnFile> for DtnOperator {
    type Error = String;

    fn try_from(f: DtnFile) -> std::result::Result<Self, String> {
        let size = 2 * f.modes + 1;
        if f.matrix_re.len() != size * size || f.matrix_im.len() != size * size {
            return Err(format!("DtN matrix for {} modes needs {} entries", f.modes, size * size));
        }
        Ok(DtnOperator {
            modes: f.modes,
            matrix: f.matrix_re.iter().zip(&f.matrix_im).map(|(a, b)| Complex64::new(*a, *b)).collect(),
            phantom_id: f.phantom_id,
        })
    }
}

impl DtnOperator {
    /// `Lambda_0` restricted to `|n| <= M`.
    pub fn unperturbed(modes: usize) -> Self {
        let size = 2 * modes + 1;
        let mut matrix = vec![Complex64::new(0.0, 0.0); size * size];
        for i in 0..size {
            matrix[i * size + i] = Complex64::new((i as f64 - modes as f64).abs(), 0.0);
        }
        DtnOperator {
            modes,
            matrix,
            phantom_id: None,
        }
    }

    /// True when the matrix is exactly `diag |n|`.
    pub fn is_unperturbed(&self) -> bool {
        let s = self.size();
        let k = self.modes as f64;
        self.matrix.iter().enumerate().all(|(idx, v)| {
            let (row, col) = (idx / s, idx % s);
            let expected = if row == col { (row as f64 - k).abs() } else { 0.0 };
            v.re == expected && v.im == 0.0
        })
    }

    pub fn size(&self) -> usize {
        2 * self.modes + 1
    }

    /// Entry mapping mode `n` to mode `m`.
    pub fn entry(&self, m: i64, n: i64) -> Complex64 {
        let s = self.size();
        let k = self.modes as i64;
        self.matrix[(m + k) as usize * s + (n + k) as usize]
    }

    /// Applies the map to FFT-ordered coefficients of any length.
    pub fn apply_coefficients(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let len = coeffs.len();
        let k = self.modes as i64;
        let s = self.size();
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        let mut low = vec![Complex64::new(0.0, 0.0); s];
        for (p, c) in coeffs.iter().enumerate() {
            let n = signed_mode(p, len);
            if p == len / 2 && len % 2 == 0 {
                continue;
            }
            if n.abs() <= k {
                low[(n + k) as usize] = *c;
            } else {
                out[p] = c * n.abs() as f64;
            }
        }
        for mrow in -k..=k {
            let row = &self.matrix[(mrow + k) as usize * s..(mrow + k + 1) as usize * s];
            let v: Complex64 = row.iter().zip(&low).map(|(a, b)| a * b).sum();
            let p = mrow.rem_euclid(len as i64) as usize;
            if (mrow.unsigned_abs() as usize) < len / 2 || len / 2 > k as usize {
                out[p] += v;
            }
        }
        out
    }

    pub fn apply(&self, g: &BoundaryFunction) -> Result<BoundaryFunction> {
        if g.len() < 2 * self.modes {
            return Err(Error::Precondition(format!(
                "{} boundary samples cannot resolve {} modes",
                g.len(),
                self.modes
            )));
        }
        BoundaryFunction::from_coefficients(&self.apply_coefficients(&g.coefficients()))
    }
}

/// Interior solution of the Dirichlet problem with real data `g` (imaginary parts are ignored).
pub fn solve_bvp(field: &ConvectionField, g: &BoundaryFunction, opts: DtnOptions) -> Result<PolarSolution> {
    let solver = DtnSolver::new(field, opts)?;
    let nodes = resample(g, solver.angular_nodes());
    Ok(solver.solve_nodes(&nodes.iter().map(|v| v.re).collect::<Vec<_>>()))
}

/// Trigonometric resampling onto `nt` equispaced nodes (modes `|n| < nt / 2` kept).
fn resample(g: &BoundaryFunction, nt: usize) -> Vec<Complex64> {
    let c = g.coefficients();
    let m = c.len();
    let mut out = vec![Complex64::new(0.0, 0.0); nt];
    for (p, v) in c.iter().enumerate() {
        let n = signed_mode(p, m);
        if p == m / 2 || n.unsigned_abs() as usize >= nt / 2 {
            continue;
        }
        out[n.rem_euclid(nt as i64) as usize] = *v;
    }
    fourier_synthesis(&out)
}

/// `Lambda g`: the radial derivative at `r = 1` of the solution with data `g`, on the samples of `g`.
pub fn dtn_apply(field: &ConvectionField, g: &BoundaryFunction, opts: DtnOptions) -> Result<BoundaryFunction> {
    assemble_dtn(field, opts)?.apply(g)
}

/// Builds the DtN matrix for `field`; the zero field gets the exact `diag |n|`.
pub fn assemble_dtn(field: &ConvectionField, opts: DtnOptions) -> Result<DtnOperator> {
    if field.b().is_zero() {
        check_options(opts)?;
        return Ok(DtnOperator::unperturbed(opts.modes));
    }
    Ok(DtnSolver::new(field, opts)?.operator())
}

/// `H_b f = -Lambda (d_s^{-1} f)` for zero-mean `f`.
pub fn hilbert_hb(dtn: &DtnOperator, fb: &BoundaryFunction) -> Result<BoundaryFunction> {
    let g = super::ds_inverse(fb)?;
    let out = dtn.apply(&g)?;
    Ok(out.map(|_, v| -v))
}

/// `H_b` on raw samples without the mean check: the mean is removed first.
pub(crate) fn hilbert_hb_unchecked(dtn: &DtnOperator, values: &[Complex64]) -> Vec<Complex64> {
    let coeffs = fourier_coefficients(values);
    let g = antiderivative(&coeffs);
    let lam = dtn.apply_coefficients(&fourier_coefficients(&g));
    fourier_synthesis(&lam).into_iter().map(|v| -v).collect()
}

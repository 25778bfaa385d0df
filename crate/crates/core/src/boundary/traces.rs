//! Boundary traces of the exponentially growing solutions and the boundary
//! formula for the scattering transform.
//!
//! Everything is carried in the variable `w = e^{-izk} h`, which stays bounded
//! on the circle for any `k`. The traces are sought as
//! `w = sum_{n=0}^{N} a_n z^{-n}` and fitted, in the least-squares sense with a
//! ridge term, to the jump relation `(I - i S_0) w = 2 a_infinity`, to
//! `H_b Im(nu h) = Re(nu h)` and to `mean Im(nu h) = 0`, the last one exactly.

use super::dtn::{hilbert_hb_unchecked, DtnOperator};
use super::singular::singular_w_values;
use super::BoundaryFunction;
use crate::convection::{w_coefficients, ConvectionField, VANISHING_THRESHOLD};
use crate::error::{Error, Result};
use crate::grid::cauchy_transform_at;
use crate::solve::{extend_to_grid, run_batch, solve_on_support, Branch, GmresOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Series order `N`.
    pub series_n: usize,
    /// Ridge parameter on the series coefficients.
    pub reg: f64,
    /// Boundary sample count `m`.
    pub samples: usize,
    /// Relative residual above which the report carries a warning.
    pub residual_warning: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            series_n: 16,
            reg: 1e-8,
            samples: 128,
            residual_warning: 1e-4,
        }
    }
}

/// Diagnostics of one trace solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSolveReport {
    /// `a_0..=a_N` of `w = sum a_n z^{-n}`.
    pub coefficients: Vec<Complex64>,
    pub reg: f64,
    /// `max |(I - i S_0) w - 2 a_infinity|`.
    pub residual_30: f64,
    /// `max |H_b Im(nu h) - Re(nu h)| / max |nu h|`.
    pub residual_31: f64,
    /// `|mean Im(nu h)| / max |nu h|`.
    pub mean_im: f64,
    /// `sigma_max / sigma_min` of the stacked system.
    pub condition: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Recovered traces at one `k`.
#[derive(Debug, Clone)]
pub struct Traces {
    pub k: Complex64,
    /// Trace of the solution behaving like `e^{izk}`.
    pub h_r: BoundaryFunction,
    /// Trace of the solution behaving like `i e^{izk}`.
    pub h_i: BoundaryFunction,
    /// `e^{-izk} h_r`, the fitted series itself.
    pub w_r: BoundaryFunction,
    /// `-i e^{-izk} h_i`.
    pub w_i: BoundaryFunction,
    pub report_r: TraceSolveReport,
    pub report_i: TraceSolveReport,
}

/// Real-linear residual map of the trace system, evaluated on `w` samples.
struct TraceSystem<'a> {
    dtn: &'a DtnOperator,
    points: Vec<Complex64>,
    /// `e^{izk}` at the samples.
    phase: Vec<Complex64>,
    /// Row weights of the `H_b` block, `1 / |e^{izk}|`.
    weight: Vec<f64>,
}

impl<'a> TraceSystem<'a> {
    fn new(dtn: &'a DtnOperator, k: Complex64, m: usize) -> Self {
        let points: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
        let phase: Vec<Complex64> = points.iter().map(|z| (Complex64::i() * z * k).exp()).collect();
        let weight = phase.iter().map(|p| 1.0 / p.norm()).collect();
        TraceSystem {
            dtn,
            points,
            phase,
            weight,
        }
    }

    fn nu_h(&self, w: &[Complex64]) -> Vec<Complex64> {
        w.iter()
            .zip(&self.points)
            .zip(&self.phase)
            .map(|((w, z), p)| z * p * w)
            .collect()
    }

    /// Jump-relation block `(I - i S_0) w`.
    fn jump(&self, w: &[Complex64]) -> Vec<Complex64> {
        let s = singular_w_values(w);
        w.iter().zip(&s).map(|(a, b)| a - Complex64::i() * b).collect()
    }

    /// `H_b Im(nu h) - Re(nu h)`, mean of `Im(nu h)` removed before `H_b`.
    fn hilbert_defect(&self, w: &[Complex64]) -> Vec<f64> {
        let nh = self.nu_h(w);
        let im: Vec<Complex64> = nh.iter().map(|v| Complex64::new(v.im, 0.0)).collect();
        let hb = hilbert_hb_unchecked(self.dtn, &im);
        hb.iter().zip(&nh).map(|(a, b)| a.re - b.re).collect()
    }

    fn mean_im(&self, w: &[Complex64]) -> f64 {
        let nh = self.nu_h(w);
        nh.iter().map(|v| v.im).sum::<f64>() / nh.len() as f64
    }

    /// Stacked rows: jump (re, im), weighted `H_b` defect. The mean row is kept separately.
    fn rows(&self, w: &[Complex64]) -> Vec<f64> {
        let jump = self.jump(w);
        let defect = self.hilbert_defect(w);
        let mut out = Vec::with_capacity(3 * w.len());
        for v in &jump {
            out.push(v.re);
            out.push(v.im);
        }
        out.extend(defect.iter().zip(&self.weight).map(|(d, s)| d * s));
        out
    }

    fn basis(&self, unknown: usize) -> Vec<Complex64> {
        let n = (unknown / 2) as i32;
        let unit = if unknown % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::i()
        };
        self.points.iter().map(|z| unit * z.powi(-n)).collect()
    }
}

fn synthesize(coeffs: &[Complex64], points: &[Complex64]) -> Vec<Complex64> {
    points
        .iter()
        .map(|z| coeffs.iter().enumerate().map(|(n, a)| a * z.powi(-(n as i32))).sum())
        .collect()
}

/// Recovers `h_r` and `h_i` at `k` from the DtN map.
pub fn recover_traces(dtn: &DtnOperator, k: Complex64, opts: &TraceOptions) -> Result<Traces> {
    let m = opts.samples;
    BoundaryFunction::zeros(m)?;
    if opts.series_n > m / 4 {
        return Err(Error::Precondition(format!(
            "series order {} exceeds a quarter of the {} samples",
            opts.series_n, m
        )));
    }
    if !(opts.reg >= 0.0) {
        return Err(Error::Precondition(format!("ridge parameter must be non-negative, got {}", opts.reg)));
    }
    if m / 2 <= dtn.modes {
        return Err(Error::Precondition(format!("{m} samples cannot resolve {} DtN modes", dtn.modes)));
    }
    if dtn.is_unperturbed() {
        return free_traces(k, opts);
    }
    let sys = TraceSystem::new(dtn, k, m);
    let unknowns = 2 * (opts.series_n + 1);
    let columns: Vec<Vec<f64>> = (0..unknowns).map(|u| sys.rows(&sys.basis(u))).collect();
    let mean_row: Vec<f64> = (0..unknowns).map(|u| sys.mean_im(&sys.basis(u))).collect();

    // eliminate the unknown with the largest weight in the exact mean constraint
    let pivot = (0..unknowns)
        .max_by(|&a, &b| mean_row[a].abs().total_cmp(&mean_row[b].abs()))
        .expect("at least two unknowns");
    let pivot_weight = mean_row[pivot];
    let free: Vec<usize> = (0..unknowns).filter(|&u| u != pivot).collect();
    let eliminate = pivot_weight.abs() > 1e-14;
    let reduced_cols: Vec<usize> = if eliminate { free.clone() } else { (0..unknowns).collect() };
    let rows = columns[0].len();
    let ridge = opts.reg.sqrt();
    let mut a = DMatrix::<f64>::zeros(rows + reduced_cols.len(), reduced_cols.len());
    for (c, &u) in reduced_cols.iter().enumerate() {
        for r in 0..rows {
            let mut v = columns[u][r];
            if eliminate {
                v -= columns[pivot][r] * mean_row[u] / pivot_weight;
            }
            a[(r, c)] = v;
        }
        a[(rows + c, c)] = ridge;
    }
    let singular = a.singular_values();
    let smax = singular.max();
    let smin = singular.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::Singular { condition });
    }

    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let solve = |branch: Branch| -> Result<(BoundaryFunction, BoundaryFunction, TraceSolveReport)> {
        let unit = branch.unit();
        let mut rhs = DVector::<f64>::zeros(rows + reduced_cols.len());
        for j in 0..m {
            rhs[2 * j] = 2.0 * unit.re;
            rhs[2 * j + 1] = 2.0 * unit.im;
        }
        let y = r
            .solve_upper_triangular(&(q.transpose() * rhs))
            .ok_or(Error::Singular { condition })?;
        let mut x = vec![0.0; unknowns];
        for (c, &u) in reduced_cols.iter().enumerate() {
            x[u] = y[c];
        }
        if eliminate {
            x[pivot] = -free.iter().map(|&u| mean_row[u] * x[u]).sum::<f64>() / pivot_weight;
        }
        let coefficients: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let w = synthesize(&coefficients, &sys.points);
        let nh = sys.nu_h(&w);
        let scale = nh.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let residual_30 = sys
            .jump(&w)
            .iter()
            .map(|v| (v - 2.0 * unit).norm())
            .fold(0.0, f64::max);
        let residual_31 = sys.hilbert_defect(&w).iter().map(|v| v.abs()).fold(0.0, f64::max) / scale;
        let mean_im = sys.mean_im(&w).abs() / scale;
        let worst = residual_30.max(residual_31);
        let warning = if !worst.is_finite() || worst > opts.residual_warning {
            let msg = format!("trace residual {worst:.3e} above {:.1e} at k = {k}", opts.residual_warning);
            log::warn!("{msg}");
            Some(msg)
        } else {
            None
        };
        let h = BoundaryFunction::new(w.iter().zip(&sys.phase).map(|(w, p)| w * p).collect())?;
        let w = BoundaryFunction::new(w.iter().map(|v| v * unit.conj()).collect())?;
        Ok((
            h,
            w,
            TraceSolveReport {
                coefficients,
                reg: opts.reg,
                residual_30,
                residual_31,
                mean_im,
                condition,
                warning,
            },
        ))
    };
    let (h_r, w_r, report_r) = solve(Branch::Real)?;
    let (h_i, w_i, report_i) = solve(Branch::Imag)?;
    Ok(Traces {
        k,
        h_r,
        h_i,
        w_r,
        w_i,
        report_r,
        report_i,
    })
}

/// Closed form for `b = 0`: `h_r = e^{izk}`, `h_i = i e^{izk}`.
fn free_traces(k: Complex64, opts: &TraceOptions) -> Result<Traces> {
    let report = |unit: Complex64| {
        let mut coefficients = vec![Complex64::new(0.0, 0.0); opts.series_n + 1];
        coefficients[0] = unit;
        TraceSolveReport {
            coefficients,
            reg: opts.reg,
            residual_30: 0.0,
            residual_31: 0.0,
            mean_im: 0.0,
            condition: 1.0,
            warning: None,
        }
    };
    let h_r = BoundaryFunction::from_fn(opts.samples, |_, z| (Complex64::i() * z * k).exp())?;
    Ok(Traces {
        k,
        h_i: h_r.map(|_, v| Complex64::i() * v),
        h_r,
        w_r: BoundaryFunction::from_fn(opts.samples, |_, _| Complex64::new(1.0, 0.0))?,
        w_i: BoundaryFunction::from_fn(opts.samples, |_, _| Complex64::new(1.0, 0.0))?,
        report_r: report(Complex64::new(1.0, 0.0)),
        report_i: report(Complex64::i()),
    })
}

/// `t(k)` from the normalized traces `w_r = e^{-izk} W_r`, `w_i = -i e^{-izk} W_i` and `E = e^{-dbar^{-1} b}`:
/// `(i / 4 pi) \int conj(nu) conj((w_r - w_i) / E) ds`.
pub fn boundary_transform_w(w_r: &BoundaryFunction, w_i: &BoundaryFunction, einvb: &BoundaryFunction) -> Result<Complex64> {
    let m = w_r.len();
    if w_i.len() != m || einvb.len() != m {
        return Err(Error::Precondition("boundary functions of different length".into()));
    }
    let emax = einvb.max_abs();
    let emin = einvb.values().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if !(emin > VANISHING_THRESHOLD * emax.max(1.0)) {
        return Err(Error::Precondition(format!("e^(-dbar^-1 b) nearly vanishes on the boundary: min {emin:.3e}")));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let z = w_r.point(j);
        acc += z.conj() * ((w_r.values()[j] - w_i.values()[j]) / einvb.values()[j]).conj();
    }
    Ok(Complex64::i() / (4.0 * PI) * acc * (2.0 * PI / m as f64))
}

/// `t(k)` from the traces `h_r`, `h_i` of the whole-plane solutions and `E = e^{-dbar^{-1} b}` on the circle.
pub fn boundary_scattering_transform(
    h_r: &BoundaryFunction,
    h_i: &BoundaryFunction,
    einvb: &BoundaryFunction,
    k: Complex64,
) -> Result<Complex64> {
    let w_r = h_r.map(|z, v| (-Complex64::i() * z * k).exp() * v);
    let w_i = h_i.map(|z, v| -Complex64::i() * (-Complex64::i() * z * k).exp() * v);
    boundary_transform_w(&w_r, &w_i, einvb)
}

/// Estimate of `e^{-dbar^{-1} b}` on the circle: the average of `e^{-izk} h_r` over
/// `directions` values of `k` on `|k| = kmax`.
pub fn einvb_limit(dtn: &DtnOperator, kmax: f64, directions: usize, opts: &TraceOptions) -> Result<BoundaryFunction> {
    if directions == 0 || !(kmax > 0.0) {
        return Err(Error::Precondition("need at least one direction and kmax > 0".into()));
    }
    let ks: Vec<Complex64> = (0..directions)
        .map(|d| Complex64::from_polar(kmax, 2.0 * PI * d as f64 / directions as f64))
        .collect();
    let traces = run_batch(&ks, |k| recover_traces(dtn, k, opts))?;
    let m = opts.samples;
    let mut sum = vec![Complex64::new(0.0, 0.0); m];
    for t in &traces {
        for (s, v) in sum.iter_mut().zip(t.w_r.values()) {
            *s += v;
        }
    }
    BoundaryFunction::new(sum.into_iter().map(|v| v / directions as f64).collect())
}

/// Oracle: the normalized whole-plane solution `w` (see [`crate::convection::solve_w`])
/// evaluated on the circle by the direct Cauchy sum of its source.
pub fn circle_w_trace(
    f: &ConvectionField,
    k: Complex64,
    branch: Branch,
    m: usize,
    opts: &GmresOptions,
) -> Result<BoundaryFunction> {
    let (alpha, beta) = w_coefficients(f, k, branch);
    let sol = solve_on_support(Some(&alpha), &beta, opts)?;
    let w = extend_to_grid(&sol, Some(&alpha), &beta)?;
    let source = alpha.zip_map(&w, |a, v| a * v).zip_map(&beta.zip_map(&w, |b, v| b * v.conj()), |x, y| x + y);
    BoundaryFunction::from_fn(m, |_, z| Complex64::new(1.0, 0.0) - cauchy_transform_at(&source, z))
}

/// Oracle: `e^{-dbar^{-1} b}` on the circle by the direct Cauchy sum.
pub fn circle_einvb(f: &ConvectionField, m: usize) -> Result<BoundaryFunction> {
    BoundaryFunction::from_fn(m, |_, z| (-cauchy_transform_at(f.b().grid(), z)).exp())
}

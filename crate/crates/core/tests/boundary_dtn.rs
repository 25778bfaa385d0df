mod common;

use common::*;
use dbar::boundary::{
    boundary_scattering_transform, cauchy_singular, circle_einvb, circle_w_trace, einvb_limit, hilbert_hb,
    recover_traces, BoundaryFunction, DtnOperator, DtnOptions, DtnSolver, TraceOptions,
};
use dbar::convection::{q_from_b, ConvectionField};
use dbar::forward::scattering_transform_volume;
use dbar::pipeline::{make_phantom, Blob, Phantom, PhantomKind};
use dbar::solve::{Branch, GmresOptions};
use num_complex::Complex64;

fn dtn(field: &ConvectionField) -> DtnOperator {
    DtnSolver::new(field, DtnOptions::default()).unwrap().operator()
}

fn corpus() -> Vec<ConvectionField> {
    vec![gauss_field(128), make_phantom(&Phantom::calibrated(), 128, 1.0).unwrap()]
}

/// The true trace `W_r` on the circle.
fn true_trace(field: &ConvectionField, k: Complex64, m: usize) -> BoundaryFunction {
    circle_w_trace(field, k, Branch::Real, m, &GmresOptions::default())
        .unwrap()
        .map(|z, w| (Complex64::i() * z * k).exp() * w)
}

fn oracle_error(dtn: &DtnOperator, field: &ConvectionField, k: Complex64, opts: &TraceOptions) -> f64 {
    let tr = recover_traces(dtn, k, opts).unwrap();
    let truth = true_trace(field, k, opts.samples);
    max_abs_diff(tr.h_r.values(), truth.values()) / truth.max_abs()
}

#[test]
fn dtn_is_converged_in_the_radial_degree() {
    let field = gauss_field(128);
    let base = dtn(&field);
    let fine = DtnSolver::new(
        &field,
        DtnOptions {
            radial_degree: 161,
            ..DtnOptions::default()
        },
    )
    .unwrap()
    .operator();
    let diff = max_abs_diff(&base.matrix, &fine.matrix);
    assert!(diff <= 1e-7, "{diff:e}");
    let constant_column = (-32..=32).map(|m| base.entry(m, 0).norm()).fold(0.0, f64::max);
    assert!(constant_column <= 1e-10, "{constant_column:e}");
}

#[test]
fn true_traces_satisfy_both_boundary_relations() {
    for field in corpus() {
        let map = dtn(&field);
        for k in [c(0.5, 0.0), c(-1.0, 2.0), c(2.5, -1.5)] {
            let h = true_trace(&field, k, 128);
            // H_b Im(nu h) = Re(nu h)
            let nu_h = h.map(|z, v| z * v);
            let im = nu_h.map(|_, v| c(v.im, 0.0));
            let im = im.map(|_, v| v - im.mean());
            let hb = hilbert_hb(&map, &im).unwrap();
            let re = nu_h.map(|_, v| c(v.re, 0.0));
            let err31 = max_abs_diff(hb.values(), re.values()) / nu_h.max_abs();
            assert!(err31 <= 1e-4, "k = {k}: H_b relation {err31:e}");
            // (I - i S_k) h = 2 e^{izk}
            let s = cauchy_singular(&h, k);
            let lhs = h.zip_map(&s, |a, b| a - Complex64::i() * b);
            let rhs = h.map(|z, _| 2.0 * (Complex64::i() * z * k).exp());
            let err30 = max_abs_diff(lhs.values(), rhs.values()) / rhs.max_abs();
            assert!(err30 <= 1e-5, "k = {k}: jump relation {err30:e}");
        }
    }
}

#[test]
fn longer_series_does_not_increase_the_error() {
    for field in corpus() {
        let map = dtn(&field);
        for k in [c(1.0, 1.0), c(-3.0, 0.0)] {
            let short = TraceOptions {
                series_n: 8,
                ..TraceOptions::default()
            };
            let e8 = oracle_error(&map, &field, k, &short);
            let e16 = oracle_error(&map, &field, k, &TraceOptions::default());
            // once both sit at the discretization floor (~3e-8) they differ only in roundoff
            assert!(e16 <= e8 + 1e-9, "k = {k}: N = 8 {e8:e}, N = 16 {e16:e}");
        }
    }
}

#[test]
fn traces_do_not_depend_on_the_ridge_parameter() {
    let field = gauss_field(128);
    let map = dtn(&field);
    for k in [c(0.0, 1.0), c(2.0, -2.0)] {
        let with = |reg: f64| {
            recover_traces(
                &map,
                k,
                &TraceOptions {
                    reg,
                    ..TraceOptions::default()
                },
            )
            .unwrap()
        };
        let (a, b) = (with(1e-6), with(1e-10));
        let residual = [&a.report_r, &b.report_r]
            .iter()
            .map(|r| r.residual_30.max(r.residual_31))
            .fold(0.0, f64::max);
        let diff = max_abs_diff(a.h_r.values(), b.h_r.values()) / a.h_r.max_abs();
        assert!(diff <= 10.0 * residual.max(1e-12), "k = {k}: {diff:e} vs residual {residual:e}");
    }
}

#[test]
fn recovered_traces_are_in_the_zero_mean_class() {
    let field = gauss_field(128);
    let map = dtn(&field);
    for k in [c(0.0, 0.0), c(1.5, 2.0), c(-3.0, -1.0)] {
        let tr = recover_traces(&map, k, &TraceOptions::default()).unwrap();
        let nu_h = tr.h_r.map(|z, v| z * v);
        let mean = nu_h.values().iter().map(|v| v.im).sum::<f64>() / nu_h.len() as f64;
        assert!(mean.abs() <= 1e-10, "k = {k}: {mean:e}");
        assert!(tr.report_r.mean_im <= 1e-10 && tr.report_i.mean_im <= 1e-10);
    }
}

#[test]
fn large_k_limit_improves_with_kmax() {
    let field = gauss_field(128);
    let map = dtn(&field);
    let truth = circle_einvb(&field, 128).unwrap();
    let err = |kmax: f64| {
        let est = einvb_limit(&map, kmax, 8, &TraceOptions::default()).unwrap();
        max_abs_diff(est.values(), truth.values()) / truth.max_abs()
    };
    let (e4, e8) = (err(4.0), err(8.0));
    assert!(e8 <= 1e-2, "{e8:e}");
    assert!(e8 < e4, "Kmax = 4: {e4:e}, Kmax = 8: {e8:e}");
}

#[test]
fn conjugated_reflected_field_conjugates_the_transform() {
    // b'(z) = conj(b(conj z)) gives t'(-conj k) = -conj(t(k))
    let blob = |cy: f64, b2: f64| Phantom {
        kind: PhantomKind::Gauss,
        blobs: vec![Blob {
            center: [0.1, cy],
            width: 0.22,
            b1: 0.3,
            b2,
        }],
        support_radius: 0.8,
    };
    let f = make_phantom(&blob(0.15, 0.2), 128, 1.0).unwrap();
    let g = make_phantom(&blob(-0.15, -0.2), 128, 1.0).unwrap();
    let opts = TraceOptions::default();
    let k = c(1.2, -0.8);
    let boundary_t = |field: &ConvectionField, k: Complex64| {
        let map = dtn(field);
        let tr = recover_traces(&map, k, &opts).unwrap();
        let einvb = circle_einvb(field, opts.samples).unwrap();
        boundary_scattering_transform(&tr.h_r, &tr.h_i, &einvb, k).unwrap()
    };
    let t = boundary_t(&f, k);
    let t2 = boundary_t(&g, -k.conj());
    assert!((t2 + t.conj()).norm() <= 1e-6 * t.norm(), "{t} vs {t2}");
    let volume = scattering_transform_volume(&q_from_b(&g).unwrap(), -k.conj(), &GmresOptions::default()).unwrap();
    assert!((t2 - volume).norm() <= 1e-3 * volume.norm(), "{t2} vs volume {volume}");
}

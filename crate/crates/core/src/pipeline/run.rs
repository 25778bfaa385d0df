use super::config::RunConfig;
use super::io::{round_json, write_boundary, write_dtn, write_grid, write_json, write_transform};
use super::phantom::{make_phantom, Phantom};
use crate::boundary::{assemble_dtn, boundary_transform_w, circle_einvb, einvb_limit, recover_traces, BoundaryFunction, DtnOperator};
use crate::convection::{phase_unwrap, q_from_b, ConvectionField};
use crate::error::Result;
use crate::forward::{disk_nodes, scattering_grid, ScatteringTransform};
use crate::grid::{grid_norm, ComplexGrid, Potential};
use crate::inverse::reconstruct_q;
use crate::solve::run_batch;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Significant digits of every float in a report.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// DtN map, traces, boundary transform, inversion, unwrapping.
    Full,
    /// `q -> t -> q -> b` without the boundary stages.
    Volume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub b1: f64,
    pub b2: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub k_nodes: usize,
    pub max_abs_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_trace_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_warnings: Option<usize>,
    /// Relative sup error of the large-`k` estimate of `e^{-dbar^{-1} b}` against direct evaluation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einvb_error: Option<f64>,
    pub unwrap_below_threshold: usize,
    pub unwrap_min_abs_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub variant: Variant,
    pub config_hash: String,
    pub config: RunConfig,
    pub phantom: Phantom,
    pub errors: ErrorMetrics,
    pub diagnostics: Diagnostics,
    pub timings: Vec<StageTiming>,
}

impl Report {
    /// JSON with floats rounded to [`REPORT_DIGITS`] significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_json(&mut v, REPORT_DIGITS);
        v
    }

    /// [`to_json`](Self::to_json) without the timings, for reproducibility checks.
    pub fn without_timings(&self) -> serde_json::Value {
        let mut v = self.to_json();
        v.as_object_mut().expect("report is an object").remove("timings");
        v
    }
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: Report,
    pub field: ConvectionField,
    pub q: Potential,
    pub t: ScatteringTransform,
    pub q_rec: Potential,
    pub field_rec: ConvectionField,
    pub dtn: Option<DtnOperator>,
    pub einvb: Option<BoundaryFunction>,
}

/// `||est - reference|| / ||reference||`, or the plain norm of `est` when the reference vanishes.
pub fn relative_l2(reference: &ComplexGrid, est: &ComplexGrid) -> f64 {
    let diff = grid_norm(&reference.zip_map(est, |a, b| a - b), 2.0);
    let den = grid_norm(reference, 2.0);
    if den == 0.0 {
        diff
    } else {
        diff / den
    }
}

struct Stages {
    timings: Vec<StageTiming>,
    out: Option<PathBuf>,
    hash: String,
}

impl Stages {
    fn run<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        log::info!("stage {stage}");
        let value = f().map_err(|e| e.in_stage(stage))?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(value)
    }

    fn persist(&self, stage: &str, f: impl FnOnce(&Path, &str) -> Result<()>) -> Result<()> {
        match &self.out {
            Some(dir) => f(dir, &self.hash).map_err(|e| e.in_stage(stage)),
            None => Ok(()),
        }
    }
}

fn start(cfg: &RunConfig, phantom: &Phantom) -> Result<(Stages, ConvectionField, Potential)> {
    cfg.validate()?;
    let mut stages = Stages {
        timings: Vec::new(),
        out: cfg.output_dir.clone(),
        hash: cfg.hash(),
    };
    if let Some(dir) = &stages.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("config.json"), cfg)?;
    }
    let field = stages.run("phantom", || make_phantom(phantom, cfg.nx, cfg.half_width))?;
    let q = stages.run("potential", || q_from_b(&field))?;
    stages.persist("phantom", |dir, hash| {
        write_json(&dir.join("phantom.json"), phantom)?;
        write_grid(&dir.join("b1.grid"), field.b1(), hash)?;
        write_grid(&dir.join("b2.grid"), field.b2(), hash)?;
        write_grid(&dir.join("q.grid"), q.grid(), hash)
    })?;
    Ok((stages, field, q))
}

/// What a run is reconstructing.
struct Truth<'a> {
    variant: Variant,
    cfg: &'a RunConfig,
    phantom: &'a Phantom,
    field: &'a ConvectionField,
    q: &'a Potential,
}

fn finish(
    truth: Truth<'_>,
    mut stages: Stages,
    t: &ScatteringTransform,
    mut diagnostics: Diagnostics,
) -> Result<(Report, Potential, ConvectionField)> {
    let Truth {
        variant,
        cfg,
        phantom,
        field,
        q,
    } = truth;
    stages.persist("scatter", |dir, hash| write_transform(&dir.join("t.grid"), t, hash))?;
    let xspec = cfg.x_spec()?;
    let q_rec = stages.run("invert", || reconstruct_q(t, xspec, phantom.support_radius, &cfg.gmres))?;
    stages.persist("invert", |dir, hash| write_grid(&dir.join("q_rec.grid"), q_rec.grid(), hash))?;
    let unwrapped = stages.run("unwrap", || phase_unwrap(&q_rec, &cfg.gmres))?;
    let field_rec = unwrapped.field;
    stages.persist("unwrap", |dir, hash| {
        write_grid(&dir.join("b1_rec.grid"), field_rec.b1(), hash)?;
        write_grid(&dir.join("b2_rec.grid"), field_rec.b2(), hash)
    })?;
    diagnostics.k_nodes = disk_nodes(t.spec(), t.radius()).0.len();
    diagnostics.max_abs_t = t.grid().max_abs();
    diagnostics.unwrap_below_threshold = unwrapped.below_threshold;
    diagnostics.unwrap_min_abs_v = unwrapped.min_abs_v;
    let report = Report {
        variant,
        config_hash: stages.hash.clone(),
        config: cfg.clone(),
        phantom: phantom.clone(),
        errors: ErrorMetrics {
            b1: relative_l2(field.b1(), field_rec.b1()),
            b2: relative_l2(field.b2(), field_rec.b2()),
            q: relative_l2(q.grid(), q_rec.grid()),
        },
        diagnostics,
        timings: stages.timings.clone(),
    };
    stages.persist("report", |dir, _| write_json(&dir.join("report.json"), &report.to_json()))?;
    Ok((report, q_rec, field_rec))
}

/// Boundary-side output at every `k` node.
#[derive(Debug, Clone)]
pub struct BoundaryScatter {
    pub t: ScatteringTransform,
    pub einvb: BoundaryFunction,
    pub max_trace_residual: f64,
    pub trace_warnings: usize,
}

/// Traces at every `k` node with `|k| <= K`, the large-`k` estimate of `e^{-dbar^{-1} b}`
/// and the boundary formula for `t`.
pub fn scatter_from_dtn(dtn: &DtnOperator, cfg: &RunConfig) -> Result<BoundaryScatter> {
    let (traces, einvb) = boundary_stages(dtn, cfg, None)?;
    finish_scatter(cfg, traces, einvb)
}

type TracePair = (BoundaryFunction, BoundaryFunction, f64, bool);

fn boundary_stages(
    dtn: &DtnOperator,
    cfg: &RunConfig,
    mut stages: Option<&mut Stages>,
) -> Result<(Vec<TracePair>, BoundaryFunction)> {
    let kspec = cfg.k_spec()?;
    let topts = cfg.trace_options();
    let (_, points) = disk_nodes(kspec, cfg.k_radius);
    let trace_stage = || {
        run_batch(&points, |k| {
            let tr = recover_traces(dtn, k, &topts)?;
            let residual = [tr.report_r.residual_30, tr.report_r.residual_31, tr.report_i.residual_30, tr.report_i.residual_31]
                .into_iter()
                .fold(0.0, f64::max);
            let warned = tr.report_r.warning.is_some() || tr.report_i.warning.is_some();
            Ok((tr.w_r, tr.w_i, residual, warned))
        })
    };
    let einvb_stage = || einvb_limit(dtn, cfg.kmax, cfg.directions, &topts);
    match stages.as_deref_mut() {
        Some(s) => {
            let traces = s.run("traces", trace_stage)?;
            let einvb = s.run("einvb", einvb_stage)?;
            s.persist("einvb", |dir, hash| write_boundary(&dir.join("einvb.csv"), &einvb, hash))?;
            Ok((traces, einvb))
        }
        None => Ok((trace_stage()?, einvb_stage()?)),
    }
}

fn finish_scatter(cfg: &RunConfig, traces: Vec<TracePair>, einvb: BoundaryFunction) -> Result<BoundaryScatter> {
    let kspec = cfg.k_spec()?;
    let (indices, _) = disk_nodes(kspec, cfg.k_radius);
    let mut grid = ComplexGrid::zeros(kspec);
    let mut max_trace_residual: f64 = 0.0;
    let mut trace_warnings = 0;
    for (idx, (w_r, w_i, residual, warned)) in indices.into_iter().zip(&traces) {
        grid.samples_mut()[idx] = boundary_transform_w(w_r, w_i, &einvb)?;
        max_trace_residual = max_trace_residual.max(*residual);
        trace_warnings += usize::from(*warned);
    }
    Ok(BoundaryScatter {
        t: ScatteringTransform::new(grid, cfg.k_radius)?,
        einvb,
        max_trace_residual,
        trace_warnings,
    })
}

/// Full reconstruction of `b1, b2` from the DtN map of the phantom.
pub fn run_pipeline(cfg: &RunConfig, phantom: &Phantom) -> Result<PipelineOutput> {
    let (mut stages, field, q) = start(cfg, phantom)?;
    let dtn = stages.run("forward-dtn", || {
        let mut dtn = assemble_dtn(&field, cfg.dtn_options())?;
        dtn.phantom_id = Some(phantom_id(phantom));
        Ok(dtn)
    })?;
    stages.persist("forward-dtn", |dir, _| write_dtn(&dir.join("dtn.json"), &dtn))?;
    let (traces, einvb) = boundary_stages(&dtn, cfg, Some(&mut stages))?;
    let scatter = stages.run("scatter", || finish_scatter(cfg, traces, einvb))?;
    let einvb_error = {
        let direct = circle_einvb(&field, cfg.samples)?;
        direct.zip_map(&scatter.einvb, |a, b| a - b).max_abs() / direct.max_abs()
    };
    let diagnostics = Diagnostics {
        max_trace_residual: Some(scatter.max_trace_residual),
        trace_warnings: Some(scatter.trace_warnings),
        einvb_error: Some(einvb_error),
        ..Diagnostics::default()
    };
    let t = scatter.t;
    let truth = Truth {
        variant: Variant::Full,
        cfg,
        phantom,
        field: &field,
        q: &q,
    };
    let (report, q_rec, field_rec) = finish(truth, stages, &t, diagnostics)?;
    Ok(PipelineOutput {
        report,
        field,
        q,
        t,
        q_rec,
        field_rec,
        dtn: Some(dtn),
        einvb: Some(scatter.einvb),
    })
}

/// The volume-only round trip `q -> t -> q -> b`.
pub fn roundtrip_volume(cfg: &RunConfig, phantom: &Phantom) -> Result<PipelineOutput> {
    let (mut stages, field, q) = start(cfg, phantom)?;
    let kspec = cfg.k_spec()?;
    let t = stages.run("scatter", || scattering_grid(&q, kspec, cfg.k_radius, &cfg.gmres))?;
    let truth = Truth {
        variant: Variant::Volume,
        cfg,
        phantom,
        field: &field,
        q: &q,
    };
    let (report, q_rec, field_rec) = finish(truth, stages, &t, Diagnostics::default())?;
    Ok(PipelineOutput {
        report,
        field,
        q,
        t,
        q_rec,
        field_rec,
        dtn: None,
        einvb: None,
    })
}

/// Short content hash of a phantom, used as the DtN metadata id.
pub fn phantom_id(phantom: &Phantom) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(phantom).expect("phantom serializes");
    hex::encode(&Sha256::digest(bytes)[..8])
}

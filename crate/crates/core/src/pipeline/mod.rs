//! Phantoms, configuration, file formats and end-to-end orchestration.

mod config;
pub mod io;
mod phantom;
mod run;

pub use config::RunConfig;
pub use phantom::{make_phantom, smooth_cutoff, Blob, Phantom, PhantomKind};
pub use run::{
    phantom_id, relative_l2, roundtrip_volume, run_pipeline, scatter_from_dtn, BoundaryScatter, Diagnostics,
    ErrorMetrics, PipelineOutput, Report, StageTiming, Variant, REPORT_DIGITS,
};

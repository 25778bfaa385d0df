//! `dbar`: reconstruct convection coefficients from Dirichlet-to-Neumann data.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dbar::boundary::recover_traces;
use dbar::convection::{phase_unwrap, q_from_b, ConvectionField};
use dbar::grid::{GridSpec, Potential, SUPPORT_FRACTION};
use dbar::inverse::reconstruct_q;
use dbar::pipeline::io::{compare, read_dtn, read_grid, round_json, write_boundary, write_dtn, write_grid, write_json, read_transform, write_transform};
use dbar::pipeline::{make_phantom, phantom_id, REPORT_DIGITS, roundtrip_volume, run_pipeline, scatter_from_dtn, Blob, Phantom, PhantomKind, RunConfig};
use dbar::{Error, Result};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dbar", version, about = "D-bar reconstruction of convection coefficients from boundary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a phantom: writes b1.grid, b2.grid, q.grid and phantom.json.
    Phantom(PhantomCmd),
    /// Assemble the DtN map of b1.grid, b2.grid: writes dtn.json.
    ForwardDtn(ForwardDtnCmd),
    /// Recover the boundary traces at one k: writes h_r.csv, h_i.csv.
    Traces(TracesCmd),
    /// Scattering transform from the DtN map on the k-grid: writes t.grid, einvb.csv.
    Scatter(ScatterCmd),
    /// Reconstruct q from t.grid: writes q_rec.grid.
    Invert(InvertCmd),
    /// Recover b from a potential grid: writes b1_rec.grid, b2_rec.grid.
    Unwrap(UnwrapCmd),
    /// q -> t -> q -> b without boundary data.
    RoundtripVolume(RunCmd),
    /// Full reconstruction from the DtN map of a phantom.
    Pipeline(RunCmd),
    /// Relative discrete norm ||b - a|| / ||a|| of two grid files.
    Compare(CompareCmd),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    /// Spatial half-width L.
    #[arg(long = "half-width")]
    half_width: Option<f64>,
    /// Truncation radius K of the scattering transform.
    #[arg(long = "k-radius")]
    k_radius: Option<f64>,
    #[arg(long = "kgrid-n")]
    kgrid_n: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long = "radial-degree")]
    radial_degree: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "series-n")]
    series_n: Option<usize>,
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    kmax: Option<f64>,
    #[arg(long)]
    directions: Option<usize>,
    /// GMRES relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for every artifact (default: the current directory).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(nx, half_width, k_radius, kgrid_n, modes, radial_degree, samples, series_n, reg, kmax, directions, seed);
        if let Some(tol) = self.tol {
            cfg.gmres.tol = tol;
        }
        if let Some(out) = &self.output {
            cfg.output_dir = Some(out.clone());
        }
        cfg.validate()?;
        if let Some(threads) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Precondition(format!("cannot size the worker pool: {e}")))?;
        }
        Ok(cfg)
    }

    fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
        let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Gauss,
    Bump,
    TwoBlob,
    Calibrated,
    Zero,
}

#[derive(Args, Clone)]
struct PhantomArgs {
    /// Phantom JSON file; overrides the preset flags.
    #[arg(long = "phantom-file")]
    phantom_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "calibrated")]
    phantom: Preset,
    /// Peak of b1 for the single-blob presets.
    #[arg(long, default_value_t = 0.3)]
    b1: f64,
    #[arg(long, default_value_t = 0.0)]
    b2: f64,
    #[arg(long, default_value_t = 0.25)]
    width: f64,
    #[arg(long = "support-radius", default_value_t = SUPPORT_FRACTION)]
    support_radius: f64,
}

impl PhantomArgs {
    fn build(&self) -> Result<Phantom> {
        if let Some(path) = &self.phantom_file {
            return Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?);
        }
        let single = |kind| Phantom {
            kind,
            blobs: vec![Blob {
                center: [0.0, 0.0],
                width: self.width,
                b1: self.b1,
                b2: self.b2,
            }],
            support_radius: self.support_radius,
        };
        let mut p = match self.phantom {
            Preset::Gauss => single(PhantomKind::Gauss),
            Preset::Bump => single(PhantomKind::Bump),
            Preset::TwoBlob | Preset::Calibrated => Phantom::calibrated(),
            Preset::Zero => Phantom::zero(),
        };
        p.support_radius = self.support_radius;
        Ok(p)
    }
}

#[derive(Args)]
struct PhantomCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    phantom: PhantomArgs,
}

#[derive(Args)]
struct ForwardDtnCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// b1 grid (default: <output>/b1.grid).
    #[arg(long = "b1-file")]
    b1_file: Option<PathBuf>,
    #[arg(long = "b2-file")]
    b2_file: Option<PathBuf>,
    #[arg(long = "support-radius", default_value_t = SUPPORT_FRACTION)]
    support_radius: f64,
}

#[derive(Args)]
struct TracesCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// DtN file (default: <output>/dtn.json).
    #[arg(long)]
    dtn: Option<PathBuf>,
    /// Spectral parameter as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    k: Complex64,
}

#[derive(Args)]
struct ScatterCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    dtn: Option<PathBuf>,
}

#[derive(Args)]
struct InvertCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Scattering transform grid (default: <output>/t.grid).
    #[arg(long)]
    t: Option<PathBuf>,
    #[arg(long = "support-radius", default_value_t = SUPPORT_FRACTION)]
    support_radius: f64,
}

#[derive(Args)]
struct UnwrapCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Potential grid (default: <output>/q_rec.grid).
    #[arg(long)]
    q: Option<PathBuf>,
    #[arg(long = "support-radius", default_value_t = SUPPORT_FRACTION)]
    support_radius: f64,
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    phantom: PhantomArgs,
}

#[derive(Args)]
struct CompareCmd {
    a: PathBuf,
    b: PathBuf,
    /// Discrete p-norm exponent.
    #[arg(long, default_value_t = 2.0)]
    norm: f64,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got {s:?}")),
    }
}

fn or_default(path: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| dir.join(name))
}

fn print(value: serde_json::Value) -> Result<()> {
    let mut value = value;
    round_json(&mut value, REPORT_DIGITS);
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Phantom(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let phantom = cmd.phantom.build()?;
            let field = make_phantom(&phantom, cfg.nx, cfg.half_width)?;
            let q = q_from_b(&field)?;
            let hash = cfg.hash();
            write_json(&dir.join("phantom.json"), &phantom)?;
            write_grid(&dir.join("b1.grid"), field.b1(), &hash)?;
            write_grid(&dir.join("b2.grid"), field.b2(), &hash)?;
            write_grid(&dir.join("q.grid"), q.grid(), &hash)?;
            print(serde_json::json!({
                "phantom_id": phantom_id(&phantom),
                "max_abs_b1": field.b1().max_abs(),
                "max_abs_b2": field.b2().max_abs(),
                "max_abs_q": q.grid().max_abs(),
                "config_hash": hash,
            }))
        }
        Command::ForwardDtn(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let b1 = read_grid(&or_default(&cmd.b1_file, &dir, "b1.grid"))?;
            let b2 = read_grid(&or_default(&cmd.b2_file, &dir, "b2.grid"))?;
            let field = ConvectionField::new(b1.grid, b2.grid, cmd.support_radius)?;
            let mut dtn = dbar::boundary::assemble_dtn(&field, cfg.dtn_options())?;
            dtn.phantom_id = Some(b1.config_hash);
            let path = dir.join("dtn.json");
            write_dtn(&path, &dtn)?;
            print(serde_json::json!({ "modes": dtn.modes, "path": path }))
        }
        Command::Traces(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let dtn = read_dtn(&or_default(&cmd.dtn, &dir, "dtn.json"))?;
            let traces = recover_traces(&dtn, cmd.k, &cfg.trace_options())?;
            let hash = cfg.hash();
            write_boundary(&dir.join("h_r.csv"), &traces.h_r, &hash)?;
            write_boundary(&dir.join("h_i.csv"), &traces.h_i, &hash)?;
            print(serde_json::json!({
                "k": [cmd.k.re, cmd.k.im],
                "report_r": traces.report_r,
                "report_i": traces.report_i,
            }))
        }
        Command::Scatter(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let dtn = read_dtn(&or_default(&cmd.dtn, &dir, "dtn.json"))?;
            let scatter = scatter_from_dtn(&dtn, &cfg)?;
            let hash = cfg.hash();
            write_transform(&dir.join("t.grid"), &scatter.t, &hash)?;
            write_boundary(&dir.join("einvb.csv"), &scatter.einvb, &hash)?;
            print(serde_json::json!({
                "meta": scatter.t.meta(),
                "max_abs_t": scatter.t.grid().max_abs(),
                "max_trace_residual": scatter.max_trace_residual,
                "trace_warnings": scatter.trace_warnings,
            }))
        }
        Command::Invert(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let t = read_transform(&or_default(&cmd.t, &dir, "t.grid"), cfg.k_radius)?;
            let q = reconstruct_q(&t, GridSpec::new(cfg.nx, cfg.half_width)?, cmd.support_radius, &cfg.gmres)?;
            write_grid(&dir.join("q_rec.grid"), q.grid(), &cfg.hash())?;
            print(serde_json::json!({ "max_abs_q": q.grid().max_abs() }))
        }
        Command::Unwrap(cmd) => {
            let cfg = cmd.cfg.load()?;
            let dir = ConfigArgs::out_dir(&cfg)?;
            let q = read_grid(&or_default(&cmd.q, &dir, "q_rec.grid"))?;
            let unwrapped = phase_unwrap(&Potential::new(q.grid, cmd.support_radius)?, &cfg.gmres)?;
            let hash = cfg.hash();
            write_grid(&dir.join("b1_rec.grid"), unwrapped.field.b1(), &hash)?;
            write_grid(&dir.join("b2_rec.grid"), unwrapped.field.b2(), &hash)?;
            print(serde_json::json!({
                "below_threshold": unwrapped.below_threshold,
                "min_abs_v": unwrapped.min_abs_v,
            }))
        }
        Command::RoundtripVolume(cmd) => {
            let cfg = cmd.cfg.load()?;
            let out = roundtrip_volume(&with_out_dir(cfg)?, &cmd.phantom.build()?)?;
            print(out.report.to_json())
        }
        Command::Pipeline(cmd) => {
            let cfg = cmd.cfg.load()?;
            let out = run_pipeline(&with_out_dir(cfg)?, &cmd.phantom.build()?)?;
            print(out.report.to_json())
        }
        Command::Compare(cmd) => {
            let value = compare(&cmd.a, &cmd.b, cmd.norm)?;
            println!("{value:e}");
            Ok(())
        }
    }
}

fn with_out_dir(mut cfg: RunConfig) -> Result<RunConfig> {
    cfg.output_dir = Some(ConfigArgs::out_dir(&cfg)?);
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 3 } else { 2 })
        }
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use ocf_core::baselines::Method;
use ocf_core::occupancy::RayMode;
use ocf_core::pipeline::{self, PipelineConfig};
use ocf_core::sim::{simulate_sequence, SceneSpec};
use ocf_core::store::Split;
use ocf_core::GridSpec;

const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ocf", version, about = "Occupancy completion and forecasting dataset toolkit")]
struct Cli {
    /// Log level for stderr (error, warn, info, debug, trace); RUST_LOG overrides.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a LiDAR sequence from a scene description.
    Sim(SimArgs),
    /// Curate raw sequences into an occupancy dataset.
    Curate(CurateArgs),
    /// Run a non-learned forecaster over a dataset.
    Baseline(BaselineArgs),
    /// Score predictions against a dataset.
    Eval(EvalArgs),
    /// Summarize a curated dataset.
    Stats(StatsArgs),
}

#[derive(Args)]
struct Jobs {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "OCF_JOBS")]
    jobs: Option<usize>,
}

impl Jobs {
    fn get(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    frames: usize,
    /// Raw directory; the sequence goes into `<out>/<sequence-id>`.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the scene file name without extension.
    #[arg(long)]
    sequence_id: Option<String>,
}

#[derive(Args)]
struct CurateArgs {
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// (T_in, T_out) preset: 5/5, 5/10 or 10/10.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    t_in: Option<usize>,
    #[arg(long)]
    t_out: Option<usize>,
    #[arg(long)]
    min_points: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    context: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train,val,test scene ratios.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// per-target or pooled.
    #[arg(long)]
    ray_mode: Option<String>,
    #[arg(long)]
    box_margin: Option<f64>,
    /// Aggregate dynamic objects where they were captured.
    #[arg(long)]
    no_sync: bool,
    #[arg(long, value_delimiter = ',')]
    grid_origin: Option<Vec<f64>>,
    #[arg(long)]
    voxel_size: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    grid_dims: Option<Vec<usize>>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// static-world, persistence or union.
    #[arg(long)]
    method: String,
    #[arg(long)]
    out: PathBuf,
    /// train, val or test; all samples when omitted.
    #[arg(long)]
    split: Option<String>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    split: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

fn parse_split(s: &Option<String>) -> Result<Option<Split>> {
    Ok(match s {
        Some(s) => Some(s.parse()?),
        None => None,
    })
}

fn emit(value: serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn sim(a: &SimArgs) -> Result<()> {
    let text = fs::read_to_string(&a.scene).with_context(|| format!("reading {}", a.scene.display()))?;
    let scene: SceneSpec =
        serde_json::from_str(&text).map_err(|e| ocf_core::Error::Format(format!("{}: {e}", a.scene.display())))?;
    let id = match &a.sequence_id {
        Some(id) => id.clone(),
        None => a
            .scene
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into()),
    };
    let seq = simulate_sequence(&scene, a.frames, &id)?;
    let dir = a.out.join(&id);
    ocf_core::ingest::save_sequence(&seq, &dir)?;
    info!("event=sim sequence={id} frames={} out={}", a.frames, dir.display());
    Ok(())
}

fn curate_config(a: &CurateArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| ocf_core::Error::Config(format!("{}: {e}", p.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(p) = &a.preset {
        cfg.apply_preset(p)?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = a.$field.clone() { cfg.$field = v; })*};
    }
    set!(name, t_in, t_out, min_points, stride, context, seed, box_margin);
    for (flag, len) in [
        ("--ratios", a.ratios.as_ref().map(Vec::len)),
        ("--grid-origin", a.grid_origin.as_ref().map(Vec::len)),
        ("--grid-dims", a.grid_dims.as_ref().map(Vec::len)),
    ] {
        if len.is_some_and(|n| n != 3) {
            return Err(ocf_core::Error::Config(format!("{flag} takes three comma-separated values")).into());
        }
    }
    if let Some(r) = &a.ratios {
        cfg.split_ratios = [r[0], r[1], r[2]];
    }
    if let Some(m) = &a.ray_mode {
        cfg.ray_mode = serde_json::from_value::<RayMode>(serde_json::Value::String(m.clone()))
            .map_err(|_| ocf_core::Error::Config(format!("unknown ray mode {m:?}; expected per-target or pooled")))?;
    }
    if a.no_sync {
        cfg.synchronize = false;
    }
    if a.grid_origin.is_some() || a.voxel_size.is_some() || a.grid_dims.is_some() {
        let o = a.grid_origin.clone().map_or(cfg.grid.origin().into(), |v| [v[0], v[1], v[2]]);
        let s = a.voxel_size.map_or(cfg.grid.voxel_size().into(), |v| [v; 3]);
        let d = a.grid_dims.clone().map_or(cfg.grid.dims(), |v| [v[0], v[1], v[2]]);
        cfg.grid = GridSpec::new(o, s, d)?;
    }
    Ok(cfg)
}

fn curate(a: &CurateArgs) -> Result<()> {
    let cfg = curate_config(a)?;
    let manifest = pipeline::curate(&a.raw, &a.out, &cfg, a.jobs.get())?;
    let summary: serde_json::Value = serde_json::json!({
        "name": manifest.name,
        "scenes": manifest.scene_counts,
        "frames": manifest.frame_counts,
    });
    emit(summary, None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sim(a) => sim(&a),
        Command::Curate(a) => curate(&a),
        Command::Baseline(a) => {
            let method: Method = a.method.parse()?;
            let index = pipeline::run_baseline(&a.dataset, method, &a.out, parse_split(&a.split)?, a.jobs.get())?;
            info!("event=baseline_done samples={} out={}", index.samples.len(), a.out.display());
            Ok(())
        }
        Command::Eval(a) => {
            let out = pipeline::evaluate(&a.pred, &a.dataset, a.threshold, parse_split(&a.split)?, a.jobs.get())?;
            emit(serde_json::to_value(out)?, a.out.as_deref())
        }
        Command::Stats(a) => emit(serde_json::to_value(pipeline::dataset_stats(&a.dataset, a.jobs.get())?)?, a.out.as_deref()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ocf_core::Error>() {
        Some(e) if e.is_internal() => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            match err.downcast_ref::<ocf_core::Error>() {
                Some(e) => eprintln!("error: {e}"),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(exit_code(&err))
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}

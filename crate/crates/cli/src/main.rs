//! `asocem`: contamination masks for cryo-EM micrographs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use asocem::io::{read_micrograph, write_mask, write_overlay, InputFormat, MaskFormat, KNOWN_EXTENSIONS};
use asocem::{
    batch_evaluate, generate, segment_micrograph, Micrograph, PipelineConfig, SegmentationStatus, SyntheticSpec,
};

#[derive(Parser)]
#[command(name = "asocem", version, about = "Detect contaminated regions in cryo-EM micrographs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one micrograph or every micrograph in a directory.
    ///
    /// Masks mark contamination with 1 (PNG: 255) and usable area with 0,
    /// at the resolution of the input file.
    Segment(SegmentArgs),
    /// Generate a synthetic micrograph and its ground-truth mask.
    Synth(SynthArgs),
    /// Score predicted masks against ground truth, paired by file stem.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Mrc,
    Png,
    Tiff,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => InputFormat::Auto,
            FormatArg::Mrc => InputFormat::Mrc,
            FormatArg::Png => InputFormat::Png,
            FormatArg::Tiff => InputFormat::Tiff,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskFormatArg {
    Mrc,
    Png,
}

impl From<MaskFormatArg> for MaskFormat {
    fn from(f: MaskFormatArg) -> Self {
        match f {
            MaskFormatArg::Mrc => MaskFormat::Mrc,
            MaskFormatArg::Png => MaskFormat::Png,
        }
    }
}

#[derive(Args)]
struct SegmentArgs {
    /// Micrograph file, or a directory of micrographs.
    #[arg(long)]
    input: PathBuf,
    /// Directory for masks, JSON sidecars and overlays.
    #[arg(long)]
    output: PathBuf,
    /// Approximate particle diameter in pixels of the input micrographs.
    #[arg(long)]
    particle_size: Option<usize>,
    /// JSON file with pipeline settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary-length weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Area weight on the evolving region.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    block_edge: Option<usize>,
    /// Edge of the square working grid.
    #[arg(long)]
    working_size: Option<usize>,
    /// Components smaller than this many particle disks are dropped.
    #[arg(long)]
    area_factor: Option<f64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
    /// Micrographs processed concurrently (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write `overlays/<name>.png` with contamination tinted red.
    #[arg(long)]
    png_overlay: bool,
    #[arg(long, value_enum, default_value = "mrc")]
    mask_format: MaskFormatArg,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON description of the synthetic micrograph.
    #[arg(long)]
    spec: PathBuf,
    /// Output micrograph (float32 MRC).
    #[arg(long)]
    out_mrc: PathBuf,
    /// Output ground-truth mask; PNG if the extension is `.png`, else MRC.
    #[arg(long)]
    out_gt: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predicted masks.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth masks (nonzero means contamination).
    #[arg(long)]
    gt: PathBuf,
    /// Report path; `.csv` writes CSV, anything else JSON.
    #[arg(long)]
    report: PathBuf,
    /// Count undefined metrics as 1.0 in the means.
    #[arg(long)]
    include_undefined: bool,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    status: SegmentationStatus,
    outer_iters: usize,
    converged: bool,
    contamination_fraction: f64,
    params: &'a PipelineConfig,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Segment(args) => run_segment(&args),
        Command::Synth(args) => run_synth(&args).map(|()| true),
        Command::Eval(args) => run_eval(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn pipeline_config(args: &SegmentArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.particle_size {
        cfg.particle_size_px = v;
    }
    if let Some(v) = args.alpha {
        cfg.solver.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.solver.beta = v;
    }
    if let Some(v) = args.block_edge {
        cfg.block_edge = v;
    }
    if let Some(v) = args.working_size {
        cfg.working_size = v;
    }
    if let Some(v) = args.area_factor {
        cfg.area_factor = v;
    }
    if let Some(v) = args.max_outer_iters {
        cfg.solver.max_outer_iters = v;
    }
    if cfg.particle_size_px == 0 {
        bail!("a particle size is required (--particle-size or particle_size_px in the config)");
    }
    cfg.validate()?;
    Ok(cfg)
}

fn collect_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(input).with_context(|| format!("listing {}", input.display()))? {
        let path = entry?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| KNOWN_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && known {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no micrographs found in {}", input.display());
    }
    Ok(files)
}

fn segment_one(path: &Path, args: &SegmentArgs, cfg: &PipelineConfig) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .with_context(|| format!("no file name in {}", path.display()))?;
    let m: Micrograph<f64> = read_micrograph(path, args.format.into())?;
    let seg = segment_micrograph(&m, cfg)?;
    let mask = seg.mask_in_original()?;
    let format = MaskFormat::from(args.mask_format);
    write_mask(&mask, &args.output.join(format!("{stem}.{}", format.extension())), format, None)?;
    let sidecar = Sidecar {
        status: seg.status,
        outer_iters: seg.outer_iters,
        converged: seg.converged,
        contamination_fraction: mask.contamination_fraction(),
        params: cfg,
    };
    let json_path = args.output.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)
        .with_context(|| format!("writing {}", json_path.display()))?;
    if args.png_overlay {
        write_overlay(&m, &mask, &args.output.join("overlays").join(format!("{stem}.png")))?;
    }
    info!(
        "{}: {:?}, {:.2}% contaminated after {} iterations",
        path.display(),
        seg.status,
        100.0 * mask.contamination_fraction(),
        seg.outer_iters
    );
    Ok(())
}

fn run_segment(args: &SegmentArgs) -> Result<bool> {
    let cfg = pipeline_config(args)?;
    let inputs = collect_inputs(&args.input)?;
    std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    if args.png_overlay {
        std::fs::create_dir_all(args.output.join("overlays"))?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let failures: Vec<String> = pool.install(|| {
        inputs
            .par_iter()
            .filter_map(|path| {
                segment_one(path, args, &cfg)
                    .err()
                    .map(|e| format!("{}: {e:#}", path.display()))
            })
            .collect()
    });
    for f in &failures {
        error!("{f}");
    }
    if !failures.is_empty() {
        bail!("{} of {} micrographs failed", failures.len(), inputs.len());
    }
    Ok(true)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: SyntheticSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let (m, gt) = generate::<f64>(&spec)?;
    asocem::io::write_micrograph_mrc(&m, &args.out_mrc)?;
    let is_png = args
        .out_gt
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let format = if is_png { MaskFormat::Png } else { MaskFormat::Mrc };
    write_mask(&gt, &args.out_gt, format, None)?;
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<bool> {
    let report = batch_evaluate(&args.pred, &args.gt, args.include_undefined)?;
    report.write(&args.report)?;
    for name in &report.unpaired {
        error!("no partner for {name}");
    }
    for f in &report.failures {
        error!("{}: {}", f.name, f.reason);
    }
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
    info!(
        "{} pairs: mean sensitivity {}, mean specificity {}",
        report.per_micrograph.len(),
        fmt(report.mean_sensitivity),
        fmt(report.mean_specificity)
    );
    Ok(report.is_complete())
}

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Synthetic adverse-weather data generation tools.
#[derive(Debug, Parser)]
#[command(name = "weathersynth", version, about)]
struct Cli {
    /// Global seed; every random draw is derived from it [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch commands [default: 1].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline over an input directory with sim/, diff/, semseg/ and
    /// optional instances/ subdirectories.
    Run(RunArgs),
    /// Class-weighted blend of a simulator and a diffusion image.
    Blend(BlendArgs),
    /// Reinhard color transfer of one image toward another.
    Colormatch(ColormatchArgs),
    /// Match an image to a random frame of a real calibration set.
    Calibrate(CalibrateArgs),
    /// Procedural clear-to-adverse augmentation of a file or directory.
    Augment(AugmentArgs),
    /// Depth, one-hot semantic and colored instance inputs for the generator.
    Auxprep(AuxprepArgs),
    /// Sample simulator weather parameter files.
    SampleWeather(SampleWeatherArgs),
    /// Mix real clear images into a synthetic training manifest.
    Manifest(ManifestArgs),
    /// Object size and category statistics of COCO annotations.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Pipeline config JSON. Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    calib_dir: Option<PathBuf>,
    /// Class weight table JSON.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlendArgs {
    #[arg(long)]
    sim: PathBuf,
    #[arg(long)]
    diff: PathBuf,
    #[arg(long)]
    semseg: PathBuf,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Gaussian sigma of the weight-map smoothing, in pixels.
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Half-width of the uniform dither added before smoothing.
    #[arg(long, default_value_t = 0.05)]
    dither: f32,
    /// Also write the smoothed weight map as an 8-bit PNG.
    #[arg(long)]
    weight_map_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ColormatchArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// 16-bit instance map; enables per-instance matching.
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    calib_dir: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Skip the blend back toward the input palette.
    #[arg(long)]
    no_palette_blend: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    condition: String,
    /// JSON file of recipe overrides.
    #[arg(long)]
    params: Option<PathBuf>,
    /// A PNG file or a directory of PNG files.
    #[arg(long)]
    input: PathBuf,
    /// Output file for a single input, output directory otherwise.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OneHotFormat {
    Npy,
    Png,
}

#[derive(Debug, Args)]
struct AuxprepArgs {
    /// 16-bit depth PNG.
    #[arg(long)]
    depth: Option<PathBuf>,
    /// 8-bit label PNG.
    #[arg(long)]
    semseg: Option<PathBuf>,
    /// 16-bit instance id PNG.
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long, default_value_t = weathersynth_core::taxonomy::CLASS_COUNT)]
    classes: usize,
    #[arg(long, value_enum, default_value_t = OneHotFormat::Npy)]
    onehot_format: OneHotFormat,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SampleWeatherArgs {
    /// clear, fog, rain, night or all.
    #[arg(long)]
    condition: String,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ManifestArgs {
    /// Holds `<condition>/{images,labels}/`.
    #[arg(long)]
    synthetic_dir: PathBuf,
    /// Holds `{images,labels}/` of real clear images.
    #[arg(long)]
    real_dir: PathBuf,
    /// Percent of synthetic clear entries to replace.
    #[arg(long, default_value_t = 10.0)]
    ratio: f64,
    /// Replace exactly round(ratio% * n) entries instead of per-entry draws.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupBy {
    Condition,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AreaArg {
    Box,
    Mask,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// COCO-format annotation JSON.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupBy::Condition)]
    by: GroupBy,
    #[arg(long, value_enum, default_value_t = AreaArg::Box)]
    area: AreaArg,
    #[arg(long, default_value_t = 40)]
    bins: usize,
    /// Upper edge of the radius histogram, in pixels.
    #[arg(long, default_value_t = 200.0)]
    max_radius: f64,
    /// Category ids listed first in the category table.
    #[arg(long, value_delimiter = ',')]
    ranking: Vec<u64>,
    /// Also write sizes.svg.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} item(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

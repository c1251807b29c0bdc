use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use weathersynth_core::auxprep::{colored_instance_map, normalize_depth, one_hot_semseg};
use weathersynth_core::blend::{blend_images, build_weight_map, dither_and_smooth, ClassWeightTable};
use weathersynth_core::colormatch::{calibration_match, match_colors, palette_blend, ColorMatchConfig};
use weathersynth_core::datastats::{
    categories_csv, category_distribution, coco_csv, merge_conditions, read_coco, size_histogram,
    size_histogram_svg, sizes_csv, uniform_edges, AreaSource,
};
use weathersynth_core::imgcore::io;
use weathersynth_core::manifest::{build_manifest, scan_real, scan_synthetic, MixMode};
use weathersynth_core::pipeline::{run_pipeline, PipelineConfig, REPORT_FILE};
use weathersynth_core::seed::{derive_seed, sha256_hex};
use weathersynth_core::weatheraug::Recipe;
use weathersynth_core::weathercfg::{sample_suite, write_suite, SimCondition};
use weathersynth_core::{Condition, Error, Plane};

use crate::{
    AreaArg, AugmentArgs, AuxprepArgs, BlendArgs, CalibrateArgs, Cli, ColormatchArgs, Command, GroupBy, ManifestArgs,
    OneHotFormat, RunArgs, SampleWeatherArgs, StatsArgs,
};

/// A problem with the command line or a config file.
#[derive(Debug)]
pub struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// 2 for configuration problems, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let config = e.chain().any(|c| {
        c.is::<ConfigError>()
            || matches!(
                c.downcast_ref::<Error>(),
                Some(Error::Config(_) | Error::InvalidParameter { .. } | Error::UnknownCondition(_))
            )
    });
    if config {
        2
    } else {
        1
    }
}

/// Runs the command and returns the number of failed items.
pub fn dispatch(cli: &Cli) -> Result<usize> {
    if cli.workers() == 0 {
        return Err(config_error("--workers must be at least 1"));
    }
    match &cli.command {
        Command::Run(a) => run(cli, a),
        Command::Blend(a) => blend(cli, a).map(|_| 0),
        Command::Colormatch(a) => colormatch(a).map(|_| 0),
        Command::Calibrate(a) => calibrate(cli, a).map(|_| 0),
        Command::Augment(a) => augment(cli, a),
        Command::Auxprep(a) => auxprep(a).map(|_| 0),
        Command::SampleWeather(a) => sample_weather(cli, a).map(|_| 0),
        Command::Manifest(a) => manifest(cli, a).map(|_| 0),
        Command::Stats(a) => stats(a).map(|_| 0),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_config_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn run(cli: &Cli, a: &RunArgs) -> Result<usize> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_json(&read_config_text(p)?)?,
        None => {
            let (Some(input), Some(output)) = (&a.input, &a.output) else {
                return Err(config_error("run needs --config or both --input and --output"));
            };
            PipelineConfig::new(input, output, cli.seed())
        }
    };
    if let Some(p) = &a.input {
        cfg.input_dir = p.clone();
    }
    if let Some(p) = &a.output {
        cfg.output_dir = p.clone();
    }
    if let Some(p) = &a.calib_dir {
        cfg.calibration_dir = Some(p.clone());
    }
    if let Some(p) = &a.weights {
        cfg.weights = Some(p.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let report = run_pipeline(&cfg)?;
    for item in report.failed() {
        eprintln!("{}: {}", item.item, item.error.as_deref().unwrap_or("failed"));
    }
    println!(
        "{} ok, {} failed; report in {}",
        report.success_count(),
        report.failure_count(),
        cfg.output_dir.join(REPORT_FILE).display()
    );
    Ok(report.failure_count())
}

fn load_table(path: Option<&Path>) -> Result<ClassWeightTable> {
    match path {
        Some(p) => Ok(ClassWeightTable::from_json(&read_config_text(p)?)
            .map_err(|e| config_error(format!("{}: {e}", p.display())))?),
        None => Ok(ClassWeightTable::default()),
    }
}

fn blend(cli: &Cli, a: &BlendArgs) -> Result<()> {
    let table = load_table(a.weights.as_deref())?;
    let sim = io::read_rgb(&a.sim)?;
    let diff = io::read_rgb(&a.diff)?;
    let semseg = io::read_labels(&a.semseg)?;
    let seed = derive_seed(cli.seed(), &["dither", &stem(&a.sim)]);
    let w = build_weight_map(&semseg, &table)?;
    let w = dither_and_smooth(&w, a.dither, a.sigma, seed)?;
    let out = blend_images(&sim, &diff, &w)?;
    ensure_parent(&a.out)?;
    io::write_rgb(&a.out, &out)?;
    if let Some(p) = &a.weight_map_out {
        ensure_parent(p)?;
        io::write_unit_plane8(p, &w)?;
    }
    Ok(())
}

fn colormatch(a: &ColormatchArgs) -> Result<()> {
    let src = io::read_rgb(&a.src)?;
    let tgt = io::read_rgb(&a.tgt)?;
    let instances = a.instances.as_ref().map(io::read_instances).transpose()?;
    let cfg = ColorMatchConfig {
        gamma: a.gamma,
        per_instance: instances.is_some(),
        ..ColorMatchConfig::default()
    };
    let out = match_colors(&src, &tgt, instances.as_ref(), &cfg)?;
    ensure_parent(&a.out)?;
    io::write_rgb(&a.out, &out)?;
    Ok(())
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<()> {
    let paths = png_files(&a.calib_dir).map_err(|e| config_error(format!("{e:#}")))?;
    if paths.is_empty() {
        return Err(config_error(format!("no PNG frames in {}", a.calib_dir.display())));
    }
    let frames = paths.iter().map(io::read_rgb).collect::<weathersynth_core::Result<Vec<_>>>()?;
    let img = io::read_rgb(&a.input)?;
    let name = stem(&a.input);
    let cal = calibration_match(&img, &frames, derive_seed(cli.seed(), &["calibrate", &name]), a.gamma)?;
    let mut summary = json!({ "frame": paths[cal.frame_index].file_name().map(|f| f.to_string_lossy()) });
    let out = if a.no_palette_blend {
        cal.image
    } else {
        let range = ColorMatchConfig::default().w_orig_range;
        let (out, w) = palette_blend(&img, &cal.image, derive_seed(cli.seed(), &["palette", &name]), range)?;
        summary["w_orig"] = json!(w);
        out
    };
    ensure_parent(&a.out)?;
    io::write_rgb(&a.out, &out)?;
    println!("{summary}");
    Ok(())
}

fn augment_one(recipe: &Recipe, condition: Condition, seed: u64, input: &Path, out: &Path) -> Result<()> {
    let img = io::read_rgb(input)?;
    let image_seed = derive_seed(seed, &["augment", &stem(input)]);
    let result = recipe.apply(&img, image_seed)?;
    io::write_rgb(out, &result)?;
    let sidecar = json!({
        "condition": condition,
        "seed": seed,
        "image_seed": image_seed,
        "input": { "path": input.file_name().map(|f| f.to_string_lossy()), "sha256": digest(input)? },
        "output": { "path": out.file_name().map(|f| f.to_string_lossy()), "sha256": digest(out)? },
        "recipe": recipe,
    });
    write_text(&out.with_extension("json"), &(serde_json::to_string_pretty(&sidecar)? + "\n"))
}

fn augment(cli: &Cli, a: &AugmentArgs) -> Result<usize> {
    let condition: Condition = a.condition.parse()?;
    let overrides: Option<Value> = match &a.params {
        Some(p) => Some(
            serde_json::from_str(&read_config_text(p)?)
                .map_err(|e| config_error(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let recipe = Recipe::resolve(condition, overrides.as_ref())?;

    if a.input.is_file() {
        ensure_parent(&a.out)?;
        augment_one(&recipe, condition, cli.seed(), &a.input, &a.out)?;
        return Ok(0);
    }
    if !a.input.is_dir() {
        return Err(config_error(format!("{} is neither a file nor a directory", a.input.display())));
    }
    let inputs = png_files(&a.input)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.workers()).build()?;
    let failed = pool.install(|| {
        inputs
            .par_iter()
            .filter(|input| {
                let out = a.out.join(input.file_name().expect("listed file"));
                match augment_one(&recipe, condition, cli.seed(), input, &out) {
                    Ok(()) => false,
                    Err(e) => {
                        log::error!("{}: {e:#}", input.display());
                        true
                    }
                }
            })
            .count()
    });
    println!("{} augmented, {failed} failed", inputs.len() - failed);
    Ok(failed)
}

fn auxprep(a: &AuxprepArgs) -> Result<()> {
    if a.depth.is_none() && a.semseg.is_none() && a.instances.is_none() {
        return Err(config_error("auxprep needs at least one of --depth, --semseg, --instances"));
    }
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut summary = json!({});
    if let Some(p) = &a.depth {
        let depth = normalize_depth(&io::read_depth(p)?)?;
        let out = a.out_dir.join(format!("{}_depth.png", stem(p)));
        io::write_unit_plane16(&out, &depth)?;
        summary["depth"] = json!(out);
    }
    if let Some(p) = &a.semseg {
        let onehot = one_hot_semseg(&io::read_labels(p)?, a.classes)?;
        let out = match a.onehot_format {
            OneHotFormat::Npy => {
                let out = a.out_dir.join(format!("{}_onehot.npy", stem(p)));
                onehot.write_npy(&out)?;
                out
            }
            OneHotFormat::Png => {
                let dir = a.out_dir.join(format!("{}_onehot", stem(p)));
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for c in 0..onehot.classes() {
                    let plane: Plane<u8> = onehot.plane(c).map(|&v| v * u8::MAX);
                    io::write_gray8(dir.join(format!("class_{c:02}.png")), &plane)?;
                }
                dir
            }
        };
        summary["semseg"] = json!(out);
    }
    if let Some(p) = &a.instances {
        let colored = colored_instance_map(&io::read_instances(p)?)?;
        let out = a.out_dir.join(format!("{}_instances.png", stem(p)));
        io::write_gray8(&out, &colored.map)?;
        summary["instances"] = json!({
            "path": out,
            "colors_used": colored.colors_used,
            "warning": colored.warning,
        });
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn sample_weather(cli: &Cli, a: &SampleWeatherArgs) -> Result<()> {
    let conditions = if a.condition.eq_ignore_ascii_case("all") {
        SimCondition::ALL.to_vec()
    } else {
        vec![a.condition.to_ascii_lowercase().parse::<SimCondition>()?]
    };
    let mut written = 0;
    for c in conditions {
        written += write_suite(&a.out_dir, c, &sample_suite(c, a.count, cli.seed()))?.len();
    }
    println!("{written} weather files in {}", a.out_dir.display());
    Ok(())
}

fn manifest(cli: &Cli, a: &ManifestArgs) -> Result<()> {
    let synthetic = scan_synthetic(&a.synthetic_dir, cli.seed())?;
    let real = scan_real(&a.real_dir)?;
    let mode = if a.exact { MixMode::ExactCount } else { MixMode::Bernoulli };
    let m = build_manifest(&synthetic, &real, a.ratio, cli.seed(), mode)?;
    write_text(&a.out, &m.to_json())?;
    println!("{} entries, {} replaced by real images", m.entries.len(), m.replaced_count());
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<()> {
    if a.bins == 0 || a.max_radius.is_nan() || a.max_radius <= 0.0 {
        return Err(config_error("--bins and --max-radius must be positive"));
    }
    let source = match a.area {
        AreaArg::Box => AreaSource::Box,
        AreaArg::Mask => AreaSource::Mask,
    };
    let set = read_coco(&a.annotations, source)?;
    let anns = match a.by {
        GroupBy::Condition => set.annotations.clone(),
        GroupBy::All => merge_conditions(&set.annotations, "all"),
    };
    let report = size_histogram(&anns, &uniform_edges(a.max_radius, a.bins))?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_text(&a.out_dir.join("sizes.csv"), &sizes_csv(&report)?)?;
    write_text(&a.out_dir.join("coco_buckets.csv"), &coco_csv(&report)?)?;
    let dist = category_distribution(&anns)?;
    write_text(&a.out_dir.join("categories.csv"), &categories_csv(&dist, &set, &a.ranking)?)?;
    if a.svg {
        write_text(&a.out_dir.join("sizes.svg"), &size_histogram_svg(&report))?;
    }
    for (group, h) in &report.groups {
        println!(
            "{group}: {} objects, small {} medium {} large {}",
            h.count, h.coco.small, h.coco.medium, h.coco.large
        );
    }
    Ok(())
}

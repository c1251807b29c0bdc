//! Batch driver for the composition path: weight map, color matching of the
//! simulator render toward the diffusion output, blending, and optional
//! calibration toward a target-style frame.
//!
//! Items are paired by file stem across `sim/`, `diff/`, `semseg/` and,
//! when present, `instances/` under the input directory. Every item gets its
//! own seeds derived from the global seed and its stem, so outputs do not
//! depend on the worker count.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blend::{blend_images, build_weight_map, dither_and_smooth, ClassWeightTable, SmoothingParams};
use crate::colormatch::{calibration_match, match_colors, palette_blend, ColorMatchConfig};
use crate::error::{Error, Result};
use crate::imgcore::{io, RasterImage};
use crate::seed::{derive_seed, sha256_hex};

pub const SIM_DIR: &str = "sim";
pub const DIFF_DIR: &str = "diff";
pub const SEMSEG_DIR: &str = "semseg";
pub const INSTANCES_DIR: &str = "instances";
pub const REPORT_FILE: &str = "report.json";

fn default_workers() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub calibration_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Weight table JSON; the default table when absent.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub smoothing: SmoothingParams,
    #[serde(default = "yes")]
    pub color_match: bool,
    #[serde(default)]
    pub color: ColorMatchConfig,
    /// Blend the calibrated result back toward the uncalibrated one.
    #[serde(default = "yes")]
    pub palette_blend: bool,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            seed,
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            calibration_dir: None,
            workers: 1,
            weights: None,
            smoothing: SmoothingParams::default(),
            color_match: true,
            color: ColorMatchConfig::default(),
            palette_blend: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if !self.input_dir.is_dir() {
            return Err(Error::Config(format!("input directory {} not found", self.input_dir.display())));
        }
        let s = &self.smoothing;
        if !(s.dither_amplitude.is_finite() && s.dither_amplitude >= 0.0 && s.sigma.is_finite() && s.sigma >= 0.0) {
            return Err(Error::Config("smoothing amplitude and sigma must be >= 0".into()));
        }
        self.color.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemOutcome {
    pub item: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub items: Vec<ItemOutcome>,
}

impl RunReport {
    pub fn failed(&self) -> impl Iterator<Item = &ItemOutcome> {
        self.items.iter().filter(|i| i.error.is_some())
    }

    pub fn failure_count(&self) -> usize {
        self.failed().count()
    }

    pub fn success_count(&self) -> usize {
        self.items.len() - self.failure_count()
    }
}

fn png_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

struct Shared {
    table: ClassWeightTable,
    calibration: Vec<(String, RasterImage)>,
    has_instances: bool,
}

fn load_calibration(dir: &Path) -> Result<Vec<(String, RasterImage)>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("calibration directory {} not found", dir.display())));
    }
    let stems = png_stems(dir)?;
    if stems.is_empty() {
        return Err(Error::Config(format!("no PNG frames in {}", dir.display())));
    }
    stems
        .into_iter()
        .map(|s| {
            let img = io::read_rgb(dir.join(format!("{s}.png"))).map_err(|e| Error::Config(e.to_string()))?;
            Ok((s, img))
        })
        .collect()
}

/// Runs the pipeline over every item. Configuration problems abort with
/// [`Error::Config`]; item problems are recorded in the report and in
/// `report.json` while the remaining items proceed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let table = match &cfg.weights {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ClassWeightTable::from_json(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => ClassWeightTable::default(),
    };
    let calibration = match &cfg.calibration_dir {
        Some(d) => load_calibration(d)?,
        None => Vec::new(),
    };
    let shared = Shared {
        table,
        calibration,
        has_instances: cfg.input_dir.join(INSTANCES_DIR).is_dir(),
    };

    let mut stems = BTreeSet::new();
    for sub in [SIM_DIR, DIFF_DIR, SEMSEG_DIR] {
        stems.extend(png_stems(&cfg.input_dir.join(sub)).map_err(|e| Error::Config(e.to_string()))?);
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Config(format!("{}: {e}", cfg.output_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let stems: Vec<String> = stems.into_iter().collect();
    let items: Vec<ItemOutcome> = pool.install(|| {
        stems
            .par_iter()
            .map(|stem| {
                let error = process_item(cfg, &shared, stem).err().map(|e| {
                    log::error!("{stem}: {e}");
                    e.to_string()
                });
                ItemOutcome {
                    item: stem.clone(),
                    error,
                }
            })
            .collect()
    });

    let report = RunReport { seed: cfg.seed, items };
    let path = cfg.output_dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn input_record(cfg: &PipelineConfig, path: &Path) -> Result<serde_json::Value> {
    let rel = path.strip_prefix(&cfg.input_dir).unwrap_or(path);
    Ok(json!({ "path": rel.to_string_lossy(), "sha256": digest_file(path)? }))
}

fn process_item(cfg: &PipelineConfig, shared: &Shared, stem: &str) -> Result<()> {
    let file = format!("{stem}.png");
    let sim_p = cfg.input_dir.join(SIM_DIR).join(&file);
    let diff_p = cfg.input_dir.join(DIFF_DIR).join(&file);
    let sem_p = cfg.input_dir.join(SEMSEG_DIR).join(&file);
    let inst_p = cfg.input_dir.join(INSTANCES_DIR).join(&file);

    let sim = io::read_rgb(&sim_p)?;
    let diff = io::read_rgb(&diff_p)?;
    let semseg = io::read_labels(&sem_p)?;
    let instances = if shared.has_instances {
        Some(io::read_instances(&inst_p)?)
    } else {
        None
    };

    let dither_seed = derive_seed(cfg.seed, &["dither", stem]);
    let weights = build_weight_map(&semseg, &shared.table)?;
    let weights = dither_and_smooth(&weights, cfg.smoothing.dither_amplitude, cfg.smoothing.sigma, dither_seed)?;

    let sim = if cfg.color_match {
        match_colors(&sim, &diff, instances.as_ref(), &cfg.color)?
    } else {
        sim.ensure_same_dims("diffusion image", diff.dims())?;
        sim
    };
    let blended = blend_images(&sim, &diff, &weights)?;

    let mut params = json!({
        "seed": cfg.seed,
        "dither_seed": dither_seed,
        "smoothing": cfg.smoothing,
        "color_match": cfg.color_match,
        "color": cfg.color,
    });
    let output = if shared.calibration.is_empty() {
        blended
    } else {
        let cal_seed = derive_seed(cfg.seed, &["calibrate", stem]);
        let frames: Vec<RasterImage> = shared.calibration.iter().map(|(_, f)| f.clone()).collect();
        let cal = calibration_match(&blended, &frames, cal_seed, cfg.color.gamma)?;
        params["calibration_seed"] = json!(cal_seed);
        params["calibration_frame"] = json!(shared.calibration[cal.frame_index].0);
        if cfg.palette_blend {
            let pal_seed = derive_seed(cfg.seed, &["palette", stem]);
            let (img, w) = palette_blend(&blended, &cal.image, pal_seed, cfg.color.w_orig_range)?;
            params["palette_seed"] = json!(pal_seed);
            params["w_orig"] = json!(w);
            img
        } else {
            cal.image
        }
    };

    let out_p = cfg.output_dir.join(&file);
    io::write_rgb(&out_p, &output)?;
    let mut inputs = json!({
        "sim": input_record(cfg, &sim_p)?,
        "diff": input_record(cfg, &diff_p)?,
        "semseg": input_record(cfg, &sem_p)?,
    });
    if instances.is_some() {
        inputs["instances"] = input_record(cfg, &inst_p)?;
    }
    let sidecar = json!({
        "item": stem,
        "inputs": inputs,
        "output": { "path": file, "sha256": digest_file(&out_p)? },
        "params": params,
    });
    let side_p = cfg.output_dir.join(format!("{stem}.json"));
    std::fs::write(&side_p, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| Error::io(&side_p, e))
}

/// SHA-256 over every file under `dir`: sorted relative paths and contents.
pub fn tree_digest(dir: &Path) -> Result<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut buf = Vec::new();
    for (rel, path) in files {
        buf.extend_from_slice(rel.as_bytes());
        buf.push(0);
        buf.extend_from_slice(digest_file(&path)?.as_bytes());
        buf.push(b'\n');
    }
    Ok(sha256_hex(&buf))
}

//! Semantic weight maps and pixel-wise blending of a simulator render with a
//! diffusion output: `I_B = w * I_D + (1 - w) * I_S`, one weight per pixel
//! shared by all channels.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{clamp01, GaussianBlur, LabelMap, Plane, RasterImage, WeightMap};
use crate::seed::rng_from_seed;
use crate::taxonomy;

/// Weight given to the diffusion image per semantic class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeightTable {
    weights: BTreeMap<u8, f32>,
}

/// Default weight tiers, keyed by class name.
pub const DEFAULT_TIERS: [(f32, &[&str]); 6] = [
    (
        0.9,
        &[
            "unlabeled",
            "sidewalk",
            "building",
            "wall",
            "fence",
            "vegetation",
            "terrain",
            "sky",
            "static",
            "other",
            "water",
            "ground",
            "bridge",
            "guard rail",
        ],
    ),
    (0.8, &["road"]),
    (0.7, &["pole", "dynamic", "road line", "rail track"]),
    (0.5, &["traffic sign"]),
    (0.3, &["pedestrian", "rider", "motorcycle", "bicycle"]),
    (0.1, &["traffic light", "car", "truck", "bus", "train"]),
];

impl Default for ClassWeightTable {
    fn default() -> Self {
        let mut weights = BTreeMap::new();
        for (w, names) in DEFAULT_TIERS {
            for name in names {
                let id = taxonomy::class_id(name).expect("tier names come from the taxonomy");
                weights.insert(id, w);
            }
        }
        Self { weights }
    }
}

impl ClassWeightTable {
    pub fn new(weights: BTreeMap<u8, f32>) -> Result<Self> {
        for (&id, &w) in &weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::param(
                    "weights",
                    format!("class {id} has weight {w} outside [0, 1]"),
                ));
            }
        }
        Ok(Self { weights })
    }

    pub fn get(&self, class: u8) -> Option<f32> {
        self.weights.get(&class).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, f32)> + '_ {
        self.weights.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Parses `{class: weight}` where each key is a numeric id or a class name.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, f32> = serde_json::from_str(text)?;
        let mut weights = BTreeMap::new();
        for (key, w) in raw {
            let id = match key.parse::<u8>() {
                Ok(id) => id,
                Err(_) => taxonomy::class_id(&key)
                    .ok_or_else(|| Error::Config(format!("unknown class `{key}` in weight table")))?,
            };
            if weights.insert(id, w).is_some() {
                return Err(Error::Config(format!("class {id} listed twice in weight table")));
            }
        }
        Self::new(weights)
    }

    /// Serializes as `{"<id>": weight}`.
    pub fn to_json(&self) -> String {
        let m: BTreeMap<String, f32> = self.weights.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        serde_json::to_string_pretty(&m).expect("map of floats serializes")
    }
}

/// Looks up the blend weight for every pixel.
pub fn build_weight_map(semseg: &LabelMap, table: &ClassWeightTable) -> Result<WeightMap> {
    let mut lut = [None; 256];
    for (id, w) in table.iter() {
        lut[usize::from(id)] = Some(w);
    }
    let mut data = Vec::with_capacity(semseg.data().len());
    for &c in semseg.data() {
        data.push(lut[usize::from(c)].ok_or(Error::UnknownClass(u32::from(c)))?);
    }
    Plane::new(semseg.width(), semseg.height(), data)
}

/// Smoothing applied to a weight map before blending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingParams {
    /// Half-width of the additive uniform noise.
    pub dither_amplitude: f32,
    /// Gaussian sigma in pixels.
    pub sigma: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            dither_amplitude: 0.05,
            sigma: 5.0,
        }
    }
}

/// Adds seeded uniform noise in `[-amplitude, amplitude]`, blurs, then clamps to `[0, 1]`.
pub fn dither_and_smooth(w: &WeightMap, dither_amplitude: f32, sigma: f64, seed: u64) -> Result<WeightMap> {
    if !dither_amplitude.is_finite() || dither_amplitude < 0.0 {
        return Err(Error::param(
            "dither_amplitude",
            format!("must be finite and >= 0, got {dither_amplitude}"),
        ));
    }
    let noisy = if dither_amplitude > 0.0 {
        let mut rng = rng_from_seed(seed);
        w.map(|&v| v + rng.gen_range(-dither_amplitude..=dither_amplitude))
    } else {
        w.clone()
    };
    Ok(noisy.gaussian_blur(sigma)?.map(|&v| clamp01(v)))
}

/// Computes `w * diffusion + (1 - w) * sim` per pixel and channel.
pub fn blend_images(sim: &RasterImage, diffusion: &RasterImage, w: &WeightMap) -> Result<RasterImage> {
    sim.ensure_same_dims("diffusion image", diffusion.dims())?;
    sim.ensure_same_dims("weight map", w.dims())?;
    w.validate_weights()?;
    let mut data = Vec::with_capacity(sim.data().len());
    for ((s, d), &wd) in sim
        .data()
        .chunks_exact(3)
        .zip(diffusion.data().chunks_exact(3))
        .zip(w.data())
    {
        let wd = f64::from(wd);
        let ws = 1.0 - wd;
        for c in 0..3 {
            data.push((wd * f64::from(d[c]) + ws * f64::from(s[c])) as f32);
        }
    }
    Ok(RasterImage::from_raw_unchecked(sim.width(), sim.height(), data))
}

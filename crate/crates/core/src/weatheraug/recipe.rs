//! Condition recipes: fixed sequences of primitives with tunable defaults.
//!
//! Overrides are JSON objects merged key by key over the condition defaults,
//! so `{"gamma": 1.0}` or `{"fog": {"count": 0}}` change only those values.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::overlay::{gaussian_overlay, line_streak_overlay, BlobOverlay, BlobRadius, StreakParams};
use super::primitives::{channel_scale, color_mix, desaturate, glass_blur, snow_bleach, tone_adjust};
use crate::condition::Condition;
use crate::error::{Error, Result};
use crate::imgcore::{GaussianBlur, RasterImage};
use crate::seed::derive_seed;

pub const IDENTITY_MATRIX: [[f32; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Removes 10% of blue and hands half of that to each of red and green.
pub const NIGHT_MIX_MATRIX: [[f32; 3]; 3] = [[1.0, 0.0, 0.05], [0.0, 1.0, 0.05], [0.0, 0.0, 0.9]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogRecipe {
    pub desaturation: f32,
    pub channel_scale: [f32; 3],
    pub fog: BlobOverlay,
}

impl Default for FogRecipe {
    fn default() -> Self {
        Self {
            desaturation: 0.4,
            channel_scale: [0.8, 0.8, 1.0],
            fog: BlobOverlay {
                count: 2000,
                alpha: 0.3,
                radius: BlobRadius::DiagonalFraction { min: 0.03, max: 0.12 },
                sharpness: 2.0,
                color: [1.0; 3],
                vertical_extent: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainRecipe {
    pub desaturation: f32,
    pub channel_scale: [f32; 3],
    pub gain: f32,
    pub gamma: f32,
    pub streaks: StreakParams,
    pub drops: BlobOverlay,
    pub blur_sigma: f64,
    pub glass_radius: u32,
}

impl Default for RainRecipe {
    fn default() -> Self {
        Self {
            desaturation: 0.6,
            channel_scale: [0.6, 0.8, 1.0],
            gain: 0.7,
            gamma: 1.5,
            streaks: StreakParams::default(),
            drops: BlobOverlay {
                count: 40,
                alpha: 0.35,
                radius: BlobRadius::DiagonalFraction { min: 0.004, max: 0.012 },
                sharpness: 6.0,
                color: [1.0; 3],
                vertical_extent: 1.0,
            },
            blur_sigma: 1.0,
            glass_radius: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnowRecipe {
    pub bleach_threshold: f32,
    pub bleach_boost: f32,
    pub flakes: BlobOverlay,
    pub desaturation: f32,
    pub channel_scale: [f32; 3],
    pub gain: f32,
    pub gamma: f32,
}

impl Default for SnowRecipe {
    fn default() -> Self {
        Self {
            bleach_threshold: 0.6,
            bleach_boost: 0.5,
            flakes: BlobOverlay {
                count: 1500,
                alpha: 0.6,
                radius: BlobRadius::Pixels { min: 1.0, max: 2.0 },
                sharpness: 2.0,
                color: [1.0; 3],
                vertical_extent: 1.0,
            },
            desaturation: 0.7,
            channel_scale: [0.6, 0.6, 1.0],
            gain: 0.7,
            gamma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NightRecipe {
    pub sky: BlobOverlay,
    pub desaturation: f32,
    pub mix_matrix: [[f32; 3]; 3],
    pub gain: f32,
    pub gamma: f32,
}

impl Default for NightRecipe {
    fn default() -> Self {
        Self {
            sky: BlobOverlay {
                count: 300,
                alpha: 0.5,
                radius: BlobRadius::DiagonalFraction { min: 0.04, max: 0.12 },
                sharpness: 2.0,
                color: [0.0; 3],
                vertical_extent: 0.5,
            },
            desaturation: 0.4,
            mix_matrix: NIGHT_MIX_MATRIX,
            gain: 0.5,
            gamma: 2.3,
        }
    }
}

/// Fully resolved parameters of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", content = "params", rename_all = "lowercase")]
pub enum Recipe {
    Fog(FogRecipe),
    Rain(RainRecipe),
    Snow(SnowRecipe),
    Night(NightRecipe),
}

impl Recipe {
    pub fn default_for(condition: Condition) -> Result<Self> {
        Ok(match condition {
            Condition::Fog => Recipe::Fog(FogRecipe::default()),
            Condition::Rain => Recipe::Rain(RainRecipe::default()),
            Condition::Snow => Recipe::Snow(SnowRecipe::default()),
            Condition::Night => Recipe::Night(NightRecipe::default()),
            Condition::Clear => return Err(Error::UnknownCondition("clear".into())),
        })
    }

    /// Defaults for `condition` with `overrides` merged over them.
    pub fn resolve(condition: Condition, overrides: Option<&Value>) -> Result<Self> {
        let Some(over) = overrides else {
            return Self::default_for(condition);
        };
        Ok(match Self::default_for(condition)? {
            Recipe::Fog(d) => Recipe::Fog(merged(&d, over)?),
            Recipe::Rain(d) => Recipe::Rain(merged(&d, over)?),
            Recipe::Snow(d) => Recipe::Snow(merged(&d, over)?),
            Recipe::Night(d) => Recipe::Night(merged(&d, over)?),
        })
    }

    pub fn condition(&self) -> Condition {
        match self {
            Recipe::Fog(_) => Condition::Fog,
            Recipe::Rain(_) => Condition::Rain,
            Recipe::Snow(_) => Condition::Snow,
            Recipe::Night(_) => Condition::Night,
        }
    }

    /// Runs the recipe's steps in order. Each random step draws from its own
    /// stream derived from `seed` and the step name.
    pub fn apply(&self, img: &RasterImage, seed: u64) -> Result<RasterImage> {
        let cond = self.condition().as_str();
        let step_seed = |step: &str| derive_seed(seed, &["augment", cond, step]);
        match self {
            Recipe::Fog(r) => {
                let img = desaturate(img, r.desaturation)?;
                let img = channel_scale(&img, r.channel_scale)?;
                gaussian_overlay(&img, &r.fog, step_seed("fog"))
            }
            Recipe::Rain(r) => {
                let img = desaturate(img, r.desaturation)?;
                let img = channel_scale(&img, r.channel_scale)?;
                let img = tone_adjust(&img, r.gain, 1.0)?;
                let img = tone_adjust(&img, 1.0, r.gamma)?;
                let (img, _) = line_streak_overlay(&img, &r.streaks, step_seed("streaks"))?;
                let img = gaussian_overlay(&img, &r.drops, step_seed("drops"))?;
                let img = img.gaussian_blur(r.blur_sigma)?;
                Ok(glass_blur(&img, r.glass_radius, step_seed("glass")))
            }
            Recipe::Snow(r) => {
                let img = snow_bleach(img, r.bleach_threshold, r.bleach_boost)?;
                let img = gaussian_overlay(&img, &r.flakes, step_seed("flakes"))?;
                let img = desaturate(&img, r.desaturation)?;
                let img = channel_scale(&img, r.channel_scale)?;
                let img = tone_adjust(&img, r.gain, 1.0)?;
                tone_adjust(&img, 1.0, r.gamma)
            }
            Recipe::Night(r) => {
                let img = gaussian_overlay(img, &r.sky, step_seed("sky"))?;
                let img = desaturate(&img, r.desaturation)?;
                let img = color_mix(&img, r.mix_matrix)?;
                let img = tone_adjust(&img, r.gain, 1.0)?;
                tone_adjust(&img, 1.0, r.gamma)
            }
        }
    }
}

fn merged<T: Serialize + DeserializeOwned>(defaults: &T, overrides: &Value) -> Result<T> {
    if !overrides.is_object() {
        return Err(Error::Config("augmentation overrides must be a JSON object".into()));
    }
    let mut base = serde_json::to_value(defaults)?;
    merge_into(&mut base, overrides);
    serde_json::from_value(base).map_err(|e| Error::Config(format!("augmentation overrides: {e}")))
}

fn merge_into(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    // a tagged enum value (e.g. radius) is replaced whole when its tag changes
                    Some(slot) if slot.is_object() && v.is_object() && same_tag(slot, v) => merge_into(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

fn same_tag(a: &Value, b: &Value) -> bool {
    match (a.get("unit"), b.get("unit")) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// What to augment and how.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    pub condition: Condition,
    pub seed: u64,
    pub overrides: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub image: RasterImage,
    pub recipe: Recipe,
}

pub fn augment(img: &RasterImage, params: &AugmentParams) -> Result<Augmented> {
    let recipe = Recipe::resolve(params.condition, params.overrides.as_ref())?;
    Ok(Augmented {
        image: recipe.apply(img, params.seed)?,
        recipe,
    })
}

//! Procedural clear-to-adverse augmentation: color primitives, overlays and
//! the per-condition recipes built from them.

mod overlay;
mod primitives;
mod recipe;

pub use overlay::{
    gaussian_overlay, line_streak_overlay, render_blobs, render_streaks, sample_blobs, sample_streaks, Blob,
    BlobOverlay, BlobRadius, StreakCollection, StreakParams,
};
pub use primitives::{channel_scale, color_mix, desaturate, glass_blur, luma, snow_bleach, tone_adjust, LUMA_709};
pub use recipe::{
    augment, AugmentParams, Augmented, FogRecipe, NightRecipe, RainRecipe, Recipe, SnowRecipe, IDENTITY_MATRIX,
    NIGHT_MIX_MATRIX,
};

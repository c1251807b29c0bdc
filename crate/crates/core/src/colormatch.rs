//! Reinhard statistics transfer in L*a*b*, with gamma-attenuated scaling and
//! out-of-range handling that keeps the target mean fixed.
//!
//! For each channel `V' = (sigma_t / sigma_s)^gamma * (V - mu_s) + mu_t`.
//! A channel with `sigma_s == 0` gets a pure mean shift.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auxprep::BACKGROUND_INSTANCE;
use crate::error::{Error, Result};
use crate::imgcore::{lab_to_rgb, rgb_to_lab, InstanceMap, LabImage, RasterImage, LAB_RANGES};
use crate::seed::rng_from_seed;

/// Population statistics of one region, per L*a*b* channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub pixel_count: usize,
}

/// Pixels a statistic or transfer applies to.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    All,
    /// Linear pixel indices (`y * width + x`).
    Pixels(&'a [usize]),
}

impl Region<'_> {
    fn for_each(&self, len: usize, mut f: impl FnMut(usize)) {
        match self {
            Region::All => (0..len).for_each(f),
            Region::Pixels(ix) => ix.iter().for_each(|&i| f(i)),
        }
    }

    fn count(&self, len: usize) -> usize {
        match self {
            Region::All => len,
            Region::Pixels(ix) => ix.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorMatchConfig {
    /// Attenuation exponent on the std ratio.
    pub gamma: f64,
    /// Re-apply per instance after the global pass.
    pub per_instance: bool,
    /// Interval `w_orig` is drawn from in [`palette_blend`].
    pub w_orig_range: (f32, f32),
}

impl Default for ColorMatchConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            per_instance: true,
            w_orig_range: (0.0, 0.5),
        }
    }
}

impl ColorMatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        let (lo, hi) = self.w_orig_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::param(
                "w_orig_range",
                format!("[{lo}, {hi}] is not a sub-interval of [0, 1]"),
            ));
        }
        Ok(())
    }
}

pub fn compute_stats(lab: &LabImage, region: Region<'_>) -> Result<ChannelStats> {
    let n = region.count(lab.pixel_count());
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    let data = lab.data();
    let mut sum = [0f64; 3];
    region.for_each(lab.pixel_count(), |i| {
        for c in 0..3 {
            sum[c] += f64::from(data[i * 3 + c]);
        }
    });
    let mean = sum.map(|s| s / n as f64);
    let mut sq = [0f64; 3];
    region.for_each(lab.pixel_count(), |i| {
        for c in 0..3 {
            let d = f64::from(data[i * 3 + c]) - mean[c];
            sq[c] += d * d;
        }
    });
    Ok(ChannelStats {
        mean,
        std: sq.map(|s| (s / n as f64).sqrt()),
        pixel_count: n,
    })
}

/// Per-channel multiplier `(sigma_t / sigma_s)^gamma`, or 1 when `sigma_s == 0`.
pub fn transfer_scale(src_std: f64, tgt_std: f64, gamma: f64) -> f64 {
    if src_std == 0.0 {
        1.0
    } else {
        (tgt_std / src_std).powf(gamma)
    }
}

/// Applies the transfer inside `region`; other pixels are copied unchanged.
/// No range handling is done here.
pub fn reinhard_transfer(
    src: &LabImage,
    src_stats: &ChannelStats,
    tgt_stats: &ChannelStats,
    gamma: f64,
    region: Region<'_>,
) -> LabImage {
    let mut out = src.clone();
    transfer_in_place(&mut out, src_stats, tgt_stats, gamma, region);
    out
}

fn transfer_in_place(
    lab: &mut LabImage,
    src_stats: &ChannelStats,
    tgt_stats: &ChannelStats,
    gamma: f64,
    region: Region<'_>,
) {
    let scale: [f64; 3] = std::array::from_fn(|c| transfer_scale(src_stats.std[c], tgt_stats.std[c], gamma));
    let n = lab.pixel_count();
    let data = lab.data_mut();
    region.for_each(n, |i| {
        for c in 0..3 {
            let v = f64::from(data[i * 3 + c]);
            data[i * 3 + c] = (scale[c] * (v - src_stats.mean[c]) + tgt_stats.mean[c]) as f32;
        }
    });
}

/// Brings `values` into `range` while keeping `anchor` fixed.
///
/// If the maximum exceeds the upper limit, values above the anchor are mapped
/// affinely so the anchor stays put and the maximum lands on the limit. The
/// lower side is handled the same way against the lower limit. A side that
/// does not overflow is left untouched. An anchor outside `range` is first
/// clamped into it.
pub fn clamp_preserving_anchor(values: &[f32], anchor: f32, range: (f32, f32)) -> Vec<f32> {
    let mut out = values.to_vec();
    clamp_anchor_in_place(&mut out, anchor, range);
    out
}

fn clamp_anchor_in_place(values: &mut [f32], anchor: f32, (lo, hi): (f32, f32)) {
    let anchor = anchor.clamp(lo, hi);
    let (min, max) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let a = f64::from(anchor);
    if max > hi {
        let k = (f64::from(hi) - a) / (f64::from(max) - a);
        for v in values.iter_mut().filter(|v| **v > anchor) {
            *v = ((a + (f64::from(*v) - a) * k) as f32).min(hi);
        }
    }
    if min < lo {
        let k = (a - f64::from(lo)) / (a - f64::from(min));
        for v in values.iter_mut().filter(|v| **v < anchor) {
            *v = ((a - (a - f64::from(*v)) * k) as f32).max(lo);
        }
    }
}

fn clamp_region(lab: &mut LabImage, anchors: [f64; 3], region: Region<'_>) {
    let n = lab.pixel_count();
    let mut idx = Vec::with_capacity(region.count(n));
    region.for_each(n, |i| idx.push(i));
    let data = lab.data_mut();
    let mut buf = vec![0f32; idx.len()];
    for c in 0..3 {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = data[i * 3 + c];
        }
        clamp_anchor_in_place(&mut buf, anchors[c] as f32, LAB_RANGES[c]);
        for (b, &i) in buf.iter().zip(&idx) {
            data[i * 3 + c] = *b;
        }
    }
}

/// Transfers `region` of `lab` toward `tgt` and brings the result back into range.
fn transfer_and_clamp(lab: &mut LabImage, tgt: &ChannelStats, gamma: f64, region: Region<'_>) -> Result<()> {
    let src = compute_stats(lab, region)?;
    transfer_in_place(lab, &src, tgt, gamma, region);
    clamp_region(lab, tgt.mean, region);
    Ok(())
}

/// Global transfer toward precomputed target statistics.
pub fn match_to_stats(src: &RasterImage, tgt: &ChannelStats, gamma: f64) -> Result<RasterImage> {
    let mut lab = rgb_to_lab(src);
    transfer_and_clamp(&mut lab, tgt, gamma, Region::All)?;
    Ok(lab_to_rgb(&lab))
}

/// Global transfer followed, when `cfg.per_instance` is set and an instance
/// map is given, by one transfer per instance. Per-instance target statistics
/// come from the same pixels of the target image. Background pixels only take
/// part in the global pass.
pub fn match_colors(
    src: &RasterImage,
    tgt: &RasterImage,
    instances: Option<&InstanceMap>,
    cfg: &ColorMatchConfig,
) -> Result<RasterImage> {
    cfg.validate()?;
    src.ensure_same_dims("target image", tgt.dims())?;
    if let Some(inst) = instances {
        src.ensure_same_dims("instance map", inst.dims())?;
    }
    let mut lab = rgb_to_lab(src);
    let lab_t = rgb_to_lab(tgt);
    let global_t = compute_stats(&lab_t, Region::All)?;
    transfer_and_clamp(&mut lab, &global_t, cfg.gamma, Region::All)?;

    if let (true, Some(inst)) = (cfg.per_instance, instances) {
        for pixels in instance_pixels(inst).values() {
            let region = Region::Pixels(pixels);
            let t = compute_stats(&lab_t, region)?;
            transfer_and_clamp(&mut lab, &t, cfg.gamma, region)?;
        }
    }
    Ok(lab_to_rgb(&lab))
}

/// Pixel indices per non-background instance id, in ascending id order.
pub fn instance_pixels(inst: &InstanceMap) -> BTreeMap<u16, Vec<usize>> {
    let mut groups: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for (i, &id) in inst.data().iter().enumerate() {
        if id != BACKGROUND_INSTANCE {
            groups.entry(id).or_default().push(i);
        }
    }
    groups
}

#[derive(Debug, Clone)]
pub struct Calibrated {
    pub image: RasterImage,
    /// Index into the calibration set of the frame used as target.
    pub frame_index: usize,
}

/// Uniform seeded choice of a calibration frame.
pub fn pick_calibration_frame(count: usize, seed: u64) -> Result<usize> {
    if count == 0 {
        return Err(Error::EmptyInput("calibration set"));
    }
    Ok(rng_from_seed(seed).gen_range(0..count))
}

/// Picks one calibration frame with a seeded uniform draw and matches `img`
/// to it globally. Frames may have any size.
pub fn calibration_match(img: &RasterImage, calibration: &[RasterImage], seed: u64, gamma: f64) -> Result<Calibrated> {
    let frame_index = pick_calibration_frame(calibration.len(), seed)?;
    let stats = compute_stats(&rgb_to_lab(&calibration[frame_index]), Region::All)?;
    Ok(Calibrated {
        image: match_to_stats(img, &stats, gamma)?,
        frame_index,
    })
}

/// Draws `w_orig` uniformly from the closed interval `range`.
pub fn sample_w_orig(seed: u64, range: (f32, f32)) -> f32 {
    let (lo, hi) = range;
    if lo == hi {
        return lo;
    }
    rng_from_seed(seed).gen_range(lo..=hi)
}

/// `w_orig * orig + (1 - w_orig) * matched`.
pub fn palette_blend_with(orig: &RasterImage, matched: &RasterImage, w_orig: f32) -> Result<RasterImage> {
    orig.ensure_same_dims("matched image", matched.dims())?;
    if !(0.0..=1.0).contains(&w_orig) {
        return Err(Error::param("w_orig", format!("{w_orig} outside [0, 1]")));
    }
    let w = f64::from(w_orig);
    let data = orig
        .data()
        .iter()
        .zip(matched.data())
        .map(|(&o, &m)| (w * f64::from(o) + (1.0 - w) * f64::from(m)) as f32)
        .collect();
    RasterImage::new(orig.width(), orig.height(), data)
}

/// Secondary blend toward the original palette with a seeded `w_orig`.
/// Returns the blended image and the weight used.
pub fn palette_blend(
    orig: &RasterImage,
    matched: &RasterImage,
    seed: u64,
    range: (f32, f32),
) -> Result<(RasterImage, f32)> {
    let w = sample_w_orig(seed, range);
    Ok((palette_blend_with(orig, matched, w)?, w))
}

//! Procedural overlays: soft blobs (fog, drops, flakes, sky darkening) and
//! straight streaks (rain).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{clamp01, RasterImage};
use crate::seed::{rng_from_seed, Rng as SeededRng};

/// Blob coverage below this is treated as zero.
const COVERAGE_CUTOFF: f64 = 1.0 / 1024.0;

/// How blob sizes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlobRadius {
    /// Uniform in `[min, max]` times the image diagonal.
    DiagonalFraction { min: f32, max: f32 },
    /// Uniform in `[min, max]` pixels.
    Pixels { min: f32, max: f32 },
}

impl BlobRadius {
    fn bounds(&self, width: usize, height: usize) -> (f32, f32) {
        match *self {
            BlobRadius::DiagonalFraction { min, max } => {
                let diag = ((width * width + height * height) as f32).sqrt();
                (min * diag, max * diag)
            }
            BlobRadius::Pixels { min, max } => (min, max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobOverlay {
    pub count: usize,
    /// Peak opacity of the overlay layer.
    pub alpha: f32,
    pub radius: BlobRadius,
    /// Profile exponent `p` in `exp(-0.5 * (d / r)^p)`; 2 is a Gaussian,
    /// larger values give flatter blobs with crisper edges.
    pub sharpness: f32,
    pub color: [f32; 3],
    /// Blob centers are drawn from the top `vertical_extent` of the image.
    pub vertical_extent: f32,
}

impl BlobOverlay {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        if !(self.sharpness.is_finite() && self.sharpness > 0.0) {
            return Err(Error::param("sharpness", "must be > 0"));
        }
        if !(self.vertical_extent > 0.0 && self.vertical_extent <= 1.0) {
            return Err(Error::param("vertical_extent", "must be in (0, 1]"));
        }
        let (min, max) = match self.radius {
            BlobRadius::DiagonalFraction { min, max } | BlobRadius::Pixels { min, max } => (min, max),
        };
        if !(min > 0.0 && min <= max && max.is_finite()) {
            return Err(Error::param("radius", format!("[{min}, {max}] is not a positive interval")));
        }
        if self.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param("color", "channels must be in [0, 1]"));
        }
        Ok(())
    }
}

/// One blob: center in pixel coordinates and radius (profile scale) in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blob {
    pub x: f32,
    pub y: f32,
    pub radius: f32,
}

pub fn sample_blobs(params: &BlobOverlay, width: usize, height: usize, rng: &mut SeededRng) -> Vec<Blob> {
    let (rmin, rmax) = params.radius.bounds(width, height);
    let ymax = (params.vertical_extent * height as f32).max(f32::MIN_POSITIVE);
    (0..params.count)
        .map(|_| Blob {
            x: rng.gen_range(0.0..width as f32),
            y: rng.gen_range(0.0..ymax),
            radius: if rmin == rmax { rmin } else { rng.gen_range(rmin..=rmax) },
        })
        .collect()
}

/// Seeded blob overlay; see [`render_blobs`].
pub fn gaussian_overlay(img: &RasterImage, params: &BlobOverlay, seed: u64) -> Result<RasterImage> {
    params.validate()?;
    if params.count == 0 || params.alpha == 0.0 {
        return Ok(img.clone());
    }
    let blobs = sample_blobs(params, img.width(), img.height(), &mut rng_from_seed(seed));
    render_blobs(img, &blobs, params.alpha, params.sharpness, params.color)
}

/// Composites blobs over `img`.
///
/// The coverage field is the sum of the blob profiles, divided by its maximum
/// when that exceeds 1. Each pixel is then mixed toward `color` with opacity
/// `alpha * coverage`, so an isolated blob raises its center pixel by exactly
/// `alpha * (color - v)`. When the smallest blob is large the field is
/// evaluated on a coarser grid and interpolated bilinearly.
pub fn render_blobs(
    img: &RasterImage,
    blobs: &[Blob],
    alpha: f32,
    sharpness: f32,
    color: [f32; 3],
) -> Result<RasterImage> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} outside [0, 1]")));
    }
    if blobs.is_empty() || alpha == 0.0 || img.pixel_count() == 0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let min_r = blobs.iter().map(|b| b.radius).fold(f32::INFINITY, f32::min);
    let step = ((min_r / 4.0).floor() as usize).max(1);
    let field = coverage_field(blobs, w, h, step, f64::from(sharpness));
    let peak = field.values.iter().copied().fold(0.0f64, f64::max);
    let norm = if peak > 1.0 { peak } else { 1.0 };

    let mut out = img.clone();
    let data = out.data_mut();
    let a = f64::from(alpha);
    for y in 0..h {
        for x in 0..w {
            let cov = field.sample(x, y) / norm;
            if cov == 0.0 {
                continue;
            }
            let op = a * cov;
            let i = (y * w + x) * 3;
            for c in 0..3 {
                let v = f64::from(data[i + c]);
                data[i + c] = clamp01((v + op * (f64::from(color[c]) - v)) as f32);
            }
        }
    }
    Ok(out)
}

struct CoverageGrid {
    step: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CoverageGrid {
    fn at(&self, gx: usize, gy: usize) -> f64 {
        self.values[gy * self.cols + gx]
    }

    fn sample(&self, x: usize, y: usize) -> f64 {
        if self.step == 1 {
            return self.at(x, y);
        }
        let (gx, fx) = (x / self.step, (x % self.step) as f64 / self.step as f64);
        let (gy, fy) = (y / self.step, (y % self.step) as f64 / self.step as f64);
        let top = self.at(gx, gy) * (1.0 - fx) + self.at(gx + 1, gy) * fx;
        let bottom = self.at(gx, gy + 1) * (1.0 - fx) + self.at(gx + 1, gy + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

fn coverage_field(blobs: &[Blob], width: usize, height: usize, step: usize, sharpness: f64) -> CoverageGrid {
    let (cols, rows) = if step == 1 {
        (width, height)
    } else {
        ((width - 1) / step + 2, (height - 1) / step + 2)
    };
    let mut values = vec![0f64; cols * rows];
    let reach = (2.0 * (1.0 / COVERAGE_CUTOFF).ln()).powf(1.0 / sharpness);
    let gaussian = sharpness == 2.0;
    let mut gx_buf = Vec::new();
    for b in blobs {
        let r = f64::from(b.radius);
        let extent = reach * r;
        let (bx, by) = (f64::from(b.x), f64::from(b.y));
        let span = |center: f64, n: usize| {
            let lo = ((center - extent) / step as f64).ceil().max(0.0) as usize;
            let hi = ((center + extent) / step as f64).floor();
            if hi < 0.0 {
                return (1, 0);
            }
            (lo, (hi as usize).min(n - 1))
        };
        let (x0, x1) = span(bx, cols);
        let (y0, y1) = span(by, rows);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        if gaussian {
            // separable: exp(-0.5 (dx^2 + dy^2) / r^2) = gx * gy
            gx_buf.clear();
            gx_buf.extend((x0..=x1).map(|gx| {
                let d = (gx * step) as f64 - bx;
                (-0.5 * d * d / (r * r)).exp()
            }));
            for gy in y0..=y1 {
                let d = (gy * step) as f64 - by;
                let fy = (-0.5 * d * d / (r * r)).exp();
                let row = &mut values[gy * cols + x0..=gy * cols + x1];
                for (v, fx) in row.iter_mut().zip(&gx_buf) {
                    *v += fx * fy;
                }
            }
        } else {
            for gy in y0..=y1 {
                let dy = (gy * step) as f64 - by;
                for gx in x0..=x1 {
                    let dx = (gx * step) as f64 - bx;
                    let d = (dx * dx + dy * dy).sqrt() / r;
                    values[gy * cols + gx] += (-0.5 * d.powf(sharpness)).exp();
                }
            }
        }
    }
    CoverageGrid { step, cols, values }
}

/// Rain streak configuration. Each range is sampled per collection, except
/// `elements`, whose count is drawn per collection and whose members each get
/// their own position and a small angle jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreakParams {
    pub collections: (u32, u32),
    pub elements: (u32, u32),
    pub alpha: (f32, f32),
    /// Degrees from vertical; positive leans right.
    pub slant_deg: (f32, f32),
    pub slant_jitter_deg: f32,
    /// Streak length as a fraction of image height.
    pub length_frac: (f32, f32),
    /// Gray level of the streak color.
    pub brightness: (f32, f32),
}

impl Default for StreakParams {
    fn default() -> Self {
        Self {
            collections: (1, 3),
            elements: (100, 500),
            alpha: (0.2, 0.3),
            slant_deg: (-20.0, 20.0),
            slant_jitter_deg: 2.0,
            length_frac: (0.02, 0.06),
            brightness: (0.7, 0.9),
        }
    }
}

impl StreakParams {
    fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f32, f32)| a.is_finite() && b.is_finite() && a <= b;
        if self.collections.0 > self.collections.1 || self.elements.0 > self.elements.1 {
            return Err(Error::param("streaks", "count ranges must be ordered"));
        }
        if !(ordered(self.alpha) && self.alpha.0 >= 0.0 && self.alpha.1 <= 1.0) {
            return Err(Error::param("streaks.alpha", "must be an ordered sub-interval of [0, 1]"));
        }
        if !(ordered(self.brightness) && self.brightness.0 >= 0.0 && self.brightness.1 <= 1.0) {
            return Err(Error::param("streaks.brightness", "must be an ordered sub-interval of [0, 1]"));
        }
        if !(ordered(self.slant_deg) && ordered(self.length_frac) && self.length_frac.0 >= 0.0) {
            return Err(Error::param("streaks", "slant and length ranges must be ordered"));
        }
        if !(self.slant_jitter_deg.is_finite() && self.slant_jitter_deg >= 0.0) {
            return Err(Error::param("streaks.slant_jitter_deg", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreakCollection {
    pub alpha: f32,
    pub slant_deg: f32,
    pub length_px: f32,
    pub color: [f32; 3],
    /// `(x, y, angle_deg)` of each streak's upper end.
    pub streaks: Vec<(f32, f32, f32)>,
}

fn draw<T: rand::distributions::uniform::SampleUniform + PartialOrd + Copy>(rng: &mut SeededRng, (lo, hi): (T, T)) -> T {
    if lo < hi {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

pub fn sample_streaks(params: &StreakParams, width: usize, height: usize, rng: &mut SeededRng) -> Vec<StreakCollection> {
    let n = draw(rng, params.collections);
    (0..n)
        .map(|_| {
            let alpha = draw(rng, params.alpha);
            let slant_deg = draw(rng, params.slant_deg);
            let length_px = draw(rng, params.length_frac) * height as f32;
            let gray = draw(rng, params.brightness);
            let count = draw(rng, params.elements);
            let j = params.slant_jitter_deg;
            let streaks = (0..count)
                .map(|_| {
                    let x = rng.gen_range(0.0..width.max(1) as f32);
                    let y = rng.gen_range(0.0..height.max(1) as f32);
                    let jitter = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
                    (x, y, slant_deg + jitter)
                })
                .collect();
            StreakCollection {
                alpha,
                slant_deg,
                length_px,
                color: [gray; 3],
                streaks,
            }
        })
        .collect()
}

/// Seeded rain streaks. Returns the image and the sampled collections.
pub fn line_streak_overlay(
    img: &RasterImage,
    params: &StreakParams,
    seed: u64,
) -> Result<(RasterImage, Vec<StreakCollection>)> {
    params.validate()?;
    let collections = sample_streaks(params, img.width(), img.height(), &mut rng_from_seed(seed));
    Ok((render_streaks(img, &collections), collections))
}

/// Draws each streak as a one-pixel line, compositing every covered pixel once.
pub fn render_streaks(img: &RasterImage, collections: &[StreakCollection]) -> RasterImage {
    let mut out = img.clone();
    let (w, h) = img.dims();
    let data = out.data_mut();
    for col in collections {
        for &(x0, y0, angle) in &col.streaks {
            let t = angle.to_radians();
            let (dx, dy) = (t.sin() * col.length_px, t.cos() * col.length_px);
            let steps = dx.abs().max(dy.abs()).ceil().max(1.0) as usize;
            let mut last = None;
            for s in 0..=steps {
                let f = s as f32 / steps as f32;
                let px = (x0 + f * dx).round();
                let py = (y0 + f * dy).round();
                if px < 0.0 || py < 0.0 || px >= w as f32 || py >= h as f32 {
                    continue;
                }
                let (px, py) = (px as usize, py as usize);
                if last == Some((px, py)) {
                    continue;
                }
                last = Some((px, py));
                let i = (py * w + px) * 3;
                for c in 0..3 {
                    let v = data[i + c];
                    data[i + c] = clamp01(v + col.alpha * (col.color[c] - v));
                }
            }
        }
    }
    out
}

//! Per-pixel color primitives. Each one is the identity at its neutral setting.

use rand::Rng;

use crate::error::{Error, Result};
use crate::imgcore::{clamp01, RasterImage};
use crate::seed::rng_from_seed;

/// Rec. 709 luma weights.
pub const LUMA_709: [f32; 3] = [0.2126, 0.7152, 0.0722];

#[inline]
pub fn luma(p: [f32; 3]) -> f32 {
    LUMA_709[0] * p[0] + LUMA_709[1] * p[1] + LUMA_709[2] * p[2]
}

fn check_unit(name: &'static str, v: f32) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param(name, format!("{v} outside [0, 1]")));
    }
    Ok(())
}

/// Moves every channel toward the pixel's luma by `fraction`.
pub fn desaturate(img: &RasterImage, fraction: f32) -> Result<RasterImage> {
    check_unit("fraction", fraction)?;
    if fraction == 0.0 {
        return Ok(img.clone());
    }
    Ok(img.map_pixels(|p| {
        let y = luma(p);
        p.map(|c| c + fraction * (y - c))
    }))
}

/// Channel-wise multiplication.
pub fn channel_scale(img: &RasterImage, factors: [f32; 3]) -> Result<RasterImage> {
    if factors.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::param("factors", format!("{factors:?} must be finite and >= 0")));
    }
    Ok(img.map_pixels(|p| [p[0] * factors[0], p[1] * factors[1], p[2] * factors[2]]))
}

/// `clamp01(gain * v) ^ gamma`; `gamma > 1` darkens.
pub fn tone_adjust(img: &RasterImage, gain: f32, gamma: f32) -> Result<RasterImage> {
    if !(gain.is_finite() && gain >= 0.0) {
        return Err(Error::param("gain", format!("must be finite and >= 0, got {gain}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::param("gamma", format!("must be finite and > 0, got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(img.map_pixels(|p| p.map(|c| gain * c)));
    }
    Ok(img.map_pixels(|p| p.map(|c| clamp01(gain * c).powf(gamma))))
}

/// Linear channel mixing; row `i` of `matrix` produces output channel `i`.
pub fn color_mix(img: &RasterImage, matrix: [[f32; 3]; 3]) -> Result<RasterImage> {
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix", "entries must be finite"));
    }
    Ok(img.map_pixels(|p| {
        matrix.map(|row| row[0] * p[0] + row[1] * p[1] + row[2] * p[2])
    }))
}

/// Pushes pixels whose luma exceeds `threshold` toward white by `boost`.
pub fn snow_bleach(img: &RasterImage, threshold: f32, boost: f32) -> Result<RasterImage> {
    check_unit("threshold", threshold)?;
    check_unit("boost", boost)?;
    if boost == 0.0 {
        return Ok(img.clone());
    }
    Ok(img.map_pixels(|p| {
        if luma(p) > threshold {
            p.map(|c| c + boost * (1.0 - c))
        } else {
            p
        }
    }))
}

/// Local pixel shuffle. Pixels are visited in raster order; each one not yet
/// moved is swapped with a uniformly drawn partner within Chebyshev distance
/// `radius` (clamped to the image) unless that partner has already moved.
/// Every output pixel therefore comes from within `radius` of its position,
/// and the multiset of pixel values is preserved.
pub fn glass_blur(img: &RasterImage, radius: u32, seed: u64) -> RasterImage {
    if radius == 0 || img.pixel_count() == 0 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let r = radius as i64;
    let mut rng = rng_from_seed(seed);
    let mut moved = vec![false; w * h];
    let mut out = img.clone();
    let data = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let dx = rng.gen_range(-r..=r);
            let dy = rng.gen_range(-r..=r);
            let i = y * w + x;
            if moved[i] {
                continue;
            }
            let qx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
            let qy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
            let j = qy * w + qx;
            if j == i || moved[j] {
                continue;
            }
            for c in 0..3 {
                data.swap(i * 3 + c, j * 3 + c);
            }
            moved[i] = true;
            moved[j] = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| {
            [x as f32 / w as f32, y as f32 / h as f32, ((x * 7 + y * 3) % 11) as f32 / 10.0]
        })
    }

    #[test]
    fn neutral_settings_are_identity() {
        let img = gradient(9, 7);
        assert_eq!(desaturate(&img, 0.0).unwrap(), img);
        assert_eq!(channel_scale(&img, [1.0; 3]).unwrap(), img);
        assert_eq!(tone_adjust(&img, 1.0, 1.0).unwrap(), img);
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(color_mix(&img, eye).unwrap(), img);
        assert_eq!(snow_bleach(&img, 0.5, 0.0).unwrap(), img);
        assert_eq!(glass_blur(&img, 0, 3), img);
    }

    #[test]
    fn desaturate_values() {
        let red = RasterImage::filled(1, 1, [1.0, 0.0, 0.0]);
        let out = desaturate(&red, 0.4).unwrap().pixel(0, 0);
        assert!((out[0] - (1.0 - 0.4 * (1.0 - 0.2126))).abs() < 1e-6, "{out:?}");
        let gray = desaturate(&gradient(5, 5), 1.0).unwrap();
        for p in gray.pixels() {
            assert!((p[0] - p[1]).abs() < 1e-6 && (p[1] - p[2]).abs() < 1e-6);
        }
        assert!(desaturate(&red, 1.5).is_err());
    }

    #[test]
    fn channel_scale_values() {
        let white = RasterImage::filled(2, 2, [1.0; 3]);
        assert_eq!(channel_scale(&white, [0.8, 0.8, 1.0]).unwrap().pixel(1, 1), [0.8, 0.8, 1.0]);
        assert!(channel_scale(&white, [0.0; 3]).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(channel_scale(&white, [-1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn tone_values() {
        let half = RasterImage::filled(1, 1, [0.5; 3]);
        let out = tone_adjust(&half, 1.0, 2.3).unwrap().pixel(0, 0)[0];
        assert!((out - 0.5f32.powf(2.3)).abs() < 1e-7);
        assert!((out - 0.2031).abs() < 1e-4);
        let white = RasterImage::filled(1, 1, [1.0; 3]);
        assert_eq!(tone_adjust(&white, 1.0, 3.7).unwrap().pixel(0, 0), [1.0; 3]);
        assert!(tone_adjust(&white, 1.0, 0.0).is_err());
        assert!(tone_adjust(&white, -0.1, 1.0).is_err());
    }

    #[test]
    fn color_mix_values() {
        let blue = RasterImage::filled(1, 1, [0.0, 0.0, 1.0]);
        let night = [[1.0, 0.0, 0.05], [0.0, 1.0, 0.05], [0.0, 0.0, 0.9]];
        let p = color_mix(&blue, night).unwrap().pixel(0, 0);
        assert_eq!(p, [0.05, 0.05, 0.9]);
        assert!(color_mix(&blue, [[0.0; 3]; 3]).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bleach_values() {
        let black = RasterImage::filled(3, 3, [0.0; 3]);
        assert_eq!(snow_bleach(&black, 0.8, 0.5).unwrap(), black);
        let bright = RasterImage::filled(1, 1, [0.9; 3]);
        let p = snow_bleach(&bright, 0.8, 0.5).unwrap().pixel(0, 0);
        assert!(p.iter().all(|&c| (c - 0.95).abs() < 1e-6), "{p:?}");
    }

    #[test]
    fn glass_blur_constant_image() {
        let c = RasterImage::filled(10, 10, [0.3, 0.6, 0.9]);
        assert_eq!(glass_blur(&c, 4, 1), c);
    }

    #[test]
    fn glass_blur_preserves_multiset() {
        let img = gradient(20, 13);
        let out = glass_blur(&img, 4, 99);
        assert_ne!(out, img);
        let key = |p: [f32; 3]| p.map(f32::to_bits);
        let mut a: Vec<_> = img.pixels().map(key).collect();
        let mut b: Vec<_> = out.pixels().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}

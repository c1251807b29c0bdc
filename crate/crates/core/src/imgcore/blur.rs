use super::raster::{Plane, RasterImage};
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps for `sigma`, truncated at radius `ceil(3 * sigma)`.
/// Returns `[1.0]` for `sigma == 0`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur with edge replication.
pub trait GaussianBlur: Sized {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self>;
}

impl GaussianBlur for Plane<f32> {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let out = blur_interleaved(self.data(), self.width(), self.height(), 1, sigma);
        Plane::new(self.width(), self.height(), out)
    }
}

impl GaussianBlur for RasterImage {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let out = blur_interleaved(self.data(), self.width(), self.height(), 3, sigma);
        Ok(RasterImage::from_raw_unchecked(self.width(), self.height(), out))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    Ok(())
}

// Both passes accumulate in f64 and divide by the tap sum, so a constant
// input reproduces exactly after rounding back to f32.
fn blur_interleaved(data: &[f32], width: usize, height: usize, channels: usize, sigma: f64) -> Vec<f32> {
    if width == 0 || height == 0 {
        return data.to_vec();
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    let tap_sum: f64 = taps.iter().sum();
    let clamp_x = |x: isize| x.clamp(0, width as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, height as isize - 1) as usize;

    let mut horiz = vec![0f64; data.len()];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            for c in 0..channels {
                let mut acc = 0.0;
                for (k, t) in taps.iter().enumerate() {
                    let sx = clamp_x(x as isize + k as isize - radius);
                    acc += t * f64::from(data[(row + sx) * channels + c]);
                }
                horiz[(row + x) * channels + c] = acc / tap_sum;
            }
        }
    }

    let mut out = vec![0f32; data.len()];
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                let mut acc = 0.0;
                for (k, t) in taps.iter().enumerate() {
                    let sy = clamp_y(y as isize + k as isize - radius);
                    acc += t * horiz[(sy * width + x) * channels + c];
                }
                out[(y * width + x) * channels + c] = (acc / tap_sum) as f32;
            }
        }
    }
    out
}

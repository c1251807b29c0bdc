//! sRGB (D65) to CIE L*a*b* conversion.
//!
//! Per-pixel arithmetic runs in `f64`; rasters store `f32`.

use super::raster::{clamp01, RasterImage};

/// D65 reference white, Y normalized to 1.
const WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Valid L range.
pub const L_RANGE: (f32, f32) = (0.0, 100.0);
/// Valid range used for the a and b channels.
pub const AB_RANGE: (f32, f32) = (-128.0, 127.0);

/// Per-channel valid ranges in `[L, a, b]` order.
pub const LAB_RANGES: [(f32, f32); 3] = [L_RANGE, AB_RANGE, AB_RANGE];

/// Interleaved L*a*b* raster, same layout as [`RasterImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> crate::Result<Self> {
        if data.len() != width * height * 3 {
            return Err(crate::Error::BadSampleCount {
                width,
                height,
                channels: 3,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn pixel(&self, index: usize) -> [f32; 3] {
        let i = index * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Converts one sRGB pixel in `[0, 1]` to L*a*b*.
pub fn srgb_pixel_to_lab(rgb: [f32; 3]) -> [f32; 3] {
    let lin = rgb.map(|c| srgb_to_linear(f64::from(c)));
    let xyz = mul(&RGB_TO_XYZ, lin);
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [
        (116.0 * fy - 16.0) as f32,
        (500.0 * (fx - fy)) as f32,
        (200.0 * (fy - fz)) as f32,
    ]
}

/// Converts one L*a*b* pixel to sRGB, clamping out-of-gamut results into `[0, 1]`.
pub fn lab_pixel_to_srgb(lab: [f32; 3]) -> [f32; 3] {
    let [l, a, b] = lab.map(f64::from);
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    mul(&XYZ_TO_RGB, xyz).map(|c| clamp01(linear_to_srgb(c.max(0.0)) as f32))
}

pub fn rgb_to_lab(img: &RasterImage) -> LabImage {
    let mut data = Vec::with_capacity(img.data().len());
    for p in img.pixels() {
        data.extend(srgb_pixel_to_lab(p));
    }
    LabImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

pub fn lab_to_rgb(lab: &LabImage) -> RasterImage {
    let mut data = Vec::with_capacity(lab.data.len());
    for p in lab.data.chunks_exact(3) {
        data.extend(lab_pixel_to_srgb([p[0], p[1], p[2]]));
    }
    RasterImage::from_raw_unchecked(lab.width, lab.height, data)
}

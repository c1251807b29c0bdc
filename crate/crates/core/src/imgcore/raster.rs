use crate::error::{Error, Result};

/// Three-channel color raster with row-major interleaved samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub const CHANNELS: usize = 3;

    /// Wraps interleaved RGB samples. Non-finite samples are rejected and
    /// finite ones are clamped into `[0, 1]`.
    pub fn new(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * Self::CHANNELS {
            return Err(Error::BadSampleCount {
                width,
                height,
                channels: Self::CHANNELS,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("data", "non-finite sample"));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let rgb = rgb.map(clamp01);
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds an image from a per-pixel function. Output is clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).map(clamp01));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::BadSampleCount {
                width,
                height,
                channels: 3,
                got: bytes.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data: bytes.iter().map(|&b| f32::from(b) / 255.0).collect(),
        })
    }

    /// Quantizes to 8 bits per channel with round-to-nearest.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
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

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb.map(clamp01));
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Applies `f` to every pixel, clamping the result into `[0, 1]`.
    pub fn map_pixels(&self, mut f: impl FnMut([f32; 3]) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.pixels() {
            data.extend(f(p).map(clamp01));
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Crate-internal mutable access. Callers keep samples in `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn ensure_same_dims(&self, what: &'static str, other: (usize, usize)) -> Result<()> {
        ensure_dims(what, self.dims(), other)
    }
}

/// Single-plane raster. The element type carries the meaning: class ids,
/// instance ids, depth, or blend weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Semantic class ids.
pub type LabelMap = Plane<u8>;
/// Instance ids; see [`crate::auxprep::BACKGROUND_INSTANCE`].
pub type InstanceMap = Plane<u16>;
/// Non-negative depth in arbitrary units.
pub type DepthMap = Plane<f32>;
/// Per-pixel weights in `[0, 1]`.
pub type WeightMap = Plane<f32>;

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadSampleCount {
                width,
                height,
                channels: 1,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(&T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }
}

impl Plane<f32> {
    /// Checks that every value is finite and within `[0, 1]`.
    pub fn validate_weights(&self) -> Result<()> {
        match self.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(v) => Err(Error::param("weights", format!("value {v} outside [0, 1]"))),
            None => Ok(()),
        }
    }
}

pub(crate) fn ensure_dims(what: &'static str, want: (usize, usize), got: (usize, usize)) -> Result<()> {
    if want != got {
        return Err(Error::DimensionMismatch {
            what,
            want_w: want.0,
            want_h: want.1,
            got_w: got.0,
            got_h: got.1,
        });
    }
    Ok(())
}

#[inline]
pub fn clamp01(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
pub fn quantize_u8(v: f32) -> u8 {
    (clamp01(v) * 255.0).round() as u8
}

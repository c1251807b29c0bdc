//! PNG reading and writing for the raster types.
//!
//! Color images are 8-bit RGB. Class ids are 8-bit single channel; an RGB
//! label image is accepted and read from its red channel, which is where the
//! simulator stores the semantic tag. Instance ids and depth are 16-bit
//! single channel (8-bit files are widened).

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, RgbImage};

use super::raster::{quantize_u8, DepthMap, InstanceMap, LabelMap, Plane, RasterImage};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn save<P, C>(path: &Path, img: &ImageBuffer<P, C>) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn wrong_layout(path: &Path, want: &str, got: image::ColorType) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source: image::ImageError::Unsupported(
            image::error::UnsupportedError::from_format_and_kind(
                image::error::ImageFormatHint::Name("PNG".into()),
                image::error::UnsupportedErrorKind::GenericFeature(format!(
                    "expected {want}, found {got:?}"
                )),
            ),
        ),
    }
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<RasterImage> {
    let img = open(path.as_ref())?.to_rgb8();
    let (w, h) = img.dimensions();
    RasterImage::from_rgb8(w as usize, h as usize, img.as_raw())
}

pub fn write_rgb(path: impl AsRef<Path>, img: &RasterImage) -> Result<()> {
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .expect("buffer length matches dimensions");
    save(path.as_ref(), &buf)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageRgb8(rgb) => rgb.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgba8(rgba) => rgba.pixels().map(|p| p.0[0]).collect(),
        other => return Err(wrong_layout(path, "8-bit gray or RGB labels", other.color())),
    };
    Plane::new(w, h, data)
}

pub fn write_gray8(path: impl AsRef<Path>, plane: &Plane<u8>) -> Result<()> {
    let buf = GrayImage::from_raw(plane.width() as u32, plane.height() as u32, plane.data().to_vec())
        .expect("buffer length matches dimensions");
    save(path.as_ref(), &buf)
}

fn read_gray16(path: &Path) -> Result<Plane<u16>> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma16(g) => g.into_raw(),
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(u16::from).collect(),
        other => return Err(wrong_layout(path, "8- or 16-bit gray", other.color())),
    };
    Plane::new(w, h, data)
}

pub fn read_instances(path: impl AsRef<Path>) -> Result<InstanceMap> {
    read_gray16(path.as_ref())
}

/// Reads raw 16-bit depth values as `f32`.
pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    Ok(read_gray16(path.as_ref())?.map(|&v| f32::from(v)))
}

pub fn write_gray16(path: impl AsRef<Path>, plane: &Plane<u16>) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(plane.width() as u32, plane.height() as u32, plane.data().to_vec())
            .expect("buffer length matches dimensions");
    save(path.as_ref(), &buf)
}

/// Writes a `[0, 1]` plane as 16-bit gray scaled to the full `u16` range.
pub fn write_unit_plane16(path: impl AsRef<Path>, plane: &Plane<f32>) -> Result<()> {
    let scaled = plane.map(|&v| (super::clamp01(v) * 65535.0).round() as u16);
    write_gray16(path, &scaled)
}

/// Writes a `[0, 1]` plane as 8-bit gray.
pub fn write_unit_plane8(path: impl AsRef<Path>, plane: &Plane<f32>) -> Result<()> {
    write_gray8(path, &plane.map(|&v| quantize_u8(v)))
}

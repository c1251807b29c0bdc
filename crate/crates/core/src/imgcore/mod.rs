//! Raster types, color conversion, filtering and PNG I/O shared by every stage.

mod blur;
pub mod io;
mod lab;
mod raster;

pub use blur::{gaussian_kernel, GaussianBlur};
pub use lab::{
    lab_pixel_to_srgb, lab_to_rgb, rgb_to_lab, srgb_pixel_to_lab, LabImage, AB_RANGE, LAB_RANGES,
    L_RANGE,
};
pub use raster::{
    clamp01, quantize_u8, DepthMap, InstanceMap, LabelMap, Plane, RasterImage, WeightMap,
};

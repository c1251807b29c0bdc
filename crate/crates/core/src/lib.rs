//! Deterministic batch stages for turning clear-weather driving imagery into
//! adverse-condition training data: semantic blending of simulator and
//! diffusion renders, Reinhard color matching, procedural weather
//! augmentation, auxiliary-input preparation, simulator weather sampling,
//! real/synthetic manifest mixing and dataset statistics.

pub mod auxprep;
pub mod blend;
pub mod colormatch;
pub mod condition;
pub mod datastats;
mod error;
pub mod imgcore;
pub mod manifest;
pub mod pipeline;
pub mod seed;
pub mod taxonomy;
pub mod weatheraug;
pub mod weathercfg;

pub use condition::Condition;
pub use error::{Error, Result};
pub use imgcore::{DepthMap, InstanceMap, LabelMap, Plane, RasterImage, WeightMap};

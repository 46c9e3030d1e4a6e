//! Exploration engine for gigapixel multi-channel tissue images.

pub mod cell_features;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod histosearch;
pub mod image_store;
pub mod raster;
pub mod render;
pub mod snapshots;

pub use dataset::Dataset;
pub use error::{Error, ErrorKind, Result};
pub use geometry::LensGeometry;

//! Spatial histogram similarity search.
//!
//! Each channel is quantized by its render range, integral histograms give
//! O(B) window histograms, and every pixel's window is compared with the lens
//! histogram by chi-square distance. The channel mean is mapped to a
//! similarity in [0, 1] and thresholded into contours.

mod contours;
mod integral;
mod search;
mod simmap;

pub use contours::{extract_contours, Contour, ContourSet};
pub use integral::{
    chi_square, chi_square_normalized, lens_histogram, quantize, quantize_value, Histogram,
    IntegralHistogram, QuantizedPlane, DEFAULT_BINS,
};
pub use search::{
    lens_distributions, region_map, search_viewport, search_whole_image, viewport_map,
    whole_image_map, RegionMap, SearchRequest, DEFAULT_SEARCH_TILE, DEFAULT_THRESHOLD,
};
pub use simmap::{
    similarity_from_distance, similarity_map, similarity_map_with_lens, window_half, SimilarityMap,
    MAX_DISTANCE,
};

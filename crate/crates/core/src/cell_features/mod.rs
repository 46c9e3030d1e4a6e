//! Single-cell table, ball-tree spatial index and lens statistics.

mod ball_tree;
mod stats;
mod table;

pub use ball_tree::{BallTree, DEFAULT_LEAF_SIZE};
pub use stats::{
    bin_edges, bin_index, brush_filter, compute_region_stats, log_value, radial_means,
    region_area_um2, region_histograms, type_counts, ChannelHistogram, RadialMean, RegionStats,
    SpatialIndex, TypeCount, TypeOrder, HISTOGRAM_BINS,
};
pub use table::{
    nearest_rank, CellRecord, CellTable, ChannelSummary, GlobalHistogram, TYPE_COLUMN,
};

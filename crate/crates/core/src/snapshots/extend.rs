use serde::{Deserialize, Serialize};

use super::snapshot::{create_snapshot, CaptureState, RichSnapshot};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::histosearch::{search_whole_image, ContourSet, SearchRequest, DEFAULT_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendResult {
    pub contours: ContourSet,
    /// One unsaved snapshot per outer contour, with the lens moved to the
    /// contour's centroid.
    pub provisional: Vec<RichSnapshot>,
}

pub fn search_request_for(snapshot: &RichSnapshot, threshold: f64) -> SearchRequest {
    SearchRequest {
        channels: snapshot.lens_channel_set.settings.clone(),
        geometry: snapshot.geometry,
        threshold,
        bins: DEFAULT_BINS,
    }
}

/// Whole-image search with the snapshot's lens shape and lens channels.
pub fn extend_search(
    dataset: &Dataset,
    snapshot: &RichSnapshot,
    threshold: f64,
    tile: Option<usize>,
) -> Result<ExtendResult> {
    let req = search_request_for(snapshot, threshold);
    let contours = search_whole_image(dataset.handle(), &req, tile)?;
    let mut provisional = Vec::new();
    for (k, ring) in contours
        .level0_contours()
        .iter()
        .filter(|c| !c.is_hole())
        .enumerate()
    {
        let [cx, cy] = ring.centroid();
        let mut state: CaptureState = snapshot.capture_state();
        state.lens.geometry = snapshot.geometry.with_center(cx, cy);
        state.viewport.center = [cx, cy];
        let title = format!("{} (match {})", snapshot.title, k + 1);
        let description = format!("similarity >= {threshold} to snapshot {}", snapshot.id);
        provisional.push(create_snapshot(dataset, &state, title, description)?);
    }
    Ok(ExtendResult {
        contours,
        provisional,
    })
}

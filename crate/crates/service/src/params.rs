use serde::{Deserialize, Serialize};
use tissuelens::cell_features::TypeOrder;
use tissuelens::histosearch::{SearchRequest, DEFAULT_BINS, DEFAULT_THRESHOLD};
use tissuelens::image_store::{DatasetMeta, RegionRect};
use tissuelens::render::{ChannelRenderSetting, ChannelSet, LensState};
use tissuelens::snapshots::ViewportState;
use tissuelens::LensGeometry;

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    #[serde(alias = "rectangle")]
    Rect,
}

/// Query of `GET /api/lens/stats`, also used by the `stats` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsParams {
    pub shape: Shape,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub hw: Option<f64>,
    #[serde(default)]
    pub hh: Option<f64>,
    /// Comma-separated channel names; all channels when absent.
    #[serde(default)]
    pub channels: Option<String>,
    #[serde(default)]
    pub mode: TypeOrder,
}

impl StatsParams {
    pub fn geometry(&self) -> ApiResult<LensGeometry> {
        lens_geometry(self.shape, self.cx, self.cy, self.r, self.hw, self.hh)
    }

    pub fn channel_list(&self, meta: &DatasetMeta) -> ApiResult<Vec<String>> {
        match &self.channels {
            None => Ok(meta.channels.iter().map(|c| c.name.clone()).collect()),
            Some(list) => parse_channel_list(list),
        }
    }
}

pub fn lens_geometry(
    shape: Shape,
    cx: f64,
    cy: f64,
    r: Option<f64>,
    hw: Option<f64>,
    hh: Option<f64>,
) -> ApiResult<LensGeometry> {
    let g = match shape {
        Shape::Circle => LensGeometry::circle(
            cx,
            cy,
            r.ok_or_else(|| ApiError::bad_request("circle needs `r`"))?,
        ),
        Shape::Rect => match (hw, hh) {
            (Some(hw), Some(hh)) => LensGeometry::rect(cx, cy, hw, hh),
            _ => return Err(ApiError::bad_request("rect needs `hw` and `hh`")),
        },
    };
    g.validate()?;
    Ok(g)
}

pub fn parse_channel_list(list: &str) -> ApiResult<Vec<String>> {
    let names: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        return Err(ApiError::bad_request("empty channel list"));
    }
    Ok(names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchScope {
    Viewport,
    Whole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBody {
    pub geometry: LensGeometry,
    pub channels: Vec<ChannelRenderSetting>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub scope: SearchScope,
    #[serde(default)]
    pub viewport: Option<RegionRect>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

impl SearchBody {
    pub fn request(&self) -> SearchRequest {
        SearchRequest {
            channels: self.channels.clone(),
            geometry: self.geometry,
            threshold: self.threshold,
            bins: self.bins,
        }
    }

    pub fn check_scope(&self) -> ApiResult<()> {
        match (self.scope, &self.viewport) {
            (SearchScope::Viewport, None) => {
                Err(ApiError::bad_request("viewport scope needs `viewport`"))
            }
            (SearchScope::Whole, Some(_)) => {
                Err(ApiError::bad_request("whole scope takes no `viewport`"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderBody {
    pub viewport: RegionRect,
    pub context: ChannelSet,
    #[serde(default)]
    pub lens: Option<LensState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSnapshotBody {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub viewport: ViewportState,
    pub context_channel_set: ChannelSet,
    pub lens: LensState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateSnapshotBody {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendBody {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ListQuery {
    #[serde(default)]
    pub query: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RestoreQuery {
    #[serde(default)]
    pub trust_stats: bool,
}

/// Parses a JSON body, reporting the failing field path.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(ApiError::body)
}

/// Parses a URL query string.
pub fn parse_query<T: serde::de::DeserializeOwned>(query: Option<&str>) -> ApiResult<T> {
    serde_urlencoded::from_str(query.unwrap_or(""))
        .map_err(|e| ApiError::bad_request(format!("invalid query: {e}")))
}

//! HTTP API over one opened tissuelens dataset.
//!
//! | method | path | response |
//! |---|---|---|
//! | GET | `/api/meta` | dataset metadata |
//! | GET | `/api/tile/{channel}/{level}/{tx}/{ty}` | 16-bit greyscale PNG |
//! | POST | `/api/render` | RGBA PNG |
//! | GET | `/api/lens/stats` | region statistics |
//! | POST | `/api/search` | GeoJSON (viewport) or a job (whole image) |
//! | GET | `/api/search/{id}` | job status |
//! | GET, POST | `/api/snapshots` | list (`?query=`), create |
//! | GET, PATCH, DELETE | `/api/snapshots/{id}` | read, edit text, delete |
//! | GET | `/api/snapshots/{id}/restore` | restore delta (`?trust_stats=true`) |
//! | POST | `/api/snapshots/{id}/extend_search` | contours and provisional snapshots |
//!
//! Errors are JSON `{"code", "message", "detail"}`.

mod error;
mod params;
mod routes;
mod state;

use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::{json, Value};
use tissuelens::snapshots::ExtendResult;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ApiErrorCode, ApiResult};
pub use params::{
    lens_geometry, parse_channel_list, CreateSnapshotBody, ExtendBody, RenderBody, SearchBody,
    SearchScope, Shape, StatsParams, UpdateSnapshotBody,
};
pub use routes::check_channels;
pub use state::{AppState, JobState, JobStatus};

pub const DEFAULT_PORT: u16 = 8000;

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods(Any)
        .allow_headers(Any);
    Router::new()
        .route("/api/meta", get(routes::meta))
        .route("/api/tile/{channel}/{level}/{tx}/{ty}", get(routes::tile))
        .route("/api/render", post(routes::render))
        .route("/api/lens/stats", get(routes::lens_stats))
        .route("/api/search", post(routes::search))
        .route("/api/search/{id}", get(routes::search_job))
        .route(
            "/api/snapshots",
            get(routes::list_snapshots).post(routes::create),
        )
        .route(
            "/api/snapshots/{id}",
            get(routes::get_snapshot)
                .patch(routes::update_snapshot)
                .delete(routes::delete_snapshot),
        )
        .route("/api/snapshots/{id}/restore", get(routes::restore_snapshot))
        .route("/api/snapshots/{id}/extend_search", post(routes::extend))
        .fallback(routes::fallback)
        .layer(cors)
        .with_state(state)
}

pub async fn serve(state: AppState, listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Response body of `extend_search`.
pub fn extend_response(result: &ExtendResult) -> Value {
    json!({
        "geojson": result.contours.to_geojson(),
        "provisional": result.provisional,
    })
}

/// JSON text with object keys sorted, for byte comparison across entry points.
pub fn canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(value)?;
    serde_json::to_string(&value)
}

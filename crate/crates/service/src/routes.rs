use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use tissuelens::histosearch::{search_viewport, search_whole_image};
use tissuelens::image_store::{DatasetMeta, Plane};
use tissuelens::raster::{encode_gray16, encode_rgba};
use tissuelens::render::render_view;
use tissuelens::snapshots::{
    create_snapshot, extend_search, restore, CaptureState, RestoreDelta, RichSnapshot,
};

use crate::error::{ApiError, ApiResult};
use crate::extend_response;
use crate::params::{
    parse_json, parse_query, CreateSnapshotBody, ExtendBody, ListQuery, RenderBody, RestoreQuery,
    SearchBody, SearchScope, StatsParams, UpdateSnapshotBody,
};
use crate::state::{AppState, JobState, JobStatus};

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker task failed: {e}")))?
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

/// Rejects channel names the dataset does not have.
pub fn check_channels<'a>(
    meta: &DatasetMeta,
    names: impl IntoIterator<Item = &'a str>,
) -> ApiResult<()> {
    for name in names {
        if meta.channel_index(name).is_none() {
            return Err(ApiError::bad_request(format!("unknown channel `{name}`"))
                .with_detail(json!({ "channel": name })));
        }
    }
    Ok(())
}

pub(crate) async fn meta(State(state): State<AppState>) -> ApiResult<Json<DatasetMeta>> {
    Ok(Json(state.loaded()?.dataset.meta().clone()))
}

pub(crate) async fn tile(
    State(state): State<AppState>,
    Path((channel, level, tx, ty)): Path<(String, String, String, String)>,
) -> ApiResult<Response> {
    let loaded = state.loaded()?;
    let unknown = || ApiError::not_found(format!("unknown tile {channel}/{level}/{tx}/{ty}"));
    let level: u32 = level.parse().map_err(|_| unknown())?;
    let tx: u64 = tx.parse().map_err(|_| unknown())?;
    let ty: u64 = ty.parse().map_err(|_| unknown())?;
    blocking(move || {
        let (w, h, data) = loaded.dataset.handle().read_tile(&channel, level, tx, ty)?;
        let plane = Plane::from_vec(w as usize, h as usize, data.as_ref().clone())?;
        Ok(png(encode_gray16(&plane)?))
    })
    .await
}

pub(crate) async fn render(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let loaded = state.loaded()?;
    let body: RenderBody = parse_json(&body)?;
    let meta = loaded.dataset.meta();
    check_channels(meta, body.context.channels())?;
    if let Some(lens) = &body.lens {
        check_channels(meta, lens.lens_channel_set.channels())?;
    }
    blocking(move || {
        let frame = render_view(
            loaded.dataset.handle(),
            &body.viewport,
            &body.context,
            body.lens.as_ref(),
        )?;
        Ok(png(encode_rgba(&frame)?))
    })
    .await
}

pub(crate) async fn lens_stats(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
) -> ApiResult<Response> {
    let loaded = state.loaded()?;
    let params: StatsParams = parse_query(query.as_deref())?;
    let geometry = params.geometry()?;
    let channels = params.channel_list(loaded.dataset.meta())?;
    check_channels(loaded.dataset.meta(), channels.iter().map(String::as_str))?;
    blocking(move || {
        let stats = loaded
            .dataset
            .region_stats(&geometry, &channels, params.mode)?;
        Ok(Json(stats).into_response())
    })
    .await
}

pub(crate) async fn search(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let loaded = state.loaded()?;
    let body: SearchBody = parse_json(&body)?;
    body.check_scope()?;
    let req = body.request();
    req.validate()?;
    check_channels(
        loaded.dataset.meta(),
        req.channels.iter().map(|c| c.channel.as_str()),
    )?;
    match (body.scope, body.viewport) {
        (SearchScope::Viewport, Some(viewport)) => {
            blocking(move || {
                let contours = search_viewport(loaded.dataset.handle(), &viewport, &req)?;
                Ok(Json(contours.to_geojson()).into_response())
            })
            .await
        }
        _ => {
            let id = format!("{:016x}", rand::random::<u64>());
            let status = JobStatus {
                id: id.clone(),
                state: JobState::Pending,
                result: None,
                error: None,
            };
            state.put_job(status.clone());
            let tile = state.search_tile();
            let jobs = state.clone();
            tokio::task::spawn_blocking(move || {
                let outcome = search_whole_image(loaded.dataset.handle(), &req, tile);
                let done = match outcome {
                    Ok(contours) => JobStatus {
                        id: id.clone(),
                        state: JobState::Done,
                        result: Some(contours.to_geojson()),
                        error: None,
                    },
                    Err(e) => JobStatus {
                        id: id.clone(),
                        state: JobState::Failed,
                        result: None,
                        error: Some(e.into()),
                    },
                };
                jobs.put_job(done);
            });
            Ok((StatusCode::ACCEPTED, Json(status)).into_response())
        }
    }
}

pub(crate) async fn search_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<JobStatus>> {
    state
        .job(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown search job `{id}`")))
}

fn unknown_snapshot(id: &str) -> ApiError {
    ApiError::not_found(format!("unknown snapshot `{id}`")).with_detail(json!({ "id": id }))
}

pub(crate) async fn list_snapshots(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<Vec<RichSnapshot>>> {
    let loaded = state.loaded()?;
    let q: ListQuery = parse_query(query.as_deref())?;
    let store = loaded.snapshots.lock().await;
    let hits = store.filter(q.query.as_deref().unwrap_or(""));
    Ok(Json(hits.into_iter().cloned().collect()))
}

pub(crate) async fn create(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let loaded = state.loaded()?;
    let body: CreateSnapshotBody = parse_json(&body)?;
    let meta = loaded.dataset.meta();
    check_channels(meta, body.context_channel_set.channels())?;
    check_channels(meta, body.lens.lens_channel_set.channels())?;
    let dataset = loaded.dataset.clone();
    let snapshot = blocking(move || {
        let capture = CaptureState {
            viewport: body.viewport,
            context_channel_set: body.context_channel_set,
            lens: body.lens,
        };
        Ok(create_snapshot(
            &dataset,
            &capture,
            body.title,
            body.description,
        )?)
    })
    .await?;
    let mut store = loaded.snapshots.clone().lock_owned().await;
    let stored = snapshot.clone();
    blocking(move || {
        store.insert(stored)?;
        if let Err(e) = store.save() {
            let id = store
                .snapshots()
                .last()
                .map(|s| s.id.clone())
                .unwrap_or_default();
            store.remove(&id);
            return Err(e.into());
        }
        Ok(())
    })
    .await?;
    Ok((StatusCode::CREATED, Json(snapshot)).into_response())
}

pub(crate) async fn get_snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<RichSnapshot>> {
    let loaded = state.loaded()?;
    let store = loaded.snapshots.lock().await;
    store
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| unknown_snapshot(&id))
}

pub(crate) async fn update_snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<RichSnapshot>> {
    let loaded = state.loaded()?;
    let body: UpdateSnapshotBody = parse_json(&body)?;
    let mut store = loaded.snapshots.clone().lock_owned().await;
    blocking(move || {
        let previous = store
            .get(&id)
            .cloned()
            .ok_or_else(|| unknown_snapshot(&id))?;
        let snap = store.get_mut(&id).expect("present");
        if let Some(title) = body.title {
            snap.title = title;
        }
        if let Some(description) = body.description {
            snap.description = description;
        }
        let updated = snap.clone();
        if let Err(e) = store.save() {
            *store.get_mut(&id).expect("present") = previous;
            return Err(e.into());
        }
        Ok(Json(updated))
    })
    .await
}

pub(crate) async fn delete_snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let loaded = state.loaded()?;
    let mut store = loaded.snapshots.clone().lock_owned().await;
    blocking(move || {
        let removed = store.remove(&id).ok_or_else(|| unknown_snapshot(&id))?;
        if let Err(e) = store.save() {
            store.insert(removed)?;
            return Err(e.into());
        }
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

pub(crate) async fn restore_snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<RestoreDelta>> {
    let loaded = state.loaded()?;
    let q: RestoreQuery = parse_query(query.as_deref())?;
    let snapshot = {
        let store = loaded.snapshots.lock().await;
        store
            .get(&id)
            .cloned()
            .ok_or_else(|| unknown_snapshot(&id))?
    };
    Ok(Json(restore(
        &snapshot,
        loaded.dataset.meta(),
        q.trust_stats,
    )?))
}

pub(crate) async fn extend(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let loaded = state.loaded()?;
    let body: ExtendBody = if body.is_empty() {
        parse_json(b"{}")?
    } else {
        parse_json(&body)?
    };
    let snapshot = {
        let store = loaded.snapshots.lock().await;
        store
            .get(&id)
            .cloned()
            .ok_or_else(|| unknown_snapshot(&id))?
    };
    let current = loaded.dataset.meta().hash();
    if snapshot.dataset_meta_hash != current {
        return Err(tissuelens::Error::DatasetMismatch {
            snapshot: snapshot.dataset_meta_hash,
            current,
        }
        .into());
    }
    let tile = state.search_tile();
    blocking(move || {
        let result = extend_search(&loaded.dataset, &snapshot, body.threshold, tile)?;
        Ok(Json(extend_response(&result)))
    })
    .await
}

pub(crate) async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

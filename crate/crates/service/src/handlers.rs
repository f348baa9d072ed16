use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use futures::stream::{self, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use skyroute_core::analysis::{compare, read_flown, resolve_home, ErrorReport};
use skyroute_core::document::{decode_route, encode_route};
use skyroute_core::editor::EditSession;
use skyroute_core::geodesy::{GeodesyMode, HomePoint};
use skyroute_core::model::{CameraTaskKind, Path, TaskPalette};
use skyroute_core::sim::{default_home, simulate, Frame, SimConfig, SimulationResult};
use skyroute_core::store::RouteSummary;

use crate::error::ApiError;
use crate::AppState;

pub const COMPLETION_MESSAGE: &str = "Simulation finished";

/// Parses an optional JSON body; an empty body yields the default.
fn body_or_default<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::schema(format!("request body: {e}")))
}

fn json_body(body: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::schema(format!("request body: {e}")))
}

pub async fn list_paths(State(state): State<AppState>) -> Json<Vec<RouteSummary>> {
    Json(state.store.list_routes())
}

pub async fn create_path(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let record = json_body(&body)?;
    let path = state.store.create_route(&record)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "route_id": path.route_id })),
    )
        .into_response())
}

pub async fn get_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Value>, ApiError> {
    Ok(Json(encode_route(&state.store.load_route(&id)?)))
}

pub async fn put_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let record = json_body(&body)?;
    let draft = decode_route(&id, &record)?;
    let route_id = state.store.save_draft(draft)?;
    Ok(Json(json!({ "route_id": route_id })))
}

pub async fn delete_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<StatusCode, ApiError> {
    state.store.delete_route(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn path_details(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let path = state.store.load_route(&id)?;
    let session = EditSession::open(&path, *state.store.limits())
        .map_err(|e| ApiError::domain(e.to_string()))?;
    Ok(Json(session.waypoint_details()).into_response())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateRequest {
    pub config: SimConfig,
    pub home: Option<HomePoint>,
    pub mode: Option<GeodesyMode>,
}

fn run_simulation(
    state: &AppState,
    path: &Path,
    config: &SimConfig,
    home: Option<HomePoint>,
    mode: Option<GeodesyMode>,
) -> Result<SimulationResult, ApiError> {
    let home = home
        .or_else(|| default_home(path))
        .ok_or_else(|| ApiError::domain("route has no waypoints"))?;
    Ok(simulate(
        path,
        home,
        config,
        mode.unwrap_or(state.default_mode),
    )?)
}

pub async fn simulate_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<SimulationResult>, ApiError> {
    let request: SimulateRequest = body_or_default(&body)?;
    let path = state.store.load_route(&id)?;
    Ok(Json(run_simulation(
        &state,
        &path,
        &request.config,
        request.home,
        request.mode,
    )?))
}

/// Simulation parameters for the frame endpoints, given as query string.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamQuery {
    pub speed: Option<f64>,
    pub tick: Option<f64>,
    pub noise: Option<f64>,
    pub seed: Option<u64>,
    pub mode: Option<GeodesyMode>,
    pub home_lat: Option<f64>,
    pub home_lon: Option<f64>,
    /// `mobile` selects the mobile palette.
    pub palette: Option<String>,
    /// Pace frames at the tick interval instead of sending them at once.
    pub realtime: bool,
    /// Frame index for the polling endpoint.
    pub frame: Option<usize>,
}

impl StreamQuery {
    fn config(&self) -> SimConfig {
        let d = SimConfig::default();
        SimConfig {
            speed_mps: self.speed.unwrap_or(d.speed_mps),
            tick_s: self.tick.unwrap_or(d.tick_s),
            noise_sigma_m: self.noise.unwrap_or(d.noise_sigma_m),
            rng_seed: self.seed.unwrap_or(d.rng_seed),
            ..d
        }
    }

    fn home(&self) -> Result<Option<HomePoint>, ApiError> {
        match (self.home_lat, self.home_lon) {
            (Some(lat), Some(lon)) => Ok(Some(HomePoint::new(lat, lon))),
            (None, None) => Ok(None),
            _ => Err(ApiError::schema(
                "home_lat and home_lon must be given together",
            )),
        }
    }

    fn palette(&self) -> Result<TaskPalette, ApiError> {
        match self.palette.as_deref() {
            None | Some("web") => Ok(TaskPalette::Web),
            Some("mobile") => Ok(TaskPalette::Mobile),
            Some(other) => Err(ApiError::schema(format!("unknown palette {other:?}"))),
        }
    }
}

fn frames_for(
    state: &AppState,
    id: &str,
    query: &StreamQuery,
) -> Result<(SimulationResult, Vec<Frame>), ApiError> {
    let path = state.store.load_route(id)?;
    let result = run_simulation(state, &path, &query.config(), query.home()?, query.mode)?;
    let frames = result.frames().with_palette(query.palette()?).collect();
    Ok((result, frames))
}

fn completion_record(result: &SimulationResult, frames: usize) -> Value {
    json!({
        "status": "completed",
        "message": COMPLETION_MESSAGE,
        "route_id": result.route_id,
        "frames": frames,
        "duration_s": result.duration_s,
    })
}

fn ndjson_line(value: &impl Serialize) -> Bytes {
    let mut line = serde_json::to_vec(value).expect("frame serializes");
    line.push(b'\n');
    Bytes::from(line)
}

pub async fn stream_simulation(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(query) = query?;
    let (result, frames) = frames_for(&state, &id, &query)?;
    let claim = state.claim_stream(&id).ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            crate::ErrorCode::Domain,
            format!("a simulation stream for {id} is already active"),
        )
    })?;

    let pace = query
        .realtime
        .then(|| Duration::from_secs_f64(result.config.tick_s));
    let tail = completion_record(&result, frames.len());
    let lines = stream::iter(frames)
        .then(move |frame| async move {
            if let (Some(delay), true) = (pace, frame.index > 0) {
                tokio::time::sleep(delay).await;
            }
            Ok::<_, std::convert::Infallible>(ndjson_line(&frame))
        })
        .chain(stream::once(async move {
            // The slot is released once the completion record is produced
            // or the client goes away and the body is dropped.
            drop(claim);
            Ok(ndjson_line(&tail))
        }));
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(lines),
    )
        .into_response())
}

pub async fn simulation_state(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(query) = query?;
    let (result, frames) = frames_for(&state, &id, &query)?;
    let index = query.frame.unwrap_or(0);
    let total = frames.len();
    Ok(Json(match frames.into_iter().nth(index) {
        Some(frame) => json!({ "frame": frame, "total": total, "finished": false }),
        None => {
            json!({ "frame": null, "total": total, "finished": true, "completion": completion_record(&result, total) })
        }
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    /// `{"points": [...]}` or a flown-trace document.
    pub flown: Value,
    #[serde(default)]
    pub home: Option<HomePoint>,
    #[serde(default)]
    pub mode: Option<GeodesyMode>,
}

pub async fn analyze_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ErrorReport>, ApiError> {
    let request: AnalysisRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::schema(format!("request body: {e}")))?;
    let planned = state.store.load_route(&id)?;
    let (flown, recorded) = read_flown(&request.flown)?;
    let home = resolve_home(request.home, recorded, &planned)
        .ok_or_else(|| ApiError::domain("no home position: route is empty"))?;
    Ok(Json(compare(
        &planned,
        &flown,
        home,
        request.mode.unwrap_or(state.analysis_mode),
    )?))
}

pub async fn task_legend() -> Json<Value> {
    Json(Value::Array(
        CameraTaskKind::ALL
            .iter()
            .map(|k| {
                json!({
                    "code": k.code_str(),
                    "label": k.label(),
                    "color": TaskPalette::Web.color(*k),
                    "mobile_color": TaskPalette::Mobile.color(*k),
                })
            })
            .collect(),
    ))
}

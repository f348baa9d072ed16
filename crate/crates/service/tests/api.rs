use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use skyroute_core::analysis::{compare, read_flown};
use skyroute_core::document::encode_route;
use skyroute_core::geodesy::GeodesyMode;
use skyroute_core::store::RouteStore;
use skyroute_service::{router, AppState, ServiceConfig};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn app_with(store: RouteStore) -> (Router, AppState) {
    let state = AppState::new(store, &ServiceConfig::default());
    (router(state.clone()), state)
}

fn app() -> Router {
    app_with(RouteStore::in_memory()).0
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, bytes.to_vec())
}

async fn call_json(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn route_record(altitudes: &[f64]) -> Value {
    let points: serde_json::Map<String, Value> = altitudes
        .iter()
        .enumerate()
        .map(|(i, alt)| {
            (
                format!("PATHPOINT-{i}"),
                json!({"ID": i, "XLongitude": -74.0658 + i as f64 * 1e-4, "ZLatitude": 4.6012, "YAltitude": alt, "task": "0", "instruction": ""}),
            )
        })
        .collect();
    json!({"description": "loop", "PATH": points})
}

#[tokio::test]
async fn crud_lifecycle() {
    let app = app();
    let (status, list) = call_json(&app, Method::GET, "/paths", None).await;
    assert_eq!((status, list), (StatusCode::OK, json!([])));

    let (status, created) = call_json(
        &app,
        Method::POST,
        "/paths",
        Some(route_record(&[10.0, 12.0])),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["route_id"], "PATH-1");
    call_json(&app, Method::POST, "/paths", Some(route_record(&[10.0]))).await;
    call_json(
        &app,
        Method::PUT,
        "/paths/PATH-10",
        Some(route_record(&[10.0])),
    )
    .await;

    let (_, list) = call_json(&app, Method::GET, "/paths", None).await;
    let ids: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["route_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["PATH-1", "PATH-2", "PATH-10"]);

    let (status, doc) = call_json(&app, Method::GET, "/paths/PATH-1", None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call_json(&app, Method::PUT, "/paths/PATH-1", Some(doc.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, again) = call_json(&app, Method::GET, "/paths/PATH-1", None).await;
    assert_eq!(again, doc);

    let (status, _) = call(&app, Method::DELETE, "/paths/PATH-1", None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, err) = call_json(&app, Method::GET, "/paths/PATH-1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
    assert_eq!(err["status"], 404);
    let (status, _) = call_json(&app, Method::DELETE, "/paths/PATH-1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_routes_are_rejected_with_violations() {
    let app = app();
    let (status, err) = call_json(
        &app,
        Method::PUT,
        "/paths/PATH-4",
        Some(route_record(&[10.0, 500.0])),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "validation");
    assert!(err["violations"][0]
        .as_str()
        .unwrap()
        .contains("altitude out of range"));

    let mut unknown = route_record(&[10.0]);
    unknown["PATH"]["PATHPOINT-0"]["task"] = json!("7");
    let (status, err) = call_json(&app, Method::PUT, "/paths/PATH-4", Some(unknown)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(err["violations"][0]
        .as_str()
        .unwrap()
        .contains("unknown task code 7"));

    let (status, err) =
        call_json(&app, Method::PUT, "/paths/PATH-4", Some(json!({"PATH": 3}))).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("schema"))
    );

    let (status, _) = call(
        &app,
        Method::PUT,
        "/paths/route-4",
        Some(route_record(&[10.0])),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, list) = call_json(&app, Method::GET, "/paths", None).await;
    assert_eq!(list, json!([]));
}

#[tokio::test]
async fn simulation_is_deterministic_and_matches_stream() {
    let app = app();
    call_json(
        &app,
        Method::PUT,
        "/paths/PATH-1",
        Some(route_record(&[10.0, 12.0, 8.0])),
    )
    .await;
    let body = json!({"config": {"noise_sigma_m": 0.2, "rng_seed": 4}});
    let (status, a) = call(
        &app,
        Method::POST,
        "/paths/PATH-1/simulate",
        Some(body.clone()),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = call(&app, Method::POST, "/paths/PATH-1/simulate", Some(body)).await;
    assert_eq!(a, b);
    let result: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(result["status"], "completed");
    assert_eq!(result["arrivals"].as_array().unwrap().len(), 3);

    let (_, plain) = call_json(&app, Method::POST, "/paths/PATH-1/simulate", None).await;
    let (status, stream) = call(&app, Method::GET, "/paths/PATH-1/simulate/stream", None).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<Value> = String::from_utf8(stream)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let frames = &lines[..lines.len() - 1];
    assert_eq!(frames.len(), plain["trace"].as_array().unwrap().len());
    assert!(frames.last().unwrap()["completed"].as_bool().unwrap());
    let tail = lines.last().unwrap();
    assert_eq!(tail["message"], "Simulation finished");
    assert_eq!(tail["frames"], frames.len());

    let (_, state) = call_json(
        &app,
        Method::GET,
        "/paths/PATH-1/simulate/state?frame=3",
        None,
    )
    .await;
    assert_eq!(state["frame"], frames[3]);
    let (_, state) = call_json(
        &app,
        Method::GET,
        &format!("/paths/PATH-1/simulate/state?frame={}", frames.len()),
        None,
    )
    .await;
    assert_eq!(state["finished"], true);
    assert_eq!(state["frame"], Value::Null);
}

#[tokio::test]
async fn simulation_errors() {
    let app = app();
    call_json(
        &app,
        Method::PUT,
        "/paths/PATH-1",
        Some(json!({"PATH": {}})),
    )
    .await;
    let (status, err) = call_json(&app, Method::POST, "/paths/PATH-1/simulate", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "domain");

    let mut stop = route_record(&[10.0, 10.0]);
    stop["PATH"]["PATHPOINT-1"]["task"] = json!("2");
    stop["PATH"]["PATHPOINT-1"]["instruction"] = json!("stop");
    call_json(&app, Method::PUT, "/paths/PATH-2", Some(stop)).await;
    let (status, err) = call_json(&app, Method::POST, "/paths/PATH-2/simulate", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("without an open recording"));

    let (status, _) = call_json(&app, Method::POST, "/paths/PATH-9/simulate", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-2/simulate",
        Some(json!({"speed": 3})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(
        &app,
        Method::GET,
        "/paths/PATH-2/simulate/stream?bogus=1",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn one_stream_per_route() {
    let app = app();
    call_json(
        &app,
        Method::PUT,
        "/paths/PATH-1",
        Some(route_record(&[10.0, 10.0])),
    )
    .await;
    call_json(
        &app,
        Method::PUT,
        "/paths/PATH-2",
        Some(route_record(&[10.0, 10.0])),
    )
    .await;
    let open = Request::get("/paths/PATH-1/simulate/stream?realtime=true")
        .body(Body::empty())
        .unwrap();
    let held = app.clone().oneshot(open).await.unwrap();
    assert_eq!(held.status(), StatusCode::OK);

    let (status, err) = call_json(&app, Method::GET, "/paths/PATH-1/simulate/stream", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "domain");
    let (status, _) = call(&app, Method::GET, "/paths/PATH-2/simulate/stream", None).await;
    assert_eq!(status, StatusCode::OK);

    drop(held);
    let (status, _) = call(&app, Method::GET, "/paths/PATH-1/simulate/stream", None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn frames_carry_task_colors() {
    let app = app();
    let mut record = route_record(&[10.0, 10.0]);
    record["PATH"]["PATHPOINT-0"]["task"] = json!("3");
    call_json(&app, Method::PUT, "/paths/PATH-1", Some(record)).await;
    let (_, bytes) = call(&app, Method::GET, "/paths/PATH-1/simulate/stream", None).await;
    let text = String::from_utf8(bytes).unwrap();
    let interval: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|f| f["task"] == "3")
        .collect();
    assert!(!interval.is_empty());
    assert!(interval
        .iter()
        .all(|f| f["color"] == "green" && f["label"] == "Start interval"));
    let (_, bytes) = call(
        &app,
        Method::GET,
        "/paths/PATH-1/simulate/stream?palette=mobile",
        None,
    )
    .await;
    assert!(String::from_utf8(bytes).unwrap().contains("\"orange\""));

    let (_, legend) = call_json(&app, Method::GET, "/tasks", None).await;
    assert_eq!(
        legend[1],
        json!({"code": "1", "label": "Take Picture", "color": "blue", "mobile_color": "blue"})
    );
    let (_, details) = call_json(&app, Method::GET, "/paths/PATH-1/details", None).await;
    assert_eq!(details[0]["display_order"], 1);
}

#[tokio::test]
async fn analysis_reproduces_recorded_means() {
    let store = RouteStore::in_memory();
    store.import_tree(&fixture("field_routes.json")).unwrap();
    let (app, state) = app_with(store);
    let flown: Value = serde_json::from_str(&fixture("ruta96_prueba.json")).unwrap();

    let (status, report) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-96/analysis",
        Some(json!({"flown": flown})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!((report["mean_error_x"].as_f64().unwrap() - 0.070998039).abs() < 1e-6);
    assert!((report["mean_error_z"].as_f64().unwrap() - 0.059134198).abs() < 1e-6);
    assert_eq!(report["mode"], "legacy");

    // Same answer as the module operation on the same snapshot.
    let (record, home) = read_flown(&flown).unwrap();
    let direct = compare(
        &state.store.load_route("PATH-96").unwrap(),
        &record,
        home.unwrap(),
        GeodesyMode::Legacy,
    )
    .unwrap();
    assert_eq!(report, serde_json::to_value(&direct).unwrap());

    let (status, err) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-103/analysis",
        Some(json!({"flown": flown})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "pairing");
    assert!(err["message"].as_str().unwrap().contains("9 planned"));

    let planned = state.store.load_route("PATH-3").unwrap();
    let same: Vec<Value> = planned
        .points
        .iter()
        .map(|p| json!({"latitude_deg": p.latitude_deg, "longitude_deg": p.longitude_deg}))
        .collect();
    let (_, zero) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-3/analysis",
        Some(json!({"flown": {"points": same}, "mode": "corrected"})),
    )
    .await;
    assert_eq!(zero["mean_error_x"], 0.0);
    assert_eq!(zero["mean_error_z"], 0.0);
    assert_eq!(zero["mode"], "corrected");

    let (status, _) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-96/analysis",
        Some(json!({})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call_json(
        &app,
        Method::POST,
        "/paths/PATH-5/analysis",
        Some(json!({"flown": flown})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn get_put_round_trip_preserves_store_document() {
    let store = RouteStore::in_memory();
    store.import_tree(&fixture("extended_path97.json")).unwrap();
    let (app, state) = app_with(store);
    let (_, doc) = call_json(&app, Method::GET, "/paths/PATH-97", None).await;
    assert_eq!(
        doc,
        encode_route(&state.store.load_route("PATH-97").unwrap())
    );
    let before = state.store.load_route("PATH-97").unwrap();
    call_json(&app, Method::PUT, "/paths/PATH-97", Some(doc)).await;
    assert_eq!(state.store.load_route("PATH-97").unwrap(), before);
}

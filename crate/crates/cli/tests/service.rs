use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use bandeau_cli::{router, Store};
use bandeau_core::{plan_svg, synth_case, Bucket, Case, PlanFile, SweepRecord};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(Arc::new(Store::in_memory()))
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> (StatusCode, String, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let ctype = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned())
        .unwrap_or_default();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, ctype, String::from_utf8(bytes.to_vec()).unwrap())
}

fn value(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

const SMALL: &str = r#"{"formatVersion": "1",
  "deformed": [[0, 0], [1, 0.7], [2, 0.4], [3.1, 1.9], [4, 1]],
  "ideal": [[0, 0], [1, 0.5], [2, 0.8], [3, 1.5], [4, 1]],
  "metadata": {"patient": "anon-7"}}"#;

#[tokio::test]
async fn upload_list_and_fetch_cases() {
    let app = app();
    let (status, _, body) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let created = value(&body);
    let id = created["id"].as_str().unwrap().to_owned();
    assert_eq!(id, Case::from_json(SMALL).unwrap().id());
    assert_eq!(created["deformedPoints"], 5);
    assert_eq!(created["metadata"]["patient"], "anon-7");

    // uploading twice is idempotent
    let (status, _, _) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, _, body) = call(&app, "GET", "/cases", None).await;
    assert_eq!(value(&body).as_array().unwrap().len(), 1);

    let (status, _, body) = call(&app, "GET", &format!("/cases/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        Case::from_json(&body).unwrap(),
        Case::from_json(SMALL).unwrap()
    );
    let (status, _, _) = call(&app, "GET", "/cases/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_requests_are_rejected() {
    let app = app();
    let (status, _, body) = call(
        &app,
        "POST",
        "/cases",
        Some(SMALL.replace("\"1\"", "\"9\"")),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(value(&body)["error"], "validation");
    let (status, _, _) = call(&app, "POST", "/cases", Some("{".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, _, body) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    let req = json!({"caseId": id, "k": 1, "delta": 1.0, "alpha": 1.5}).to_string();
    let (status, _, body) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(value(&body)["field"], "alpha");
    let req = json!({"caseId": id, "k": 1, "delta": 1.0}).to_string();
    let (status, _, _) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let req = json!({"caseId": "missing", "k": 1, "delta": 1.0, "alpha": 0.3}).to_string();
    let (status, _, _) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = call(&app, "GET", "/plans/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let req = json!({"caseId": id, "k": 4, "delta": 1.0, "alpha": 0.3, "mode": "rearrangement"})
        .to_string();
    let (status, _, body) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn solve_stores_plan_and_renders_it() {
    let app = app();
    let (_, _, body) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    let req = json!({"caseId": id, "k": 2, "delta": 0.5, "alpha": 1.0}).to_string();
    let (status, ctype, body) = call(&app, "POST", "/solve", Some(req.clone())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(ctype, "application/json");
    let plan = PlanFile::from_json(&body).unwrap();
    let case = Case::from_json(SMALL).unwrap();
    plan.validate_for(&case).unwrap();

    // a repeated solve returns the stored plan unchanged
    let (_, _, again) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(again, body);

    let (status, _, fetched) = call(&app, "GET", &format!("/plans/{}", plan.id), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(PlanFile::from_json(&fetched).unwrap(), plan);

    let (status, ctype, svg) = call(&app, "GET", &format!("/plans/{}/svg", plan.id), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "image/svg+xml");
    assert_eq!(svg, plan_svg(&case, Some(&plan)).unwrap());
}

#[tokio::test]
async fn infeasible_solve_is_unprocessable() {
    let app = app();
    let far = r#"{"formatVersion": "1", "deformed": [[0, 0], [5, 1], [10, 0]], "ideal": [[0, 0], [0.5, 0.1], [1, 0]]}"#;
    let (_, _, body) = call(&app, "POST", "/cases", Some(far.into())).await;
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    let req = json!({"caseId": id, "k": 0, "delta": 1.0, "alpha": 0.3}).to_string();
    let (status, _, body) = call(&app, "POST", "/solve", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let body = value(&body);
    assert_eq!(body["error"], "infeasible");
    assert_eq!(body["caseId"], id.as_str());
    assert_eq!(body["params"]["k"], 0);
}

#[tokio::test]
async fn sweep_streams_one_record_per_cut_count() {
    let app = app();
    let (status, _, body) = call(
        &app,
        "POST",
        "/synth",
        Some(json!({"bucket": "extreme", "seed": 2}).to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    assert_eq!(
        id,
        Case::from_synth(&synth_case(Bucket::Extreme, 2).unwrap()).id()
    );

    let req = json!({"caseId": id, "kmax": 3, "delta": 1e6, "alpha": 0.3}).to_string();
    let (status, ctype, body) = call(&app, "POST", "/sweep", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "application/x-ndjson");
    let rows: Vec<SweepRecord> = body
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), [0, 1, 2, 3]);
    for pair in rows.windows(2) {
        if let (Some(a), Some(b)) = (pair[0].best_at_most, pair[1].best_at_most) {
            assert!(b <= a);
        }
    }
    // every streamed plan can be fetched afterwards
    for plan in rows.iter().filter_map(|r| r.plan.as_ref()) {
        let (status, _, _) = call(&app, "GET", &format!("/plans/{}", plan.id), None).await;
        assert_eq!(status, StatusCode::OK);
    }
}

#[tokio::test]
async fn rearrangement_sweep_on_a_small_case() {
    let app = app();
    let (_, _, body) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    let req = json!({"caseId": id, "kmax": 2, "delta": 0.5, "alpha": 1.0, "mode": "rearrangement"})
        .to_string();
    let (status, _, body) = call(&app, "POST", "/sweep", Some(req)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body.lines().count(), 3);

    // exhaustive search refuses full-size cases
    let (_, _, body) = call(
        &app,
        "POST",
        "/synth",
        Some(json!({"bucket": "metopic", "seed": 0}).to_string()),
    )
    .await;
    let big = value(&body)["id"].as_str().unwrap().to_owned();
    let req =
        json!({"caseId": big, "kmax": 1, "delta": 0.5, "alpha": 1.0, "mode": "rearrangement"})
            .to_string();
    let (status, _, body) = call(&app, "POST", "/sweep", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(value(&body)["message"]
        .as_str()
        .unwrap()
        .contains("too large"));
}

#[tokio::test]
async fn persisted_plans_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(Arc::new(Store::open(dir.path()).unwrap()));
    let (_, _, body) = call(&app, "POST", "/cases", Some(SMALL.into())).await;
    let id = value(&body)["id"].as_str().unwrap().to_owned();
    let req = json!({"caseId": id, "k": 1, "delta": 0.5, "alpha": 1.0}).to_string();
    let (_, _, plan) = call(&app, "POST", "/solve", Some(req)).await;
    let plan_id = value(&plan)["id"].as_str().unwrap().to_owned();
    drop(app);

    let app = router(Arc::new(Store::open(dir.path()).unwrap()));
    let (status, _, fetched) = call(&app, "GET", &format!("/plans/{plan_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fetched, plan);
    let (status, _, _) = call(&app, "GET", &format!("/plans/{plan_id}/svg"), None).await;
    assert_eq!(status, StatusCode::OK);
}

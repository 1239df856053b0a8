//! HTTP service over the solver and the store.
//!
//! JSON in, JSON out; `POST /sweep` answers with newline-delimited JSON,
//! one record per cut count. Solves run on the blocking pool.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bandeau_core::format::solve_case;
use bandeau_core::{
    plan_svg, sweep_case, synth_case, Bucket, Case, CaseMetadata, Error, Mode, SolveParams, Solved,
    SweepParams,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::mpsc;

use crate::store::Store;

pub type AppState = Arc<Store>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/cases", post(upload_case).get(list_cases))
        .route("/cases/{id}", get(get_case))
        .route("/solve", post(solve))
        .route("/sweep", post(sweep))
        .route("/synth", post(synth))
        .route("/plans/{id}", get(get_plan))
        .route("/plans/{id}/svg", get(get_plan_svg))
        .with_state(store)
}

/// Error responses: `{"error": kind, "message": ...}` plus extra fields.
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": kind, "message": message.into() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no {what} with id {id}"),
        )
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Io { .. } => Self::internal(e),
            Error::Validation { field, message } => Self {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "error": "validation", "field": field, "message": message }),
            },
            _ => Self::new(StatusCode::BAD_REQUEST, "validation", e.to_string()),
        }
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        Self::internal(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "validation",
            format!(
                "request body (line {}, column {}): {e}",
                e.line(),
                e.column()
            ),
        )
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CaseSummary {
    id: String,
    deformed_points: usize,
    ideal_points: usize,
    metadata: CaseMetadata,
}

fn summary(id: String, case: &Case) -> CaseSummary {
    CaseSummary {
        id,
        deformed_points: case.deformed.len(),
        ideal_points: case.ideal.len(),
        metadata: case.metadata.clone(),
    }
}

async fn upload_case(State(store): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "validation", "body is not UTF-8"))?;
    let case = Case::from_json(text)?;
    let (id, case) = store.insert_case(case)?;
    Ok((StatusCode::CREATED, Json(summary(id, &case))).into_response())
}

async fn list_cases(State(store): State<AppState>) -> Json<Vec<CaseSummary>> {
    Json(
        store
            .cases()
            .into_iter()
            .map(|(id, c)| summary(id, &c))
            .collect(),
    )
}

async fn get_case(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let case = store
        .case(&id)
        .ok_or_else(|| ApiError::not_found("case", &id))?;
    Ok(json_text(StatusCode::OK, case.to_json()))
}

fn json_text(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SolveRequest {
    case_id: String,
    k: usize,
    delta: f64,
    alpha: f64,
    #[serde(default)]
    mode: Mode,
}

async fn solve(State(store): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SolveRequest = parse_body(&body)?;
    let case = store
        .case(&req.case_id)
        .ok_or_else(|| ApiError::not_found("case", &req.case_id))?;
    let params = SolveParams {
        k: req.k,
        delta: req.delta,
        alpha: req.alpha,
        mode: req.mode,
    };
    params.validate()?;
    let id = bandeau_core::format::plan_id(&req.case_id, &params);
    if let Some(plan) = store.plan(&id) {
        return Ok(json_text(StatusCode::OK, plan.to_json()));
    }
    let solved = tokio::task::spawn_blocking(move || solve_case(&case, params))
        .await
        .map_err(ApiError::internal)??;
    match solved {
        Solved::Plan(plan) => {
            let plan = store.insert_plan(plan)?;
            Ok(json_text(StatusCode::OK, plan.to_json()))
        }
        Solved::Infeasible { case_id, params } => Ok((
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({
                "error": "infeasible",
                "message": "no plan has finite cost for these parameters",
                "caseId": case_id,
                "params": params,
            })),
        )
            .into_response()),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SweepRequest {
    case_id: String,
    kmax: usize,
    delta: f64,
    alpha: f64,
    #[serde(default)]
    mode: Mode,
}

async fn sweep(State(store): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SweepRequest = parse_body(&body)?;
    let case = store
        .case(&req.case_id)
        .ok_or_else(|| ApiError::not_found("case", &req.case_id))?;
    let params = SweepParams {
        kmax: req.kmax,
        delta: req.delta,
        alpha: req.alpha,
        mode: req.mode,
    };
    params.at(0).validate()?;
    if params.mode == Mode::Rearrangement {
        // tiny by construction; run it whole so size-guard errors get a status
        let rows = tokio::task::spawn_blocking(move || {
            let mut rows = Vec::new();
            sweep_case(&case, params, |r| rows.push(r)).map(|_| rows)
        })
        .await
        .map_err(ApiError::internal)??;
        let mut body = String::new();
        for mut record in rows {
            if let Some(plan) = record.plan.take() {
                record.plan = Some((*store.insert_plan(plan)?).clone());
            }
            body += &(serde_json::to_string(&record).expect("record serializes") + "\n");
        }
        return Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response());
    }

    let (tx, rx) = mpsc::channel::<String>(16);
    tokio::task::spawn_blocking(move || {
        let result = sweep_case(&case, params, |mut record| {
            if let Some(plan) = record.plan.take() {
                match store.insert_plan(plan) {
                    Ok(p) => record.plan = Some((*p).clone()),
                    Err(e) => {
                        let _ = tx.blocking_send(error_line(&e.to_string()));
                        return;
                    }
                }
            }
            let line = serde_json::to_string(&record).expect("record serializes") + "\n";
            let _ = tx.blocking_send(line);
        });
        if let Err(e) = result {
            let _ = tx.blocking_send(error_line(&e.to_string()));
        }
    });
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|line| (Ok::<_, Infallible>(line), rx))
    });
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(stream),
    )
        .into_response())
}

fn error_line(message: &str) -> String {
    json!({ "error": "internal", "message": message }).to_string() + "\n"
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SynthRequest {
    bucket: Bucket,
    seed: u64,
}

async fn synth(State(store): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SynthRequest = parse_body(&body)?;
    let case = tokio::task::spawn_blocking(move || synth_case(req.bucket, req.seed))
        .await
        .map_err(ApiError::internal)??;
    let (id, case) = store.insert_case(Case::from_synth(&case))?;
    Ok((StatusCode::CREATED, Json(summary(id, &case))).into_response())
}

async fn get_plan(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let plan = store
        .plan(&id)
        .ok_or_else(|| ApiError::not_found("plan", &id))?;
    Ok(json_text(StatusCode::OK, plan.to_json()))
}

async fn get_plan_svg(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let plan = store
        .plan(&id)
        .ok_or_else(|| ApiError::not_found("plan", &id))?;
    let case = store
        .case(&plan.case_id)
        .ok_or_else(|| ApiError::not_found("case", &plan.case_id))?;
    let svg = plan_svg(&case, Some(&plan))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

//! Local HTTP service. Every handler is a pure function of its request.
//!
//! | method | path                      | body            | response            |
//! |--------|---------------------------|-----------------|---------------------|
//! | GET    | `/api/v1/health`          |                 | `health`            |
//! | GET    | `/api/v1/scales`          |                 | `scale-list`        |
//! | POST   | `/api/v1/survey/validate` | `survey`        | `survey-validation` |
//! | POST   | `/api/v1/trust`           | `survey`        | `trust-report`      |
//! | POST   | `/api/v1/fcm/step`        | `fcm-request`   | `fcm-state`         |
//! | POST   | `/api/v1/fcm/run`         | `fcm-request`   | `fcm-outcome`       |
//! | POST   | `/api/v1/rules/classify`  | `rules-request` | `predictions`       |
//!
//! `/trust` and `/survey/validate` accept the query parameters `epsilon`,
//! `max_iter`, `cycle_window`, `activation` and `strict_labels`.
//! Failures return an `error` document with a 4xx status for bad input.

use std::collections::BTreeMap;
use std::net::{IpAddr, SocketAddr};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::Query;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use trustmap::document::{
    from_document_str, report_to_string, to_document_string, Document, ModelDocument,
    OutcomeDocument, PredictionsDocument, ScaleDocument, StateDocument,
};
use trustmap::{
    parse_rules, run_inference, InferenceConfig, LinguisticScale, PatientRecord, SurveyResponse,
    TrustError, TrustPipeline,
};

use crate::commands::{classify_records, model_from_document, step_state, Overrides};
use crate::error::{survey_errors, CliError};

// ---- request and response documents ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthDocument {
    pub status: String,
    pub version: String,
}

impl Document for HealthDocument {
    const KIND: &'static str = "health";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleListDocument {
    pub scales: Vec<ScaleDocument>,
}

impl Document for ScaleListDocument {
    const KIND: &'static str = "scale-list";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Dotted path into the survey, e.g. `ratings.C4` or `influences[2].label`.
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationDocument {
    pub valid: bool,
    pub errors: Vec<ValidationIssue>,
}

impl Document for ValidationDocument {
    const KIND: &'static str = "survey-validation";
}

/// An inline model plus its initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRequest {
    pub model: ModelDocument,
    pub state: BTreeMap<String, f64>,
    #[serde(default)]
    pub config: InferenceConfig,
    #[serde(default)]
    pub strict_labels: bool,
}

impl Document for InferenceRequest {
    const KIND: &'static str = "fcm-request";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordInput {
    pub record_id: String,
    pub features: BTreeMap<String, f64>,
}

/// Rule text in the rules language plus the records to classify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesRequest {
    pub rules: String,
    pub records: Vec<RecordInput>,
    #[serde(default = "yes")]
    pub explain: bool,
}

fn yes() -> bool {
    true
}

impl Document for RulesRequest {
    const KIND: &'static str = "rules-request";
}

// ---- plumbing ----

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn status_of(e: &CliError) -> StatusCode {
    match e {
        CliError::Input { code, .. } => match *code {
            "malformed-document" | "unsupported-version" | "wrong-kind" | "bad-request" => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        },
        CliError::Io { .. } | CliError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn reply(result: Result<String, CliError>) -> Response {
    match result {
        Ok(body) => json(StatusCode::OK, body),
        Err(e) => json(status_of(&e), e.to_document_string()),
    }
}

fn decode<T: Document>(body: &Bytes) -> Result<T, CliError> {
    let text = std::str::from_utf8(body)
        .map_err(|e| CliError::input("malformed-document", format!("request body: {e}")))?;
    from_document_str(text).map_err(|e| CliError::from(e).context("request body"))
}

fn overrides(q: Result<Query<Overrides>, QueryRejection>) -> Result<Overrides, CliError> {
    q.map(|Query(o)| o)
        .map_err(|e| CliError::input("bad-request", format!("query string: {}", e.body_text())))
}

// ---- handlers ----

pub fn health() -> String {
    to_document_string(&HealthDocument {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

pub fn scales() -> String {
    to_document_string(&ScaleListDocument {
        scales: vec![
            ScaleDocument::from_scale(&LinguisticScale::rating()),
            ScaleDocument::from_scale(&LinguisticScale::influence()),
        ],
    })
}

pub fn validate_survey(body: &Bytes, o: &Overrides) -> Result<String, CliError> {
    let survey: SurveyResponse = decode(body)?;
    let pipeline = o.pipeline(TrustPipeline::default());
    let errors: Vec<ValidationIssue> = pipeline
        .validate(&survey)
        .into_iter()
        .map(|e| ValidationIssue {
            field: match &e {
                TrustError::Label { field, .. } | TrustError::MalformedSurvey { field, .. } => {
                    Some(field.clone())
                }
                _ => None,
            },
            message: e.to_string(),
        })
        .collect();
    Ok(to_document_string(&ValidationDocument {
        valid: errors.is_empty(),
        errors,
    }))
}

pub fn quantify(body: &Bytes, o: &Overrides) -> Result<String, CliError> {
    let survey: SurveyResponse = decode(body)?;
    let pipeline = o.pipeline(TrustPipeline::default());
    let config = o.config(InferenceConfig::default())?;
    if let Some(e) = survey_errors(pipeline.validate(&survey)) {
        return Err(e);
    }
    let report = pipeline.quantify(&survey, &config)?;
    Ok(report_to_string(&report))
}

fn inference_inputs(
    body: &Bytes,
) -> Result<(trustmap::FcmModel, trustmap::StateVector, InferenceConfig), CliError> {
    let req: InferenceRequest = decode(body)?;
    let mode = if req.strict_labels {
        trustmap::LabelMatch::Strict
    } else {
        trustmap::LabelMatch::Normalized
    };
    let model = model_from_document(&req.model, &LinguisticScale::influence(), mode)
        .map_err(|e| e.context("model"))?;
    let state = StateDocument { values: req.state }
        .to_state(&model)
        .map_err(|e| CliError::from(e).context("state"))?;
    req.config.validate()?;
    Ok((model, state, req.config))
}

pub fn fcm_step(body: &Bytes) -> Result<String, CliError> {
    let (model, state, _) = inference_inputs(body)?;
    let next = step_state(&model, &state)?;
    Ok(to_document_string(&StateDocument::from_state(&model, &next)))
}

pub fn fcm_run(body: &Bytes) -> Result<String, CliError> {
    let (model, state, config) = inference_inputs(body)?;
    let outcome = run_inference(&model, &state, &config)?;
    Ok(to_document_string(&OutcomeDocument::new(&model, &outcome)))
}

pub fn rules_classify(body: &Bytes) -> Result<String, CliError> {
    let req: RulesRequest = decode(body)?;
    let rules = parse_rules(&req.rules).map_err(|e| CliError::from(e).context("rules"))?;
    let records = req
        .records
        .into_iter()
        .map(|r| PatientRecord::new(r.record_id, r.features))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::from(e).context("records"))?;
    let doc: PredictionsDocument = classify_records(&rules, &records, req.explain)?;
    Ok(to_document_string(&doc))
}

pub fn router() -> Router {
    Router::new()
        .route("/api/v1/health", get(|| async { json(StatusCode::OK, health()) }))
        .route("/api/v1/scales", get(|| async { json(StatusCode::OK, scales()) }))
        .route(
            "/api/v1/survey/validate",
            post(|q: Result<Query<Overrides>, QueryRejection>, body: Bytes| async move {
                reply(overrides(q).and_then(|o| validate_survey(&body, &o)))
            }),
        )
        .route(
            "/api/v1/trust",
            post(|q: Result<Query<Overrides>, QueryRejection>, body: Bytes| async move {
                reply(overrides(q).and_then(|o| quantify(&body, &o)))
            }),
        )
        .route("/api/v1/fcm/step", post(|body: Bytes| async move { reply(fcm_step(&body)) }))
        .route("/api/v1/fcm/run", post(|body: Bytes| async move { reply(fcm_run(&body)) }))
        .route(
            "/api/v1/rules/classify",
            post(|body: Bytes| async move { reply(rules_classify(&body)) }),
        )
        .fallback(|uri: axum::http::Uri| async move {
            let e = CliError::input("not-found", format!("no endpoint at {}", uri.path()));
            json(StatusCode::NOT_FOUND, e.to_document_string())
        })
}

/// Refuse non-loopback addresses unless explicitly allowed.
pub fn check_bind(ip: IpAddr, allow_remote: bool) -> Result<(), CliError> {
    if ip.is_loopback() || allow_remote {
        Ok(())
    } else {
        Err(CliError::input(
            "remote-bind",
            format!("refusing to bind {ip}: the service has no authentication; pass --allow-remote to override"),
        ))
    }
}

pub async fn serve(addr: SocketAddr, allow_remote: bool) -> Result<(), CliError> {
    check_bind(addr.ip(), allow_remote)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::Io {
            path: addr.to_string().into(),
            source: e,
        })?;
    let local = listener.local_addr().map_err(|e| CliError::io(addr.to_string(), e))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::io(local.to_string(), e))
}

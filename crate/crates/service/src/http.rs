use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{middleware, Json, Router};
use serde::Deserialize;

use argbank::automation::AutomationError;
use argbank::tagger::{EvalConfig, ReliabilityPolicy, TaggerError, Variant};

use crate::service::{AnnotationService, ServiceError};
use crate::wire::{
    CommandEnvelope, ErrorBody, SuggestRequest, TrainRequest, SCHEMA_HEADER, SCHEMA_VERSION,
};

type Shared = State<Arc<AnnotationService>>;

/// Routes:
///
/// - `GET /sentences`
/// - `GET /sentence/{id}`
/// - `POST /sentence/{id}/command`
/// - `POST /sentence/{id}/suggest`
/// - `POST /train`
/// - `GET /eval-report`
/// - `GET /render/{id}` (SVG)
pub fn router(service: Arc<AnnotationService>) -> Router {
    Router::new()
        .route("/sentences", get(list))
        .route("/sentence/{id}", get(sentence))
        .route("/sentence/{id}/command", post(command))
        .route("/sentence/{id}/suggest", post(suggest))
        .route("/train", post(train))
        .route("/eval-report", get(eval_report))
        .route("/render/{id}", get(render))
        .layer(middleware::map_response(schema_header))
        .with_state(service)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, service: Arc<AnnotationService>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}

async fn schema_header(mut res: Response) -> Response {
    res.headers_mut()
        .insert(SCHEMA_HEADER, HeaderValue::from(SCHEMA_VERSION));
    res
}

/// An error as sent to clients.
#[derive(Debug)]
pub struct ApiError(StatusCode, ErrorBody);

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError(
            status,
            ErrorBody {
                schema_version: SCHEMA_VERSION,
                error: error.to_string(),
                message: message.into(),
                current_revision: None,
                violations: Vec::new(),
            },
        )
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let message = e.to_string();
        match e {
            ServiceError::UnknownSentence(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_sentence", message)
            }
            ServiceError::StaleRevision { current, .. } => {
                let mut err = ApiError::new(StatusCode::CONFLICT, "stale_revision", message);
                err.1.current_revision = Some(current);
                err
            }
            ServiceError::Refused { violations, .. } => {
                let mut err =
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "command_refused", message);
                err.1.violations = violations;
                err
            }
            ServiceError::BadRequest(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
            }
            ServiceError::NoModel => {
                ApiError::new(StatusCode::PRECONDITION_FAILED, "no_model", message)
            }
            ServiceError::Automation(AutomationError::UnsupportedLevel(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unsupported_level", message)
            }
            ServiceError::Automation(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_selection", message)
            }
            ServiceError::Tagger(TaggerError::NoModel) => {
                ApiError::new(StatusCode::PRECONDITION_FAILED, "no_model", message)
            }
            ServiceError::Tagger(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "tagger_error", message)
            }
            ServiceError::Store(_) | ServiceError::Model { .. } => {
                log::error!("{message}");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", message)
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type Reply<T> = Result<Json<T>, ApiError>;

/// Runs blocking work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            e.to_string(),
        )),
    }
}

async fn list(State(s): Shared) -> impl IntoResponse {
    Json(s.list())
}

async fn sentence(State(s): Shared, Path(id): Path<String>) -> Reply<crate::wire::SentenceView> {
    Ok(Json(s.sentence(&id)?))
}

async fn command(
    State(s): Shared,
    Path(id): Path<String>,
    body: Result<Json<CommandEnvelope>, JsonRejection>,
) -> Reply<crate::wire::CommandResponse> {
    let Json(envelope) = body?;
    let r = blocking(move || s.apply_command(&id, &envelope)).await?;
    Ok(Json(r))
}

async fn suggest(
    State(s): Shared,
    Path(id): Path<String>,
    body: Result<Json<SuggestRequest>, JsonRejection>,
) -> Reply<crate::wire::SuggestionResponse> {
    let Json(req) = body?;
    let r = blocking(move || s.suggest(&id, &req)).await?;
    Ok(Json(r))
}

async fn train(
    State(s): Shared,
    body: Result<Json<TrainRequest>, JsonRejection>,
) -> Reply<crate::wire::TrainResponse> {
    let Json(req) = body?;
    let r = blocking(move || s.train(&req)).await?;
    Ok(Json(r))
}

/// Query parameters of `GET /eval-report`. `target` selects a calibrated
/// threshold, `threshold` a fixed one; they are exclusive.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalQuery {
    pub repetitions: Option<usize>,
    pub train_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub threshold: Option<f64>,
    pub target: Option<f64>,
    pub heldout_fraction: Option<f64>,
}

impl EvalQuery {
    pub fn config(&self) -> Result<EvalConfig, ServiceError> {
        let d = EvalConfig::default();
        let reliability = match (self.threshold, self.target) {
            (Some(_), Some(_)) => {
                return Err(ServiceError::BadRequest(
                    "give either threshold or target, not both".into(),
                ))
            }
            (_, Some(target)) => ReliabilityPolicy::Calibrate {
                target,
                heldout_fraction: self.heldout_fraction.unwrap_or(0.1),
            },
            (Some(t), None) => ReliabilityPolicy::Fixed(t),
            (None, None) => d.reliability,
        };
        Ok(EvalConfig {
            repetitions: self.repetitions.unwrap_or(d.repetitions),
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            seed: self.seed.unwrap_or(d.seed),
            variant: self.variant.unwrap_or(d.variant),
            smoothing: d.smoothing,
            reliability,
        })
    }
}

async fn eval_report(
    State(s): Shared,
    query: Result<Query<EvalQuery>, QueryRejection>,
) -> Reply<crate::wire::EvalResponse> {
    let Query(q) = query?;
    let r = blocking(move || s.evaluate(&q.config()?)).await?;
    Ok(Json(r))
}

async fn render(State(s): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let svg = s.render(&id)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

//! HTTP/JSON service answering predictions from a pair of trained models.
//!
//! Models load in the background after the listener is bound. Until both are
//! in place `/api/health` reports `loading` and `/api/predict` answers 503.
//! Once installed the models are never replaced.

use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use juri_core::api::{ErrorBody, HealthResponse, ModelInfo, ModelInfoResponse, PredictError};
use juri_core::persist::{file_hash, load_model, PersistError};
use juri_core::Predictor;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub const MAX_BODY_BYTES: usize = 64 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Persist { path: PathBuf, source: PersistError },
    #[error(transparent)]
    Predict(#[from] PredictError),
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("models already installed")]
    AlreadyLoaded,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Both models plus what the info endpoints report about them.
#[derive(Debug)]
pub struct LoadedModels {
    pub predictor: Predictor,
    pub info: ModelInfoResponse,
    pub loaded_at: SystemTime,
}

impl LoadedModels {
    pub fn new(predictor: Predictor, decision_hash: &str, unanimity_hash: &str) -> Self {
        let info = ModelInfoResponse {
            decision: ModelInfo::describe(predictor.decision(), decision_hash),
            unanimity: ModelInfo::describe(predictor.unanimity(), unanimity_hash),
        };
        LoadedModels { predictor, info, loaded_at: SystemTime::now() }
    }
}

/// Reads and verifies both model files.
pub fn load_models(decision_path: &Path, unanimity_path: &Path) -> Result<LoadedModels, LoadError> {
    let read = |path: &Path| {
        let bytes = std::fs::read(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
        let bundle = load_model(&bytes).map_err(|source| LoadError::Persist { path: path.to_path_buf(), source })?;
        Ok::<_, LoadError>((bundle, file_hash(&bytes)))
    };
    let (decision, decision_hash) = read(decision_path)?;
    let (unanimity, unanimity_hash) = read(unanimity_path)?;
    let predictor = Predictor::new(decision, unanimity)?;
    Ok(LoadedModels::new(predictor, &decision_hash, &unanimity_hash))
}

#[derive(Debug, Default)]
pub struct ServiceState {
    models: OnceLock<LoadedModels>,
}

impl ServiceState {
    pub fn loading() -> Arc<Self> {
        Arc::new(ServiceState::default())
    }

    pub fn ready(models: LoadedModels) -> Arc<Self> {
        let state = ServiceState::default();
        let _ = state.models.set(models);
        Arc::new(state)
    }

    /// Installs the models; fails if some were installed already.
    pub fn install(&self, models: LoadedModels) -> Result<(), ServeError> {
        self.models.set(models).map_err(|_| ServeError::AlreadyLoaded)
    }

    pub fn models(&self) -> Option<&LoadedModels> {
        self.models.get()
    }
}

pub type SharedState = Arc<ServiceState>;

pub fn router(state: SharedState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/predict", post(predict))
        .route("/api/health", get(health))
        .route("/api/model-info", get(model_info))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub struct ServeOptions {
    pub decision_model: PathBuf,
    pub unanimity_model: PathBuf,
    pub static_dir: Option<PathBuf>,
}

/// Serves on `listener` while the models load in the background. Returns
/// early with the load error if either model file is unusable.
pub async fn serve<F>(listener: TcpListener, options: ServeOptions, shutdown: F) -> Result<(), ServeError>
where
    F: Future<Output = ()> + Send + 'static,
{
    let state = ServiceState::loading();
    let app = router(state.clone(), options.static_dir.as_deref());
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    let server = axum::serve(listener, app).with_graceful_shutdown(shutdown);

    let (decision, unanimity) = (options.decision_model, options.unanimity_model);
    let loader = tokio::task::spawn_blocking(move || load_models(&decision, &unanimity));
    let loader = async move {
        let models = loader.await.map_err(std::io::Error::other)??;
        tracing::info!(
            decision = %models.info.decision.file_hash,
            unanimity = %models.info.unanimity.file_hash,
            "models loaded"
        );
        state.install(models)?;
        std::future::pending::<Result<(), ServeError>>().await
    };

    tokio::select! {
        served = server => Ok(served?),
        failed = loader => failed,
    }
}

/// Serves an already built router until the listener fails.
pub async fn serve_router(listener: TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    let body = ErrorBody { error: code.to_string(), message: message.into() };
    (status, Json(body)).into_response()
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "models_loading", "models are not loaded yet")
}

async fn predict(State(state): State<SharedState>, body: Result<Bytes, BytesRejection>) -> Response {
    let body = match body {
        Ok(body) => body,
        Err(rejection) if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                "body_too_large",
                format!("request body exceeds {MAX_BODY_BYTES} bytes"),
            );
        }
        Err(rejection) => return error(rejection.status(), "bad_body", rejection.body_text()),
    };
    let Some(models) = state.models() else {
        return not_loaded();
    };
    let value: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(value) => value,
        Err(e) => return error(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()),
    };
    let Some(description) = value.get("description").and_then(|d| d.as_str()) else {
        return error(StatusCode::BAD_REQUEST, "missing_description", "missing description");
    };
    match models.predictor.predict(description) {
        Ok(response) => Json(response).into_response(),
        Err(PredictError::EmptyDescription) => {
            error(StatusCode::BAD_REQUEST, "empty_description", PredictError::EmptyDescription.to_string())
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "model_error", e.to_string()),
    }
}

async fn health(State(state): State<SharedState>) -> Json<HealthResponse> {
    let response = match state.models() {
        Some(models) => HealthResponse {
            status: "ok".into(),
            decision_model_hash: Some(models.info.decision.file_hash.clone()),
            unanimity_model_hash: Some(models.info.unanimity.file_hash.clone()),
        },
        None => HealthResponse { status: "loading".into(), decision_model_hash: None, unanimity_model_hash: None },
    };
    Json(response)
}

async fn model_info(State(state): State<SharedState>) -> Response {
    match state.models() {
        Some(models) => Json(models.info.clone()).into_response(),
        None => not_loaded(),
    }
}

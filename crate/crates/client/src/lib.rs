//! Thin async client for the prediction service.

use juri_core::api::{ErrorBody, HealthResponse, ModelInfoResponse, PredictRequest, PredictResponse};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server answered {status}: {} ({})", body.message, body.error)]
    Api { status: u16, body: ErrorBody },
    #[error("server answered {status}: {text}")]
    Status { status: u16, text: String },
}

impl ClientError {
    /// HTTP status of an error response, if the server answered at all.
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Transport(e) => e.status().map(|s| s.as_u16()),
            ClientError::Api { status, .. } | ClientError::Status { status, .. } => Some(*status),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base_url: &str) -> Self {
        Client { base: base_url.trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub async fn predict(&self, description: &str) -> Result<PredictResponse, ClientError> {
        let request = PredictRequest { description: description.to_string() };
        let response = self.http.post(self.url("/api/predict")).json(&request).send().await?;
        decode(response).await
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        decode(self.http.get(self.url("/api/health")).send().await?).await
    }

    pub async fn model_info(&self) -> Result<ModelInfoResponse, ClientError> {
        decode(self.http.get(self.url("/api/model-info")).send().await?).await
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> Result<T, ClientError> {
    let status = response.status();
    if status.is_success() {
        return Ok(response.json().await?);
    }
    let text = response.text().await?;
    match serde_json::from_str::<ErrorBody>(&text) {
        Ok(body) => Err(ClientError::Api { status: status.as_u16(), body }),
        Err(_) => Err(ClientError::Status { status: status.as_u16(), text }),
    }
}

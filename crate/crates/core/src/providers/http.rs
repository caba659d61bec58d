//! Generic HTTP adapter: one in-house manifest protocol over `POST /invoke`.

use std::time::Duration;

use async_trait::async_trait;

use super::{CapabilityHandler, HandlerCall, ProviderError};
use crate::canonical;
use crate::media::SynthMedia;

/// Longest remote error body kept in [`ProviderError::Remote`].
pub const BODY_EXCERPT_CHARS: usize = 256;

#[derive(Debug, Clone)]
pub struct HttpProvider {
    base_url: String,
    client: reqwest::Client,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .unwrap_or_default();
        HttpProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            client,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Sends the call and validates the returned manifest.
    pub async fn dispatch(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        let body = canonical::value_to_string(&call.to_wire());
        let response = self
            .client
            .post(format!("{}/invoke", self.base_url))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if status != reqwest::StatusCode::OK {
            return Err(ProviderError::Remote {
                status: status.as_u16(),
                body: text.chars().take(BODY_EXCERPT_CHARS).collect(),
            });
        }
        let media: SynthMedia =
            serde_json::from_str(&text).map_err(|e| ProviderError::InvalidRemoteManifest(e.to_string()))?;
        media
            .validate()
            .map_err(|e| ProviderError::InvalidRemoteManifest(e.to_string()))?;
        Ok(media)
    }
}

#[async_trait]
impl CapabilityHandler for HttpProvider {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        self.dispatch(call).await
    }
}

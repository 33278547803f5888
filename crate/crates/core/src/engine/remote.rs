use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, FinishReason, Generation, GeneratorBackend};

/// Wire request for a hosted decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub source: String,
    pub prefix: String,
    pub max_new_tokens: usize,
}

/// Wire response from a hosted decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// Speaks the generate contract to an HTTP endpoint. Translating the
/// repository's plan markers into checkpoint-specific tokens is up to the
/// server behind the endpoint.
pub struct RemoteBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(RemoteBackend {
            endpoint: endpoint.into(),
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl GeneratorBackend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn generate(
        &self,
        source: &str,
        forced_prefix: &str,
        max_new_tokens: usize,
    ) -> Result<Generation, BackendError> {
        let request = GenerateRequest {
            source: source.to_string(),
            prefix: forced_prefix.to_string(),
            max_new_tokens,
        };
        let response = self
            .client
            .post(&self.endpoint)
            .json(&request)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout
                } else {
                    BackendError::Unavailable(e.to_string())
                }
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Protocol(format!(
                "{} returned {status}",
                self.endpoint
            )));
        }
        let body: GenerateResponse = response
            .json()
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        Ok(Generation {
            text: body.text,
            finish_reason: body.finish_reason,
        })
    }
}

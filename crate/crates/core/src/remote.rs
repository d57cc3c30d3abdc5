//! Blocking JSON-over-HTTP client used by the remote provider and reasoner.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("{url} returned HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("transport error talking to {url}: {msg}")]
    Transport { url: String, msg: String },
    #[error("malformed response from {url}: {msg}")]
    Schema { url: String, msg: String },
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    url: String,
}

impl JsonClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            url: url.into(),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, RemoteError> {
        let url = self.url.clone();
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => RemoteError::Timeout { url: url.clone() },
                ureq::Error::StatusCode(status) => RemoteError::Status {
                    url: url.clone(),
                    status,
                },
                other => RemoteError::Transport {
                    url: url.clone(),
                    msg: other.to_string(),
                },
            })?;
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => RemoteError::Timeout { url: url.clone() },
            other => RemoteError::Transport {
                url: url.clone(),
                msg: other.to_string(),
            },
        })?;
        serde_json::from_str(&text).map_err(|e| RemoteError::Schema {
            url,
            msg: e.to_string(),
        })
    }
}

/// Appends `path` to a base URL unless it already ends with it.
pub(crate) fn endpoint_url(base: &str, path: &str) -> String {
    let trimmed = base.trim_end_matches('/');
    if trimmed.ends_with(path) {
        trimmed.to_string()
    } else {
        format!("{trimmed}{path}")
    }
}

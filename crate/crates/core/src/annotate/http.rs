//! Chat-completions style HTTP endpoint.
//!
//! Request: `POST {url}` with `Authorization: Bearer {key}` and body
//! `{"model", "temperature": 0, "messages": [system, user]}` where the user
//! message content is `[{"type":"text"}, {"type":"image_url"} x 2]`, images
//! inlined as `data:image/png;base64,...` URLs (real first). Reply:
//! `choices[0].message.content` as a string.

use std::path::PathBuf;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{AnnotateError, AnnotationEndpoint, PromptBundle};

pub const ENV_URL: &str = "ANNOTATE_ENDPOINT_URL";
pub const ENV_KEY: &str = "ANNOTATE_API_KEY";
pub const ENV_MODEL: &str = "ANNOTATE_MODEL_NAME";

#[derive(Debug, Clone)]
pub struct HttpEndpointConfig {
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    /// Directory that relative image refs resolve against.
    pub image_root: PathBuf,
}

impl HttpEndpointConfig {
    pub fn from_env(image_root: PathBuf, timeout: Duration) -> Result<Self, AnnotateError> {
        let url = std::env::var(ENV_URL).map_err(|_| AnnotateError::Config(format!("{ENV_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| AnnotateError::Config(format!("{ENV_MODEL} is not set")))?;
        let api_key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Ok(HttpEndpointConfig { url, api_key, model, timeout, image_root })
    }
}

pub struct HttpEndpoint {
    config: HttpEndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(config: HttpEndpointConfig) -> Result<Self, AnnotateError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| AnnotateError::Config(e.to_string()))?;
        Ok(HttpEndpoint { config, client })
    }

    pub fn request_body(&self, prompt: &PromptBundle, repair: Option<&str>) -> Result<Value, AnnotateError> {
        let mut content = vec![json!({"type": "text", "text": prompt.user_text})];
        for r in &prompt.image_refs {
            let bytes = std::fs::read(self.config.image_root.join(r))
                .map_err(|e| AnnotateError::Config(format!("cannot read image {r}: {e}")))?;
            let b64 = base64::engine::general_purpose::STANDARD.encode(bytes);
            content.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}));
        }
        let mut messages = vec![
            json!({"role": "system", "content": prompt.system_text}),
            json!({"role": "user", "content": content}),
        ];
        if let Some(note) = repair {
            messages.push(json!({"role": "user", "content": note}));
        }
        Ok(json!({"model": self.config.model, "temperature": 0, "messages": messages}))
    }
}

impl AnnotationEndpoint for HttpEndpoint {
    fn complete(&self, prompt: &PromptBundle, repair: Option<&str>) -> Result<String, AnnotateError> {
        let body = self.request_body(prompt, repair)?;
        let mut req = self.client.post(&self.config.url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let unavailable = |e: reqwest::Error| AnnotateError::EndpointUnavailable(e.to_string());
        let resp = req.send().map_err(unavailable)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(AnnotateError::EndpointUnavailable(format!("HTTP {status}")));
        }
        let reply: Value = resp.json().map_err(unavailable)?;
        // A reply without content counts as a malformed answer, not an outage.
        Ok(reply["choices"][0]["message"]["content"].as_str().unwrap_or_default().to_string())
    }
}

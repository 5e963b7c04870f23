use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::client::{ClientError, GenerationClient, GenerationRequest};

/// Bearer token sent with every request when set.
pub const TOKEN_ENV: &str = "TOD_EVAL_API_TOKEN";

/// Body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequestBody {
    pub prompt: String,
    pub max_new_units: usize,
    pub greedy: bool,
}

/// Body of a successful `POST /generate` response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponseBody {
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Retries after the first attempt for 5xx and transport failures.
    pub retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
    pub token: Option<String>,
    pub greedy: bool,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(200),
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            greedy: true,
        }
    }
}

/// Client for the `/generate` + `/healthz` protocol.
pub struct HttpClient {
    config: HttpConfig,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn with_auth(&self, rb: reqwest::blocking::RequestBuilder) -> reqwest::blocking::RequestBuilder {
        match &self.config.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    fn attempt(&self, body: &GenerateRequestBody) -> Result<String, (ClientError, bool)> {
        let url = format!("{}/generate", self.config.base_url);
        let resp = self
            .with_auth(self.http.post(url).json(body))
            .send()
            .map_err(|e| (ClientError::Transport(e.to_string()), true))?;
        let status = resp.status();
        if status.is_success() {
            let parsed: GenerateResponseBody = resp
                .json()
                .map_err(|e| (ClientError::Decode(e.to_string()), false))?;
            return Ok(parsed.text);
        }
        let retryable = status.is_server_error();
        let body = resp.text().unwrap_or_default();
        Err((
            ClientError::Status {
                status: status.as_u16(),
                body,
            },
            retryable,
        ))
    }
}

impl GenerationClient for HttpClient {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, ClientError> {
        let body = GenerateRequestBody {
            prompt: request.prompt.to_string(),
            max_new_units: request.max_new_units,
            greedy: self.config.greedy,
        };
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((err, retryable)) => {
                    if !retryable || attempt >= self.config.retries {
                        return Err(err);
                    }
                    log::debug!(
                        "{}: attempt {} failed ({err}); retrying in {delay:?}",
                        request.example_id,
                        attempt + 1
                    );
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn identity(&self) -> String {
        format!("http:{}", self.config.base_url)
    }

    fn preflight(&self) -> Result<(), ClientError> {
        let url = format!("{}/healthz", self.config.base_url);
        let resp = self
            .with_auth(self.http.get(url))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(ClientError::Status {
                status: resp.status().as_u16(),
                body: resp.text().unwrap_or_default(),
            })
        }
    }
}

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// One generation call. `gold` is only read by the golden mock.
#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub example_id: &'a str,
    pub prompt: &'a str,
    pub max_new_units: usize,
    pub gold: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("bad response body: {0}")]
    Decode(String),
    #[error("no recorded output for example `{0}`")]
    MissingRecording(String),
    #[error("recorded failure: {0}")]
    Recorded(String),
}

/// A text generation backend. Implementations must be callable from many
/// threads at once.
pub trait GenerationClient: Send + Sync {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, ClientError>;

    /// Stable name recorded in the run manifest.
    fn identity(&self) -> String;

    /// Called once before any generation.
    fn preflight(&self) -> Result<(), ClientError> {
        Ok(())
    }
}

/// Echoes the gold target text.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoldenClient;

impl GenerationClient for GoldenClient {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, ClientError> {
        Ok(request.gold.to_string())
    }

    fn identity(&self) -> String {
        "golden".into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Recorded {
    Text(String),
    Failure(String),
}

/// Replays outputs recorded per example id.
///
/// The recording is JSONL; each line has `example_id` and one of `text`,
/// `prediction` or `error` (the last one replays a transport failure).
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    outputs: HashMap<String, Recorded>,
    source: String,
}

#[derive(Deserialize)]
struct RecordingLine {
    example_id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    prediction: Option<String>,
    #[serde(default)]
    error: Option<String>,
}

impl ScriptedClient {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            outputs: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), Recorded::Text(v.into())))
                .collect(),
            source: "inline".into(),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, String> {
        let mut outputs = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordingLine =
                serde_json::from_str(line).map_err(|e| format!("{source}:{}: {e}", i + 1))?;
            let value = match (rec.text.or(rec.prediction), rec.error) {
                (_, Some(err)) => Recorded::Failure(err),
                (Some(t), None) => Recorded::Text(t),
                (None, None) => {
                    return Err(format!(
                        "{source}:{}: needs `text`, `prediction` or `error`",
                        i + 1
                    ))
                }
            };
            if outputs.insert(rec.example_id.clone(), value).is_some() {
                return Err(format!(
                    "{source}:{}: duplicate example id `{}`",
                    i + 1,
                    rec.example_id
                ));
            }
        }
        Ok(Self {
            outputs,
            source: source.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

impl GenerationClient for ScriptedClient {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, ClientError> {
        match self.outputs.get(request.example_id) {
            Some(Recorded::Text(t)) => Ok(t.clone()),
            Some(Recorded::Failure(e)) => Err(ClientError::Recorded(e.clone())),
            None => Err(ClientError::MissingRecording(request.example_id.to_string())),
        }
    }

    fn identity(&self) -> String {
        format!("scripted:{}", self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req<'a>(id: &'a str) -> GenerationRequest<'a> {
        GenerationRequest {
            example_id: id,
            prompt: "p",
            max_new_units: 8,
            gold: "gold text",
        }
    }

    #[test]
    fn golden_echoes() {
        assert_eq!(GoldenClient.generate(&req("x")).unwrap(), "gold text");
    }

    #[test]
    fn scripted_replays_and_fails() {
        let c = ScriptedClient::parse(
            "{\"example_id\":\"a\",\"text\":\"hi\"}\n{\"example_id\":\"b\",\"prediction\":\"yo\"}\n{\"example_id\":\"c\",\"error\":\"boom\"}\n",
            "mem",
        )
        .unwrap();
        assert_eq!(c.generate(&req("a")).unwrap(), "hi");
        assert_eq!(c.generate(&req("b")).unwrap(), "yo");
        assert_eq!(c.generate(&req("c")), Err(ClientError::Recorded("boom".into())));
        assert_eq!(c.generate(&req("d")), Err(ClientError::MissingRecording("d".into())));
    }

    #[test]
    fn scripted_rejects_duplicates() {
        let text = "{\"example_id\":\"a\",\"text\":\"1\"}\n{\"example_id\":\"a\",\"text\":\"2\"}\n";
        assert!(ScriptedClient::parse(text, "mem").is_err());
    }
}

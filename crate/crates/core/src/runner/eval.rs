use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::client::{GenerationClient, GenerationRequest};
use crate::apicall::DEFAULT_FUZZY_THRESHOLD;
use crate::apimetrics::{
    aggregate, is_call_attempt, score_api_turn, AggregateOptions, ApiTurnScore, CallScore,
    MetricReport, ResponseTurn,
};
use crate::corpus::Dataset;
use crate::prompt::{render_prompt, PromptConfig, TemplateSet};
use crate::textmetrics::ScoredPair;
use crate::transform::{Example, ResponseCategory, SplitTag, TargetKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("generation backend unreachable: {0}")]
    ClientUnreachable(String),
    #[error("invalid evaluation config: {0}")]
    ConfigInvalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub prompt: PromptConfig,
    pub fuzzy_threshold: f64,
    /// Maximum in-flight generation calls.
    pub concurrency: usize,
    pub max_new_units: usize,
    pub strict: bool,
    /// Recorded in the manifest only.
    pub train_domains: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            prompt: PromptConfig::default(),
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            concurrency: 8,
            max_new_units: 256,
            strict: false,
            train_domains: Vec::new(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.concurrency == 0 {
            return Err(EvalError::ConfigInvalid("concurrency must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            return Err(EvalError::ConfigInvalid(format!(
                "fuzzy threshold {} is outside [0, 1]",
                self.fuzzy_threshold
            )));
        }
        if self.max_new_units == 0 {
            return Err(EvalError::ConfigInvalid("max_new_units must be positive".into()));
        }
        self.prompt
            .validate()
            .map_err(|e| EvalError::ConfigInvalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ApiCall,
    Response,
}

/// Everything recorded about one evaluated example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: String,
    pub dataset: Dataset,
    pub prompt_hash: String,
    pub prediction: String,
    pub gold: String,
    pub task: TaskKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<ResponseCategory>,
    pub split_tag: SplitTag,
    pub is_multi_domain: bool,
    /// Prediction routed to API scoring.
    pub predicted_call: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_score: Option<CallScore>,
    pub dropped_history: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub client: String,
    pub template_version: String,
    pub config: EvalConfig,
    pub n_examples: usize,
    pub n_errors: usize,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Sorted by example id.
    pub records: Vec<ExampleRecord>,
    pub report: MetricReport,
    pub manifest: RunManifest,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

struct Generated {
    prompt_hash: String,
    dropped: usize,
    outcome: Result<String, String>,
}

fn generate_one(
    example: &Example,
    client: &dyn GenerationClient,
    templates: &TemplateSet,
    config: &EvalConfig,
) -> Generated {
    let rendered = match render_prompt(templates, &example.prompt_context, &config.prompt) {
        Ok(r) => r,
        Err(e) => {
            return Generated {
                prompt_hash: String::new(),
                dropped: 0,
                outcome: Err(format!("prompt: {e}")),
            }
        }
    };
    let request = GenerationRequest {
        example_id: &example.example_id,
        prompt: &rendered.text,
        max_new_units: config.max_new_units,
        gold: &example.target_text,
    };
    Generated {
        prompt_hash: prompt_hash(&rendered.text),
        dropped: rendered.dropped_turns,
        outcome: client.generate(&request).map_err(|e| e.to_string()),
    }
}

fn score_record(example: &Example, g: Generated, threshold: f64) -> ExampleRecord {
    let (prediction, error) = match g.outcome {
        Ok(text) => (text, None),
        Err(e) => (String::new(), Some(e)),
    };
    let predicted_call = error.is_none() && is_call_attempt(&prediction);
    let (task, category, api_score) = match &example.target {
        TargetKind::ApiCall { call } => {
            let score = if error.is_some() {
                score_api_turn(call, "", threshold)
            } else {
                score_api_turn(call, &prediction, threshold)
            };
            (TaskKind::ApiCall, None, Some(score))
        }
        TargetKind::Response { category } => (TaskKind::Response, Some(*category), None),
    };
    ExampleRecord {
        example_id: example.example_id.clone(),
        dataset: example.dataset,
        prompt_hash: g.prompt_hash,
        prediction,
        gold: example.target_text.clone(),
        task,
        category,
        split_tag: example.split_tag,
        is_multi_domain: example.is_multi_domain(),
        predicted_call,
        api_score,
        dropped_history: g.dropped,
        error,
    }
}

/// Aggregate already-scored records.
pub fn report_from_records(records: &[ExampleRecord], strict: bool) -> MetricReport {
    let mut api = Vec::new();
    let mut responses = Vec::new();
    for r in records {
        match (r.task, r.api_score, r.category) {
            (TaskKind::ApiCall, Some(score), _) => api.push(ApiTurnScore {
                example_id: r.example_id.clone(),
                score,
                is_multi_domain: r.is_multi_domain,
                split_tag: r.split_tag,
                dataset: r.dataset,
            }),
            (TaskKind::Response, _, Some(category)) => responses.push(ResponseTurn {
                example_id: r.example_id.clone(),
                pair: ScoredPair {
                    prediction: r.prediction.clone(),
                    reference: r.gold.clone(),
                    category,
                    split_tag: r.split_tag,
                    dataset: r.dataset,
                },
                is_multi_domain: r.is_multi_domain,
                predicted_call: r.predicted_call,
            }),
            _ => log::warn!("record {} has inconsistent task fields; skipped", r.example_id),
        }
    }
    aggregate(&api, &responses, AggregateOptions { strict })
}

/// Generate, score and aggregate. Generation runs on at most
/// `config.concurrency` threads; records come back sorted by example id.
pub fn evaluate(
    examples: &[Example],
    client: &dyn GenerationClient,
    templates: &TemplateSet,
    config: &EvalConfig,
) -> Result<RunResult, EvalError> {
    config.validate()?;
    let started_at = Utc::now().to_rfc3339();
    client
        .preflight()
        .map_err(|e| EvalError::ClientUnreachable(e.to_string()))?;
    if examples.is_empty() {
        log::warn!("empty example set; the report will be empty");
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Generated>>> =
        Mutex::new((0..examples.len()).map(|_| None).collect());
    let workers = config.concurrency.min(examples.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(example) = examples.get(i) else {
                    break;
                };
                let g = generate_one(example, client, templates, config);
                slots.lock().expect("result slots poisoned")[i] = Some(g);
            });
        }
    });

    let generated = slots.into_inner().expect("result slots poisoned");
    let mut records: Vec<ExampleRecord> = examples
        .iter()
        .zip(generated)
        .map(|(e, g)| score_record(e, g.expect("every example generated"), config.fuzzy_threshold))
        .collect();
    records.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    let n_errors = records.iter().filter(|r| r.error.is_some()).count();
    if n_errors > 0 {
        log::warn!("{n_errors} of {} generations failed and were scored as zero", records.len());
    }

    let report = report_from_records(&records, config.strict);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        client: client.identity(),
        template_version: templates.version.clone(),
        config: config.clone(),
        n_examples: records.len(),
        n_errors,
        started_at,
        finished_at: Utc::now().to_rfc3339(),
    };
    Ok(RunResult {
        records,
        report,
        manifest,
    })
}

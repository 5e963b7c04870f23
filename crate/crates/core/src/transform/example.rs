use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::category::{label_turn_category, ResponseCategory};
use super::domain_split::{assign_domain_split, SplitTag, TrainDomains};
use super::split::split_api_turns;
use super::TransformError;
use crate::apicall::{parse_api_call, ApiCall};
use crate::corpus::{Corpus, Dataset, Dialog, DomainSchema, ResultRecord, Speaker, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryRole {
    User,
    System,
    ApiCall,
    ApiResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub role: HistoryRole,
    pub text: String,
}

/// Everything the model may see for one turn: schemas and dialog text, no
/// state or act annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub domains: Vec<String>,
    pub schemas: Vec<DomainSchema>,
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_results: Option<Vec<ResultRecord>>,
    pub last_user_utterance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Response { category: ResponseCategory },
    ApiCall { call: ApiCall },
}

impl TargetKind {
    pub fn is_api_call(&self) -> bool {
        matches!(self, TargetKind::ApiCall { .. })
    }

    pub fn call(&self) -> Option<&ApiCall> {
        match self {
            TargetKind::ApiCall { call } => Some(call),
            TargetKind::Response { .. } => None,
        }
    }

    pub fn category(&self) -> Option<ResponseCategory> {
        match self {
            TargetKind::Response { category } => Some(*category),
            TargetKind::ApiCall { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub example_id: String,
    pub dialog_id: String,
    pub turn_index: usize,
    pub prompt_context: PromptContext,
    pub target: TargetKind,
    pub target_text: String,
    pub split_tag: SplitTag,
    pub dataset: Dataset,
}

impl Example {
    pub fn is_multi_domain(&self) -> bool {
        self.prompt_context.domains.len() > 1
    }

    /// `target_text` must be the serialization of `target`.
    pub fn check_target(&self) -> Result<(), String> {
        match (&self.target, parse_api_call(&self.target_text)) {
            (TargetKind::ApiCall { call }, Ok(Some(parsed))) if &parsed == call => {
                if self.target_text == call.serialize() {
                    Ok(())
                } else {
                    Err("API target text is not in canonical form".into())
                }
            }
            (TargetKind::ApiCall { .. }, _) => Err("API target text does not parse to target".into()),
            (TargetKind::Response { .. }, Ok(None)) if !self.target_text.trim().is_empty() => Ok(()),
            (TargetKind::Response { .. }, _) => {
                Err("response target text is empty or looks like an API call".into())
            }
        }
    }
}

pub fn example_id(dataset: Dataset, split: Split, dialog_id: &str, turn_index: usize) -> String {
    format!("{dataset}:{split}:{dialog_id}:{turn_index:03}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Result records kept per query.
    pub max_results: usize,
    /// Source splits to build examples from.
    pub splits: Vec<Split>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            max_results: 3,
            splits: Split::ALL.to_vec(),
        }
    }
}

/// `name: value` lines, one record per paragraph.
pub fn render_results(records: &[ResultRecord]) -> String {
    records
        .iter()
        .map(|r| {
            r.iter()
                .map(|(k, v)| format!("{k}: {v}"))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn schemas_for<'a>(
    dialog: &Dialog,
    corpus: &'a Corpus,
) -> Result<Vec<&'a DomainSchema>, TransformError> {
    dialog
        .services
        .iter()
        .map(|s| {
            corpus.schema(s).ok_or_else(|| TransformError::UnknownService {
                dialog_id: dialog.dialog_id.clone(),
                service: s.clone(),
            })
        })
        .collect()
}

/// Examples for one dialog: one per system turn of the split dialog.
pub fn dialog_examples(
    dialog: &Dialog,
    corpus: &Corpus,
    train: &TrainDomains,
    config: &BuildConfig,
) -> Result<Vec<Example>, TransformError> {
    let split = split_api_turns(dialog)?;
    let tag = assign_domain_split(dialog, train);
    let schemas: Vec<DomainSchema> = schemas_for(dialog, corpus)?.into_iter().cloned().collect();
    let mut domains: Vec<String> = Vec::new();
    for s in &dialog.services {
        let d = crate::corpus::domain_family(s).to_string();
        if !domains.contains(&d) {
            domains.push(d);
        }
    }

    let mut examples = Vec::new();
    let mut history: Vec<HistoryEntry> = Vec::new();
    // Results of the API-call turns directly preceding the current turn.
    let mut pending: Vec<ResultRecord> = Vec::new();
    let mut pending_history: Vec<HistoryEntry> = Vec::new();
    let mut last_user = String::new();
    let mut system_index = 0usize;
    let mut prev_was_call = false;

    for turn in &split.turns {
        match turn.speaker {
            Speaker::User => {
                history.append(&mut pending_history);
                pending.clear();
                last_user = turn.utterance.clone();
                prev_was_call = false;
                history.push(HistoryEntry {
                    role: HistoryRole::User,
                    text: turn.utterance.clone(),
                });
            }
            Speaker::System => {
                let target = match &turn.call {
                    Some(call) => TargetKind::ApiCall { call: call.clone() },
                    None => TargetKind::Response {
                        category: label_turn_category(turn, dialog.dataset),
                    },
                };
                let target_text = match &turn.call {
                    Some(call) => call.serialize(),
                    None => turn.utterance.clone(),
                };
                examples.push(Example {
                    example_id: example_id(dialog.dataset, dialog.split, &dialog.dialog_id, system_index),
                    dialog_id: dialog.dialog_id.clone(),
                    turn_index: system_index,
                    prompt_context: PromptContext {
                        domains: domains.clone(),
                        schemas: schemas.clone(),
                        history: history.clone(),
                        api_results: prev_was_call.then(|| pending.clone()),
                        last_user_utterance: last_user.clone(),
                    },
                    target,
                    target_text,
                    split_tag: tag,
                    dataset: dialog.dataset,
                });
                system_index += 1;
                prev_was_call = turn.call.is_some();

                match &turn.call {
                    Some(call) => {
                        history.push(HistoryEntry {
                            role: HistoryRole::ApiCall,
                            text: call.serialize(),
                        });
                        let kept: Vec<ResultRecord> =
                            turn.results.iter().take(config.max_results).cloned().collect();
                        if !kept.is_empty() {
                            pending_history.push(HistoryEntry {
                                role: HistoryRole::ApiResult,
                                text: render_results(&kept),
                            });
                        }
                        pending.extend(kept);
                    }
                    None => {
                        history.append(&mut pending_history);
                        pending.clear();
                        history.push(HistoryEntry {
                            role: HistoryRole::System,
                            text: turn.utterance.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(examples)
}

/// Examples for every dialog of the configured splits, in corpus order.
pub fn build_examples(
    corpus: &Corpus,
    train: &TrainDomains,
    config: &BuildConfig,
) -> Result<Vec<Example>, TransformError> {
    let per_dialog: Vec<Vec<Example>> = corpus
        .dialogs
        .par_iter()
        .filter(|d| config.splits.contains(&d.split))
        .map(|d| dialog_examples(d, corpus, train, config))
        .collect::<Result<_, _>>()?;
    Ok(per_dialog.into_iter().flatten().collect())
}

#[derive(Debug, thiserror::Error)]
pub enum ExampleSetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {detail}", path.display())]
    Record {
        path: std::path::PathBuf,
        line: usize,
        detail: String,
    },
}

/// Write one JSON record per line.
pub fn write_examples(path: &Path, examples: &[Example]) -> Result<(), ExampleSetError> {
    let io_err = |source| ExampleSetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for e in examples {
        serde_json::to_writer(&mut w, e).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_examples(path: &Path) -> Result<Vec<Example>, ExampleSetError> {
    let io_err = |source| ExampleSetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = |detail: String| ExampleSetError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            detail,
        };
        let example: Example = serde_json::from_str(&line).map_err(|e| record(e.to_string()))?;
        example.check_target().map_err(record)?;
        out.push(example);
    }
    Ok(out)
}

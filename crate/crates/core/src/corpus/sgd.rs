//! Schema-guided dialog layout: `<root>/{train,dev,test}/schema.json` plus
//! `dialogues_*.json` files per split.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{Map, Value};

use super::error::CorpusError;
use super::model::{
    domain_family, AnnotationIssue, Corpus, Dataset, Dialog, DomainSchema, Intent, RawTurn,
    SlotDef, Speaker, Split,
};
use super::{read_json, sort_dialogs};

#[derive(Debug, Deserialize)]
struct ServiceRecord {
    service_name: String,
    #[serde(default)]
    description: String,
    slots: Vec<SlotRecord>,
    intents: Vec<IntentRecord>,
}

#[derive(Debug, Deserialize)]
struct SlotRecord {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    is_categorical: bool,
    #[serde(default)]
    possible_values: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct IntentRecord {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    required_slots: Vec<String>,
    #[serde(default)]
    optional_slots: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct DialogueRecord {
    pub dialogue_id: String,
    pub services: Vec<String>,
    pub turns: Vec<TurnRecord>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct TurnRecord {
    pub speaker: String,
    pub utterance: String,
    #[serde(flatten)]
    pub rest: Map<String, Value>,
}

impl From<ServiceRecord> for DomainSchema {
    fn from(s: ServiceRecord) -> Self {
        DomainSchema {
            domain: domain_family(&s.service_name).to_string(),
            name: s.service_name,
            description: s.description,
            intents: s
                .intents
                .into_iter()
                .map(|i| {
                    let mut relevant = i.required_slots;
                    for k in i.optional_slots.keys() {
                        if !relevant.contains(k) {
                            relevant.push(k.clone());
                        }
                    }
                    Intent {
                        name: i.name,
                        description: i.description,
                        relevant_slots: relevant,
                    }
                })
                .collect(),
            slots: s
                .slots
                .into_iter()
                .map(|s| SlotDef {
                    name: s.name,
                    description: s.description,
                    is_categorical: s.is_categorical,
                    possible_values: s.possible_values,
                })
                .collect(),
        }
    }
}

/// Read one `schema.json` file.
pub fn read_schema_file(path: &Path) -> Result<Vec<DomainSchema>, CorpusError> {
    let value = read_json(path)?;
    let records: Vec<ServiceRecord> = serde_json::from_value(value)
        .map_err(|e| CorpusError::malformed(path, None, e.to_string()))?;
    Ok(records.into_iter().map(DomainSchema::from).collect())
}

/// Schemas from either `<dir>/schema.json` or `<dir>/<split>/schema.json`,
/// merged by service name.
pub fn read_schemas(dir: &Path) -> Result<Vec<DomainSchema>, CorpusError> {
    let direct = dir.join("schema.json");
    let mut files = Vec::new();
    if direct.is_file() {
        files.push(direct.clone());
    } else {
        for split in Split::ALL {
            let f = dir.join(split.as_str()).join("schema.json");
            if f.is_file() {
                files.push(f);
            }
        }
    }
    if files.is_empty() {
        return Err(CorpusError::MissingFile { path: direct });
    }
    let mut merged = BTreeMap::new();
    for f in files {
        for schema in read_schema_file(&f)? {
            merged.entry(schema.name.clone()).or_insert(schema);
        }
    }
    Ok(merged.into_values().collect())
}

pub(crate) fn speaker_of(raw: &str) -> Option<Speaker> {
    match raw.to_ascii_uppercase().as_str() {
        "USER" => Some(Speaker::User),
        "SYSTEM" => Some(Speaker::System),
        _ => None,
    }
}

/// Parse a JSON array of dialogue records, naming the offending dialog on
/// failure.
pub(crate) fn parse_dialogue_records(
    path: &Path,
    value: Value,
) -> Result<Vec<DialogueRecord>, CorpusError> {
    let Value::Array(items) = value else {
        return Err(CorpusError::malformed(path, None, "expected a JSON array of dialogues"));
    };
    items
        .into_iter()
        .map(|item| {
            let id = item
                .get("dialogue_id")
                .and_then(Value::as_str)
                .map(str::to_string);
            serde_json::from_value::<DialogueRecord>(item)
                .map_err(|e| CorpusError::malformed(path, id.as_deref(), e.to_string()))
        })
        .collect()
}

/// Build a [`Dialog`] from an SGD-shaped record. `utterance_for` may
/// substitute the text of a turn (KETOD enrichment).
pub(crate) fn build_dialog(
    path: &Path,
    record: DialogueRecord,
    dataset: Dataset,
    split: Split,
    schemas: &BTreeMap<String, DomainSchema>,
    issues: &mut Vec<AnnotationIssue>,
    utterance_for: impl Fn(&TurnRecord) -> Option<String>,
) -> Result<Dialog, CorpusError> {
    let id = record.dialogue_id.clone();
    for service in &record.services {
        if !schemas.contains_key(service) {
            return Err(CorpusError::UnknownDomainReference {
                path: path.to_path_buf(),
                dialog_id: id,
                domain: service.clone(),
            });
        }
    }
    let mut turns = Vec::with_capacity(record.turns.len());
    for (i, t) in record.turns.into_iter().enumerate() {
        let speaker = speaker_of(&t.speaker).ok_or_else(|| {
            CorpusError::malformed(path, Some(&id), format!("turn {i}: unknown speaker `{}`", t.speaker))
        })?;
        let expected = if i % 2 == 0 { Speaker::User } else { Speaker::System };
        if speaker != expected {
            return Err(CorpusError::malformed(
                path,
                Some(&id),
                format!("turn {i}: speakers do not alternate starting with USER"),
            ));
        }
        let mut utterance = t.utterance.clone();
        let mut rest = t.rest.clone();
        if let Some(replacement) = utterance_for(&t) {
            rest.insert("source_utterance".into(), Value::String(utterance));
            utterance = replacement;
        }
        if utterance.trim().is_empty() {
            return Err(CorpusError::malformed(path, Some(&id), format!("turn {i}: empty utterance")));
        }
        if let Some(frames) = rest.get("frames") {
            validate_frames(&id, i, frames, &record.services, schemas, issues);
        }
        turns.push(RawTurn {
            speaker,
            utterance,
            annotations: super::Annotations(Value::Object(rest)),
            call: None,
            results: Vec::new(),
        });
    }
    Ok(Dialog {
        dialog_id: id,
        dataset,
        split,
        services: record.services,
        turns,
    })
}

const NON_SLOT_ACT_TARGETS: [&str; 3] = ["", "intent", "count"];

fn validate_frames(
    dialog_id: &str,
    turn: usize,
    frames: &Value,
    services: &[String],
    schemas: &BTreeMap<String, DomainSchema>,
    issues: &mut Vec<AnnotationIssue>,
) {
    let mut push = |detail: String| {
        issues.push(AnnotationIssue {
            dialog_id: dialog_id.to_string(),
            turn_index: Some(turn),
            detail,
        })
    };
    let Some(frames) = frames.as_array() else {
        push("`frames` is not an array".into());
        return;
    };
    for frame in frames {
        let Some(service) = frame.get("service").and_then(Value::as_str) else {
            push("frame without service".into());
            continue;
        };
        let Some(schema) = schemas.get(service) else {
            push(format!("frame references unknown service `{service}`"));
            continue;
        };
        if !services.iter().any(|s| s == service) {
            push(format!("frame service `{service}` not listed in dialog services"));
        }
        let check_slot = |slot: &str, push: &mut dyn FnMut(String)| {
            if !NON_SLOT_ACT_TARGETS.contains(&slot) && schema.slot(slot).is_none() {
                push(format!("unknown slot `{slot}` for service `{service}`"));
            }
        };
        for action in frame.get("actions").and_then(Value::as_array).into_iter().flatten() {
            if let Some(slot) = action.get("slot").and_then(Value::as_str) {
                check_slot(slot, &mut push);
            }
        }
        for span in frame.get("slots").and_then(Value::as_array).into_iter().flatten() {
            if let Some(slot) = span.get("slot").and_then(Value::as_str) {
                check_slot(slot, &mut push);
            }
        }
        if let Some(state) = frame.get("state") {
            if let Some(intent) = state.get("active_intent").and_then(Value::as_str) {
                if intent != "NONE" && schema.intent(intent).is_none() {
                    push(format!("unknown intent `{intent}` for service `{service}`"));
                }
            }
            for slot in state.get("slot_values").and_then(Value::as_object).into_iter().flat_map(|m| m.keys()) {
                check_slot(slot, &mut push);
            }
            for slot in state.get("requested_slots").and_then(Value::as_array).into_iter().flatten() {
                if let Some(slot) = slot.as_str() {
                    check_slot(slot, &mut push);
                }
            }
        }
        if let Some(call) = frame.get("service_call") {
            if let Some(method) = call.get("method").and_then(Value::as_str) {
                if schema.intent(method).is_none() {
                    push(format!("service call to unknown intent `{method}` of `{service}`"));
                }
            }
            for slot in call.get("parameters").and_then(Value::as_object).into_iter().flat_map(|m| m.keys()) {
                check_slot(slot, &mut push);
            }
        }
    }
}

fn dialogue_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("dialogues_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Load the requested splits of an SGD release.
pub fn load_sgd(root: &Path, splits: &[Split]) -> Result<Corpus, CorpusError> {
    let mut all_schemas: BTreeMap<String, DomainSchema> = BTreeMap::new();
    let mut dialogs = Vec::new();
    let mut issues = Vec::new();
    let mut found_any = false;

    for &split in splits {
        let dir = root.join(split.as_str());
        if !dir.is_dir() {
            continue;
        }
        let schema_path = dir.join("schema.json");
        if !schema_path.is_file() {
            return Err(CorpusError::MissingFile { path: schema_path });
        }
        let split_schemas: BTreeMap<String, DomainSchema> = read_schema_file(&schema_path)?
            .into_iter()
            .map(|s| (s.name.clone(), s))
            .collect();
        let files = dialogue_files(&dir)?;
        if files.is_empty() {
            return Err(CorpusError::MissingFile {
                path: dir.join("dialogues_001.json"),
            });
        }
        found_any = true;

        let parsed: Vec<(Vec<Dialog>, Vec<AnnotationIssue>)> = files
            .par_iter()
            .map(|path| {
                let records = parse_dialogue_records(path, read_json(path)?)?;
                let mut issues = Vec::new();
                let dialogs = records
                    .into_iter()
                    .map(|r| {
                        build_dialog(path, r, Dataset::Sgd, split, &split_schemas, &mut issues, |_| None)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((dialogs, issues))
            })
            .collect::<Result<_, CorpusError>>()?;
        for (d, i) in parsed {
            dialogs.extend(d);
            issues.extend(i);
        }
        for (name, schema) in split_schemas {
            all_schemas.entry(name).or_insert(schema);
        }
    }
    if !found_any {
        return Err(CorpusError::MissingFile {
            path: root.join("train").join("schema.json"),
        });
    }
    let schemas: Vec<DomainSchema> = all_schemas.into_values().collect();
    for schema in &schemas {
        for v in schema.violations() {
            issues.push(AnnotationIssue {
                dialog_id: String::new(),
                turn_index: None,
                detail: format!("schema: {v}"),
            });
        }
    }
    sort_dialogs(&mut dialogs);
    Ok(Corpus {
        dataset: Dataset::Sgd,
        schemas,
        dialogs,
        issues,
    })
}

//! BiToD layout: `<root>/{en,zh}_{train,valid,test}.json`, each a JSON object
//! mapping dialog id to `{"Scenario": .., "Events": [..]}`.
//!
//! Events come from three agents. `User` and `Wizard` events with `Text` are
//! utterances; a `Wizard` event carrying `API` + `Constraints` is a knowledge
//! base query, and the `KnowledgeBase` event after it holds the result. Query
//! events are folded into the annotations of the next wizard utterance.
//!
//! BiToD has no schema files, so schemas are derived from the queries seen:
//! one schema per domain, intents are the query methods, slots the
//! constraint names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::error::CorpusError;
use super::model::{
    AnnotationIssue, Corpus, Dataset, Dialog, DomainSchema, Intent, RawTurn, SlotDef, Speaker, Split,
};
use super::{read_json, sort_dialogs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageFilter {
    English,
    Chinese,
    All,
}

impl LanguageFilter {
    fn accepts(self, lang: &str) -> bool {
        match self {
            LanguageFilter::English => lang == "en",
            LanguageFilter::Chinese => lang == "zh",
            LanguageFilter::All => true,
        }
    }
}

impl FromStr for LanguageFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(LanguageFilter::English),
            "zh" | "chinese" => Ok(LanguageFilter::Chinese),
            "all" => Ok(LanguageFilter::All),
            other => Err(format!("unknown language filter `{other}`")),
        }
    }
}

fn classify_file(path: &Path) -> Option<(String, Split)> {
    let stem = path.file_stem()?.to_str()?;
    if path.extension()? != "json" {
        return None;
    }
    let (lang, split) = stem.split_once('_')?;
    if lang.len() != 2 || !lang.bytes().all(|b| b.is_ascii_lowercase()) {
        return None;
    }
    Some((lang.to_string(), split.parse().ok()?))
}

/// `restaurants_en_US_search` -> `restaurants_search`.
pub fn normalize_api_name(api: &str) -> String {
    let parts: Vec<&str> = api.split('_').collect();
    let mut out = Vec::with_capacity(parts.len());
    let mut i = 0;
    while i < parts.len() {
        let is_lang = parts[i].len() == 2 && parts[i].bytes().all(|b| b.is_ascii_lowercase());
        let is_region = parts
            .get(i + 1)
            .is_some_and(|r| r.len() == 2 && r.bytes().all(|b| b.is_ascii_uppercase()));
        if i > 0 && is_lang && is_region {
            i += 2;
            continue;
        }
        out.push(parts[i]);
        i += 1;
    }
    out.join("_")
}

fn domain_of_method(method: &str) -> &str {
    method.split('_').next().unwrap_or(method)
}

pub(crate) fn scalar_to_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `equal_to(Kowloon)` -> `Kowloon`; other relations are kept verbatim.
fn constraint_value(raw: &str) -> String {
    raw.strip_prefix("equal_to(")
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(raw)
        .to_string()
}

/// Flatten `Constraints` (list of single-key objects, or one object) into
/// name/value pairs.
pub(crate) fn constraint_pairs(constraints: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut add = |m: &Map<String, Value>| {
        for (k, v) in m {
            out.push((k.clone(), constraint_value(&scalar_to_string(v))));
        }
    };
    match constraints {
        Value::Array(items) => items.iter().filter_map(Value::as_object).for_each(&mut add),
        Value::Object(m) => add(m),
        _ => {}
    }
    out
}

#[derive(Default)]
struct DerivedSchemas {
    // domain -> intent -> slots
    domains: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

impl DerivedSchemas {
    fn observe(&mut self, method: &str, slots: impl IntoIterator<Item = String>) {
        let intents = self
            .domains
            .entry(domain_of_method(method).to_string())
            .or_default();
        let entry = intents.entry(method.to_string()).or_default();
        for s in slots {
            if !entry.contains(&s) {
                entry.push(s);
            }
        }
    }

    fn merge(&mut self, other: DerivedSchemas) {
        for (domain, intents) in other.domains {
            for (intent, slots) in intents {
                self.observe_in(&domain, &intent, slots);
            }
        }
    }

    fn observe_in(&mut self, domain: &str, intent: &str, slots: Vec<String>) {
        let entry = self
            .domains
            .entry(domain.to_string())
            .or_default()
            .entry(intent.to_string())
            .or_default();
        for s in slots {
            if !entry.contains(&s) {
                entry.push(s);
            }
        }
    }

    fn into_schemas(self) -> Vec<DomainSchema> {
        self.domains
            .into_iter()
            .map(|(domain, intents)| {
                let mut slot_names: Vec<String> = Vec::new();
                let intents = intents
                    .into_iter()
                    .map(|(name, mut slots)| {
                        slots.sort();
                        for s in &slots {
                            if !slot_names.contains(s) {
                                slot_names.push(s.clone());
                            }
                        }
                        Intent {
                            name,
                            description: String::new(),
                            relevant_slots: slots,
                        }
                    })
                    .collect();
                slot_names.sort();
                DomainSchema {
                    name: domain.clone(),
                    domain,
                    description: String::new(),
                    intents,
                    slots: slot_names
                        .into_iter()
                        .map(|name| SlotDef {
                            name,
                            description: String::new(),
                            is_categorical: false,
                            possible_values: Vec::new(),
                        })
                        .collect(),
                }
            })
            .collect()
    }
}

struct FileOutput {
    dialogs: Vec<Dialog>,
    issues: Vec<AnnotationIssue>,
    derived: DerivedSchemas,
}

fn push_service(services: &mut Vec<String>, domain: &str) {
    if !domain.is_empty() && domain != "none" && !services.iter().any(|s| s == domain) {
        services.push(domain.to_string());
    }
}

fn convert_dialog(
    path: &Path,
    id: &str,
    body: &Value,
    split: Split,
    issues: &mut Vec<AnnotationIssue>,
    derived: &mut DerivedSchemas,
) -> Result<Dialog, CorpusError> {
    let events = body
        .get("Events")
        .and_then(Value::as_array)
        .ok_or_else(|| CorpusError::malformed(path, Some(id), "missing `Events` array"))?;
    let mut issue = |turn: Option<usize>, detail: String| {
        issues.push(AnnotationIssue {
            dialog_id: id.to_string(),
            turn_index: turn,
            detail,
        })
    };

    let mut turns: Vec<RawTurn> = Vec::new();
    let mut services: Vec<String> = Vec::new();
    let mut pending: Vec<Value> = Vec::new();

    for (ei, ev) in events.iter().enumerate() {
        let agent = ev.get("Agent").and_then(Value::as_str).unwrap_or_default();
        let text = ev.get("Text").and_then(Value::as_str).map(str::trim).unwrap_or_default();
        match agent {
            "User" => {
                if let Some(intent) = ev.get("active_intent").and_then(Value::as_str) {
                    push_service(&mut services, domain_of_method(&normalize_api_name(intent)));
                }
                if text.is_empty() {
                    issue(None, format!("event {ei}: user event without text"));
                    continue;
                }
                let mut ann = Map::new();
                for key in ["Actions", "active_intent", "state"] {
                    if let Some(v) = ev.get(key) {
                        ann.insert(key.to_string(), v.clone());
                    }
                }
                push_turn(&mut turns, Speaker::User, text, Value::Object(ann), &mut issue);
            }
            "Wizard" => {
                let is_query = ev.get("API").is_some()
                    || ev.get("Actions").and_then(Value::as_str) == Some("query");
                if is_query {
                    let api = ev.get("API").map(scalar_to_string).unwrap_or_default();
                    let method = normalize_api_name(&api);
                    let constraints = ev.get("Constraints").cloned().unwrap_or(Value::Null);
                    let pairs = constraint_pairs(&constraints);
                    derived.observe(&method, pairs.iter().map(|(k, _)| k.clone()));
                    push_service(&mut services, domain_of_method(&method));
                    pending.push(json!({
                        "method": method,
                        "constraints": constraints,
                        "results": [],
                    }));
                    continue;
                }
                if text.is_empty() {
                    issue(None, format!("event {ei}: wizard event without text"));
                    continue;
                }
                let mut ann = Map::new();
                if let Some(v) = ev.get("Actions") {
                    ann.insert("Actions".into(), v.clone());
                }
                if !pending.is_empty() {
                    ann.insert("queries".into(), Value::Array(std::mem::take(&mut pending)));
                }
                push_turn(&mut turns, Speaker::System, text, Value::Object(ann), &mut issue);
            }
            "KnowledgeBase" => {
                let Some(query) = pending.last_mut() else {
                    issue(None, format!("event {ei}: knowledge base result without query"));
                    continue;
                };
                let mut items: Vec<Value> = Vec::new();
                if let Some(item) = ev.get("Item").filter(|v| v.is_object()) {
                    items.push(item.clone());
                }
                if let Some(list) = ev.get("Items").and_then(Value::as_array) {
                    items.extend(list.iter().filter(|v| v.is_object()).cloned());
                }
                query["results"] = Value::Array(items);
                if let Some(total) = ev.get("TotalItems") {
                    query["total"] = total.clone();
                }
            }
            other => issue(None, format!("event {ei}: unknown agent `{other}`")),
        }
    }
    if !pending.is_empty() {
        issue(None, format!("{} trailing queries without a wizard reply", pending.len()));
    }
    if turns.is_empty() {
        return Err(CorpusError::malformed(path, Some(id), "dialog has no utterances"));
    }
    Ok(Dialog {
        dialog_id: id.to_string(),
        dataset: Dataset::Bitod,
        split,
        services,
        turns,
    })
}

/// Append a turn, merging consecutive same-speaker utterances and dropping
/// leading system turns so the result alternates starting with USER.
fn push_turn(
    turns: &mut Vec<RawTurn>,
    speaker: Speaker,
    text: &str,
    ann: Value,
    issue: &mut impl FnMut(Option<usize>, String),
) {
    if turns.is_empty() && speaker == Speaker::System {
        issue(Some(0), "dropped system utterance before first user utterance".into());
        return;
    }
    let last_index = turns.len().checked_sub(1);
    if let Some(last) = turns.last_mut() {
        if last.speaker == speaker {
            issue(
                last_index,
                "merged consecutive utterances from the same speaker".into(),
            );
            last.utterance.push(' ');
            last.utterance.push_str(text);
            if let (Value::Object(into), Value::Object(from)) = (&mut last.annotations.0, ann) {
                for (k, v) in from {
                    match (into.get_mut(&k), v) {
                        (Some(Value::Array(a)), Value::Array(b)) => a.extend(b),
                        (Some(_), _) => {}
                        (None, v) => {
                            into.insert(k, v);
                        }
                    }
                }
            }
            return;
        }
    }
    let turn = match speaker {
        Speaker::User => RawTurn::user(text),
        Speaker::System => RawTurn::system(text),
    };
    turns.push(turn.with_annotations(ann));
}

fn parse_file(path: &Path, split: Split) -> Result<FileOutput, CorpusError> {
    let value = read_json(path)?;
    let mut out = FileOutput {
        dialogs: Vec::new(),
        issues: Vec::new(),
        derived: DerivedSchemas::default(),
    };
    let entries: Vec<(String, Value)> = match value {
        Value::Object(map) => map.into_iter().collect(),
        Value::Array(items) => items
            .into_iter()
            .map(|v| {
                let id = v
                    .get("dialogue_id")
                    .map(scalar_to_string)
                    .ok_or_else(|| CorpusError::malformed(path, None, "dialog without `dialogue_id`"))?;
                Ok((id, v))
            })
            .collect::<Result<_, CorpusError>>()?,
        _ => return Err(CorpusError::malformed(path, None, "expected object or array of dialogs")),
    };
    for (id, body) in entries {
        let dialog = convert_dialog(path, &id, &body, split, &mut out.issues, &mut out.derived)?;
        out.dialogs.push(dialog);
    }
    Ok(out)
}

pub fn load_bitod(root: &Path, language: LanguageFilter, splits: &[Split]) -> Result<Corpus, CorpusError> {
    let entries = std::fs::read_dir(root).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile {
            path: root.to_path_buf(),
        },
        _ => CorpusError::Io {
            path: root.to_path_buf(),
            source,
        },
    })?;
    let mut all_files: Vec<(PathBuf, String, Split)> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter_map(|p| classify_file(&p).map(|(l, s)| (p, l, s)))
        .collect();
    if all_files.is_empty() {
        return Err(CorpusError::MissingFile {
            path: root.join("en_train.json"),
        });
    }
    all_files.sort();
    let selected: Vec<(PathBuf, Split)> = all_files
        .into_iter()
        .filter(|(_, lang, split)| language.accepts(lang) && splits.contains(split))
        .map(|(p, _, s)| (p, s))
        .collect();

    let outputs: Vec<FileOutput> = selected
        .par_iter()
        .map(|(p, s)| parse_file(p, *s))
        .collect::<Result<_, _>>()?;

    let mut dialogs = Vec::new();
    let mut issues = Vec::new();
    let mut derived = DerivedSchemas::default();
    for o in outputs {
        dialogs.extend(o.dialogs);
        issues.extend(o.issues);
        derived.merge(o.derived);
    }
    let mut schemas = derived.into_schemas();
    // Domains seen only through user intents still need a schema entry.
    for d in &dialogs {
        for s in &d.services {
            if !schemas.iter().any(|x| &x.name == s) {
                schemas.push(DomainSchema {
                    name: s.clone(),
                    domain: s.clone(),
                    description: String::new(),
                    intents: Vec::new(),
                    slots: Vec::new(),
                });
            }
        }
    }
    schemas.sort_by(|a, b| a.name.cmp(&b.name));
    sort_dialogs(&mut dialogs);
    Ok(Corpus {
        dataset: Dataset::Bitod,
        schemas,
        dialogs,
        issues,
    })
}

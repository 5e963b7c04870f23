//! KETOD layout: `<root>/{train,dev,test}.json`, each a JSON array of
//! SGD-shaped dialogs whose system turns may carry knowledge enrichment
//! (`enrich`, `entity_query`, `enriched_response`, `kg_snippets_text`).
//!
//! KETOD ships without schemas; they are read from an SGD-style directory
//! (`schema.json` directly inside it, or per split).

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use super::error::CorpusError;
use super::model::{AnnotationIssue, Corpus, Dataset, Dialog, DomainSchema, Split};
use super::sgd::{build_dialog, parse_dialogue_records, read_schemas, TurnRecord};
use super::{read_json, sort_dialogs};

fn enriched_response(turn: &TurnRecord) -> Option<String> {
    let enrich = turn.rest.get("enrich").and_then(Value::as_bool).unwrap_or(false);
    if !enrich {
        return None;
    }
    turn.rest
        .get("enriched_response")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .map(str::to_string)
}

fn split_file(root: &Path, split: Split) -> Option<std::path::PathBuf> {
    let names: &[&str] = match split {
        Split::Train => &["train.json"],
        Split::Dev => &["dev.json", "valid.json"],
        Split::Test => &["test.json"],
    };
    names.iter().map(|n| root.join(n)).find(|p| p.is_file())
}

pub fn load_ketod(root: &Path, schema_dir: Option<&Path>, splits: &[Split]) -> Result<Corpus, CorpusError> {
    let files: Vec<(Split, std::path::PathBuf)> = splits
        .iter()
        .filter_map(|&s| split_file(root, s).map(|p| (s, p)))
        .collect();
    if files.is_empty() {
        return Err(CorpusError::MissingFile {
            path: root.join("train.json"),
        });
    }
    let schemas: BTreeMap<String, DomainSchema> = read_schemas(schema_dir.unwrap_or(root))?
        .into_iter()
        .map(|s| (s.name.clone(), s))
        .collect();

    let parsed: Vec<(Vec<Dialog>, Vec<AnnotationIssue>)> = files
        .par_iter()
        .map(|(split, path)| {
            let records = parse_dialogue_records(path, read_json(path)?)?;
            let mut issues = Vec::new();
            let dialogs = records
                .into_iter()
                .map(|r| build_dialog(path, r, Dataset::Ketod, *split, &schemas, &mut issues, enriched_response))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((dialogs, issues))
        })
        .collect::<Result<_, CorpusError>>()?;

    let mut dialogs = Vec::new();
    let mut issues = Vec::new();
    for (d, i) in parsed {
        dialogs.extend(d);
        issues.extend(i);
    }
    sort_dialogs(&mut dialogs);
    Ok(Corpus {
        dataset: Dataset::Ketod,
        schemas: schemas.into_values().collect(),
        dialogs,
        issues,
    })
}

use serde_json::Value;

use super::TransformError;
use crate::apicall::ApiCall;
use crate::corpus::{
    constraint_pairs, domain_family, scalar_to_string, Dataset, Dialog, RawTurn, ResultRecord,
    Speaker,
};

/// An external query recovered from a turn's annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub call: ApiCall,
    pub results: Vec<ResultRecord>,
}

fn record_of(value: &Value) -> Option<ResultRecord> {
    value.as_object().map(|m| {
        m.iter()
            .map(|(k, v)| (k.clone(), scalar_to_string(v)))
            .collect()
    })
}

fn records_of(value: Option<&Value>) -> Vec<ResultRecord> {
    value
        .and_then(Value::as_array)
        .map(|items| items.iter().filter_map(record_of).collect())
        .unwrap_or_default()
}

fn flatten_strings(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::String(s) if !s.trim().is_empty() => out.push(s.trim().to_string()),
        Value::Array(items) => items.iter().for_each(|v| flatten_strings(v, out)),
        _ => {}
    }
}

/// All queries a system turn depends on, in the order they are issued.
pub fn extract_queries(
    turn: &RawTurn,
    dataset: Dataset,
    dialog_id: &str,
    turn_index: usize,
) -> Result<Vec<Query>, TransformError> {
    if turn.speaker != Speaker::System || turn.is_api_call() {
        return Ok(Vec::new());
    }
    let inconsistent = |detail: String| TransformError::InconsistentAnnotation {
        dialog_id: dialog_id.to_string(),
        turn_index,
        detail,
    };
    let ann = &turn.annotations;
    let mut queries = Vec::new();
    match dataset {
        Dataset::Sgd | Dataset::Ketod => {
            for frame in ann.get("frames").and_then(Value::as_array).into_iter().flatten() {
                let call = frame.get("service_call").filter(|v| !v.is_null());
                let results = frame.get("service_results").filter(|v| !v.is_null());
                match (call, results) {
                    (None, None) => {}
                    (Some(_), None) => {
                        return Err(inconsistent("service call without service results".into()))
                    }
                    (None, Some(_)) => {
                        return Err(inconsistent("service results without service call".into()))
                    }
                    (Some(call), Some(results)) => {
                        let method = call
                            .get("method")
                            .and_then(Value::as_str)
                            .filter(|m| !m.is_empty())
                            .ok_or_else(|| inconsistent("service call without method".into()))?;
                        let mut api = ApiCall::api(method);
                        if let Some(params) = call.get("parameters").and_then(Value::as_object) {
                            for (k, v) in params {
                                api.params.insert(k.clone(), scalar_to_string(v));
                            }
                        }
                        queries.push(Query {
                            call: api,
                            results: records_of(Some(results)),
                        });
                    }
                }
            }
            if dataset == Dataset::Ketod {
                if let Some(q) = entity_query(turn, &inconsistent)? {
                    queries.push(q);
                }
            }
        }
        Dataset::Bitod => {
            for q in ann.get("queries").and_then(Value::as_array).into_iter().flatten() {
                let method = q
                    .get("method")
                    .and_then(Value::as_str)
                    .filter(|m| !m.is_empty())
                    .ok_or_else(|| inconsistent("query without API name".into()))?;
                let mut api = ApiCall::api(method);
                for (k, v) in constraint_pairs(q.get("constraints").unwrap_or(&Value::Null)) {
                    api.params.entry(k).or_insert(v);
                }
                queries.push(Query {
                    call: api,
                    results: records_of(q.get("results")),
                });
            }
        }
    }
    Ok(queries)
}

fn entity_query(
    turn: &RawTurn,
    inconsistent: &dyn Fn(String) -> TransformError,
) -> Result<Option<Query>, TransformError> {
    let ann = &turn.annotations;
    if !ann.get("enrich").and_then(Value::as_bool).unwrap_or(false) {
        return Ok(None);
    }
    let mut entities = Vec::new();
    if let Some(q) = ann.get("entity_query") {
        flatten_strings(q, &mut entities);
    }
    let mut snippets = Vec::new();
    let snippet_field = ann.get("kg_snippets_text").filter(|v| !v.is_null());
    if let Some(s) = snippet_field {
        flatten_strings(s, &mut snippets);
    }
    match (entities.is_empty(), snippet_field.is_some()) {
        (true, _) if snippets.is_empty() => return Ok(None),
        (true, _) => return Err(inconsistent("knowledge snippets without entity query".into())),
        (false, false) => return Err(inconsistent("entity query without knowledge snippets".into())),
        (false, true) => {}
    }
    let service = ann
        .get("frames")
        .and_then(Value::as_array)
        .and_then(|f| f.first())
        .and_then(|f| f.get("service"))
        .and_then(Value::as_str)
        .unwrap_or("Knowledge");
    let mut call = ApiCall::entity_query(domain_family(service));
    if entities.len() == 1 {
        call.params.insert("entity".into(), entities.remove(0));
    } else {
        for (i, e) in entities.into_iter().enumerate() {
            call.params.insert(format!("entity_{}", i + 1), e);
        }
    }
    let results = snippets
        .into_iter()
        .map(|s| ResultRecord::from([("snippet".to_string(), s)]))
        .collect();
    Ok(Some(Query { call, results }))
}

/// Insert an explicit API-call turn before every system turn that depended
/// on an external query. Already-split dialogs are returned unchanged.
pub fn split_api_turns(dialog: &Dialog) -> Result<Dialog, TransformError> {
    let mut turns: Vec<RawTurn> = Vec::with_capacity(dialog.turns.len() + 4);
    for (i, turn) in dialog.turns.iter().enumerate() {
        let preceded_by_call = turns.last().is_some_and(RawTurn::is_api_call);
        if turn.speaker == Speaker::System && !turn.is_api_call() && !preceded_by_call {
            for q in extract_queries(turn, dialog.dataset, &dialog.dialog_id, i)? {
                turns.push(RawTurn::api_call(q.call, q.results));
            }
        }
        turns.push(turn.clone());
    }
    Ok(Dialog {
        turns,
        ..dialog.clone()
    })
}

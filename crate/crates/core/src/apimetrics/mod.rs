//! Scoring of predicted API-call turns and aggregation of all turn scores
//! into report rows.

mod aggregate;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::apicall::{fuzzy_match, normalize_method, normalize_param_name, parse_api_call, ApiCall};
use crate::corpus::Dataset;
use crate::transform::SplitTag;

pub use aggregate::{
    aggregate, AggregateOptions, ApiAccumulator, MetricReport, ReportRow, ResponseTurn, SplitGroup, Task,
    API_METRICS, AUX_METRICS, STRICT_METRICS, TEXT_METRICS,
};
pub use table::render_tables;

/// Per-turn facts for one predicted call against its gold call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CallScore {
    /// The prediction is a call of the gold invocation type.
    pub invoke_ok: bool,
    pub method_ok: bool,
    /// Fraction of gold parameter names present in the prediction.
    pub param_name_frac: f64,
    /// Fraction of gold parameters whose name is present and whose value
    /// fuzzy-matches.
    pub param_value_frac: f64,
    pub full_ok: bool,
    /// Predicted name set equals the gold name set.
    pub param_names_exact: bool,
    /// Names exact and every value matched.
    pub param_values_exact: bool,
    /// Mean raw similarity over gold parameters (0 for a missing name).
    pub value_similarity: f64,
    /// The prediction parsed as a call or a malformed call attempt.
    pub attempted_call: bool,
}

impl CallScore {
    fn zero(attempted_call: bool) -> Self {
        Self {
            invoke_ok: false,
            method_ok: false,
            param_name_frac: 0.0,
            param_value_frac: 0.0,
            full_ok: false,
            param_names_exact: false,
            param_values_exact: false,
            value_similarity: 0.0,
            attempted_call,
        }
    }
}

/// True when `text` would be routed to API scoring: it parses to a call or
/// is a malformed call attempt.
pub fn is_call_attempt(text: &str) -> bool {
    !matches!(parse_api_call(text), Ok(None))
}

pub fn score_api_turn(gold: &ApiCall, prediction: &str, threshold: f64) -> CallScore {
    let pred = match parse_api_call(prediction) {
        Ok(Some(call)) => call,
        Ok(None) => return CallScore::zero(false),
        Err(_) => return CallScore::zero(true),
    };
    let invoke_ok = pred.invoke == gold.invoke;
    let method_ok = invoke_ok && normalize_method(&pred.method) == normalize_method(&gold.method);

    // First spelling of a normalized name wins.
    let mut predicted: BTreeMap<String, &str> = BTreeMap::new();
    for (k, v) in &pred.params {
        predicted.entry(normalize_param_name(k)).or_insert(v.as_str());
    }
    let gold_names: BTreeMap<String, &str> = gold
        .params
        .iter()
        .map(|(k, v)| (normalize_param_name(k), v.as_str()))
        .collect();

    let mut names = 0usize;
    let mut values = 0usize;
    let mut similarity = 0.0;
    for (name, gold_value) in &gold_names {
        if let Some(v) = predicted.get(name) {
            names += 1;
            let m = fuzzy_match(gold_value, v, threshold);
            similarity += m.score;
            if m.matched {
                values += 1;
            }
        }
    }
    let n = gold_names.len();
    let (name_frac, value_frac, similarity) = if n == 0 {
        (1.0, 1.0, 1.0)
    } else {
        (
            names as f64 / n as f64,
            values as f64 / n as f64,
            similarity / n as f64,
        )
    };
    let names_exact = predicted.len() == n && names == n;
    let values_exact = names_exact && values == n;
    CallScore {
        invoke_ok,
        method_ok,
        param_name_frac: name_frac,
        param_value_frac: value_frac,
        full_ok: method_ok && values_exact,
        param_names_exact: names_exact,
        param_values_exact: values_exact,
        value_similarity: similarity,
        attempted_call: true,
    }
}

/// A scored API turn with the grouping keys used by aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiTurnScore {
    pub example_id: String,
    #[serde(flatten)]
    pub score: CallScore,
    pub is_multi_domain: bool,
    pub split_tag: SplitTag,
    pub dataset: Dataset,
}

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Dataset, RawTurn};

/// Coarse label of a system response, used only to group evaluation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseCategory {
    SlotFill,
    Retrieval,
    General,
}

impl ResponseCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseCategory::SlotFill => "slot_fill",
            ResponseCategory::Retrieval => "retrieval",
            ResponseCategory::General => "general",
        }
    }
}

const SLOT_VALUE_ACTS: [&str; 3] = ["INFORM", "OFFER", "INFORM_COUNT"];
const REQUEST_ACTS: [&str; 1] = ["REQUEST"];

fn gold_acts(turn: &RawTurn, dataset: Dataset) -> Vec<String> {
    let mut acts = Vec::new();
    let mut collect = |actions: Option<&Value>| {
        for a in actions.and_then(Value::as_array).into_iter().flatten() {
            if let Some(act) = a.get("act").and_then(Value::as_str) {
                acts.push(act.to_ascii_uppercase());
            }
        }
    };
    match dataset {
        Dataset::Sgd | Dataset::Ketod => {
            for frame in turn
                .annotations
                .get("frames")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                collect(frame.get("actions"));
            }
        }
        Dataset::Bitod => collect(turn.annotations.get("Actions")),
    }
    acts
}

/// Label a system response from its gold dialog acts.
///
/// Slot-value acts win over requests when both are present.
pub fn label_turn_category(turn: &RawTurn, dataset: Dataset) -> ResponseCategory {
    let acts = gold_acts(turn, dataset);
    if acts.iter().any(|a| SLOT_VALUE_ACTS.contains(&a.as_str())) {
        ResponseCategory::SlotFill
    } else if acts.iter().any(|a| REQUEST_ACTS.contains(&a.as_str())) {
        ResponseCategory::Retrieval
    } else {
        if acts.is_empty() {
            log::warn!("no dialog acts on system turn {:?}; labelled general", turn.utterance);
        }
        ResponseCategory::General
    }
}

use super::PromptError;
use crate::transform::{HistoryEntry, HistoryRole};

/// Whitespace-delimited units, the tokenizer-agnostic size measure.
pub fn count_units(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub history: Vec<HistoryEntry>,
    /// History entries removed from the front.
    pub dropped: usize,
}

/// Drop the oldest rounds (a user entry plus everything up to the next user
/// entry) until `measure(history) <= budget`. The final round, holding the
/// latest user utterance and any calls after it, is never dropped.
pub fn truncate_history(
    history: &[HistoryEntry],
    budget: usize,
    measure: impl Fn(&[HistoryEntry]) -> usize,
) -> Result<Truncation, PromptError> {
    if budget == 0 {
        return Err(PromptError::InvalidConfig("max_context_units must be positive".into()));
    }
    let round_starts: Vec<usize> = history
        .iter()
        .enumerate()
        .filter(|(i, e)| *i == 0 || e.role == HistoryRole::User)
        .map(|(i, _)| i)
        .collect();
    let mandatory_start = round_starts.last().copied().unwrap_or(0);

    let needed = measure(&history[mandatory_start..]);
    if needed > budget {
        return Err(PromptError::BudgetTooSmall { needed, budget });
    }
    // Longest suffix that fits; sizes are monotone in the number of rounds.
    for &start in &round_starts {
        if measure(&history[start..]) <= budget {
            return Ok(Truncation {
                history: history[start..].to_vec(),
                dropped: start,
            });
        }
    }
    Ok(Truncation {
        history: history[mandatory_start..].to_vec(),
        dropped: mandatory_start,
    })
}

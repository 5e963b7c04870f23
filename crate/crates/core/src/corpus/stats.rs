use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::{Dataset, Dialog, Speaker};

/// What counts as one "turn" when averaging dialog length.
///
/// The published SGD figure counts every utterance; the KETOD and BiToD
/// figures count user/system exchanges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnUnit {
    Utterance,
    Exchange,
}

impl TurnUnit {
    pub fn for_dataset(dataset: Dataset) -> Self {
        match dataset {
            Dataset::Sgd => TurnUnit::Utterance,
            Dataset::Ketod | Dataset::Bitod => TurnUnit::Exchange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_dialogs: usize,
    pub n_domains: usize,
    pub avg_turns_per_dialog: f64,
}

/// Stats with turns counted per utterance.
pub fn corpus_stats<'a, I>(dialogs: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a Dialog>,
{
    corpus_stats_with(dialogs, TurnUnit::Utterance)
}

/// Stats over raw (pre-split) turns; API-call turns inserted by splitting
/// are not counted.
pub fn corpus_stats_with<'a, I>(dialogs: I, unit: TurnUnit) -> CorpusStats
where
    I: IntoIterator<Item = &'a Dialog>,
{
    let mut n_dialogs = 0usize;
    let mut turns = 0usize;
    let mut domains = BTreeSet::new();
    for dialog in dialogs {
        n_dialogs += 1;
        domains.extend(dialog.domains());
        turns += dialog
            .turns
            .iter()
            .filter(|t| !t.is_api_call())
            .filter(|t| unit == TurnUnit::Utterance || t.speaker == Speaker::User)
            .count();
    }
    CorpusStats {
        n_dialogs,
        n_domains: domains.len(),
        avg_turns_per_dialog: if n_dialogs == 0 {
            0.0
        } else {
            turns as f64 / n_dialogs as f64
        },
    }
}

/// Published corpus statistics a load is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceStats {
    pub dataset: Dataset,
    pub n_dialogs: usize,
    pub n_domains: usize,
    pub avg_turns_per_dialog: f64,
    /// Which splits the published numbers cover.
    pub splits: &'static [super::Split],
}

pub const AVG_TURNS_TOLERANCE: f64 = 0.01;

/// Domain count of the complete SGD release (all splits), as opposed to the
/// 16 domains of its training split.
pub const SGD_ALL_SPLITS_DOMAINS: usize = 20;

pub fn reference_stats(dataset: Dataset) -> ReferenceStats {
    use super::Split::*;
    match dataset {
        Dataset::Sgd => ReferenceStats {
            dataset,
            n_dialogs: 16_142,
            n_domains: 16,
            avg_turns_per_dialog: 20.44,
            splits: &[Train],
        },
        Dataset::Ketod => ReferenceStats {
            dataset,
            n_dialogs: 5_324,
            n_domains: 13,
            avg_turns_per_dialog: 9.78,
            splits: &[Train, Dev, Test],
        },
        Dataset::Bitod => ReferenceStats {
            dataset,
            n_dialogs: 3_689,
            n_domains: 5,
            avg_turns_per_dialog: 9.39,
            splits: &[Train, Dev, Test],
        },
    }
}

impl ReferenceStats {
    pub fn matches(&self, observed: &CorpusStats) -> bool {
        observed.n_dialogs == self.n_dialogs
            && observed.n_domains == self.n_domains
            && (observed.avg_turns_per_dialog - self.avg_turns_per_dialog).abs()
                <= AVG_TURNS_TOLERANCE
    }
}

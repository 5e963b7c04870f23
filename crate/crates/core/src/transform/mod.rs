//! Corpus compilation: query-turn splitting, response categories,
//! seen/unseen tagging and the line-delimited example set.

mod category;
mod domain_split;
mod example;
mod split;

use thiserror::Error;

pub use category::{label_turn_category, ResponseCategory};
pub use domain_split::{assign_domain_split, split_tag_for, SplitTag, TrainDomains};
pub use example::{
    build_examples, dialog_examples, example_id, read_examples, render_results, write_examples,
    BuildConfig, Example, ExampleSetError, HistoryEntry, HistoryRole, PromptContext, TargetKind,
};
pub use split::{extract_queries, split_api_turns, Query};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("dialog {dialog_id}, turn {turn_index}: inconsistent query annotation: {detail}")]
    InconsistentAnnotation {
        dialog_id: String,
        turn_index: usize,
        detail: String,
    },
    #[error("dialog {dialog_id}: no schema for service `{service}`")]
    UnknownService { dialog_id: String, service: String },
    #[error("training domain set is empty")]
    EmptyTrainDomains,
}

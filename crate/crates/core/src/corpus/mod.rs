//! Unified in-memory model of the three dialog corpora.

mod bitod;
mod error;
mod ketod;
mod model;
mod sgd;
mod stats;

use std::path::{Path, PathBuf};

use serde_json::Value;

pub use bitod::{load_bitod, normalize_api_name, LanguageFilter};
pub use error::CorpusError;
pub use ketod::load_ketod;
pub use model::{
    domain_family, Annotations, AnnotationIssue, Corpus, Dataset, Dialog, DomainSchema, Intent,
    RawTurn, ResultRecord, SlotDef, Speaker, Split,
};
pub use sgd::{load_sgd, read_schemas};
pub use stats::{
    corpus_stats, corpus_stats_with, reference_stats, CorpusStats, ReferenceStats, TurnUnit,
    AVG_TURNS_TOLERANCE, SGD_ALL_SPLITS_DOMAINS,
};

pub(crate) use bitod::{constraint_pairs, scalar_to_string};

pub(crate) fn read_json(path: &Path) -> Result<Value, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => CorpusError::MissingFile {
            path: path.to_path_buf(),
        },
        _ => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::malformed(path, None, e.to_string()))
}

pub(crate) fn sort_dialogs(dialogs: &mut [Dialog]) {
    dialogs.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Options shared by the three loaders.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub splits: Vec<Split>,
    /// BiToD only.
    pub language: LanguageFilter,
    /// KETOD only: where the SGD schemas live. Defaults to the KETOD root.
    pub schema_dir: Option<PathBuf>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            splits: Split::ALL.to_vec(),
            language: LanguageFilter::English,
            schema_dir: None,
        }
    }
}

pub fn load(dataset: Dataset, dir: &Path, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    match dataset {
        Dataset::Sgd => load_sgd(dir, &options.splits),
        Dataset::Ketod => load_ketod(dir, options.schema_dir.as_deref(), &options.splits),
        Dataset::Bitod => load_bitod(dir, options.language, &options.splits),
    }
}

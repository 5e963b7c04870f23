use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("malformed record in {}{}: {detail}", path.display(), fmt_dialog(dialog_id))]
    MalformedRecord {
        path: PathBuf,
        dialog_id: Option<String>,
        detail: String,
    },

    #[error("dialog {dialog_id} in {} references unknown domain `{domain}`", path.display())]
    UnknownDomainReference {
        path: PathBuf,
        dialog_id: String,
        domain: String,
    },

    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_dialog(id: &Option<String>) -> String {
    match id {
        Some(id) => format!(" (dialog {id})"),
        None => String::new(),
    }
}

impl CorpusError {
    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        dialog_id: Option<&str>,
        detail: impl Into<String>,
    ) -> Self {
        CorpusError::MalformedRecord {
            path: path.into(),
            dialog_id: dialog_id.map(str::to_string),
            detail: detail.into(),
        }
    }
}

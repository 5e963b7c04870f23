use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::corpus::{Dialog, Split};

/// Whether a dialog's domains were seen during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Seen,
    Unseen,
    Mixed,
}

impl SplitTag {
    pub const ALL: [SplitTag; 3] = [SplitTag::Seen, SplitTag::Unseen, SplitTag::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Seen => "seen",
            SplitTag::Unseen => "unseen",
            SplitTag::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-empty set of domain families the model was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TrainDomains(BTreeSet<String>);

impl TrainDomains {
    pub fn new<I, S>(domains: I) -> Result<Self, TransformError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = domains
            .into_iter()
            .map(Into::into)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if set.is_empty() {
            return Err(TransformError::EmptyTrainDomains);
        }
        Ok(Self(set))
    }

    /// One domain per line; blank lines and `#` comments are ignored.
    pub fn parse_list(text: &str) -> Result<Self, TransformError> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or_default().trim())
                .filter(|l| !l.is_empty()),
        )
    }

    /// Domains occurring in the training split of `dialogs`.
    pub fn from_training_split<'a>(
        dialogs: impl IntoIterator<Item = &'a Dialog>,
    ) -> Result<Self, TransformError> {
        Self::new(
            dialogs
                .into_iter()
                .filter(|d| d.split == Split::Train)
                .flat_map(|d| d.domains()),
        )
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.0.contains(domain)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl TryFrom<Vec<String>> for TrainDomains {
    type Error = TransformError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TrainDomains> for Vec<String> {
    fn from(t: TrainDomains) -> Self {
        t.0.into_iter().collect()
    }
}

/// Tag a set of domains against the training domains.
pub fn split_tag_for<'a>(
    domains: impl IntoIterator<Item = &'a str>,
    train: &TrainDomains,
) -> SplitTag {
    let (mut seen, mut unseen) = (0usize, 0usize);
    for d in domains {
        if train.contains(d) {
            seen += 1;
        } else {
            unseen += 1;
        }
    }
    match (seen, unseen) {
        (_, 0) => SplitTag::Seen,
        (0, _) => SplitTag::Unseen,
        _ => SplitTag::Mixed,
    }
}

pub fn assign_domain_split(dialog: &Dialog, train: &TrainDomains) -> SplitTag {
    let domains = dialog.domains();
    split_tag_for(domains.iter().map(String::as_str), train)
}

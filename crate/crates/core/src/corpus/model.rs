use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::apicall::ApiCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Sgd,
    Ketod,
    Bitod,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Sgd => "sgd",
            Dataset::Ketod => "ketod",
            Dataset::Bitod => "bitod",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Dataset::Sgd),
            "ketod" => Ok(Dataset::Ketod),
            "bitod" => Ok(Dataset::Bitod),
            other => Err(format!("unknown dataset `{other}` (expected sgd, ketod or bitod)")),
        }
    }
}

/// Published split a dialog came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Speaker {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub is_categorical: bool,
    #[serde(default)]
    pub possible_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub relevant_slots: Vec<String>,
}

/// One service's schema. `name` is the service (e.g. `Restaurants_1`),
/// `domain` the family it belongs to (e.g. `Restaurants`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSchema {
    pub name: String,
    pub domain: String,
    #[serde(default)]
    pub description: String,
    pub intents: Vec<Intent>,
    pub slots: Vec<SlotDef>,
}

impl DomainSchema {
    pub fn slot(&self, name: &str) -> Option<&SlotDef> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn intent(&self, name: &str) -> Option<&Intent> {
        self.intents.iter().find(|i| i.name == name)
    }

    /// Check the structural invariants, returning one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for slot in &self.slots {
            if slot.name.is_empty() {
                out.push(format!("{}: empty slot name", self.name));
            }
            if !seen.insert(slot.name.as_str()) {
                out.push(format!("{}: duplicate slot `{}`", self.name, slot.name));
            }
            if slot.is_categorical == slot.possible_values.is_empty() {
                out.push(format!(
                    "{}: slot `{}` categorical={} with {} possible values",
                    self.name,
                    slot.name,
                    slot.is_categorical,
                    slot.possible_values.len()
                ));
            }
        }
        let mut intents = BTreeSet::new();
        for intent in &self.intents {
            if !intents.insert(intent.name.as_str()) {
                out.push(format!("{}: duplicate intent `{}`", self.name, intent.name));
            }
            for slot in &intent.relevant_slots {
                if self.slot(slot).is_none() {
                    out.push(format!(
                        "{}: intent `{}` references unknown slot `{}`",
                        self.name, intent.name, slot
                    ));
                }
            }
        }
        out
    }
}

/// Strip a trailing `_<digits>` service suffix: `Restaurants_1` -> `Restaurants`.
pub fn domain_family(service: &str) -> &str {
    match service.rsplit_once('_') {
        Some((head, tail))
            if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) =>
        {
            head
        }
        _ => service,
    }
}

/// Per-dataset annotation blob. Only the transform stage looks inside.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Annotations(pub Value);

impl Annotations {
    pub fn none() -> Self {
        Annotations(Value::Null)
    }

    pub fn is_empty(&self) -> bool {
        match &self.0 {
            Value::Null => true,
            Value::Object(m) => m.is_empty(),
            _ => false,
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }
}

/// One row returned by an external query.
pub type ResultRecord = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTurn {
    pub speaker: Speaker,
    pub utterance: String,
    #[serde(default, skip_serializing_if = "Annotations::is_empty")]
    pub annotations: Annotations,
    /// Set only on system turns produced by query splitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<ApiCall>,
    /// Results returned for `call`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<ResultRecord>,
}

impl RawTurn {
    pub fn user(utterance: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::User,
            utterance: utterance.into(),
            annotations: Annotations::none(),
            call: None,
            results: Vec::new(),
        }
    }

    pub fn system(utterance: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::System,
            ..Self::user(utterance)
        }
    }

    pub fn with_annotations(mut self, annotations: Value) -> Self {
        self.annotations = Annotations(annotations);
        self
    }

    pub fn api_call(call: ApiCall, results: Vec<ResultRecord>) -> Self {
        Self {
            speaker: Speaker::System,
            utterance: call.serialize(),
            annotations: Annotations::none(),
            call: Some(call),
            results,
        }
    }

    pub fn is_api_call(&self) -> bool {
        self.call.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialog {
    pub dialog_id: String,
    pub dataset: Dataset,
    pub split: Split,
    /// Services (schema names) the dialog touches, in first-seen order.
    pub services: Vec<String>,
    pub turns: Vec<RawTurn>,
}

impl Dialog {
    /// Domain families of the dialog's services.
    pub fn domains(&self) -> BTreeSet<String> {
        self.services
            .iter()
            .map(|s| domain_family(s).to_string())
            .collect()
    }

    pub fn is_multi_domain(&self) -> bool {
        self.domains().len() > 1
    }

    /// Turns that came from the source data, i.e. not inserted by splitting.
    pub fn raw_turn_count(&self) -> usize {
        self.turns.iter().filter(|t| !t.is_api_call()).count()
    }

    pub fn sort_key(&self) -> (Dataset, &str, Split) {
        (self.dataset, self.dialog_id.as_str(), self.split)
    }
}

/// An annotation that did not resolve against the loaded schemas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationIssue {
    pub dialog_id: String,
    pub turn_index: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub dataset: Dataset,
    pub schemas: Vec<DomainSchema>,
    pub dialogs: Vec<Dialog>,
    #[serde(default)]
    pub issues: Vec<AnnotationIssue>,
}

impl Corpus {
    pub fn schema(&self, name: &str) -> Option<&DomainSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn schema_map(&self) -> BTreeMap<&str, &DomainSchema> {
        self.schemas.iter().map(|s| (s.name.as_str(), s)).collect()
    }

    /// Dialogs from the given splits only.
    pub fn dialogs_in(&self, splits: &[Split]) -> Vec<&Dialog> {
        self.dialogs
            .iter()
            .filter(|d| splits.contains(&d.split))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_strips_numeric_suffix() {
        assert_eq!(domain_family("Restaurants_1"), "Restaurants");
        assert_eq!(domain_family("RideSharing_12"), "RideSharing");
        assert_eq!(domain_family("hotels"), "hotels");
        assert_eq!(domain_family("hotels_search"), "hotels_search");
        assert_eq!(domain_family("_1"), "_1");
    }

    #[test]
    fn schema_violations_detected() {
        let schema = DomainSchema {
            name: "X_1".into(),
            domain: "X".into(),
            description: String::new(),
            intents: vec![Intent {
                name: "Do".into(),
                description: String::new(),
                relevant_slots: vec!["missing".into()],
            }],
            slots: vec![SlotDef {
                name: "cat".into(),
                description: String::new(),
                is_categorical: true,
                possible_values: vec![],
            }],
        };
        let v = schema.violations();
        assert_eq!(v.len(), 2, "{v:?}");
    }
}

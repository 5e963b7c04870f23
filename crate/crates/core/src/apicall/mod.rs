//! Structured external queries: the `ApiCall(...)` / `EntityQuery(...)` text
//! format emitted as system output on query turns.
//!
//! Input is parsed permissively (quoted or bare values, with or without the
//! `parameters=` keyword and braces). Output always uses one canonical form:
//!
//! ```text
//! ApiCall(method='FindBus', parameters={'from_city': 'Anaheim', 'to_city': 'Fresno'})
//! ```
//!
//! Parameters are ordered lexicographically by name. Inside quotes, `\` and
//! `'` are escaped with a backslash.

mod fuzzy;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use fuzzy::{fuzzy_match, normalize_for_match, FuzzyMatch, DEFAULT_FUZZY_THRESHOLD};
pub use parse::{parse_api_call, MalformedCall};

/// Which kind of external query a call performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvokeType {
    ApiCall,
    EntityQuery,
}

impl InvokeType {
    pub fn prefix(self) -> &'static str {
        match self {
            InvokeType::ApiCall => "ApiCall",
            InvokeType::EntityQuery => "EntityQuery",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCall {
    pub invoke: InvokeType,
    pub method: String,
    pub params: BTreeMap<String, String>,
}

impl ApiCall {
    pub fn new(invoke: InvokeType, method: impl Into<String>) -> Self {
        Self {
            invoke,
            method: method.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn api(method: impl Into<String>) -> Self {
        Self::new(InvokeType::ApiCall, method)
    }

    pub fn entity_query(method: impl Into<String>) -> Self {
        Self::new(InvokeType::EntityQuery, method)
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(name.into(), value.into());
        self
    }

    /// Canonical single-line text form.
    pub fn serialize(&self) -> String {
        serialize_api_call(self)
    }
}

impl fmt::Display for ApiCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_api_call(self))
    }
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('\'');
    for c in s.chars() {
        if c == '\\' || c == '\'' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
}

pub fn serialize_api_call(call: &ApiCall) -> String {
    let mut out = String::with_capacity(32 + call.params.len() * 24);
    out.push_str(call.invoke.prefix());
    out.push_str("(method=");
    push_quoted(&mut out, &call.method);
    out.push_str(", parameters={");
    for (i, (name, value)) in call.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        push_quoted(&mut out, name);
        out.push_str(": ");
        push_quoted(&mut out, value);
    }
    out.push_str("})");
    out
}

/// Method names compare case-insensitively with non-alphanumerics removed.
pub fn normalize_method(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Parameter names use the same normalization as method names.
pub fn normalize_param_name(name: &str) -> String {
    normalize_method(name)
}

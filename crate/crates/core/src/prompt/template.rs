use std::path::Path;

use super::PromptError;

pub const PLACEHOLDERS: [&str; 6] = [
    "domains",
    "actions",
    "schemas",
    "history",
    "api_results",
    "last_user_utterance",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub body: String,
}

/// A prompt template: named sections rendered in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub sections: Vec<Section>,
}

impl Template {
    /// Parse the `@@ <section>` format. Lines starting with `#` before the
    /// first section are comments.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut sections: Vec<Section> = Vec::new();
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("@@") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(PromptError::Template("section without a name".into()));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(PromptError::Template(format!("duplicate section `{name}`")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    body: String::new(),
                });
                continue;
            }
            match sections.last_mut() {
                Some(s) => {
                    if !s.body.is_empty() {
                        s.body.push('\n');
                    }
                    s.body.push_str(line);
                }
                None if line.starts_with('#') || line.trim().is_empty() => {}
                None => {
                    return Err(PromptError::Template(
                        "text before the first section".into(),
                    ))
                }
            }
        }
        if sections.is_empty() {
            return Err(PromptError::Template("no sections".into()));
        }
        for s in &sections {
            for name in placeholders_in(&s.body) {
                if !PLACEHOLDERS.contains(&name.as_str()) {
                    return Err(PromptError::Template(format!(
                        "unknown placeholder `{{{name}}}` in section `{}`",
                        s.name
                    )));
                }
            }
        }
        Ok(Self { sections })
    }

    pub fn section_names(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.name.as_str()).collect()
    }
}

fn placeholders_in(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) => {
                let name = &after[..end];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    out.push(name.to_string());
                }
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Substitute `{name}` placeholders in one pass, so inserted values are never
/// re-scanned.
pub fn fill(body: &str, lookup: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let replaced = after.find('}').and_then(|end| {
            let name = &after[..end];
            lookup(name).map(|v| (v, end))
        });
        match replaced {
            Some((value, end)) => {
                out.push_str(&value);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// The fine-tuning and baseline templates of one version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub version: String,
    pub finetune: Template,
    pub baseline: Template,
}

const BUILTIN_FINETUNE: &str = include_str!("../../templates/v1/finetune.txt");
const BUILTIN_BASELINE: &str = include_str!("../../templates/v1/baseline.txt");

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            version: "v1".into(),
            finetune: Template::parse(BUILTIN_FINETUNE).expect("builtin finetune template"),
            baseline: Template::parse(BUILTIN_BASELINE).expect("builtin baseline template"),
        }
    }

    /// Load `finetune.txt` and `baseline.txt` from a directory; the version
    /// is the directory name.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map_err(|e| PromptError::Template(format!("{}: {e}", path.display())))
        };
        Ok(Self {
            version: dir
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("custom")
                .to_string(),
            finetune: Template::parse(&read("finetune.txt")?)?,
            baseline: Template::parse(&read("baseline.txt")?)?,
        })
    }
}

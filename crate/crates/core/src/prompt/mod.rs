//! Prompt rendering from an example's annotation-free context.
//!
//! Wording lives in versioned template files (see `templates/`); this module
//! fills the placeholders, drops empty optional sections and fits the
//! history into a whitespace-unit budget.

mod template;
mod truncate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DomainSchema;
use crate::transform::{render_results, HistoryEntry, HistoryRole, PromptContext};

pub use template::{fill, Section, Template, TemplateSet, PLACEHOLDERS};
pub use truncate::{count_units, truncate_history, Truncation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no schema covers domain `{0}`")]
    MissingSchema(String),
    #[error("prompt needs at least {needed} units but the budget is {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error("invalid prompt config: {0}")]
    InvalidConfig(String),
    #[error("template: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    #[default]
    Finetune,
    Baseline,
}

impl std::str::FromStr for TemplateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "finetune" => Ok(Self::Finetune),
            "baseline" => Ok(Self::Baseline),
            other => Err(format!("unknown template `{other}` (finetune|baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub template: TemplateKind,
    /// Budget for the whole prompt, in whitespace-delimited units.
    pub max_context_units: usize,
    pub include_api_results: bool,
    /// List `EntityQuery` among the possible actions.
    pub allow_entity_query: bool,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            template: TemplateKind::Finetune,
            max_context_units: 2048,
            include_api_results: true,
            allow_entity_query: false,
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        if self.max_context_units == 0 {
            return Err(PromptError::InvalidConfig(
                "max_context_units must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    /// Sections present in the output, in order.
    pub sections: Vec<String>,
    /// History entries dropped to fit the budget.
    pub dropped_turns: usize,
}

fn check_schemas<'a>(ctx: &'a PromptContext) -> Result<Vec<&'a DomainSchema>, PromptError> {
    if ctx.domains.is_empty() {
        return Err(PromptError::MissingSchema("<none>".into()));
    }
    for d in &ctx.domains {
        if !ctx.schemas.iter().any(|s| &s.domain == d || &s.name == d) {
            return Err(PromptError::MissingSchema(d.clone()));
        }
    }
    Ok(ctx.schemas.iter().collect())
}

/// Schemas as indented text, slots in schema order.
pub fn render_schemas(schemas: &[&DomainSchema]) -> String {
    let mut out = String::new();
    for (i, s) in schemas.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Schema {}", s.name));
        if !s.description.is_empty() {
            out.push_str(&format!(": {}", s.description));
        }
        out.push('\n');
        out.push_str("  Intents:\n");
        for intent in &s.intents {
            out.push_str(&format!("  - {}", intent.name));
            if !intent.description.is_empty() {
                out.push_str(&format!(": {}", intent.description));
            }
            out.push_str(&format!(
                " [slots: {}]\n",
                if intent.relevant_slots.is_empty() {
                    "none".to_string()
                } else {
                    intent.relevant_slots.join(", ")
                }
            ));
        }
        out.push_str("  Slots:\n");
        for slot in &s.slots {
            out.push_str(&format!("  - {}", slot.name));
            if !slot.description.is_empty() {
                out.push_str(&format!(": {}", slot.description));
            }
            if slot.is_categorical && !slot.possible_values.is_empty() {
                out.push_str(&format!(" (one of: {})", slot.possible_values.join(", ")));
            }
            out.push('\n');
        }
    }
    out.trim_end().to_string()
}

fn role_label(role: HistoryRole) -> &'static str {
    match role {
        HistoryRole::User => "User",
        HistoryRole::System => "System",
        HistoryRole::ApiCall => "System",
        HistoryRole::ApiResult => "Results",
    }
}

pub fn render_history(history: &[HistoryEntry]) -> String {
    history
        .iter()
        .map(|e| match e.role {
            HistoryRole::ApiResult => format!("{}:\n{}", role_label(e.role), e.text),
            _ => format!("{}: {}", role_label(e.role), e.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_actions(allow_entity_query: bool) -> String {
    let mut lines = vec![
        "- respond: reply to the user, giving information or confirming".to_string(),
        "- request: ask the user for a missing slot value".to_string(),
        "- ApiCall: query a service, written ApiCall(method='<intent>', parameters={'<slot>': '<value>'})"
            .to_string(),
    ];
    if allow_entity_query {
        lines.push(
            "- EntityQuery: look up knowledge about an entity, written EntityQuery(method='<domain>', parameters={'entity': '<name>'})"
                .to_string(),
        );
    }
    lines.join("\n")
}

/// Values for every placeholder, given an already-truncated history.
struct Fields {
    domains: String,
    actions: String,
    schemas: String,
    history: String,
    api_results: String,
    last_user: String,
}

fn fields_for(ctx: &PromptContext, history: &[HistoryEntry], config: &PromptConfig) -> Result<Fields, PromptError> {
    let schemas = check_schemas(ctx)?;
    // The current user utterance gets its own section, so it is not repeated
    // at the end of the history.
    let shown = match history.last() {
        Some(e) if e.role == HistoryRole::User && e.text == ctx.last_user_utterance => &history[..history.len() - 1],
        _ => history,
    };
    let api_results = match (&ctx.api_results, config.include_api_results) {
        (Some(records), true) if records.is_empty() => "(no results)".to_string(),
        (Some(records), true) => render_results(records),
        _ => String::new(),
    };
    Ok(Fields {
        domains: ctx.domains.join(", "),
        actions: render_actions(config.allow_entity_query),
        schemas: render_schemas(&schemas),
        history: render_history(shown),
        api_results,
        last_user: ctx.last_user_utterance.clone(),
    })
}

fn assemble(template: &Template, f: &Fields) -> (String, Vec<String>) {
    let lookup = |name: &str| -> Option<String> {
        Some(match name {
            "domains" => f.domains.clone(),
            "actions" => f.actions.clone(),
            "schemas" => f.schemas.clone(),
            "history" => f.history.clone(),
            "api_results" => f.api_results.clone(),
            "last_user_utterance" => f.last_user.clone(),
            _ => return None,
        })
    };
    let mut parts = Vec::new();
    let mut names = Vec::new();
    for section in &template.sections {
        let skip = match section.name.as_str() {
            "history" => f.history.is_empty(),
            "api_results" => f.api_results.is_empty(),
            _ => false,
        };
        if skip {
            continue;
        }
        parts.push(fill(&section.body, lookup).trim_end().to_string());
        names.push(section.name.clone());
    }
    (parts.join("\n\n") + "\n", names)
}

/// Render with the given template, truncating history to fit the budget.
pub fn render_with(
    template: &Template,
    ctx: &PromptContext,
    config: &PromptConfig,
) -> Result<RenderedPrompt, PromptError> {
    config.validate()?;
    check_schemas(ctx)?;
    let measure = |h: &[HistoryEntry]| -> usize {
        match fields_for(ctx, h, config) {
            Ok(f) => count_units(&assemble(template, &f).0),
            Err(_) => usize::MAX,
        }
    };
    let t = truncate_history(&ctx.history, config.max_context_units, measure)?;
    let fields = fields_for(ctx, &t.history, config)?;
    let (text, sections) = assemble(template, &fields);
    Ok(RenderedPrompt {
        text,
        sections,
        dropped_turns: t.dropped,
    })
}

pub fn render_prompt(
    templates: &TemplateSet,
    ctx: &PromptContext,
    config: &PromptConfig,
) -> Result<RenderedPrompt, PromptError> {
    let template = match config.template {
        TemplateKind::Finetune => &templates.finetune,
        TemplateKind::Baseline => &templates.baseline,
    };
    render_with(template, ctx, config)
}

/// Fine-tuning prompt with the built-in templates.
pub fn render_finetune_prompt(ctx: &PromptContext, config: &PromptConfig) -> Result<String, PromptError> {
    let config = PromptConfig {
        template: TemplateKind::Finetune,
        ..config.clone()
    };
    render_prompt(&TemplateSet::builtin(), ctx, &config).map(|r| r.text)
}

/// Instruction-heavy prompt for general chat models.
pub fn render_baseline_prompt(ctx: &PromptContext, config: &PromptConfig) -> Result<String, PromptError> {
    let config = PromptConfig {
        template: TemplateKind::Baseline,
        ..config.clone()
    };
    render_prompt(&TemplateSet::builtin(), ctx, &config).map(|r| r.text)
}

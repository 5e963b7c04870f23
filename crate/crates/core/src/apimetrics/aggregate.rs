use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ApiTurnScore;
use crate::corpus::Dataset;
use crate::textmetrics::{NgramStats, ScoredPair};
use crate::transform::{ResponseCategory, SplitTag};

pub const API_METRICS: [&str; 5] = [
    "invoke_accuracy",
    "method_accuracy",
    "param_name_accuracy",
    "param_value_accuracy",
    "full_api_accuracy",
];
pub const STRICT_METRICS: [&str; 2] = ["param_name_exact_accuracy", "param_value_exact_accuracy"];
pub const AUX_METRICS: [&str; 2] = ["param_value_similarity", "false_invoke_rate"];
pub const TEXT_METRICS: [&str; 2] = ["bleu4", "gleu"];

/// What a report row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ApiCall,
    ApiCallMultiDomain,
    /// Every response turn regardless of category.
    Response,
    Retrieval,
    SlotFill,
    General,
    ResponseMultiDomain,
    /// Statistics kept out of the main tables.
    Auxiliary,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::ApiCall => "api_call",
            Task::ApiCallMultiDomain => "api_call_multi_domain",
            Task::Response => "response",
            Task::Retrieval => "retrieval",
            Task::SlotFill => "slot_fill",
            Task::General => "general",
            Task::ResponseMultiDomain => "response_multi_domain",
            Task::Auxiliary => "auxiliary",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Split column of a report row: one of the tags, or their union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitGroup {
    Seen,
    Unseen,
    Mixed,
    All,
}

impl SplitGroup {
    pub const ORDER: [SplitGroup; 4] = [
        SplitGroup::Seen,
        SplitGroup::Unseen,
        SplitGroup::Mixed,
        SplitGroup::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitGroup::Seen => "seen",
            SplitGroup::Unseen => "unseen",
            SplitGroup::Mixed => "mixed",
            SplitGroup::All => "all",
        }
    }

    fn of(tag: SplitTag) -> Self {
        match tag {
            SplitTag::Seen => SplitGroup::Seen,
            SplitTag::Unseen => SplitGroup::Unseen,
            SplitTag::Mixed => SplitGroup::Mixed,
        }
    }
}

impl fmt::Display for SplitGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: Dataset,
    pub task: Task,
    pub split_tag: SplitGroup,
    pub metric: String,
    pub value: f64,
    pub support_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<ReportRow>,
}

impl MetricReport {
    pub fn get(&self, dataset: Dataset, task: Task, split: SplitGroup, metric: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.task == task && r.split_tag == split && r.metric == metric)
    }

    pub fn value(&self, dataset: Dataset, task: Task, split: SplitGroup, metric: &str) -> Option<f64> {
        self.get(dataset, task, split, metric).map(|r| r.value)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r).expect("report rows serialize"));
            out.push('\n');
        }
        out
    }
}

/// A response turn: the scored text pair plus grouping and routing facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTurn {
    pub example_id: String,
    pub pair: ScoredPair,
    pub is_multi_domain: bool,
    /// The prediction was a call attempt although gold is a response.
    pub predicted_call: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateOptions {
    /// Also emit the all-or-nothing parameter accuracies.
    pub strict: bool,
}

/// Count/sum accumulator for API turn scores; `merge` is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ApiAccumulator {
    pub n: usize,
    pub invoke: usize,
    pub method: usize,
    pub name_sum: f64,
    pub value_sum: f64,
    pub full: usize,
    pub names_exact: usize,
    pub values_exact: usize,
    pub similarity_sum: f64,
}

impl ApiAccumulator {
    pub fn add(mut self, s: &ApiTurnScore) -> Self {
        let s = &s.score;
        self.n += 1;
        self.invoke += s.invoke_ok as usize;
        self.method += s.method_ok as usize;
        self.name_sum += s.param_name_frac;
        self.value_sum += s.param_value_frac;
        self.full += s.full_ok as usize;
        self.names_exact += s.param_names_exact as usize;
        self.values_exact += s.param_values_exact as usize;
        self.similarity_sum += s.value_similarity;
        self
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            n: self.n + o.n,
            invoke: self.invoke + o.invoke,
            method: self.method + o.method,
            name_sum: self.name_sum + o.name_sum,
            value_sum: self.value_sum + o.value_sum,
            full: self.full + o.full,
            names_exact: self.names_exact + o.names_exact,
            values_exact: self.values_exact + o.values_exact,
            similarity_sum: self.similarity_sum + o.similarity_sum,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let v = match name {
            "invoke_accuracy" => self.invoke as f64 / n,
            "method_accuracy" => self.method as f64 / n,
            "param_name_accuracy" => self.name_sum / n,
            "param_value_accuracy" => self.value_sum / n,
            "full_api_accuracy" => self.full as f64 / n,
            "param_name_exact_accuracy" => self.names_exact as f64 / n,
            "param_value_exact_accuracy" => self.values_exact as f64 / n,
            "param_value_similarity" => self.similarity_sum / n,
            _ => return None,
        };
        Some(v.clamp(0.0, 1.0))
    }
}

fn response_task(c: ResponseCategory) -> Task {
    match c {
        ResponseCategory::SlotFill => Task::SlotFill,
        ResponseCategory::Retrieval => Task::Retrieval,
        ResponseCategory::General => Task::General,
    }
}

#[derive(Default)]
struct TextGroup {
    stats: NgramStats,
    gleu_sum: f64,
    n: usize,
    false_invokes: usize,
}

impl TextGroup {
    fn add(&mut self, s: NgramStats, predicted_call: bool) {
        self.stats = self.stats.merge(s);
        self.gleu_sum += s.gleu();
        self.n += 1;
        self.false_invokes += predicted_call as usize;
    }
}

fn row(dataset: Dataset, task: Task, split: SplitGroup, metric: &str, value: f64, n: usize) -> ReportRow {
    ReportRow {
        dataset,
        task,
        split_tag: split,
        metric: metric.to_string(),
        value,
        support_count: n,
    }
}

/// Group means per dataset and split tag; ALL rows are computed over the
/// union of turns. Input order does not matter: turns are processed sorted
/// by example id.
pub fn aggregate(
    api: &[ApiTurnScore],
    responses: &[ResponseTurn],
    options: AggregateOptions,
) -> MetricReport {
    let mut api_sorted: Vec<&ApiTurnScore> = api.iter().collect();
    api_sorted.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    let mut resp_sorted: Vec<&ResponseTurn> = responses.iter().collect();
    resp_sorted.sort_by(|a, b| a.example_id.cmp(&b.example_id));

    let mut api_groups: BTreeMap<(Dataset, Task, SplitGroup), ApiAccumulator> = BTreeMap::new();
    for s in api_sorted {
        let mut tasks = vec![Task::ApiCall];
        if s.is_multi_domain {
            tasks.push(Task::ApiCallMultiDomain);
        }
        for task in tasks {
            for split in [SplitGroup::of(s.split_tag), SplitGroup::All] {
                let acc = api_groups.entry((s.dataset, task, split)).or_default();
                *acc = acc.add(s);
            }
        }
    }

    let mut text_groups: BTreeMap<(Dataset, Task, SplitGroup), TextGroup> = BTreeMap::new();
    for r in resp_sorted {
        let stats = NgramStats::of(&r.pair.prediction, &r.pair.reference);
        let mut tasks = vec![Task::Response, response_task(r.pair.category)];
        if r.is_multi_domain {
            tasks.push(Task::ResponseMultiDomain);
        }
        for task in tasks {
            for split in [SplitGroup::of(r.pair.split_tag), SplitGroup::All] {
                text_groups
                    .entry((r.pair.dataset, task, split))
                    .or_default()
                    .add(stats, r.predicted_call);
            }
        }
    }

    let mut rows = Vec::new();
    for (&(dataset, task, split), acc) in &api_groups {
        let mut metrics: Vec<&str> = API_METRICS.to_vec();
        if options.strict {
            metrics.extend(STRICT_METRICS);
        }
        for m in metrics {
            rows.push(row(dataset, task, split, m, acc.metric(m).unwrap_or(0.0), acc.n));
        }
        if task == Task::ApiCall {
            rows.push(row(
                dataset,
                Task::Auxiliary,
                split,
                "param_value_similarity",
                acc.metric("param_value_similarity").unwrap_or(0.0),
                acc.n,
            ));
        }
    }
    for (&(dataset, task, split), g) in &text_groups {
        rows.push(row(dataset, task, split, "bleu4", g.stats.bleu(), g.n));
        rows.push(row(dataset, task, split, "gleu", g.gleu_sum / g.n as f64, g.n));
        if task == Task::Response {
            rows.push(row(
                dataset,
                Task::Auxiliary,
                split,
                "false_invoke_rate",
                g.false_invokes as f64 / g.n as f64,
                g.n,
            ));
        }
    }
    rows.sort_by(|a, b| {
        (a.dataset, a.task, a.split_tag)
            .cmp(&(b.dataset, b.task, b.split_tag))
            .then_with(|| metric_rank(&a.metric).cmp(&metric_rank(&b.metric)))
    });
    MetricReport { rows }
}

fn metric_rank(m: &str) -> usize {
    API_METRICS
        .iter()
        .chain(STRICT_METRICS.iter())
        .chain(AUX_METRICS.iter())
        .chain(TEXT_METRICS.iter())
        .position(|x| *x == m)
        .unwrap_or(usize::MAX)
}

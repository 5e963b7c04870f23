//! The committed 20-example corruption fixture and its hand-scored oracle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tod_harness::apimetrics::{SplitGroup, Task, API_METRICS};
use tod_harness::corpus::Dataset;
use tod_harness::prompt::TemplateSet;
use tod_harness::runner::{evaluate, EvalConfig, RunResult, ScriptedClient};
use tod_harness::transform::{read_examples, Example};

pub const ORACLE_TOL: f64 = 1e-12;

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eval20")
}

pub fn examples() -> Vec<Example> {
    read_examples(&dir().join("examples.jsonl")).unwrap()
}

pub fn run(concurrency: usize) -> RunResult {
    let client = ScriptedClient::from_file(&dir().join("recording.jsonl")).unwrap();
    let config = EvalConfig {
        concurrency,
        strict: true,
        ..EvalConfig::default()
    };
    evaluate(&examples(), &client, &TemplateSet::builtin(), &config).unwrap()
}

#[derive(Deserialize)]
struct TurnFacts {
    invoke: bool,
    method: bool,
    names: [u32; 2],
    values: [u32; 2],
    full: bool,
}

#[derive(Deserialize)]
struct BleuCounts {
    matches: [u32; 4],
    pred: [u32; 4],
    pred_len: u32,
    ref_len: u32,
}

impl BleuCounts {
    /// Closed form over the hand counts; every order has matches here.
    fn value(&self) -> f64 {
        let log_mean = (0..4)
            .map(|i| (self.matches[i] as f64 / self.pred[i] as f64).ln())
            .sum::<f64>()
            / 4.0;
        let bp = if self.pred_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.pred_len as f64).exp()
        };
        bp * log_mean.exp()
    }
}

#[derive(Deserialize)]
struct Oracle {
    per_turn: BTreeMap<String, TurnFacts>,
    api_call: BTreeMap<SplitGroup, BTreeMap<String, serde_json::Value>>,
    response_gleu: BTreeMap<String, BTreeMap<SplitGroup, [u32; 2]>>,
    response_bleu: BTreeMap<String, BTreeMap<SplitGroup, BleuCounts>>,
    false_invoke_rate: BTreeMap<SplitGroup, [u32; 2]>,
    n_errors: usize,
}

fn ratio(v: [u32; 2]) -> f64 {
    v[0] as f64 / v[1] as f64
}

fn task_named(name: &str) -> Task {
    serde_json::from_value(serde_json::Value::String(name.into())).unwrap()
}

fn close(got: Option<f64>, want: f64, what: &str) -> Result<(), String> {
    match got {
        Some(g) if (g - want).abs() < ORACLE_TOL => Ok(()),
        other => Err(format!("{what}: got {other:?}, oracle {want}")),
    }
}

/// Compare a run of the fixture against the oracle; the error names the
/// first mismatch. Returns the number of values compared.
pub fn check(run: &RunResult) -> Result<usize, String> {
    let oracle: Oracle = serde_json::from_str(&std::fs::read_to_string(dir().join("oracle.json")).unwrap())
        .map_err(|e| e.to_string())?;
    let mut checked = 0;
    if run.manifest.n_errors != oracle.n_errors {
        return Err(format!("n_errors {} vs {}", run.manifest.n_errors, oracle.n_errors));
    }
    for r in run.records.iter().filter(|r| r.api_score.is_some()) {
        let s = r.api_score.unwrap();
        let key = r.example_id.split(':').nth(2).unwrap();
        let f = oracle.per_turn.get(key).ok_or(format!("{key} missing from oracle"))?;
        if (s.invoke_ok, s.method_ok, s.full_ok) != (f.invoke, f.method, f.full) {
            return Err(format!("{key}: invoke/method/full differ"));
        }
        close(Some(s.param_name_frac), ratio(f.names), &format!("{key} names"))?;
        close(Some(s.param_value_frac), ratio(f.values), &format!("{key} values"))?;
        checked += 5;
    }
    let report = &run.report;
    for (split, metrics) in &oracle.api_call {
        for m in API_METRICS {
            let v: [u32; 2] = serde_json::from_value(metrics[m].clone()).unwrap();
            close(report.value(Dataset::Sgd, Task::ApiCall, *split, m), ratio(v), &format!("{split} {m}"))?;
            checked += 1;
        }
    }
    for (task, by_split) in &oracle.response_gleu {
        for (split, v) in by_split {
            let got = report.value(Dataset::Sgd, task_named(task), *split, "gleu");
            close(got, ratio(*v), &format!("{task} {split} gleu"))?;
            checked += 1;
        }
    }
    for (task, by_split) in &oracle.response_bleu {
        for (split, counts) in by_split {
            let got = report.value(Dataset::Sgd, task_named(task), *split, "bleu4");
            close(got, counts.value(), &format!("{task} {split} bleu4"))?;
            checked += 1;
        }
    }
    for (split, v) in &oracle.false_invoke_rate {
        let got = report.value(Dataset::Sgd, Task::Auxiliary, *split, "false_invoke_rate");
        close(got, ratio(*v), &format!("{split} false_invoke_rate"))?;
        checked += 1;
    }
    Ok(checked)
}

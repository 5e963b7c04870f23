use std::collections::BTreeSet;

use super::aggregate::{MetricReport, SplitGroup, Task, API_METRICS};
use crate::corpus::Dataset;

const API_HEADERS: [&str; 5] = ["Invoke", "Method", "Param Names", "Param Values", "Full API"];
const RESPONSE_COLUMNS: [(Task, &str, &str); 6] = [
    (Task::Response, "bleu4", "Response BLEU"),
    (Task::Response, "gleu", "Response GLEU"),
    (Task::Retrieval, "bleu4", "Retrieval BLEU"),
    (Task::Retrieval, "gleu", "Retrieval GLEU"),
    (Task::SlotFill, "bleu4", "Slot-Fill BLEU"),
    (Task::SlotFill, "gleu", "Slot-Fill GLEU"),
];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

fn render_grid(title: &str, model: &str, headers: &[&str], rows: &[(SplitGroup, Vec<String>)]) -> String {
    let split_width = SplitGroup::ORDER.iter().map(|s| s.as_str().len()).max().unwrap_or(0);
    let mut widths: Vec<usize> = vec!["Model".len().max(model.len()), "Split".len().max(split_width)];
    widths.extend(headers.iter().map(|h| h.len().max(6)));
    let line = |cells: Vec<String>| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("| {} |", padded.join(" | "))
    };
    let mut out = format!("{title}\n");
    let mut header = vec!["Model".to_string(), "Split".to_string()];
    header.extend(headers.iter().map(|h| h.to_string()));
    out.push_str(&line(header));
    out.push('\n');
    out.push_str(&format!(
        "|{}|\n",
        widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
    ));
    for (split, cells) in rows {
        let mut all = vec![model.to_string(), split.as_str().to_string()];
        all.extend(cells.iter().cloned());
        out.push_str(&line(all));
        out.push('\n');
    }
    out
}

fn splits_present(report: &MetricReport, dataset: Dataset, tasks: &[Task]) -> Vec<SplitGroup> {
    let present: BTreeSet<SplitGroup> = report
        .rows
        .iter()
        .filter(|r| r.dataset == dataset && tasks.contains(&r.task))
        .map(|r| r.split_tag)
        .collect();
    SplitGroup::ORDER.into_iter().filter(|s| present.contains(s)).collect()
}

/// Human-readable tables, values to four decimals: per dataset, a response
/// table (omitted with a note when there are no response turns), an API
/// table, and an API table restricted to multi-domain dialogs.
pub fn render_tables(report: &MetricReport, model: &str) -> String {
    let datasets: BTreeSet<Dataset> = report.rows.iter().map(|r| r.dataset).collect();
    if datasets.is_empty() {
        return "No examples were evaluated.\n".to_string();
    }
    let mut out = String::new();
    for dataset in datasets {
        let name = dataset.as_str().to_uppercase();
        let resp_splits = splits_present(report, dataset, &[Task::Response]);
        if resp_splits.is_empty() {
            out.push_str(&format!(
                "{name}: response generation table omitted (no response turns).\n\n"
            ));
        } else {
            let rows: Vec<(SplitGroup, Vec<String>)> = resp_splits
                .iter()
                .map(|&s| {
                    let cells = RESPONSE_COLUMNS
                        .iter()
                        .map(|(task, metric, _)| cell(report.value(dataset, *task, s, metric)))
                        .collect();
                    (s, cells)
                })
                .collect();
            let headers: Vec<&str> = RESPONSE_COLUMNS.iter().map(|c| c.2).collect();
            out.push_str(&render_grid(
                &format!("{name}: response generation"),
                model,
                &headers,
                &rows,
            ));
            out.push('\n');
        }
        for (task, title) in [
            (Task::ApiCall, "API calls"),
            (Task::ApiCallMultiDomain, "API calls, multi-domain dialogs"),
        ] {
            let splits = splits_present(report, dataset, &[task]);
            if splits.is_empty() {
                out.push_str(&format!("{name}: {title} table omitted (no such turns).\n\n"));
                continue;
            }
            let rows: Vec<(SplitGroup, Vec<String>)> = splits
                .iter()
                .map(|&s| {
                    let cells = API_METRICS
                        .iter()
                        .map(|m| cell(report.value(dataset, task, s, m)))
                        .collect();
                    (s, cells)
                })
                .collect();
            out.push_str(&render_grid(&format!("{name}: {title}"), model, &API_HEADERS, &rows));
            out.push('\n');
        }
    }
    out
}

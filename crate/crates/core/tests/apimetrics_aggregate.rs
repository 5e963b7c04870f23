use std::collections::BTreeMap;

use proptest::prelude::*;
use serde::Deserialize;
use tod_harness::apicall::{ApiCall, DEFAULT_FUZZY_THRESHOLD};
use tod_harness::apimetrics::{
    aggregate, score_api_turn, AggregateOptions, ApiAccumulator, ApiTurnScore, MetricReport, ResponseTurn,
    SplitGroup, Task, API_METRICS, STRICT_METRICS,
};
use tod_harness::corpus::Dataset;
use tod_harness::textmetrics::ScoredPair;
use tod_harness::transform::{ResponseCategory, SplitTag};

#[derive(Deserialize)]
struct Facts {
    invoke: bool,
    method: bool,
    names: [usize; 2],
    values: [usize; 2],
    full: bool,
    names_exact: bool,
    values_exact: bool,
}

#[derive(Deserialize)]
struct Turn {
    id: String,
    gold: String,
    split: SplitTag,
    multi: bool,
    prediction: String,
    facts: Facts,
}

#[derive(Deserialize)]
struct Fixture {
    golds: BTreeMap<String, ApiCall>,
    turns: Vec<Turn>,
    expected: BTreeMap<SplitGroup, BTreeMap<String, serde_json::Value>>,
}

fn fixture() -> Fixture {
    serde_json::from_str(include_str!("fixtures/api_turns.json")).unwrap()
}

fn scored(f: &Fixture) -> Vec<ApiTurnScore> {
    f.turns
        .iter()
        .map(|t| ApiTurnScore {
            example_id: t.id.clone(),
            score: score_api_turn(&f.golds[&t.gold], &t.prediction, DEFAULT_FUZZY_THRESHOLD),
            is_multi_domain: t.multi,
            split_tag: t.split,
            dataset: Dataset::Sgd,
        })
        .collect()
}

fn frac(v: &serde_json::Value) -> f64 {
    let a = v.as_array().unwrap();
    a[0].as_f64().unwrap() / a[1].as_f64().unwrap()
}

#[test]
fn per_turn_facts_match_hand_scoring() {
    let f = fixture();
    for (t, s) in f.turns.iter().zip(scored(&f)) {
        let s = s.score;
        let ratio = |x: [usize; 2]| x[0] as f64 / x[1] as f64;
        assert_eq!(s.invoke_ok, t.facts.invoke, "{}", t.id);
        assert_eq!(s.method_ok, t.facts.method, "{}", t.id);
        assert!((s.param_name_frac - ratio(t.facts.names)).abs() < 1e-12, "{}", t.id);
        assert!((s.param_value_frac - ratio(t.facts.values)).abs() < 1e-12, "{}", t.id);
        assert_eq!(s.full_ok, t.facts.full, "{}", t.id);
        assert_eq!(s.param_names_exact, t.facts.names_exact, "{}", t.id);
        assert_eq!(s.param_values_exact, t.facts.values_exact, "{}", t.id);
    }
}

#[test]
fn report_equals_hand_computed_means() {
    let f = fixture();
    let report = aggregate(&scored(&f), &[], AggregateOptions { strict: true });
    for (split, expected) in &f.expected {
        let n = expected["n"].as_u64().unwrap() as usize;
        for metric in API_METRICS.iter().chain(&STRICT_METRICS) {
            let row = report.get(Dataset::Sgd, Task::ApiCall, *split, metric).unwrap();
            assert_eq!(row.support_count, n);
            let want = frac(&expected[*metric]);
            assert!((row.value - want).abs() < 1e-12, "{split} {metric}: {} vs {want}", row.value);
        }
    }
    // Only t10 and t11 are multi-domain, and both are mixed.
    for split in [SplitGroup::Mixed, SplitGroup::All] {
        for metric in API_METRICS {
            assert_eq!(
                report.value(Dataset::Sgd, Task::ApiCallMultiDomain, split, metric),
                report.value(Dataset::Sgd, Task::ApiCall, SplitGroup::Mixed, metric),
            );
        }
    }
    assert!(report.get(Dataset::Sgd, Task::ApiCallMultiDomain, SplitGroup::Seen, "invoke_accuracy").is_none());
}

#[test]
fn strict_rows_are_opt_in() {
    let f = fixture();
    let report = aggregate(&scored(&f), &[], AggregateOptions::default());
    assert!(report.rows.iter().all(|r| !STRICT_METRICS.contains(&r.metric.as_str())));
}

fn response(id: &str, pred: &str, gold: &str, cat: ResponseCategory, split: SplitTag, predicted_call: bool) -> ResponseTurn {
    ResponseTurn {
        example_id: id.into(),
        pair: ScoredPair {
            prediction: pred.into(),
            reference: gold.into(),
            category: cat,
            split_tag: split,
            dataset: Dataset::Ketod,
        },
        is_multi_domain: false,
        predicted_call,
    }
}

#[test]
fn response_rows_and_false_invokes() {
    let turns = vec![
        response("a", "Goodbye!", "Goodbye!", ResponseCategory::General, SplitTag::Seen, false),
        response("b", "ApiCall(method='X', parameters={})", "Which city?", ResponseCategory::SlotFill, SplitTag::Seen, true),
        response("c", "It is sunny.", "It is sunny.", ResponseCategory::Retrieval, SplitTag::Unseen, false),
    ];
    let report = aggregate(&[], &turns, AggregateOptions::default());
    let v = |task, split, m| report.value(Dataset::Ketod, task, split, m).unwrap();
    assert_eq!(v(Task::General, SplitGroup::Seen, "gleu"), 1.0);
    assert_eq!(v(Task::SlotFill, SplitGroup::Seen, "gleu"), 0.0);
    assert_eq!(v(Task::Retrieval, SplitGroup::All, "bleu4"), 1.0);
    assert!((v(Task::Response, SplitGroup::All, "gleu") - 2.0 / 3.0).abs() < 1e-12);
    assert!((v(Task::Auxiliary, SplitGroup::All, "false_invoke_rate") - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(v(Task::Auxiliary, SplitGroup::Seen, "false_invoke_rate"), 0.5);
    assert!(report.get(Dataset::Ketod, Task::ApiCall, SplitGroup::All, "invoke_accuracy").is_none());
}

// Randomized score sets built by scoring corrupted predictions, so every
// score is one the scorer can actually produce.

#[derive(Debug, Clone)]
enum Corruption {
    None,
    DropParam(usize),
    RenameParam(usize),
    ChangeValue(usize),
    TypoValue(usize),
    ExtraParam,
    WrongMethod,
    WrongType,
    PlainText,
    Truncate(usize),
}

fn corruption() -> impl Strategy<Value = Corruption> {
    prop_oneof![
        Just(Corruption::None),
        any::<usize>().prop_map(Corruption::DropParam),
        any::<usize>().prop_map(Corruption::RenameParam),
        any::<usize>().prop_map(Corruption::ChangeValue),
        any::<usize>().prop_map(Corruption::TypoValue),
        Just(Corruption::ExtraParam),
        Just(Corruption::WrongMethod),
        Just(Corruption::WrongType),
        Just(Corruption::PlainText),
        any::<usize>().prop_map(Corruption::Truncate),
    ]
}

fn gold_call() -> impl Strategy<Value = ApiCall> {
    (
        "[A-Z][a-z]{2,8}[A-Z][a-z]{2,8}",
        proptest::collection::btree_map("[a-z]{3,8}(_[a-z]{2,5})?", "[A-Za-z0-9 ]{1,12}", 0..6),
    )
        .prop_map(|(method, params)| ApiCall { invoke: tod_harness::apicall::InvokeType::ApiCall, method, params })
}

fn corrupt(gold: &ApiCall, c: &Corruption) -> String {
    let mut p = gold.clone();
    let keys: Vec<String> = p.params.keys().cloned().collect();
    let pick = |i: &usize| keys.get(i % keys.len().max(1)).cloned();
    match c {
        Corruption::None => {}
        Corruption::DropParam(i) => {
            if let Some(k) = pick(i) {
                p.params.remove(&k);
            }
        }
        Corruption::RenameParam(i) => {
            if let Some(k) = pick(i) {
                let v = p.params.remove(&k).unwrap();
                p.params.insert(format!("zz{k}q"), v);
            }
        }
        Corruption::ChangeValue(i) => {
            if let Some(k) = pick(i) {
                p.params.insert(k, "#####################".into());
            }
        }
        Corruption::TypoValue(i) => {
            if let Some(k) = pick(i) {
                p.params.get_mut(&k).unwrap().push('x');
            }
        }
        Corruption::ExtraParam => {
            p.params.insert("zzextra".into(), "1".into());
        }
        Corruption::WrongMethod => p.method = format!("Other{}", p.method),
        Corruption::WrongType => p.invoke = tod_harness::apicall::InvokeType::EntityQuery,
        Corruption::PlainText => return "Sure, let me check that for you.".into(),
        Corruption::Truncate(i) => {
            let s = p.serialize();
            let cut = 8 + i % (s.len() - 9);
            return s.chars().take(cut).collect();
        }
    }
    p.serialize()
}

fn split_tag() -> impl Strategy<Value = SplitTag> {
    prop_oneof![Just(SplitTag::Seen), Just(SplitTag::Unseen), Just(SplitTag::Mixed)]
}

fn score_set() -> impl Strategy<Value = Vec<ApiTurnScore>> {
    proptest::collection::vec((gold_call(), corruption(), split_tag(), any::<bool>()), 1..30).prop_map(|items| {
        items
            .into_iter()
            .enumerate()
            .map(|(i, (gold, c, split, multi))| ApiTurnScore {
                example_id: format!("ex{i:04}"),
                score: score_api_turn(&gold, &corrupt(&gold, &c), DEFAULT_FUZZY_THRESHOLD),
                is_multi_domain: multi,
                split_tag: split,
                dataset: Dataset::Sgd,
            })
            .collect()
    })
}

fn check_chain(report: &MetricReport) -> Result<(), TestCaseError> {
    for r in report.rows.iter().filter(|r| r.metric == "full_api_accuracy") {
        let v = |m| report.value(r.dataset, r.task, r.split_tag, m).unwrap();
        prop_assert!(v("full_api_accuracy") <= v("method_accuracy") + 1e-12);
        prop_assert!(v("method_accuracy") <= v("invoke_accuracy") + 1e-12);
    }
    Ok(())
}

fn acc_close(a: &ApiAccumulator, b: &ApiAccumulator) -> bool {
    a.n == b.n
        && a.invoke == b.invoke
        && a.method == b.method
        && a.full == b.full
        && a.names_exact == b.names_exact
        && a.values_exact == b.values_exact
        && (a.name_sum - b.name_sum).abs() < 1e-9
        && (a.value_sum - b.value_sum).abs() < 1e-9
        && (a.similarity_sum - b.similarity_sum).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn implication_chain_holds(scores in score_set()) {
        for s in &scores {
            prop_assert!(!s.score.full_ok || s.score.method_ok);
            prop_assert!(!s.score.method_ok || s.score.invoke_ok);
        }
        check_chain(&aggregate(&scores, &[], AggregateOptions { strict: true }))?;
    }

    #[test]
    fn all_row_lies_between_split_rows(scores in score_set()) {
        let report = aggregate(&scores, &[], AggregateOptions::default());
        for metric in API_METRICS {
            let all = report.value(Dataset::Sgd, Task::ApiCall, SplitGroup::All, metric).unwrap();
            let parts: Vec<f64> = [SplitGroup::Seen, SplitGroup::Unseen, SplitGroup::Mixed]
                .iter()
                .filter_map(|s| report.value(Dataset::Sgd, Task::ApiCall, *s, metric))
                .collect();
            let lo = parts.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(all >= lo - 1e-12 && all <= hi + 1e-12);
            let support: usize = [SplitGroup::Seen, SplitGroup::Unseen, SplitGroup::Mixed]
                .iter()
                .filter_map(|s| report.get(Dataset::Sgd, Task::ApiCall, *s, metric))
                .map(|r| r.support_count)
                .sum();
            prop_assert_eq!(support, scores.len());
        }
    }

    #[test]
    fn aggregation_ignores_input_order(scores in score_set(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut shuffled = scores.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let opts = AggregateOptions { strict: true };
        prop_assert_eq!(aggregate(&scores, &[], opts).to_jsonl(), aggregate(&shuffled, &[], opts).to_jsonl());
    }

    #[test]
    fn accumulator_merge_is_associative(scores in score_set(), a in 0usize..30, b in 0usize..30) {
        let (a, b) = (a.min(b).min(scores.len()), a.max(b).min(scores.len()));
        let acc = |s: &[ApiTurnScore]| s.iter().fold(ApiAccumulator::default(), |acc, t| acc.add(t));
        let (x, y, z) = (acc(&scores[..a]), acc(&scores[a..b]), acc(&scores[b..]));
        let left = x.merge(y).merge(z);
        let right = x.merge(y.merge(z));
        prop_assert!(acc_close(&left, &right));
        prop_assert!(acc_close(&left, &acc(&scores)));
    }

    #[test]
    fn corruption_never_improves_a_turn(gold in gold_call(), c in corruption()) {
        let perfect = score_api_turn(&gold, &gold.serialize(), DEFAULT_FUZZY_THRESHOLD);
        let s = score_api_turn(&gold, &corrupt(&gold, &c), DEFAULT_FUZZY_THRESHOLD);
        prop_assert!(perfect.full_ok);
        prop_assert!(s.param_name_frac <= perfect.param_name_frac);
        prop_assert!(s.param_value_frac <= perfect.param_value_frac);
        prop_assert!(s.value_similarity <= perfect.value_similarity + 1e-12);
    }

    #[test]
    fn degrading_one_turn_never_raises_a_mean(scores in score_set(), i in any::<usize>()) {
        let before = aggregate(&scores, &[], AggregateOptions::default());
        let mut worse = scores.clone();
        let k = i % worse.len();
        worse[k].score = score_api_turn(&ApiCall::api("M").with_param("a", "b"), "no call here", DEFAULT_FUZZY_THRESHOLD);
        let after = aggregate(&worse, &[], AggregateOptions::default());
        for metric in API_METRICS {
            let b = before.value(Dataset::Sgd, Task::ApiCall, SplitGroup::All, metric).unwrap();
            let a = after.value(Dataset::Sgd, Task::ApiCall, SplitGroup::All, metric).unwrap();
            prop_assert!(a <= b + 1e-12, "{}: {} > {}", metric, a, b);
        }
    }
}

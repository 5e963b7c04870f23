use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tod_harness::corpus::{
    self, corpus_stats_with, reference_stats, Corpus, Dataset, LanguageFilter, LoadOptions, Split,
    TurnUnit, SGD_ALL_SPLITS_DOMAINS,
};
use tod_harness::prompt::{render_prompt, PromptConfig, TemplateKind, TemplateSet};
use tod_harness::runner::{
    evaluate, format_report, generate_report, read_run, write_run, EvalConfig, EvalError,
    GenerationClient, GoldenClient, HttpClient, HttpConfig, ReportFormat, ScriptedClient,
};
use tod_harness::transform::{build_examples, read_examples, write_examples, BuildConfig, TrainDomains};

#[derive(Parser)]
#[command(name = "tod-harness", version, about = "Task-oriented dialog corpus compiler and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a raw dataset, print its statistics and optionally save the corpus.
    Ingest {
        /// sgd, ketod or bitod
        dataset: Dataset,
        dir: PathBuf,
        /// Comma-separated splits to load (default: all).
        #[arg(long, value_delimiter = ',')]
        splits: Option<Vec<Split>>,
        /// BiToD language: en, zh or all.
        #[arg(long, default_value = "en")]
        language: LanguageFilter,
        /// KETOD: directory holding the SGD schema files.
        #[arg(long)]
        schemas: Option<PathBuf>,
        /// Write the unified corpus as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero when the statistics differ from the published ones.
        #[arg(long)]
        check: bool,
    },
    /// Compile a saved corpus into an example set (JSONL).
    Build {
        #[arg(long)]
        corpus: PathBuf,
        /// One training domain per line.
        #[arg(long)]
        train_domains: PathBuf,
        /// Template set: `v1` (built in) or a directory with finetune.txt and baseline.txt.
        #[arg(long, default_value = "v1")]
        template: String,
        #[arg(long, default_value_t = 3)]
        max_results: usize,
        /// Comma-separated source splits (default: all).
        #[arg(long, value_delimiter = ',')]
        splits: Option<Vec<Split>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate and score predictions for an example set.
    Evaluate {
        #[arg(long)]
        examples: PathBuf,
        /// golden | scripted:<file> | http:<url>
        #[arg(long)]
        client: String,
        #[arg(long, default_value_t = 8)]
        concurrency: usize,
        #[arg(long, default_value_t = tod_harness::apicall::DEFAULT_FUZZY_THRESHOLD)]
        fuzzy_threshold: f64,
        #[arg(long, default_value = "v1")]
        template: String,
        /// finetune or baseline
        #[arg(long, default_value = "finetune")]
        prompt: TemplateKind,
        #[arg(long, default_value_t = 2048)]
        max_context_units: usize,
        #[arg(long, default_value_t = 256)]
        max_new_units: usize,
        /// List EntityQuery among the prompt's actions.
        #[arg(long)]
        entity_query: bool,
        /// Also report all-or-nothing parameter accuracies.
        #[arg(long)]
        strict: bool,
        /// Per-call timeout for the HTTP client, in seconds.
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the report of a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// rows or tables
        #[arg(long, default_value = "tables")]
        format: ReportFormat,
    },
}

/// Written next to an example set by `build`.
#[derive(Debug, Serialize, Deserialize)]
struct BuildMeta {
    dataset: Dataset,
    train_domains: Vec<String>,
    template_version: String,
    max_results: usize,
    n_examples: usize,
}

fn meta_path(examples: &Path) -> PathBuf {
    let mut name = examples.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    examples.with_file_name(name)
}

fn load_templates(spec: &str) -> Result<TemplateSet> {
    if spec == "v1" {
        return Ok(TemplateSet::builtin());
    }
    TemplateSet::from_dir(Path::new(spec)).with_context(|| format!("loading template set `{spec}`"))
}

fn make_client(spec: &str, timeout: Duration, retries: u32) -> Result<Box<dyn GenerationClient>> {
    if spec == "golden" {
        return Ok(Box::new(GoldenClient));
    }
    if let Some(path) = spec.strip_prefix("scripted:") {
        let client = ScriptedClient::from_file(Path::new(path)).map_err(anyhow::Error::msg)?;
        return Ok(Box::new(client));
    }
    if let Some(rest) = spec.strip_prefix("http:") {
        // Accept both `http:<url>` and a plain `http://host` URL.
        let url = if rest.starts_with("//") { spec.to_string() } else { rest.to_string() };
        let mut config = HttpConfig::new(url);
        config.timeout = timeout;
        config.retries = retries;
        return Ok(Box::new(HttpClient::new(config)?));
    }
    if spec.starts_with("https://") {
        let mut config = HttpConfig::new(spec);
        config.timeout = timeout;
        config.retries = retries;
        return Ok(Box::new(HttpClient::new(config)?));
    }
    bail!("unknown client `{spec}` (golden | scripted:<file> | http:<url>)")
}

fn ingest(
    dataset: Dataset,
    dir: &Path,
    splits: Option<Vec<Split>>,
    language: LanguageFilter,
    schemas: Option<PathBuf>,
    out: Option<&Path>,
    check: bool,
) -> Result<bool> {
    let options = LoadOptions {
        splits: splits.unwrap_or_else(|| Split::ALL.to_vec()),
        language,
        schema_dir: schemas,
    };
    let started = std::time::Instant::now();
    let corpus = corpus::load(dataset, dir, &options)?;
    let unit = TurnUnit::for_dataset(dataset);
    let all = corpus_stats_with(&corpus.dialogs, unit);
    println!(
        "{dataset}: loaded {} dialogs, {} schemas in {:.1}s ({} annotation issues)",
        corpus.dialogs.len(),
        corpus.schemas.len(),
        started.elapsed().as_secs_f64(),
        corpus.issues.len()
    );
    println!(
        "loaded splits: dialogs={} domains={} avg_turns={:.2} (turn unit: {unit:?})",
        all.n_dialogs, all.n_domains, all.avg_turns_per_dialog
    );
    let reference = reference_stats(dataset);
    let observed = corpus_stats_with(corpus.dialogs_in(reference.splits), unit);
    let split_names: Vec<&str> = reference.splits.iter().map(|s| s.as_str()).collect();
    println!(
        "published ({}): dialogs={} domains={} avg_turns={:.2}",
        split_names.join("+"),
        reference.n_dialogs,
        reference.n_domains,
        reference.avg_turns_per_dialog
    );
    println!(
        "observed  ({}): dialogs={} domains={} avg_turns={:.2}",
        split_names.join("+"),
        observed.n_dialogs,
        observed.n_domains,
        observed.avg_turns_per_dialog
    );
    if dataset == Dataset::Sgd {
        println!(
            "note: the full SGD release spans {SGD_ALL_SPLITS_DOMAINS} domains across all splits; \
             the published table counts {} (training split). Observed across loaded splits: {}.",
            reference.n_domains, all.n_domains
        );
    }
    let ok = reference.matches(&observed);
    println!("statistics match: {}", if ok { "yes" } else { "no" });
    for issue in corpus.issues.iter().take(10) {
        log::warn!("{}: turn {:?}: {}", issue.dialog_id, issue.turn_index, issue.detail);
    }
    if let Some(out) = out {
        let file = std::fs::File::create(out).with_context(|| out.display().to_string())?;
        serde_json::to_writer(std::io::BufWriter::new(file), &corpus)?;
        println!("wrote {}", out.display());
    }
    Ok(ok || !check)
}

fn build(
    corpus_path: &Path,
    train_path: &Path,
    template: &str,
    max_results: usize,
    splits: Option<Vec<Split>>,
    out: &Path,
) -> Result<()> {
    let templates = load_templates(template)?;
    let text = std::fs::read_to_string(corpus_path).with_context(|| corpus_path.display().to_string())?;
    let corpus: Corpus = serde_json::from_str(&text).with_context(|| corpus_path.display().to_string())?;
    let train_text = std::fs::read_to_string(train_path).with_context(|| train_path.display().to_string())?;
    let train = TrainDomains::parse_list(&train_text)?;
    let config = BuildConfig {
        max_results,
        splits: splits.unwrap_or_else(|| Split::ALL.to_vec()),
    };
    let examples = build_examples(&corpus, &train, &config)?;

    // Every example must be renderable with the chosen template set.
    let prompt_config = PromptConfig {
        max_context_units: usize::MAX,
        ..PromptConfig::default()
    };
    for e in &examples {
        render_prompt(&templates, &e.prompt_context, &prompt_config)
            .with_context(|| format!("rendering {}", e.example_id))?;
    }

    write_examples(out, &examples)?;
    let meta = BuildMeta {
        dataset: corpus.dataset,
        train_domains: train.iter().map(str::to_string).collect(),
        template_version: templates.version.clone(),
        max_results,
        n_examples: examples.len(),
    };
    std::fs::write(meta_path(out), serde_json::to_string_pretty(&meta)? + "\n")?;
    let calls = examples.iter().filter(|e| e.target.is_api_call()).count();
    println!(
        "wrote {} examples ({} API-call targets) to {}",
        examples.len(),
        calls,
        out.display()
    );
    Ok(())
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest {
            dataset,
            dir,
            splits,
            language,
            schemas,
            out,
            check,
        } => {
            let ok = ingest(dataset, &dir, splits, language, schemas, out.as_deref(), check)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Build {
            corpus,
            train_domains,
            template,
            max_results,
            splits,
            out,
        } => {
            build(&corpus, &train_domains, &template, max_results, splits, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            examples,
            client,
            concurrency,
            fuzzy_threshold,
            template,
            prompt,
            max_context_units,
            max_new_units,
            entity_query,
            strict,
            timeout_secs,
            retries,
            out,
        } => {
            let templates = load_templates(&template)?;
            let set = read_examples(&examples)?;
            let train_domains = std::fs::read_to_string(meta_path(&examples))
                .ok()
                .and_then(|t| serde_json::from_str::<BuildMeta>(&t).ok())
                .map(|m| m.train_domains)
                .unwrap_or_default();
            let config = EvalConfig {
                prompt: PromptConfig {
                    template: prompt,
                    max_context_units,
                    include_api_results: true,
                    allow_entity_query: entity_query,
                },
                fuzzy_threshold,
                concurrency,
                max_new_units,
                strict,
                train_domains,
            };
            let client = make_client(&client, Duration::from_secs(timeout_secs), retries)?;
            let result = match evaluate(&set, client.as_ref(), &templates, &config) {
                Ok(r) => r,
                Err(e @ (EvalError::ClientUnreachable(_) | EvalError::ConfigInvalid(_))) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            write_run(&out, &result)?;
            generate_report(&result, ReportFormat::Tables, &out)?;
            print!("{}", format_report(&result, ReportFormat::Tables));
            println!(
                "{} records ({} failed generations) written to {}",
                result.records.len(),
                result.manifest.n_errors,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { run, format } => {
            let result = read_run(&run)?;
            let path = generate_report(&result, format, &run)?;
            print!("{}", format_report(&result, format));
            eprintln!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

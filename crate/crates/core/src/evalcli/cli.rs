use std::collections::BTreeSet;
use std::error::Error;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Overrides;
use super::metrics::{
    classification_report, evaluate_classification, evaluate_regression, MetricsReport,
};
use super::report::{predict_report, ReportDocument};
use super::{EvalError, RunConfig};
use crate::astgraph::{parse_source, AstGraph};
use crate::corpus::{
    corpus_stats, load_corpus, normalize_export, write_corpus, ExportDocument, ReviewCorpus,
};
use crate::graphlearn::{
    comment_examples, forward_task, node_examples, node_probabilities, train, Checkpoint,
    GraphError, Task, TaskDataset, TaskInput,
};
use crate::labeling::{
    build_labeled_dataset, check_no_leakage, split_dataset, DatasetSplit, MetaTopic,
};

type CliResult<T> = std::result::Result<T, Box<dyn Error + Send + Sync>>;

/// Environment variable that switches logging to test mode.
pub const TEST_MODE_ENV: &str = "MCR_GRAPH_TEST_MODE";

#[derive(Debug, Parser)]
#[command(
    name = "mcr-graph",
    version,
    about = "Review-comment learning on AST program graphs"
)]
pub struct Cli {
    /// Log without timestamps so output is reproducible.
    #[arg(long, global = true)]
    pub test_mode: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by the pipeline stages.
#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// Run configuration file (JSON). Flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stability_window: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a hosting-provider export into a corpus file.
    Ingest {
        /// Export records: a JSON array or one JSON document per line.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Salt for author pseudonyms.
        #[arg(long)]
        salt: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print corpus statistics as JSON.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Parse a MiniJ file and print its program graph as JSON.
    Parse { file: PathBuf },
    /// Label every parseable file revision of a corpus.
    Label {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Split pull requests into train and test sets.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train a model on the train side of a split.
    Train {
        #[arg(long, value_enum)]
        task: Option<Task>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Likelihood checkpoint used as the frozen encoder (quality only).
        #[arg(long)]
        encoder: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute test-split metrics of a checkpoint.
    Evaluate {
        #[arg(long, value_enum)]
        task: Option<Task>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write annotated likelihood reports (report.txt, report.json).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        topic_model: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// A single MiniJ file to annotate.
        #[arg(long, conflicts_with_all = ["corpus", "split"])]
        file: Option<PathBuf>,
        /// Annotate every revision of the test pull requests.
        #[arg(long, requires = "split")]
        corpus: Option<PathBuf>,
        #[arg(long, requires = "corpus")]
        split: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// split.json: the split plus the configuration that produced it.
#[derive(Serialize, Deserialize)]
struct SplitFile {
    #[serde(flatten)]
    split: DatasetSplit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct LabelFile<'a> {
    run_config: serde_json::Value,
    graphs: &'a [crate::labeling::LabeledGraph],
    skipped: &'a [crate::labeling::SkippedRevision],
}

#[derive(Serialize)]
struct ReportFile<'a> {
    run_config: serde_json::Value,
    documents: &'a [ReportDocument],
}

/// Runs the command line `argv` (program name first) and returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.test_mode || std::env::var_os(TEST_MODE_ENV).is_some());
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_logging(test_mode: bool) {
    let mut b = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    b.target(env_logger::Target::Stderr);
    if test_mode {
        b.format(|buf, record| writeln!(buf, "{}: {}", record.level(), record.args()));
    }
    // A second initialization in the same process keeps the first logger.
    let _ = b.try_init();
}

fn resolve(run: &RunArgs, extra: Overrides) -> CliResult<RunConfig> {
    let o = Overrides {
        seed: run.seed,
        stability_window: run.stability_window,
        ..extra
    };
    Ok(RunConfig::load(run.config.as_deref())?.merge(&o)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_split(path: &Path) -> CliResult<DatasetSplit> {
    let f: SplitFile = serde_json::from_str(&read_to_string(path)?)?;
    check_no_leakage(&f.split, [], [])
        .map_err(|id| EvalError::Leakage(format!("pr `{id}` is on both sides")))?;
    Ok(f.split)
}

fn load_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    Checkpoint::load(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn parse_export(text: &str) -> CliResult<Vec<ExportDocument>> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| format!("export line {}: {e}", i + 1).into())
        })
        .collect()
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Ingest {
            input,
            out,
            salt,
            run,
        } => {
            let mut cfg = resolve(&run, Overrides::default())?;
            if let Some(s) = salt {
                cfg.salt = s;
            }
            let docs = parse_export(&read_to_string(&input)?)?;
            let outcome = normalize_export(&docs, &cfg.salt);
            let mut buf = Vec::new();
            write_corpus(&outcome.corpus, &mut buf)?;
            write_file(&out, &buf)?;
            log::info!(
                "ingested {} pull requests, skipped {} records",
                outcome.corpus.pull_requests.len(),
                outcome.skipped.len()
            );
        }
        Command::Stats { corpus } => {
            let stats = corpus_stats(&load_corpus(&corpus)?);
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Parse { file } => {
            let text = read_to_string(&file)?;
            let graph = parse_source(&text)
                .map_err(|e| format!("{}: {e}", file.display()))?
                .with_origin(file.to_string_lossy(), 0);
            println!("{}", serde_json::to_string_pretty(&graph)?);
        }
        Command::Label { corpus, out, run } => {
            let cfg = resolve(&run, Overrides::default())?;
            let corpus = load_corpus(&corpus)?;
            let ds = build_labeled_dataset(&corpus, cfg.stability_window, |_| true)?;
            log::info!(
                "labeled {} graphs, skipped {}",
                ds.graphs.len(),
                ds.skipped.len()
            );
            write_json(
                &out,
                &LabelFile {
                    run_config: cfg.to_value(),
                    graphs: &ds.graphs,
                    skipped: &ds.skipped,
                },
            )?;
        }
        Command::Split {
            corpus,
            ratio,
            out,
            run,
        } => {
            let cfg = resolve(
                &run,
                Overrides {
                    ratio,
                    ..Overrides::default()
                },
            )?;
            let corpus = load_corpus(&corpus)?;
            let split = split_dataset(&corpus, cfg.ratio, cfg.seed);
            log::info!(
                "{} train / {} test pull requests",
                split.train_pr_ids.len(),
                split.test_pr_ids.len()
            );
            write_json(
                &out,
                &SplitFile {
                    split,
                    run_config: Some(cfg.to_value()),
                },
            )?;
        }
        Command::Train {
            task,
            corpus,
            split,
            out,
            encoder,
            run,
        } => {
            let cfg = resolve(
                &run,
                Overrides {
                    task,
                    ..Overrides::default()
                },
            )?;
            let corpus = load_corpus(&corpus)?;
            let split = load_split(&split)?;
            let dataset = match cfg.task {
                Task::Likelihood | Task::Topic => {
                    let ds = build_labeled_dataset(&corpus, cfg.stability_window, |id| {
                        split.is_train(id)
                    })?;
                    TaskDataset::Nodes(node_examples(&ds.graphs, cfg.task))
                }
                Task::Quality => {
                    let enc = encoder
                        .ok_or("quality training needs --encoder <likelihood checkpoint>")?;
                    let enc = load_checkpoint(&enc)?;
                    TaskDataset::Comments {
                        examples: comment_examples(&corpus, |id| split.is_train(id))?,
                        encoder: Box::new(enc.model),
                    }
                }
            };
            let mut ckpt = train(&dataset, &cfg.model, &cfg.train)?;
            ckpt.metadata.run_config = Some(cfg.to_value());
            ckpt.save(&out)?;
            log::info!(
                "final loss {:.6}; checkpoint written to {}",
                ckpt.metadata.final_loss,
                out.display()
            );
        }
        Command::Evaluate {
            task,
            corpus,
            split,
            model,
            out,
            threshold,
            run,
        } => {
            let cfg = resolve(
                &run,
                Overrides {
                    task,
                    threshold,
                    ..Overrides::default()
                },
            )?;
            let ckpt = load_checkpoint(&model)?;
            if task.is_some() && ckpt.model.config.task != cfg.task {
                return Err(EvalError::ConfigMismatch(format!(
                    "checkpoint is a {} model, --task is {}",
                    ckpt.model.config.task.name(),
                    cfg.task.name()
                ))
                .into());
            }
            let split = load_split(&split)?;
            if let Some(id) = ckpt
                .metadata
                .train_pr_ids
                .iter()
                .find(|id| split.is_test(id))
            {
                return Err(EvalError::Leakage(format!("pr `{id}` was used for training")).into());
            }
            let corpus = load_corpus(&corpus)?;
            let mut report = evaluate_checkpoint(&ckpt, &corpus, &split, &cfg)?;
            report.run_config = Some(cfg.to_value());
            write_json(&out, &report)?;
            log::info!("metrics written to {}", out.display());
        }
        Command::Predict {
            model,
            topic_model,
            out,
            file,
            corpus,
            split,
            threshold,
            run,
        } => {
            let cfg = resolve(
                &run,
                Overrides {
                    threshold,
                    ..Overrides::default()
                },
            )?;
            let likelihood = load_checkpoint(&model)?.model;
            let topic = topic_model
                .as_deref()
                .map(load_checkpoint)
                .transpose()?
                .map(|c| c.model);
            let docs = match (file, corpus, split) {
                (Some(f), _, _) => {
                    let text = read_to_string(&f)?;
                    let g = parse_source(&text)
                        .map_err(|e| format!("{}: {e}", f.display()))?
                        .with_origin(f.to_string_lossy(), 0);
                    vec![predict_report(
                        "",
                        &g,
                        &text,
                        &likelihood,
                        topic.as_ref(),
                        None,
                        cfg.threshold,
                    )?]
                }
                (None, Some(c), Some(s)) => {
                    let corpus = load_corpus(&c)?;
                    let split = load_split(&s)?;
                    let ds = build_labeled_dataset(&corpus, cfg.stability_window, |id| {
                        split.is_test(id)
                    })?;
                    let mut docs = ds
                        .graphs
                        .par_iter()
                        .map(|lg| {
                            let p = &lg.provenance;
                            let rev = corpus
                                .pull_request(&p.pr_id)
                                .and_then(|pr| pr.revision(&p.file_path, p.revision_index))
                                .expect("labeled revision exists in its corpus");
                            predict_report(
                                &p.pr_id,
                                &lg.graph,
                                &rev.content,
                                &likelihood,
                                topic.as_ref(),
                                Some(lg),
                                cfg.threshold,
                            )
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    docs.sort_by(|a, b| {
                        (&a.file_path, &a.pr_id, a.revision_index).cmp(&(
                            &b.file_path,
                            &b.pr_id,
                            b.revision_index,
                        ))
                    });
                    docs
                }
                _ => return Err("predict needs --file or both --corpus and --split".into()),
            };
            let text: String = docs.iter().map(ReportDocument::to_text).collect();
            write_file(&out.join("report.txt"), text.as_bytes())?;
            write_json(
                &out.join("report.json"),
                &ReportFile {
                    run_config: cfg.to_value(),
                    documents: &docs,
                },
            )?;
            log::info!("{} report(s) written to {}", docs.len(), out.display());
        }
    }
    Ok(())
}

/// Metrics of a checkpoint on the test side of `split`.
fn evaluate_checkpoint(
    ckpt: &Checkpoint,
    corpus: &ReviewCorpus,
    split: &DatasetSplit,
    cfg: &RunConfig,
) -> CliResult<MetricsReport> {
    let model = &ckpt.model;
    let task = model.config.task;
    let report = match task {
        Task::Likelihood | Task::Topic => {
            let ds = build_labeled_dataset(corpus, cfg.stability_window, |id| split.is_test(id))?;
            let examples = node_examples(&ds.graphs, task);
            let test_prs: BTreeSet<&str> = examples.iter().map(|e| e.pr_id.as_str()).collect();
            check_no_leakage(split, [], test_prs).map_err(EvalError::Leakage)?;
            let (mut scores, mut gold) = (Vec::new(), Vec::new());
            for e in &examples {
                if e.targets.iter().all(Option::is_none) {
                    continue;
                }
                let probs = node_probabilities(model, &e.graph)?;
                for (i, y) in e.targets.iter().enumerate() {
                    if let Some(y) = *y {
                        scores.push(probs.row(i).to_vec());
                        gold.push(y);
                    }
                }
            }
            if task == Task::Likelihood {
                let pos: Vec<f64> = scores.iter().map(|r| r[1]).collect();
                let labels: Vec<bool> = gold.iter().map(|&y| y == 1).collect();
                evaluate_classification(&pos, &labels, cfg.threshold)?
            } else {
                let pred: Vec<usize> = scores
                    .iter()
                    .map(|r| (0..r.len()).fold(0, |b, i| if r[i] > r[b] { i } else { b }))
                    .collect();
                classification_report(&pred, &gold, MetaTopic::COUNT)?
            }
        }
        Task::Quality => {
            let examples = comment_examples(corpus, |id| split.is_test(id))?;
            if examples.is_empty() {
                return Err(EvalError::EmptyInput.into());
            }
            let items: Vec<(&AstGraph, usize, Vec<String>)> = examples
                .iter()
                .map(|e| (e.graph.as_ref(), e.node_id, e.tokens.clone()))
                .collect();
            let out = forward_task(model, TaskInput::Comments(&items))?;
            let act: Vec<f64> = (0..out.rows()).map(|i| out.at(i, 0)).collect();
            let clar: Vec<f64> = (0..out.rows()).map(|i| out.at(i, 1)).collect();
            let gold_act: Vec<bool> = examples.iter().map(|e| e.actionability >= 0.5).collect();
            let gold_clar: Vec<f64> = examples.iter().map(|e| e.clarity).collect();
            let mut r = evaluate_classification(&act, &gold_act, cfg.threshold)?;
            r.regression = Some(evaluate_regression(&clar, &gold_clar)?);
            let bce = act
                .iter()
                .zip(&gold_act)
                .map(|(&p, &y)| {
                    let p = p.clamp(1e-12, 1.0 - 1e-12);
                    if y {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum::<f64>()
                / act.len() as f64;
            r.extra.insert("actionability_bce".into(), bce);
            r
        }
    };
    if !report.accuracy.is_none_or(f64::is_finite) {
        return Err(GraphError::NonFinite("metric".into()).into());
    }
    Ok(MetricsReport {
        task: task.name().to_string(),
        ..report
    })
}

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use cocite::citation::count_citations;
use cocite::cocitation::{
    build_cocitation, sweep, sweep_to_tsv, threshold_edges, CoCitationMatrix,
};
use cocite::error::{Error, Result};
use cocite::export::{export_graph, ExportFormat};
use cocite::metrics::compute_metrics;
use cocite::normalize::variant_report;
use cocite::pipeline::{
    load_aliases, load_artifact, load_corpus, run_pipeline, threshold_sweep, Artifact,
    CitationThreshold, ConfigValues,
};
use cocite::query::{filter_corpus, parse_query};
use cocite::record::{Corpus, ParseOptions};
use cocite::ThresholdReport;

#[derive(Parser)]
#[command(
    name = "cocite",
    version,
    about = "Citation and co-citation analysis of citation-index exports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Directory for output files; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort on malformed records instead of skipping them.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone, Default)]
struct ThresholdArgs {
    /// Select documents cited at least N times.
    #[arg(long, value_name = "N", conflicts_with = "coverage")]
    min_citations: Option<u32>,
    /// Select the largest threshold covering at least this fraction of references.
    #[arg(long, value_name = "F")]
    coverage: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct GraphArgs {
    /// Minimum co-citation frequency for an edge.
    #[arg(long, value_name = "N")]
    min_cocite: Option<u32>,
    /// Keep documents without any surviving edge.
    #[arg(long)]
    keep_isolated: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse export files into corpus JSON.
    Parse {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Keep records matching a boolean keyword query.
    Filter {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        common: Common,
    },
    /// Count article-level citations per canonical document.
    Count {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Select the most cited documents from a corpus or citation index.
    Threshold {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Build the raw co-citation matrix over the selected documents.
    Cocite {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        aliases: Option<PathBuf>,
        /// A threshold.json naming the selected documents.
        #[arg(long, conflicts_with_all = ["min_citations", "coverage"])]
        selected: Option<PathBuf>,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Threshold a co-citation matrix into a graph and export it.
    Graph {
        input: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "json")]
        format: String,
        #[command(flatten)]
        common: Common,
    },
    /// Degree, density and component measures of a co-citation graph.
    Metrics {
        input: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run the whole pipeline and print a summary.
    Report {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Node and edge counts for a range of co-citation thresholds.
    Sweep {
        inputs: Vec<PathBuf>,
        /// Thresholds to try, `A..B` (inclusive) or a single value.
        #[arg(long, value_name = "A..B")]
        range: String,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Args, Clone, Default)]
struct PipelineArgs {
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Graph export formats (repeatable): dot, graphml, edgelist, json.
    #[arg(long)]
    format: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

fn parsed_at() -> Option<String> {
    let secs: i64 = std::env::var("SOURCE_DATE_EPOCH")
        .ok()?
        .trim()
        .parse()
        .ok()?;
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339())
}

fn parse_options(common: &Common) -> ParseOptions {
    ParseOptions {
        strict: common.strict,
        source_name: None,
        parsed_at: parsed_at(),
    }
}

fn threshold_of(args: &ThresholdArgs) -> Result<CitationThreshold> {
    ConfigValues {
        min_citations: args.min_citations,
        coverage: args.coverage,
        ..Default::default()
    }
    .threshold()
}

/// Writes `contents` to `out/name`, or to stdout without `--out`.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
        }
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn json_line(json: String) -> String {
    json + "\n"
}

fn corpus_from(inputs: &[PathBuf], common: &Common) -> Result<Corpus> {
    let (corpus, skipped) =
        load_corpus(inputs, &parse_options(common)).map_err(|e| e.in_stage("parse"))?;
    if !skipped.is_empty() {
        warn!("skipped {} malformed record(s)", skipped.len());
    }
    Ok(corpus)
}

fn threshold_report(
    inputs: &[PathBuf],
    aliases: Option<&Path>,
    threshold: CitationThreshold,
    common: &Common,
) -> Result<ThresholdReport> {
    let index = match inputs {
        [single] => {
            match load_artifact(single, &parse_options(common)).map_err(|e| e.in_stage("parse"))? {
                Artifact::Index(index) => index,
                Artifact::Corpus(corpus, _) => count_citations(
                    &corpus,
                    &load_aliases(aliases).map_err(|e| e.in_stage("aliases"))?,
                ),
                other => {
                    return Err(Error::Config(format!(
                        "cannot threshold a {}",
                        other.kind()
                    )))
                }
            }
        }
        _ => {
            let corpus = corpus_from(inputs, common)?;
            count_citations(
                &corpus,
                &load_aliases(aliases).map_err(|e| e.in_stage("aliases"))?,
            )
        }
    };
    index.validate().map_err(|e| e.in_stage("count"))?;
    threshold.apply(&index).map_err(|e| e.in_stage("threshold"))
}

fn matrix_from(path: &Path) -> Result<CoCitationMatrix> {
    match load_artifact(path, &ParseOptions::default())? {
        Artifact::Matrix(m) => Ok(m),
        other => Err(Error::Config(format!(
            "{}: expected a co-citation matrix, found a {}",
            path.display(),
            other.kind()
        ))),
    }
}

fn parse_range(text: &str) -> Result<RangeInclusive<u32>> {
    let bad = || Error::Config(format!("invalid range `{text}`, expected A..B"));
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        Ok(num(a)?..=num(b)?)
    } else {
        let n = num(text)?;
        Ok(n..=n)
    }
}

fn pipeline_values(inputs: Vec<PathBuf>, args: &PipelineArgs) -> Result<ConfigValues> {
    let file = match &args.config {
        Some(path) => {
            let base = path.parent().unwrap_or(Path::new("."));
            ConfigValues::parse(&fs::read_to_string(path)?, base)
                .map_err(|e| e.in_stage("config"))?
        }
        None => ConfigValues::default(),
    };
    let formats = args
        .format
        .iter()
        .map(|f| f.parse())
        .collect::<Result<Vec<ExportFormat>>>()?;
    let flags = ConfigValues {
        inputs,
        query: args.query.clone(),
        aliases: args.aliases.clone(),
        min_citations: args.threshold.min_citations,
        coverage: args.threshold.coverage,
        min_cocite: args.graph.min_cocite,
        keep_isolated: args.graph.keep_isolated.then_some(true),
        formats,
        out_dir: args.out.clone(),
        strict: args.strict.then_some(true),
    };
    Ok(file.overlay(flags))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { inputs, common } => {
            let corpus = corpus_from(&inputs, &common)?;
            emit(
                common.out.as_deref(),
                "corpus.json",
                &json_line(corpus.to_json()?),
            )
        }
        Command::Filter {
            inputs,
            query,
            common,
        } => {
            let query = parse_query(&query).map_err(|e| Error::from(e).in_stage("filter"))?;
            let corpus = corpus_from(&inputs, &common)?;
            let filtered = filter_corpus(&corpus, &query);
            eprintln!(
                "{} of {} records match {query}",
                filtered.len(),
                corpus.len()
            );
            emit(
                common.out.as_deref(),
                "corpus.json",
                &json_line(filtered.to_json()?),
            )
        }
        Command::Count {
            inputs,
            aliases,
            common,
        } => {
            let corpus = corpus_from(&inputs, &common)?;
            let aliases = load_aliases(aliases.as_deref()).map_err(|e| e.in_stage("aliases"))?;
            let index = count_citations(&corpus, &aliases);
            index.validate().map_err(|e| e.in_stage("count"))?;
            eprintln!(
                "{} articles, {} references, {} distinct documents, {} unparseable",
                corpus.len(),
                index.total_refs,
                index.distinct_docs,
                index.unparseable.len()
            );
            if let Some(dir) = common.out.as_deref() {
                let variants = variant_report(&corpus, &aliases);
                emit(
                    Some(dir),
                    "variants.json",
                    &json_line(serde_json::to_string_pretty(&variants)?),
                )?;
            }
            emit(
                common.out.as_deref(),
                "index.json",
                &json_line(index.to_json()?),
            )
        }
        Command::Threshold {
            inputs,
            aliases,
            threshold,
            common,
        } => {
            let threshold = threshold_of(&threshold)?;
            let report = threshold_report(&inputs, aliases.as_deref(), threshold, &common)?;
            eprintln!(
                "min_citations {}: {} documents, {} references, coverage {}",
                report.min_citations,
                report.selected_docs,
                report.covered_refs,
                report.coverage_percent()
            );
            if let Some(dir) = common.out.as_deref() {
                emit(Some(dir), "threshold.json", &json_line(report.to_json()?))?;
            }
            emit(common.out.as_deref(), "threshold.tsv", &report.to_tsv())
        }
        Command::Cocite {
            inputs,
            aliases,
            selected,
            threshold,
            common,
        } => {
            let corpus = corpus_from(&inputs, &common)?;
            let alias_table =
                load_aliases(aliases.as_deref()).map_err(|e| e.in_stage("aliases"))?;
            let keys: BTreeSet<String> = match selected {
                Some(path) => {
                    let report: ThresholdReport = serde_json::from_str(&fs::read_to_string(path)?)?;
                    report.selected_keys()
                }
                None => {
                    let index = count_citations(&corpus, &alias_table);
                    threshold_of(&threshold)?
                        .apply(&index)
                        .map_err(|e| e.in_stage("threshold"))?
                        .selected_keys()
                }
            };
            let matrix = build_cocitation(&corpus, &keys, &alias_table);
            eprintln!(
                "{} documents, {} co-cited pairs, max co-citation {}",
                matrix.dim(),
                matrix.nonzero_cells(),
                matrix.max_cell()
            );
            if let Some(dir) = common.out.as_deref() {
                emit(Some(dir), "cocitation.json", &json_line(matrix.to_json()?))?;
            }
            emit(common.out.as_deref(), "cocitation.tsv", &matrix.to_tsv())
        }
        Command::Graph {
            input,
            graph,
            format,
            common,
        } => {
            let format: ExportFormat = format.parse()?;
            let g = match load_artifact(&input, &ParseOptions::default())? {
                Artifact::Graph(g) => g,
                Artifact::Matrix(m) => {
                    threshold_edges(&m, graph.min_cocite.unwrap_or(1), graph.keep_isolated)?
                }
                other => {
                    return Err(Error::Config(format!(
                        "cannot build a graph from a {}",
                        other.kind()
                    )))
                }
            };
            let name = format!("graph.{}", format.extension());
            emit(common.out.as_deref(), &name, &export_graph(&g, format)?)
        }
        Command::Metrics {
            input,
            graph,
            common,
        } => {
            let g = match load_artifact(&input, &ParseOptions::default())? {
                Artifact::Graph(g) => g,
                Artifact::Matrix(m) => {
                    threshold_edges(&m, graph.min_cocite.unwrap_or(1), graph.keep_isolated)?
                }
                other => {
                    return Err(Error::Config(format!(
                        "cannot compute metrics for a {}",
                        other.kind()
                    )))
                }
            };
            let report = compute_metrics(&g);
            emit(
                common.out.as_deref(),
                "metrics.json",
                &json_line(report.to_json()?),
            )
        }
        Command::Report { inputs, pipeline } => {
            let config = pipeline_values(inputs, &pipeline)?.into_config(parsed_at())?;
            if config.inputs.is_empty() {
                return Err(Error::Config("no input files given".into()));
            }
            let output = run_pipeline(&config)?;
            print!("{}", output.summary);
            Ok(())
        }
        Command::Sweep {
            inputs,
            range,
            pipeline,
        } => {
            let range = parse_range(&range)?;
            let rows = match inputs.as_slice() {
                [single]
                    if matches!(
                        load_artifact(single, &ParseOptions::default()),
                        Ok(Artifact::Matrix(_))
                    ) =>
                {
                    sweep(&matrix_from(single)?, range, pipeline.graph.keep_isolated)?
                }
                _ => {
                    let config = pipeline_values(inputs, &pipeline)?.into_config(None)?;
                    if config.inputs.is_empty() {
                        return Err(Error::Config("no input files given".into()));
                    }
                    threshold_sweep(&config, range)?
                }
            };
            emit(pipeline.out.as_deref(), "sweep.tsv", &sweep_to_tsv(&rows))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

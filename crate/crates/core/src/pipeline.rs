//! End-to-end runs: parse, filter, normalize, count, threshold, co-cite,
//! metrics and export, with every intermediate artifact written to disk.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::citation::{
    count_citations, format_percent, min_citations_for_coverage, select_by_min_citations,
    CitationIndex, ThresholdReport,
};
use crate::cocitation::{
    build_cocitation, sweep, threshold_edges, CoCitationGraph, CoCitationMatrix, SweepRow,
};
use crate::error::{Error, MalformedRecord, Result};
use crate::export::{export_graph, ExportFormat};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::normalize::{variant_report, AliasTable, VariantCluster};
use crate::query::{filter_corpus, parse_query};
use crate::record::{parse_corpus, Corpus, ParseOptions};

/// Any artifact the command-line stages read back in.
#[derive(Debug, Clone)]
pub enum Artifact {
    Corpus(Corpus, Vec<MalformedRecord>),
    Index(CitationIndex),
    Matrix(CoCitationMatrix),
    Graph(CoCitationGraph),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Corpus(..) => "corpus",
            Artifact::Index(_) => "citation index",
            Artifact::Matrix(_) => "co-citation matrix",
            Artifact::Graph(_) => "graph",
        }
    }
}

/// Reads a record file or one of the JSON artifacts, telling them apart by content.
pub fn load_artifact(path: &Path, options: &ParseOptions) -> Result<Artifact> {
    let text = fs::read_to_string(path)?;
    let trimmed = text.trim_start_matches('\u{feff}').trim_start();
    if trimmed.starts_with("FF ") {
        let opts = ParseOptions {
            source_name: Some(path.display().to_string()),
            ..options.clone()
        };
        let out = parse_corpus(&text, &opts)?;
        return Ok(Artifact::Corpus(out.corpus, out.skipped));
    }
    if !trimmed.starts_with('{') {
        return Err(MalformedRecord {
            line: 1,
            reason: format!(
                "{}: neither a record file nor a JSON artifact",
                path.display()
            ),
        }
        .into());
    }
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let has = |k: &str| value.get(k).is_some();
    Ok(if has("records") {
        Artifact::Corpus(serde_json::from_value(value)?, Vec::new())
    } else if has("entries") {
        Artifact::Index(serde_json::from_value(value)?)
    } else if has("cells") {
        Artifact::Matrix(serde_json::from_value(value)?)
    } else if has("edges") {
        Artifact::Graph(serde_json::from_value(value)?)
    } else {
        return Err(Error::Config(format!(
            "{}: unrecognized JSON artifact",
            path.display()
        )));
    })
}

/// Loads and concatenates corpora from record files or corpus JSON.
pub fn load_corpus(
    paths: &[PathBuf],
    options: &ParseOptions,
) -> Result<(Corpus, Vec<MalformedRecord>)> {
    let mut parts = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        match load_artifact(path, options)? {
            Artifact::Corpus(c, s) => {
                parts.push(c);
                skipped.extend(s);
            }
            other => {
                return Err(Error::Config(format!(
                    "{}: expected a corpus, found a {}",
                    path.display(),
                    other.kind()
                )))
            }
        }
    }
    let mut corpus = Corpus::merge(parts)?;
    if corpus.provenance.parsed_at.is_none() {
        corpus.provenance.parsed_at = options.parsed_at.clone();
    }
    Ok((corpus, skipped))
}

pub fn load_aliases(path: Option<&Path>) -> Result<AliasTable> {
    match path {
        Some(p) => AliasTable::parse(&fs::read_to_string(p)?),
        None => Ok(AliasTable::new()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CitationThreshold {
    MinCitations(u32),
    Coverage(f64),
}

impl CitationThreshold {
    pub fn apply(self, index: &CitationIndex) -> Result<ThresholdReport> {
        match self {
            CitationThreshold::MinCitations(m) => select_by_min_citations(index, m),
            CitationThreshold::Coverage(t) => min_citations_for_coverage(index, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub query: Option<String>,
    pub aliases: Option<PathBuf>,
    pub threshold: CitationThreshold,
    pub min_cocite: u32,
    pub keep_isolated: bool,
    pub formats: Vec<ExportFormat>,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub parsed_at: Option<String>,
}

pub const DEFAULT_OUT_DIR: &str = "cocite-out";

/// Partially specified settings from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigValues {
    pub inputs: Vec<PathBuf>,
    pub query: Option<String>,
    pub aliases: Option<PathBuf>,
    pub min_citations: Option<u32>,
    pub coverage: Option<f64>,
    pub min_cocite: Option<u32>,
    pub keep_isolated: Option<bool>,
    pub formats: Vec<ExportFormat>,
    pub out_dir: Option<PathBuf>,
    pub strict: Option<bool>,
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "`{key}` expects true or false, got `{value}`"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` has invalid value `{value}`")))
}

impl ConfigValues {
    /// Parses `key = value` lines; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<ConfigValues> {
        let mut cfg = ConfigValues::default();
        let path = |v: &str| base.join(v);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "input" | "inputs" => cfg.inputs.extend(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(path),
                ),
                "query" => cfg.query = Some(value.to_string()),
                "aliases" => cfg.aliases = Some(path(value)),
                "min_citations" => cfg.min_citations = Some(parse_num(key, value)?),
                "coverage" => cfg.coverage = Some(parse_num(key, value)?),
                "min_cocite" => cfg.min_cocite = Some(parse_num(key, value)?),
                "keep_isolated" => cfg.keep_isolated = Some(parse_bool(key, value)?),
                "format" | "formats" => {
                    for f in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        cfg.formats.push(f.parse()?);
                    }
                }
                "out" => cfg.out_dir = Some(path(value)),
                "strict" => cfg.strict = Some(parse_bool(key, value)?),
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{key}`",
                        i + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// `flags` win wherever they say something. The two threshold settings
    /// form one slot: a flag for either replaces both file values.
    pub fn overlay(self, flags: ConfigValues) -> ConfigValues {
        let threshold_from_flags = flags.min_citations.is_some() || flags.coverage.is_some();
        ConfigValues {
            inputs: if flags.inputs.is_empty() {
                self.inputs
            } else {
                flags.inputs
            },
            query: flags.query.or(self.query),
            aliases: flags.aliases.or(self.aliases),
            min_citations: if threshold_from_flags {
                flags.min_citations
            } else {
                self.min_citations
            },
            coverage: if threshold_from_flags {
                flags.coverage
            } else {
                self.coverage
            },
            min_cocite: flags.min_cocite.or(self.min_cocite),
            keep_isolated: flags.keep_isolated.or(self.keep_isolated),
            formats: if flags.formats.is_empty() {
                self.formats
            } else {
                flags.formats
            },
            out_dir: flags.out_dir.or(self.out_dir),
            strict: flags.strict.or(self.strict),
        }
    }

    pub fn threshold(&self) -> Result<CitationThreshold> {
        match (self.min_citations, self.coverage) {
            (Some(m), None) => Ok(CitationThreshold::MinCitations(m)),
            (None, Some(c)) => Ok(CitationThreshold::Coverage(c)),
            (Some(_), Some(_)) => Err(Error::Config(
                "set exactly one of min_citations and coverage, not both".into(),
            )),
            (None, None) => Err(Error::Config("set one of min_citations or coverage".into())),
        }
    }

    pub fn into_config(self, parsed_at: Option<String>) -> Result<PipelineConfig> {
        let threshold = self.threshold()?;
        let mut formats = if self.formats.is_empty() {
            ExportFormat::ALL.to_vec()
        } else {
            self.formats
        };
        formats.sort();
        formats.dedup();
        Ok(PipelineConfig {
            inputs: self.inputs,
            query: self.query,
            aliases: self.aliases,
            threshold,
            min_cocite: self.min_cocite.unwrap_or(1),
            keep_isolated: self.keep_isolated.unwrap_or(false),
            formats,
            out_dir: self
                .out_dir
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            strict: self.strict.unwrap_or(false),
            parsed_at,
        })
    }
}

/// Everything computed from one corpus, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub corpus: Corpus,
    pub index: CitationIndex,
    pub variants: Vec<VariantCluster>,
    pub report: ThresholdReport,
    pub matrix: CoCitationMatrix,
    pub graph: CoCitationGraph,
    pub metrics: MetricsReport,
}

/// Re-checks cross-stage invariants; a failure is a bug, not bad input.
fn verify(a: &Analysis) -> Result<()> {
    a.index.validate()?;
    let r = &a.report;
    if !(0.0..=1.0).contains(&r.coverage) || r.selected.iter().any(|d| d.count < r.min_citations) {
        return Err(Error::Invariant("threshold report out of bounds".into()));
    }
    for (i, j, w) in a.matrix.cells() {
        let docs = a.matrix.docs();
        if i >= j || w > docs[i].citations.min(docs[j].citations) {
            return Err(Error::Invariant(format!(
                "co-citation {}/{} = {w} exceeds its citation counts",
                docs[i].key, docs[j].key
            )));
        }
    }
    let degree_sum: usize = a.metrics.nodes.iter().map(|n| n.degree).sum();
    if degree_sum != 2 * a.metrics.edge_count {
        return Err(Error::Invariant(
            "degree sum differs from twice the edge count".into(),
        ));
    }
    Ok(())
}

pub fn analyze(
    corpus: Corpus,
    query: Option<&str>,
    aliases: &AliasTable,
    threshold: CitationThreshold,
    min_cocite: u32,
    keep_isolated: bool,
) -> Result<Analysis> {
    let corpus = match query {
        Some(q) => {
            let q = parse_query(q).map_err(|e| Error::from(e).in_stage("filter"))?;
            filter_corpus(&corpus, &q)
        }
        None => corpus,
    };
    let index = count_citations(&corpus, aliases);
    let variants = variant_report(&corpus, aliases);
    let report = threshold
        .apply(&index)
        .map_err(|e| e.in_stage("threshold"))?;
    let matrix = build_cocitation(&corpus, &report.selected_keys(), aliases);
    let graph =
        threshold_edges(&matrix, min_cocite, keep_isolated).map_err(|e| e.in_stage("graph"))?;
    let metrics = compute_metrics(&graph);
    let analysis = Analysis {
        corpus,
        index,
        variants,
        report,
        matrix,
        graph,
        metrics,
    };
    verify(&analysis).map_err(|e| e.in_stage("verify"))?;
    Ok(analysis)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub citing_articles: usize,
    pub skipped_records: usize,
    pub total_refs: u64,
    pub distinct_docs: usize,
    pub unparseable_refs: usize,
    pub min_citations: u32,
    pub selected_docs: usize,
    pub covered_refs: u64,
    pub coverage: f64,
    pub min_cocite: u32,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub graph_components: usize,
    pub graph_density: f64,
}

impl Summary {
    pub fn new(a: &Analysis, skipped_records: usize) -> Summary {
        Summary {
            citing_articles: a.corpus.len(),
            skipped_records,
            total_refs: a.index.total_refs,
            distinct_docs: a.index.distinct_docs,
            unparseable_refs: a.index.unparseable.len(),
            min_citations: a.report.min_citations,
            selected_docs: a.report.selected_docs,
            covered_refs: a.report.covered_refs,
            coverage: a.report.coverage,
            min_cocite: a.graph.threshold,
            graph_nodes: a.graph.nodes.len(),
            graph_edges: a.graph.edges.len(),
            graph_components: a.metrics.component_count,
            graph_density: a.metrics.density,
        }
    }

    pub fn coverage_percent(&self) -> String {
        format_percent(self.covered_refs, self.total_refs)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "citing articles        {}", self.citing_articles)?;
        if self.skipped_records > 0 {
            writeln!(f, "skipped records        {}", self.skipped_records)?;
        }
        writeln!(f, "total references       {}", self.total_refs)?;
        writeln!(f, "distinct documents     {}", self.distinct_docs)?;
        writeln!(f, "unparseable references {}", self.unparseable_refs)?;
        writeln!(f, "citation threshold     >= {}", self.min_citations)?;
        writeln!(f, "selected documents     {}", self.selected_docs)?;
        writeln!(f, "covered references     {}", self.covered_refs)?;
        writeln!(f, "coverage               {}", self.coverage_percent())?;
        writeln!(f, "co-citation threshold  >= {}", self.min_cocite)?;
        writeln!(f, "graph nodes            {}", self.graph_nodes)?;
        writeln!(f, "graph edges            {}", self.graph_edges)?;
        writeln!(f, "graph components       {}", self.graph_components)?;
        writeln!(f, "graph density          {:.4}", self.graph_density)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summary: Summary,
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

/// Writes every artifact of `analysis` into `dir`.
pub fn write_outputs(
    analysis: &Analysis,
    summary: &Summary,
    formats: &[ExportFormat],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    write_file(
        dir,
        "corpus.json",
        &with_newline(analysis.corpus.to_json()?),
        &mut files,
    )?;
    write_file(
        dir,
        "index.json",
        &with_newline(analysis.index.to_json()?),
        &mut files,
    )?;
    write_file(
        dir,
        "variants.json",
        &with_newline(serde_json::to_string_pretty(&analysis.variants)?),
        &mut files,
    )?;
    write_file(dir, "threshold.tsv", &analysis.report.to_tsv(), &mut files)?;
    write_file(
        dir,
        "threshold.json",
        &with_newline(analysis.report.to_json()?),
        &mut files,
    )?;
    write_file(dir, "cocitation.tsv", &analysis.matrix.to_tsv(), &mut files)?;
    write_file(
        dir,
        "cocitation.json",
        &with_newline(analysis.matrix.to_json()?),
        &mut files,
    )?;
    for &format in formats {
        let name = format!("graph.{}", format.extension());
        write_file(
            dir,
            &name,
            &export_graph(&analysis.graph, format)?,
            &mut files,
        )?;
    }
    write_file(
        dir,
        "metrics.json",
        &with_newline(analysis.metrics.to_json()?),
        &mut files,
    )?;
    write_file(dir, "summary.txt", &summary.to_string(), &mut files)?;
    Ok(files)
}

fn parse_options(config: &PipelineConfig) -> ParseOptions {
    ParseOptions {
        strict: config.strict,
        source_name: None,
        parsed_at: config.parsed_at.clone(),
    }
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let (corpus, skipped) =
        load_corpus(&config.inputs, &parse_options(config)).map_err(|e| e.in_stage("parse"))?;
    let aliases = load_aliases(config.aliases.as_deref()).map_err(|e| e.in_stage("aliases"))?;
    let analysis = analyze(
        corpus,
        config.query.as_deref(),
        &aliases,
        config.threshold,
        config.min_cocite,
        config.keep_isolated,
    )?;
    let summary = Summary::new(&analysis, skipped.len());
    let files = write_outputs(&analysis, &summary, &config.formats, &config.out_dir)
        .map_err(|e| e.in_stage("write"))?;
    Ok(PipelineOutput {
        summary,
        analysis,
        files,
    })
}

/// Node/edge counts per candidate edge threshold, from one matrix build.
pub fn threshold_sweep(
    config: &PipelineConfig,
    range: RangeInclusive<u32>,
) -> Result<Vec<SweepRow>> {
    let (corpus, _) =
        load_corpus(&config.inputs, &parse_options(config)).map_err(|e| e.in_stage("parse"))?;
    let aliases = load_aliases(config.aliases.as_deref()).map_err(|e| e.in_stage("aliases"))?;
    let corpus = match &config.query {
        Some(q) => filter_corpus(
            &corpus,
            &parse_query(q).map_err(|e| Error::from(e).in_stage("filter"))?,
        ),
        None => corpus,
    };
    let index = count_citations(&corpus, &aliases);
    let report = config
        .threshold
        .apply(&index)
        .map_err(|e| e.in_stage("threshold"))?;
    let selected: BTreeSet<String> = report.selected_keys();
    let matrix = build_cocitation(&corpus, &selected, &aliases);
    sweep(&matrix, range, config.keep_isolated).map_err(|e| e.in_stage("sweep"))
}

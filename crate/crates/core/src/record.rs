//! Reader and writer for the field-tagged `cocite-export` record format.
//!
//! A file opens with `FF cocite-export 1` and closes with `EF`. Every record
//! is a run of two-letter field lines terminated by `ER`; lines beginning
//! with three spaces continue the previous field. After `CR` each
//! continuation line holds exactly one raw cited-reference string.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::MalformedRecord;

pub const FILE_HEADER: &str = "FF cocite-export 1";
pub const FILE_TERMINATOR: &str = "EF";
pub const RECORD_TERMINATOR: &str = "ER";
const CONTINUATION: &str = "   ";

/// One citing document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub authors: Vec<String>,
    pub title: String,
    pub source: String,
    pub year: Option<u16>,
    pub volume: Option<String>,
    pub first_page: Option<String>,
    pub keywords: Vec<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub cited_raw: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    /// RFC 3339 style stamp, or `None` when the run is meant to be reproducible.
    pub parsed_at: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub provenance: Provenance,
    pub records: Vec<ArticleRecord>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenates corpora in order. Record ids must stay unique.
    pub fn merge(parts: Vec<Corpus>) -> Result<Corpus, MalformedRecord> {
        let mut out = Corpus::default();
        let mut seen = BTreeSet::new();
        for part in parts {
            out.provenance.sources.extend(part.provenance.sources);
            if out.provenance.parsed_at.is_none() {
                out.provenance.parsed_at = part.provenance.parsed_at;
            }
            for rec in part.records {
                if !seen.insert(rec.id.clone()) {
                    return Err(MalformedRecord {
                        line: 0,
                        reason: format!("duplicate record id `{}` across inputs", rec.id),
                    });
                }
                out.records.push(rec);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Corpus> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Abort on the first malformed record instead of skipping it.
    pub strict: bool,
    /// Name recorded in the corpus provenance.
    pub source_name: Option<String>,
    pub parsed_at: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub corpus: Corpus,
    /// Records dropped in lenient mode.
    pub skipped: Vec<MalformedRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Id,
    Au,
    Ti,
    So,
    Py,
    Vl,
    Bp,
    De,
    Ab,
    Cr,
    Unknown,
}

impl Tag {
    fn from_code(code: &str) -> Tag {
        match code {
            "ID" => Tag::Id,
            "AU" => Tag::Au,
            "TI" => Tag::Ti,
            "SO" => Tag::So,
            "PY" => Tag::Py,
            "VL" => Tag::Vl,
            "BP" => Tag::Bp,
            "DE" => Tag::De,
            "AB" => Tag::Ab,
            "CR" => Tag::Cr,
            _ => Tag::Unknown,
        }
    }
}

struct OpenRecord {
    start_line: usize,
    rec: ArticleRecord,
    has_id: bool,
    seen: BTreeSet<&'static str>,
    last: Option<Tag>,
    error: Option<MalformedRecord>,
}

impl OpenRecord {
    fn new(start_line: usize) -> Self {
        OpenRecord {
            start_line,
            rec: ArticleRecord::default(),
            has_id: false,
            seen: BTreeSet::new(),
            last: None,
            error: None,
        }
    }

    fn once(&mut self, name: &'static str, line: usize) -> Result<(), MalformedRecord> {
        if self.seen.insert(name) {
            Ok(())
        } else {
            Err(malformed(line, format!("duplicate {name} field")))
        }
    }

    fn field(&mut self, line_no: usize, line: &str, strict: bool) -> Result<(), MalformedRecord> {
        let (code, value) = split_field(line_no, line)?;
        let tag = Tag::from_code(code);
        self.last = Some(tag);
        match tag {
            Tag::Id => {
                if value.is_empty() {
                    return Err(malformed(line_no, "empty record id"));
                }
                self.once("ID", line_no)?;
                self.rec.id = value.to_string();
                self.has_id = true;
            }
            Tag::Au => {
                if !value.is_empty() {
                    self.rec.authors.push(value.to_string());
                }
            }
            Tag::Ti => {
                self.once("TI", line_no)?;
                self.rec.title = value.to_string();
            }
            Tag::So => {
                self.once("SO", line_no)?;
                self.rec.source = value.to_string();
            }
            Tag::Py => {
                self.once("PY", line_no)?;
                self.rec.year = Some(parse_year(line_no, value)?);
            }
            Tag::Vl => {
                self.once("VL", line_no)?;
                self.rec.volume = non_empty(value);
            }
            Tag::Bp => {
                self.once("BP", line_no)?;
                self.rec.first_page = non_empty(value);
            }
            Tag::De => push_keywords(&mut self.rec.keywords, value),
            Tag::Ab => {
                self.once("AB", line_no)?;
                self.rec.abstract_text = value.to_string();
            }
            Tag::Cr => {
                if !value.is_empty() {
                    self.rec.cited_raw.push(value.to_string());
                }
            }
            Tag::Unknown => {
                if strict {
                    return Err(malformed(line_no, format!("unknown field tag `{code}`")));
                }
            }
        }
        Ok(())
    }

    fn continuation(&mut self, line_no: usize, value: &str) -> Result<(), MalformedRecord> {
        let Some(tag) = self.last else {
            return Err(malformed(line_no, "continuation line before any field tag"));
        };
        if value.is_empty() {
            return Ok(());
        }
        match tag {
            Tag::Ti => append_text(&mut self.rec.title, value),
            Tag::Ab => append_text(&mut self.rec.abstract_text, value),
            Tag::So => append_text(&mut self.rec.source, value),
            Tag::Au => self.rec.authors.push(value.to_string()),
            Tag::De => push_keywords(&mut self.rec.keywords, value),
            Tag::Cr => self.rec.cited_raw.push(value.to_string()),
            Tag::Unknown => {}
            Tag::Id | Tag::Py | Tag::Vl | Tag::Bp => {
                return Err(malformed(
                    line_no,
                    "continuation line not allowed for this field",
                ))
            }
        }
        Ok(())
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> MalformedRecord {
    MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn non_empty(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

fn append_text(dst: &mut String, value: &str) {
    if !dst.is_empty() {
        dst.push(' ');
    }
    dst.push_str(value);
}

fn push_keywords(dst: &mut Vec<String>, value: &str) {
    dst.extend(
        value
            .split(';')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::to_string),
    );
}

fn parse_year(line: usize, value: &str) -> Result<u16, MalformedRecord> {
    if value.len() == 4 && value.bytes().all(|b| b.is_ascii_digit()) {
        let year: u16 = value.parse().expect("four ascii digits");
        if year >= 1000 {
            return Ok(year);
        }
    }
    Err(malformed(
        line,
        format!("year `{value}` is not a 4-digit integer"),
    ))
}

fn split_field(line_no: usize, line: &str) -> Result<(&str, &str), MalformedRecord> {
    let bytes = line.as_bytes();
    let tag_ok = bytes.len() >= 2
        && bytes[..2]
            .iter()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
    if !tag_ok || (bytes.len() > 2 && bytes[2] != b' ') {
        return Err(malformed(
            line_no,
            format!("expected a field tag, found `{line}`"),
        ));
    }
    let value = if line.len() > 3 { line[3..].trim() } else { "" };
    Ok((&line[..2], value))
}

/// Parses a whole export file held in memory.
pub fn parse_corpus(input: &str, options: &ParseOptions) -> Result<ParseOutput, MalformedRecord> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut out = ParseOutput::default();
    if let Some(name) = &options.source_name {
        out.corpus.provenance.sources.push(name.clone());
    }
    out.corpus.provenance.parsed_at = options.parsed_at.clone();

    let header = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
    match header {
        Some((_, l)) if l.trim_start_matches('\u{feff}').trim_end() == FILE_HEADER => {}
        Some((n, l)) => {
            return Err(malformed(
                n,
                format!("expected file header `{FILE_HEADER}`, found `{l}`"),
            ))
        }
        None => return Err(malformed(1, format!("missing file header `{FILE_HEADER}`"))),
    }

    let mut ids = BTreeSet::new();
    let mut open: Option<OpenRecord> = None;
    let mut terminated = false;

    // Records a failure: strict mode aborts, lenient mode logs and drops the record.
    let reject = |err: MalformedRecord, skipped: &mut Vec<MalformedRecord>| {
        if options.strict {
            Err(err)
        } else {
            warn!("skipping malformed record: {err}");
            skipped.push(err);
            Ok(())
        }
    };

    for (line_no, raw_line) in lines.by_ref() {
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line == FILE_TERMINATOR {
            if let Some(rec) = open.take() {
                let err = malformed(
                    line_no,
                    format!(
                        "record starting at line {} has no `{RECORD_TERMINATOR}` terminator",
                        rec.start_line
                    ),
                );
                reject(err, &mut out.skipped)?;
            }
            terminated = true;
            break;
        }
        if line == RECORD_TERMINATOR {
            match open.take() {
                None => reject(
                    malformed(line_no, "record terminator outside a record"),
                    &mut out.skipped,
                )?,
                Some(rec) => {
                    if let Some(err) = rec.error {
                        reject(err, &mut out.skipped)?;
                    } else if !rec.has_id {
                        let err = malformed(
                            rec.start_line,
                            format!("record ending at line {line_no} has no ID field"),
                        );
                        reject(err, &mut out.skipped)?;
                    } else if !ids.insert(rec.rec.id.clone()) {
                        let err = malformed(
                            rec.start_line,
                            format!("duplicate record id `{}`", rec.rec.id),
                        );
                        reject(err, &mut out.skipped)?;
                    } else {
                        out.corpus.records.push(rec.rec);
                    }
                }
            }
            continue;
        }

        // A second ID inside an open record means its terminator went missing.
        if line.starts_with("ID ") && open.as_ref().is_some_and(|r| r.has_id) {
            let rec = open.take().expect("checked above");
            let err = malformed(
                line_no,
                format!(
                    "record starting at line {} has no `{RECORD_TERMINATOR}` terminator",
                    rec.start_line
                ),
            );
            reject(err, &mut out.skipped)?;
        }

        let rec = open.get_or_insert_with(|| OpenRecord::new(line_no));
        if rec.error.is_some() {
            continue;
        }
        let result = if let Some(rest) = line.strip_prefix(CONTINUATION) {
            rec.continuation(line_no, rest.trim())
        } else {
            rec.field(line_no, line, options.strict)
        };
        if let Err(err) = result {
            if options.strict {
                return Err(err);
            }
            rec.error = Some(err);
        }
    }

    if let Some(rec) = open.take() {
        let err = malformed(
            rec.start_line,
            format!(
                "record starting at line {} is not terminated",
                rec.start_line
            ),
        );
        reject(err, &mut out.skipped)?;
    }
    if !terminated {
        let err = malformed(
            input.lines().count(),
            format!("missing file terminator `{FILE_TERMINATOR}`"),
        );
        if options.strict {
            return Err(err);
        }
        warn!("{err}");
    } else if options.strict {
        if let Some((n, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(malformed(
                n,
                format!("content after file terminator: `{l}`"),
            ));
        }
    }
    Ok(out)
}

/// Streams `reader` into memory and parses it.
pub fn parse_reader<R: BufRead>(
    mut reader: R,
    options: &ParseOptions,
) -> Result<ParseOutput, crate::Error> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_corpus(&text, options)?)
}

/// Writes `corpus` back out in the canonical field order.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    out.push_str(FILE_HEADER);
    out.push('\n');
    for rec in &corpus.records {
        let _ = writeln!(out, "ID {}", rec.id);
        for au in &rec.authors {
            let _ = writeln!(out, "AU {au}");
        }
        if !rec.title.is_empty() {
            let _ = writeln!(out, "TI {}", rec.title);
        }
        if !rec.source.is_empty() {
            let _ = writeln!(out, "SO {}", rec.source);
        }
        if let Some(year) = rec.year {
            let _ = writeln!(out, "PY {year}");
        }
        if let Some(vl) = &rec.volume {
            let _ = writeln!(out, "VL {vl}");
        }
        if let Some(bp) = &rec.first_page {
            let _ = writeln!(out, "BP {bp}");
        }
        if !rec.keywords.is_empty() {
            let _ = writeln!(out, "DE {}", rec.keywords.join("; "));
        }
        if !rec.abstract_text.is_empty() {
            let _ = writeln!(out, "AB {}", rec.abstract_text);
        }
        if !rec.cited_raw.is_empty() {
            out.push_str("CR\n");
            for cr in &rec.cited_raw {
                let _ = writeln!(out, "{CONTINUATION}{cr}");
            }
        }
        out.push_str(RECORD_TERMINATOR);
        out.push('\n');
    }
    out.push_str(FILE_TERMINATOR);
    out.push('\n');
    out
}

//! Cited-reference parsing and canonical document keys.
//!
//! Raw references look like `Reynolds P, 2005, V24, P205, Small Bus Econ`.
//! Two references denote the same document when they agree on surname,
//! first initial and year, and then either on volume and first page or,
//! when the volume is missing, on the normalized source string (plus the
//! first page, if any).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::record::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unparseable cited reference `{raw}`")]
pub struct UnparseableRef {
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitedRef {
    pub surname: String,
    pub initials: String,
    pub year: Option<u16>,
    pub volume: Option<u32>,
    pub first_page: Option<String>,
    pub source: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocKey {
    pub key: String,
    pub display_label: String,
}

/// Uppercases, strips periods and `|`, collapses whitespace.
fn clean(token: &str) -> String {
    token
        .chars()
        .filter(|&c| c != '.')
        .map(|c| if c == '|' { ' ' } else { c })
        .collect::<String>()
        .to_uppercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_year(token: &str) -> Option<u16> {
    if token.len() == 4 && token.bytes().all(|b| b.is_ascii_digit()) {
        token.parse().ok().filter(|y| *y >= 1000)
    } else {
        None
    }
}

fn is_volume(token: &str) -> Option<u32> {
    let digits = token.strip_prefix('V')?;
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

fn is_page(token: &str) -> Option<String> {
    let rest = token.strip_prefix('P')?;
    let (first, last) = match rest.split_once('-') {
        Some((a, b)) => (a, Some(b)),
        None => (rest, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(first) || last.is_some_and(|l| !digits(l)) {
        return None;
    }
    let trimmed = first.trim_start_matches('0');
    Some(if trimmed.is_empty() { "0" } else { trimmed }.to_string())
}

fn split_author(author: &str) -> (String, String) {
    let words: Vec<&str> = author.split_whitespace().collect();
    if let [surname @ .., last] = words.as_slice() {
        let n = last.chars().count();
        if !surname.is_empty() && (1..=3).contains(&n) && last.chars().all(char::is_alphabetic) {
            return (surname.join(" "), (*last).to_string());
        }
    }
    (author.to_string(), String::new())
}

pub fn parse_cited_ref(raw: &str) -> Result<CitedRef, UnparseableRef> {
    let tokens: Vec<String> = raw.split(',').map(clean).collect();
    let author = tokens
        .first()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| UnparseableRef {
            raw: raw.to_string(),
        })?;
    let (surname, initials) = split_author(author);

    let rest = &tokens[1..];
    let year_at = rest.iter().position(|t| is_year(t).is_some());
    let year = year_at.map(|i| is_year(&rest[i]).expect("position matched"));
    let mut volume = None;
    let mut first_page = None;
    let mut source = Vec::new();
    for (i, tok) in rest.iter().enumerate() {
        if Some(i) == year_at || tok.is_empty() {
            continue;
        }
        if volume.is_none() {
            if let Some(v) = is_volume(tok) {
                volume = Some(v);
                continue;
            }
        }
        if first_page.is_none() {
            if let Some(p) = is_page(tok) {
                first_page = Some(p);
                continue;
            }
        }
        if year_at.is_none_or(|y| i > y) {
            source.push(tok.as_str());
        }
    }
    Ok(CitedRef {
        surname,
        initials,
        year,
        volume,
        first_page,
        source: source.join(" "),
        raw: raw.to_string(),
    })
}

fn title_case(text: &str) -> String {
    text.split(' ')
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c
                    .to_uppercase()
                    .chain(cs.flat_map(char::to_lowercase))
                    .collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(" ")
}

impl CitedRef {
    /// `SURNAME I`, with initials truncated to the first letter.
    pub fn author_key(&self) -> String {
        match self.initials.chars().next() {
            Some(c) => format!("{} {c}", self.surname),
            None => self.surname.clone(),
        }
    }

    pub fn has_volume_and_page(&self) -> bool {
        self.volume.is_some() && self.first_page.is_some()
    }

    /// Key before alias rules are applied.
    pub fn base_key(&self) -> String {
        let year = format!("{:04}", self.year.unwrap_or(0));
        match (self.volume, &self.first_page) {
            (Some(v), Some(p)) => format!("{}|{year}|V{v}|P{p}", self.author_key()),
            // chapters of one edited book differ only by page
            (None, Some(p)) => format!("{}|{year}|{}|P{p}", self.author_key(), self.source),
            _ => format!("{}|{year}|{}", self.author_key(), self.source),
        }
    }

    pub fn display_label(&self) -> String {
        let mut parts = vec![title_case(&self.author_key())];
        if let Some(y) = self.year {
            parts.push(y.to_string());
        }
        if let Some(v) = self.volume {
            parts.push(format!("V{v}"));
        }
        if let Some(p) = &self.first_page {
            parts.push(format!("P{p}"));
        }
        if !self.source.is_empty() {
            parts.push(title_case(&self.source));
        }
        parts.join(", ")
    }

    /// Renders the normalized fields back into reference-string form.
    pub fn normalized_string(&self) -> String {
        let mut author = self.surname.clone();
        if !self.initials.is_empty() {
            author.push(' ');
            author.push_str(&self.initials);
        }
        let mut parts = vec![author];
        if let Some(y) = self.year {
            parts.push(y.to_string());
        }
        if let Some(v) = self.volume {
            parts.push(format!("V{v}"));
        }
        if let Some(p) = &self.first_page {
            parts.push(format!("P{p}"));
        }
        if !self.source.is_empty() {
            parts.push(self.source.clone());
        }
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pattern {
    Exact(String),
    Prefix(String),
}

impl Pattern {
    fn matches(&self, key: &str) -> bool {
        match self {
            Pattern::Exact(k) => k == key,
            Pattern::Prefix(p) => key.starts_with(p.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasRule {
    pattern: Pattern,
    replacement: String,
    line: usize,
}

/// Ordered `match-key => replacement-key` rules, first match wins.
///
/// A match key ending in `*` matches every key with that prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    rules: Vec<AliasRule>,
}

/// Normalizes a key written by hand in an alias file.
fn clean_key(text: &str) -> String {
    text.split('|')
        .map(|part| {
            part.to_uppercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("|")
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<AliasTable, Error> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |reason: &str| Error::AliasTable {
                line: line_no,
                reason: reason.to_string(),
            };
            let (lhs, rhs) = content
                .split_once("=>")
                .ok_or_else(|| err("expected `match-key => replacement-key`"))?;
            let lhs = clean_key(lhs);
            let rhs = clean_key(rhs);
            if rhs.is_empty() || rhs.contains('*') {
                return Err(err("replacement key must be nonempty and contain no `*`"));
            }
            let pattern = match lhs.strip_suffix('*') {
                Some(p) if !p.is_empty() && !p.contains('*') => Pattern::Prefix(p.to_string()),
                None if !lhs.is_empty() && !lhs.contains('*') => Pattern::Exact(lhs),
                _ => {
                    return Err(err(
                        "match key must be nonempty with at most a trailing `*`",
                    ))
                }
            };
            rules.push(AliasRule {
                pattern,
                replacement: rhs,
                line: line_no,
            });
        }
        let table = AliasTable { rules };
        table.check_idempotent()?;
        Ok(table)
    }

    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<AliasTable, Error> {
        let text: String = pairs
            .into_iter()
            .map(|(a, b)| format!("{a} => {b}\n"))
            .collect();
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Every replacement must be a fixed point of the table.
    fn check_idempotent(&self) -> Result<(), Error> {
        for rule in &self.rules {
            let again = self.apply(&rule.replacement);
            if again != rule.replacement {
                return Err(Error::AliasTable {
                    line: rule.line,
                    reason: format!(
                        "replacement `{}` is itself rewritten to `{again}`",
                        rule.replacement
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn apply(&self, key: &str) -> String {
        self.rules
            .iter()
            .find(|r| r.pattern.matches(key))
            .map_or_else(|| key.to_string(), |r| r.replacement.clone())
    }
}

pub fn canonicalize(cited: &CitedRef, aliases: &AliasTable) -> DocKey {
    DocKey {
        key: aliases.apply(&cited.base_key()),
        display_label: cited.display_label(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub key: String,
    pub display_label: String,
    /// Raw reference instances mapping to this key.
    pub occurrences: usize,
}

/// References sharing author and year that landed on several keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantCluster {
    pub author: String,
    pub year: Option<u16>,
    pub undated: bool,
    pub variants: Vec<Variant>,
}

impl VariantCluster {
    pub fn size(&self) -> usize {
        self.variants.len()
    }
}

#[derive(Default)]
struct KeyStats {
    label: Option<String>,
    occurrences: usize,
    incomplete: bool,
}

pub fn variant_report(corpus: &Corpus, aliases: &AliasTable) -> Vec<VariantCluster> {
    let mut groups: BTreeMap<(String, Option<u16>), BTreeMap<String, KeyStats>> = BTreeMap::new();
    for raw in corpus.records.iter().flat_map(|r| &r.cited_raw) {
        let Ok(cited) = parse_cited_ref(raw) else {
            continue;
        };
        let doc = canonicalize(&cited, aliases);
        let stats = groups
            .entry((cited.author_key(), cited.year))
            .or_default()
            .entry(doc.key)
            .or_default();
        stats.occurrences += 1;
        stats.incomplete |= !cited.has_volume_and_page();
        if stats.label.as_ref().is_none_or(|l| doc.display_label < *l) {
            stats.label = Some(doc.display_label);
        }
    }

    let mut clusters: Vec<VariantCluster> = groups
        .into_iter()
        .filter(|((_, year), keys)| {
            year.is_none() || (keys.len() >= 2 && keys.values().any(|s| s.incomplete))
        })
        .map(|((author, year), keys)| VariantCluster {
            author,
            year,
            undated: year.is_none(),
            variants: keys
                .into_iter()
                .map(|(key, s)| Variant {
                    key,
                    display_label: s.label.unwrap_or_default(),
                    occurrences: s.occurrences,
                })
                .collect(),
        })
        .collect();
    // stable sort keeps the (author, year) order within equal sizes
    clusters.sort_by_key(|c| std::cmp::Reverse(c.size()));
    clusters
}

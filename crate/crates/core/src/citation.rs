//! Citation counts per canonical document and citation-threshold selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{canonicalize, parse_cited_ref, AliasTable};
use crate::record::{ArticleRecord, Corpus};

/// Slack applied when comparing a coverage against a target: half a unit
/// in the second decimal of the percentage, the precision coverage is
/// reported at. 979/4908 = 19.947% therefore meets a 19.95% target.
pub const COVERAGE_TOLERANCE: f64 = 5e-5;

/// The deduplicated documents one article cites.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitedDocuments {
    /// key -> smallest display label seen for it
    pub docs: BTreeMap<String, String>,
    pub unparseable: Vec<String>,
}

pub fn cited_documents(record: &ArticleRecord, aliases: &AliasTable) -> CitedDocuments {
    let mut out = CitedDocuments::default();
    for raw in &record.cited_raw {
        match parse_cited_ref(raw) {
            Ok(cited) => {
                let doc = canonicalize(&cited, aliases);
                merge_label(&mut out.docs, doc.key, doc.display_label);
            }
            Err(_) => out.unparseable.push(raw.clone()),
        }
    }
    out
}

/// Keeps the lexicographically smallest label so merged variants get an
/// order-independent label.
pub(crate) fn merge_label(map: &mut BTreeMap<String, String>, key: String, label: String) {
    match map.get_mut(&key) {
        Some(existing) if label < *existing => *existing = label,
        Some(_) => {}
        None => {
            map.insert(key, label);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationEntry {
    pub count: u32,
    pub display_label: String,
    pub citing_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnparseableInstance {
    pub article_id: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationIndex {
    pub entries: BTreeMap<String, CitationEntry>,
    /// Parsed reference instances after per-article deduplication.
    pub total_refs: u64,
    pub distinct_docs: usize,
    pub unparseable: Vec<UnparseableInstance>,
}

impl CitationIndex {
    fn from_article(record: &ArticleRecord, aliases: &AliasTable) -> CitationIndex {
        let cited = cited_documents(record, aliases);
        let mut index = CitationIndex {
            total_refs: cited.docs.len() as u64,
            distinct_docs: cited.docs.len(),
            unparseable: cited
                .unparseable
                .into_iter()
                .map(|raw| UnparseableInstance {
                    article_id: record.id.clone(),
                    raw,
                })
                .collect(),
            ..Default::default()
        };
        for (key, display_label) in cited.docs {
            index.entries.insert(
                key,
                CitationEntry {
                    count: 1,
                    display_label,
                    citing_ids: BTreeSet::from([record.id.clone()]),
                },
            );
        }
        index
    }

    /// Associative merge; `self` holds the earlier articles.
    fn merge(mut self, other: CitationIndex) -> CitationIndex {
        for (key, entry) in other.entries {
            match self.entries.get_mut(&key) {
                Some(mine) => {
                    mine.citing_ids.extend(entry.citing_ids);
                    mine.count = mine.citing_ids.len() as u32;
                    if entry.display_label < mine.display_label {
                        mine.display_label = entry.display_label;
                    }
                }
                None => {
                    self.entries.insert(key, entry);
                }
            }
        }
        self.total_refs += other.total_refs;
        self.distinct_docs = self.entries.len();
        self.unparseable.extend(other.unparseable);
        self
    }

    pub fn count(&self, key: &str) -> u32 {
        self.entries.get(key).map_or(0, |e| e.count)
    }

    /// Checks the count/citing-set/total consistency rules.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0u64;
        for (key, entry) in &self.entries {
            if entry.count as usize != entry.citing_ids.len() {
                return Err(Error::Invariant(format!(
                    "count of `{key}` is {} but {} articles cite it",
                    entry.count,
                    entry.citing_ids.len()
                )));
            }
            sum += u64::from(entry.count);
        }
        if sum != self.total_refs {
            return Err(Error::Invariant(format!(
                "citation counts sum to {sum}, total_refs is {}",
                self.total_refs
            )));
        }
        if self.distinct_docs != self.entries.len() {
            return Err(Error::Invariant(format!(
                "distinct_docs is {} but the index has {} entries",
                self.distinct_docs,
                self.entries.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Counts article-level citations, in parallel across articles.
pub fn count_citations(corpus: &Corpus, aliases: &AliasTable) -> CitationIndex {
    corpus
        .records
        .par_iter()
        .map(|r| CitationIndex::from_article(r, aliases))
        .reduce(CitationIndex::default, CitationIndex::merge)
}

pub fn count_citations_sequential(corpus: &Corpus, aliases: &AliasTable) -> CitationIndex {
    corpus
        .records
        .iter()
        .map(|r| CitationIndex::from_article(r, aliases))
        .fold(CitationIndex::default(), CitationIndex::merge)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedDoc {
    pub key: String,
    pub display_label: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub min_citations: u32,
    /// Count descending, then key ascending.
    pub selected: Vec<SelectedDoc>,
    pub selected_docs: usize,
    pub covered_refs: u64,
    pub total_refs: u64,
    pub coverage: f64,
}

/// `covered / total` as a percentage rounded half-up to two decimals,
/// computed in integers.
pub fn format_percent(covered: u64, total: u64) -> String {
    if total == 0 {
        return "0.00%".to_string();
    }
    let hundredths = (u128::from(covered) * 20_000 + u128::from(total)) / (2 * u128::from(total));
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

impl ThresholdReport {
    pub fn coverage_percent(&self) -> String {
        format_percent(self.covered_refs, self.total_refs)
    }

    pub fn selected_keys(&self) -> BTreeSet<String> {
        self.selected.iter().map(|d| d.key.clone()).collect()
    }

    /// Tab-separated `count key display_label` rows under a summary comment.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# min_citations={} selected_docs={} covered_refs={} total_refs={} coverage={}\n",
            self.min_citations,
            self.selected_docs,
            self.covered_refs,
            self.total_refs,
            self.coverage_percent()
        );
        out.push_str("count\tkey\tdisplay_label\n");
        for doc in &self.selected {
            let _ = writeln!(out, "{}\t{}\t{}", doc.count, doc.key, doc.display_label);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

fn coverage(covered: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

pub fn select_by_min_citations(
    index: &CitationIndex,
    min_citations: u32,
) -> Result<ThresholdReport> {
    if min_citations < 1 {
        return Err(Error::InvalidThreshold("min_citations"));
    }
    let mut selected: Vec<SelectedDoc> = index
        .entries
        .iter()
        .filter(|(_, e)| e.count >= min_citations)
        .map(|(key, e)| SelectedDoc {
            key: key.clone(),
            display_label: e.display_label.clone(),
            count: e.count,
        })
        .collect();
    // entries iterate in key order, so a stable sort on count alone breaks ties by key
    selected.sort_by_key(|d| std::cmp::Reverse(d.count));
    let covered_refs: u64 = selected.iter().map(|d| u64::from(d.count)).sum();
    Ok(ThresholdReport {
        min_citations,
        selected_docs: selected.len(),
        selected,
        covered_refs,
        total_refs: index.total_refs,
        coverage: coverage(covered_refs, index.total_refs),
    })
}

/// The largest threshold whose coverage reaches `target`, within
/// [`COVERAGE_TOLERANCE`]. An empty index yields the `min_citations = 1`
/// report.
pub fn min_citations_for_coverage(index: &CitationIndex, target: f64) -> Result<ThresholdReport> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidTarget(target));
    }
    let mut counts: Vec<u32> = index.entries.values().map(|e| e.count).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let mut covered = 0u64;
    let mut chosen = 1;
    let mut i = 0;
    while i < counts.len() {
        let c = counts[i];
        while i < counts.len() && counts[i] == c {
            covered += u64::from(counts[i]);
            i += 1;
        }
        if coverage(covered, index.total_refs) + COVERAGE_TOLERANCE >= target {
            chosen = c.max(1);
            break;
        }
    }
    select_by_min_citations(index, chosen)
}

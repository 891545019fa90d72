//! Raw co-citation matrix and edge-thresholded co-citation graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citation::{cited_documents, merge_label};
use crate::error::{Error, Result};
use crate::normalize::AliasTable;
use crate::record::Corpus;

/// Value of a matrix cell. The diagonal has no meaning and is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cocite {
    Undefined,
    Count(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub key: String,
    pub display_label: String,
    pub citations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub key_a: String,
    pub key_b: String,
    pub weight: u32,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    docs: Vec<MatrixDoc>,
    cells: Vec<Triple>,
}

/// Symmetric sparse matrix over unordered pairs `{i, j}` with `i < j`.
/// Rows are the selected keys in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MatrixRepr", try_from = "MatrixRepr")]
pub struct CoCitationMatrix {
    docs: Vec<MatrixDoc>,
    cells: BTreeMap<(u32, u32), u32>,
}

impl From<CoCitationMatrix> for MatrixRepr {
    fn from(m: CoCitationMatrix) -> Self {
        let cells = m.triples().collect();
        MatrixRepr {
            docs: m.docs,
            cells,
        }
    }
}

impl TryFrom<MatrixRepr> for CoCitationMatrix {
    type Error = String;

    fn try_from(repr: MatrixRepr) -> std::result::Result<Self, String> {
        if !repr.docs.windows(2).all(|w| w[0].key < w[1].key) {
            return Err("matrix keys must be strictly ascending".into());
        }
        let mut m = CoCitationMatrix {
            docs: repr.docs,
            cells: BTreeMap::new(),
        };
        for t in repr.cells {
            let (Some(a), Some(b)) = (m.index_of(&t.key_a), m.index_of(&t.key_b)) else {
                return Err(format!(
                    "cell {}/{} refers to an unknown key",
                    t.key_a, t.key_b
                ));
            };
            if a == b {
                return Err(format!("diagonal cell for {}", t.key_a));
            }
            if t.weight == 0 {
                continue;
            }
            let pair = (a.min(b) as u32, a.max(b) as u32);
            if m.cells.insert(pair, t.weight).is_some() {
                return Err(format!("duplicate cell {}/{}", t.key_a, t.key_b));
            }
        }
        Ok(m)
    }
}

impl CoCitationMatrix {
    pub fn dim(&self) -> usize {
        self.docs.len()
    }

    pub fn docs(&self) -> &[MatrixDoc] {
        &self.docs
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.docs.binary_search_by(|d| d.key.as_str().cmp(key)).ok()
    }

    pub fn get(&self, i: usize, j: usize) -> Cocite {
        if i == j {
            return Cocite::Undefined;
        }
        let pair = (i.min(j) as u32, i.max(j) as u32);
        Cocite::Count(self.cells.get(&pair).copied().unwrap_or(0))
    }

    /// `None` when either key is not a row of the matrix.
    pub fn get_by_key(&self, a: &str, b: &str) -> Option<Cocite> {
        Some(self.get(self.index_of(a)?, self.index_of(b)?))
    }

    /// Nonzero cells as `(i, j, weight)` with `i < j`, sorted.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.cells
            .iter()
            .map(|(&(i, j), &w)| (i as usize, j as usize, w))
    }

    pub fn nonzero_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn max_cell(&self) -> u32 {
        self.cells.values().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().map(|&w| u64::from(w)).sum()
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.cells().map(|(i, j, w)| Triple {
            key_a: self.docs[i].key.clone(),
            key_b: self.docs[j].key.clone(),
            weight: w,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# key_a\tkey_b\tweight\n");
        for t in self.triples() {
            let _ = writeln!(out, "{}\t{}\t{}", t.key_a, t.key_b, t.weight);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Default)]
struct Partial {
    cells: BTreeMap<(u32, u32), u32>,
    citations: Vec<u32>,
    labels: BTreeMap<String, String>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (pair, w) in other.cells {
            *self.cells.entry(pair).or_insert(0) += w;
        }
        if self.citations.len() < other.citations.len() {
            self.citations.resize(other.citations.len(), 0);
        }
        for (mine, theirs) in self.citations.iter_mut().zip(other.citations) {
            *mine += theirs;
        }
        for (key, label) in other.labels {
            merge_label(&mut self.labels, key, label);
        }
        self
    }
}

fn article_partial(
    record: &crate::record::ArticleRecord,
    rows: &BTreeMap<&str, u32>,
    aliases: &AliasTable,
) -> Partial {
    let cited = cited_documents(record, aliases);
    let mut partial = Partial {
        citations: vec![0; rows.len()],
        ..Default::default()
    };
    let mut hits = Vec::new();
    for (key, label) in cited.docs {
        if let Some(&row) = rows.get(key.as_str()) {
            hits.push(row);
            partial.citations[row as usize] += 1;
            partial.labels.insert(key, label);
        }
    }
    // docs come out of a BTreeMap in key order, so rows ascend
    for (n, &i) in hits.iter().enumerate() {
        for &j in &hits[n + 1..] {
            *partial.cells.entry((i, j)).or_insert(0) += 1;
        }
    }
    partial
}

fn assemble(selected: &BTreeSet<String>, partial: Partial) -> CoCitationMatrix {
    let mut citations = partial.citations;
    citations.resize(selected.len(), 0);
    let docs = selected
        .iter()
        .zip(citations)
        .map(|(key, citations)| MatrixDoc {
            key: key.clone(),
            display_label: partial
                .labels
                .get(key)
                .cloned()
                .unwrap_or_else(|| key.clone()),
            citations,
        })
        .collect();
    CoCitationMatrix {
        docs,
        cells: partial.cells,
    }
}

fn row_map(selected: &BTreeSet<String>) -> BTreeMap<&str, u32> {
    selected
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i as u32))
        .collect()
}

/// Counts, for every pair of selected documents, the articles citing both.
pub fn build_cocitation(
    corpus: &Corpus,
    selected: &BTreeSet<String>,
    aliases: &AliasTable,
) -> CoCitationMatrix {
    let rows = row_map(selected);
    let partial = corpus
        .records
        .par_iter()
        .map(|r| article_partial(r, &rows, aliases))
        .reduce(Partial::default, Partial::merge);
    assemble(selected, partial)
}

pub fn build_cocitation_sequential(
    corpus: &Corpus,
    selected: &BTreeSet<String>,
    aliases: &AliasTable,
) -> CoCitationMatrix {
    let rows = row_map(selected);
    let partial = corpus
        .records
        .iter()
        .map(|r| article_partial(r, &rows, aliases))
        .fold(Partial::default(), Partial::merge);
    assemble(selected, partial)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub key: String,
    pub display_label: String,
    pub citations: u32,
}

/// Undirected edge with `source < target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoCitationGraph {
    pub threshold: u32,
    pub keep_isolated: bool,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl CoCitationGraph {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Keeps cells with weight `>= min_cocite`. Nodes without a surviving edge
/// are dropped unless `keep_isolated`.
pub fn threshold_edges(
    matrix: &CoCitationMatrix,
    min_cocite: u32,
    keep_isolated: bool,
) -> Result<CoCitationGraph> {
    if min_cocite < 1 {
        return Err(Error::InvalidThreshold("min_cocite"));
    }
    let kept: Vec<(usize, usize, u32)> = matrix
        .cells()
        .filter(|&(_, _, w)| w >= min_cocite)
        .collect();
    let mut touched = vec![keep_isolated; matrix.dim()];
    for &(i, j, _) in &kept {
        touched[i] = true;
        touched[j] = true;
    }
    let nodes = matrix
        .docs
        .iter()
        .zip(&touched)
        .filter(|(_, &t)| t)
        .map(|(d, _)| GraphNode {
            key: d.key.clone(),
            display_label: d.display_label.clone(),
            citations: d.citations,
        })
        .collect();
    // row order is key order and i < j, so edges come out sorted
    let edges = kept
        .into_iter()
        .map(|(i, j, w)| GraphEdge {
            source: matrix.docs[i].key.clone(),
            target: matrix.docs[j].key.clone(),
            weight: w,
        })
        .collect();
    Ok(CoCitationGraph {
        threshold: min_cocite,
        keep_isolated,
        nodes,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub min_cocite: u32,
    pub nodes: usize,
    pub edges: usize,
}

/// Node and edge counts for each candidate edge threshold.
pub fn sweep(
    matrix: &CoCitationMatrix,
    range: RangeInclusive<u32>,
    keep_isolated: bool,
) -> Result<Vec<SweepRow>> {
    if *range.start() < 1 {
        return Err(Error::InvalidThreshold("min_cocite"));
    }
    if range.is_empty() {
        return Err(Error::Config("empty co-citation threshold range".into()));
    }
    Ok(range
        .map(|t| {
            let mut touched = vec![false; matrix.dim()];
            let mut edges = 0;
            for (i, j, w) in matrix.cells() {
                if w >= t {
                    edges += 1;
                    touched[i] = true;
                    touched[j] = true;
                }
            }
            let nodes = if keep_isolated {
                matrix.dim()
            } else {
                touched.iter().filter(|&&b| b).count()
            };
            SweepRow {
                min_cocite: t,
                nodes,
                edges,
            }
        })
        .collect())
}

pub fn sweep_to_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("min_cocite\tnodes\tedges\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.min_cocite, r.nodes, r.edges);
    }
    out
}

#[cfg(test)]
pub(crate) fn matrix_from_cells(keys: &[&str], cells: &[(&str, &str, u32)]) -> CoCitationMatrix {
    let repr = MatrixRepr {
        docs: keys
            .iter()
            .map(|k| MatrixDoc {
                key: k.to_string(),
                display_label: k.to_string(),
                citations: 0,
            })
            .collect(),
        cells: cells
            .iter()
            .map(|(a, b, w)| Triple {
                key_a: a.to_string(),
                key_b: b.to_string(),
                weight: *w,
            })
            .collect(),
    };
    CoCitationMatrix::try_from(repr).unwrap()
}

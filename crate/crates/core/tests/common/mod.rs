#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use cocite::cocitation::{CoCitationGraph, CoCitationMatrix, GraphEdge, GraphNode};
use cocite::query::Query;
use cocite::record::{ArticleRecord, Corpus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(citations received, reference string)` rows of a most-cited table.
pub fn load_table(name: &str) -> Vec<(u32, String)> {
    read_fixture(name)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (count, doc) = l.split_once('\t').expect("tab separated");
            (count.parse().expect("count"), doc.to_string())
        })
        .collect()
}

pub struct FixtureSpec {
    pub id_prefix: &'static str,
    pub articles: usize,
    pub table: &'static str,
    /// `(count, number of documents)` for the uncited tail below the table.
    pub remainder: &'static [(u32, usize)],
    pub title: &'static str,
    pub keywords: &'static str,
}

/// 4,908 references to 3,347 documents from 86 articles; the tail holds
/// 3,229 documents cited 1-4 times for 3,929 references.
pub const GEM: FixtureSpec = FixtureSpec {
    id_prefix: "GEM",
    articles: 86,
    table: "gem_table1.tsv",
    remainder: &[(4, 50), (3, 100), (2, 350), (1, 2729)],
    title: "Global Entrepreneurship Monitor evidence on entrepreneurial activity",
    keywords: "global entrepreneurship monitor; gem data; entrepreneurship",
};

/// 1,974 references to 1,515 documents from 34 articles; the tail holds
/// 1,423 documents cited once or twice for 1,557 references.
pub const PSED: FixtureSpec = FixtureSpec {
    id_prefix: "PSED",
    articles: 34,
    table: "psed_table2.tsv",
    remainder: &[(2, 134), (1, 1289)],
    title: "Panel Study of Entrepreneurial Dynamics and nascent entrepreneurs",
    keywords: "psed; nascent entrepreneurship; business start-up",
};

/// Rewrites a table reference the way inconsistent coding would:
/// extra initials, upper case, periods, spelled-out sources.
fn coding_variant(doc: &str, occurrence: u32) -> String {
    let parts: Vec<&str> = doc.split(", ").collect();
    let has_vp = parts
        .iter()
        .any(|p| p.starts_with('V') && p[1..].chars().all(|c| c.is_ascii_digit()))
        && parts
            .iter()
            .any(|p| p.starts_with('P') && p[1..].chars().all(|c| c.is_ascii_digit()));
    match occurrence % 5 {
        1 if has_vp => {
            let mut p: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
            p[0].push('X');
            p.join(", ").to_uppercase()
        }
        2 => doc.to_uppercase(),
        3 if has_vp => {
            let mut p: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
            let last = p.len() - 1;
            p[last] = format!("{}.", p[last].replace(' ', ". "));
            p.join(", ")
        }
        _ => doc.to_string(),
    }
}

pub fn tail_doc(prefix: &str, n: usize) -> String {
    if n.is_multiple_of(3) {
        format!("Tail{prefix} Q, {}, Filler Monograph {n}", 1960 + n % 50)
    } else {
        format!(
            "Tail{prefix} Q, {}, V{n}, P{}, Filler J",
            1960 + n % 50,
            n % 400 + 1
        )
    }
}

/// Deterministically spreads the documents over the articles so every
/// document is cited by exactly its table count of distinct articles.
pub fn generate_fixture(spec: &FixtureSpec) -> String {
    let mut docs: Vec<(u32, String, bool)> = load_table(spec.table)
        .into_iter()
        .map(|(c, d)| (c, d, true))
        .collect();
    let mut n = 0;
    for &(count, ndocs) in spec.remainder {
        for _ in 0..ndocs {
            n += 1;
            docs.push((count, tail_doc(spec.id_prefix, n), false));
        }
    }
    let mut refs: Vec<Vec<String>> = vec![Vec::new(); spec.articles];
    let mut cursor = 0;
    for (count, doc, from_table) in &docs {
        assert!(*count as usize <= spec.articles);
        for k in 0..*count {
            let raw = if *from_table {
                coding_variant(doc, k)
            } else {
                doc.clone()
            };
            refs[(cursor + k as usize) % spec.articles].push(raw);
        }
        cursor = (cursor + *count as usize) % spec.articles;
    }
    // repeated entries within one reference list must not count twice
    for (i, list) in refs.iter_mut().enumerate() {
        if i % 10 == 0 && !list.is_empty() {
            let first = list[0].clone();
            list.push(first);
        }
    }
    refs[0].push(", 2001, Anonymous Report".to_string());

    let mut out = String::from("FF cocite-export 1\n");
    for (i, list) in refs.iter().enumerate() {
        let id = format!("{}-{:03}", spec.id_prefix, i + 1);
        out.push_str(&format!("ID {id}\n"));
        out.push_str(&format!("AU Author{}, A\n", i + 1));
        out.push_str(&format!("AU Coauthor{}, BC\n", i + 1));
        out.push_str(&format!("TI {} ({})\n", spec.title, i + 1));
        out.push_str("SO SMALL BUSINESS ECONOMICS\n");
        out.push_str(&format!("PY {}\n", 2002 + i % 11));
        out.push_str(&format!("VL {}\n", 20 + i % 15));
        out.push_str(&format!("BP {}\n", 1 + 17 * i));
        out.push_str(&format!("DE {}\n", spec.keywords));
        out.push_str("AB Synthetic fixture article built from a published most-cited table.\n");
        out.push_str("CR\n");
        for r in list {
            out.push_str(&format!("   {r}\n"));
        }
        out.push_str("ER\n");
    }
    out.push_str("EF\n");
    out
}

/// A cited document with a known canonical key.
#[derive(Debug, Clone)]
pub struct DocTemplate {
    pub surname: String,
    pub initial: char,
    pub year: u16,
    pub volume_page: Option<(u32, u32)>,
    pub source: String,
}

impl DocTemplate {
    pub fn expected_key(&self) -> String {
        match self.volume_page {
            Some((v, p)) => format!("{} {}|{}|V{v}|P{p}", self.surname, self.initial, self.year),
            None => format!(
                "{} {}|{}|{}",
                self.surname, self.initial, self.year, self.source
            ),
        }
    }

    /// A raw string with random, key-preserving coding noise.
    pub fn render(&self, rng: &mut impl Rng) -> String {
        let mut initials = self.initial.to_string();
        if rng.gen_bool(0.3) {
            initials.push(['B', 'D', 'J'][rng.gen_range(0..3)]);
        }
        let mut parts = vec![
            format!("{} {initials}", title(&self.surname)),
            self.year.to_string(),
        ];
        let source = match self.volume_page {
            Some((v, p)) => {
                parts.push(format!("V{v}"));
                if rng.gen_bool(0.3) {
                    parts.push(format!("P{p}-{}", p + rng.gen_range(1..30)));
                } else {
                    parts.push(format!("P{p}"));
                }
                // sources do not matter once volume and page are known
                if rng.gen_bool(0.5) {
                    self.source.clone()
                } else {
                    format!("{} JOURNAL", self.source)
                }
            }
            None => self.source.clone(),
        };
        parts.push(source);
        let mut raw = parts.join(", ");
        if rng.gen_bool(0.3) {
            raw = raw.to_lowercase();
        }
        if rng.gen_bool(0.2) {
            raw = raw.replace(", ", " ,  ");
        }
        raw
    }
}

fn title(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_string() + &c.as_str().to_lowercase(),
        None => String::new(),
    }
}

const SURNAMES: [&str; 8] = [
    "REYNOLDS",
    "SHANE",
    "BARNEY",
    "NORTH",
    "ACS",
    "WENNEKERS",
    "DAVIDSSON",
    "KIRZNER",
];
const SOURCES: [&str; 5] = [
    "SMALL BUS ECON",
    "J BUS VENTURING",
    "THEORY EC DEV",
    "ACAD MANAGE REV",
    "ORGAN SCI",
];

pub fn doc_pool(rng: &mut impl Rng, n: usize) -> Vec<DocTemplate> {
    (0..n)
        .map(|i| DocTemplate {
            surname: SURNAMES[i % SURNAMES.len()].to_string(),
            initial: (b'A' + (i % 26) as u8) as char,
            // unique per template so keys never collide by accident
            year: 1900 + i as u16,
            volume_page: rng
                .gen_bool(0.6)
                .then(|| (rng.gen_range(1..80), rng.gen_range(1..900))),
            source: SOURCES[rng.gen_range(0..SOURCES.len())].to_string(),
        })
        .collect()
}

pub struct RandomCorpus {
    pub corpus: Corpus,
    pub docs: Vec<DocTemplate>,
    /// Template index behind every raw reference, `None` when unparseable.
    pub truth: Vec<Vec<Option<usize>>>,
}

pub fn random_corpus(
    rng: &mut impl Rng,
    articles: usize,
    pool: usize,
    max_refs: usize,
) -> RandomCorpus {
    let docs = doc_pool(rng, pool);
    let mut records = Vec::new();
    let mut truth = Vec::new();
    for a in 0..articles {
        let nrefs = rng.gen_range(0..=max_refs);
        let mut raws = Vec::new();
        let mut ids = Vec::new();
        for _ in 0..nrefs {
            if rng.gen_bool(0.03) {
                raws.push([", 1999, Orphan", "", "   "][rng.gen_range(0..3)].to_string());
                ids.push(None);
                continue;
            }
            let d = rng.gen_range(0..docs.len());
            raws.push(docs[d].render(rng));
            ids.push(Some(d));
        }
        records.push(ArticleRecord {
            id: format!("art-{a:03}"),
            title: format!("article {a}"),
            cited_raw: raws,
            ..Default::default()
        });
        truth.push(ids);
    }
    RandomCorpus {
        corpus: Corpus {
            records,
            ..Default::default()
        },
        docs,
        truth,
    }
}

/// Brute-force article-level tally: one set per article, then nested loops.
pub fn brute_force_counts(rc: &RandomCorpus) -> (BTreeMap<String, u32>, u64) {
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for ids in &rc.truth {
        let mut seen = BTreeSet::new();
        for id in ids.iter().flatten() {
            seen.insert(rc.docs[*id].expected_key());
        }
        for key in seen {
            *counts.entry(key).or_insert(0) += 1;
            total += 1;
        }
    }
    (counts, total)
}

/// Co-citation counts by enumerating every ordered pair per article.
pub fn brute_force_pairs(
    rc: &RandomCorpus,
    selected: &BTreeSet<String>,
) -> BTreeMap<(String, String), u32> {
    let mut cells = BTreeMap::new();
    for ids in &rc.truth {
        let keys: Vec<String> = ids
            .iter()
            .flatten()
            .map(|&i| rc.docs[i].expected_key())
            .collect();
        for a in selected {
            for b in selected {
                if a < b && keys.contains(a) && keys.contains(b) {
                    *cells.entry((a.clone(), b.clone())).or_insert(0) += 1;
                }
            }
        }
    }
    cells
}

/// Shuffles article order and reference order within each article.
pub fn shuffled(corpus: &Corpus, rng: &mut impl Rng) -> Corpus {
    let mut c = corpus.clone();
    c.records.shuffle(rng);
    for r in &mut c.records {
        r.cited_raw.shuffle(rng);
    }
    c
}

// --- filter oracle: naive scans over normalized fields -------------------

pub fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

/// Normalized fields as char vectors: lowercase, whitespace runs collapsed.
pub fn oracle_fields(rec: &ArticleRecord) -> Vec<Vec<char>> {
    let mut fields = vec![rec.title.clone(), rec.abstract_text.clone()];
    fields.extend(rec.keywords.iter().cloned());
    fields
        .into_iter()
        .map(|f| {
            let mut out = Vec::new();
            let mut last_space = true;
            for c in f.to_lowercase().chars() {
                if c.is_whitespace() {
                    if !last_space {
                        out.push(' ');
                    }
                    last_space = true;
                } else {
                    out.push(c);
                    last_space = false;
                }
            }
            if out.last() == Some(&' ') {
                out.pop();
            }
            out
        })
        .collect()
}

/// Naive scan over every start offset with explicit boundary checks.
pub fn oracle_phrase(field: &[char], phrase: &str) -> bool {
    let p: Vec<char> = phrase.chars().collect();
    if p.is_empty() || p.len() > field.len() {
        return false;
    }
    (0..=field.len() - p.len()).any(|i| {
        field[i..i + p.len()] == p[..]
            && (i == 0 || !is_word(field[i - 1]))
            && (i + p.len() == field.len() || !is_word(field[i + p.len()]))
    })
}

/// Token view: split on non-word characters, test prefixes.
pub fn oracle_wildcard(field: &[char], prefix: &str) -> bool {
    let text: String = field.iter().collect();
    text.split(|c: char| !is_word(c))
        .any(|tok| !tok.is_empty() && tok.starts_with(prefix))
}

pub fn oracle_eval(q: &Query, fields: &[Vec<char>]) -> bool {
    match q {
        Query::Phrase(p) => fields.iter().any(|f| oracle_phrase(f, p)),
        Query::Wildcard(p) => fields.iter().any(|f| oracle_wildcard(f, p)),
        Query::And(qs) => qs.iter().all(|q| oracle_eval(q, fields)),
        Query::Or(qs) => qs.iter().any(|q| oracle_eval(q, fields)),
    }
}

pub fn oracle_ids(c: &Corpus, q: &Query) -> BTreeSet<String> {
    c.records
        .iter()
        .filter(|r| oracle_eval(q, &oracle_fields(r)))
        .map(|r| r.id.clone())
        .collect()
}

// --- random reference strings -------------------------------------------

const WORDS: [&str; 10] = [
    "Theory",
    "Ec",
    "Dev",
    "J",
    "Bus",
    "Venturing",
    "Small",
    "Econ",
    "Handbook",
    "I I",
];

/// Mostly well-formed references with a share of odd spacing, case,
/// periods, ranges, leading zeros, stray tokens and missing fields.
pub fn random_raw(rng: &mut impl Rng) -> String {
    let mut parts = Vec::new();
    let surname = ["Reynolds", "van Stel", "O'Brien", "Acs", "DE SOTO", "x"][rng.gen_range(0..6)];
    let initials = ["", "P", "PD", "p.d.", "ABC", "Jr"][rng.gen_range(0..6)];
    parts.push(format!("{surname} {initials}"));
    if rng.gen_bool(0.85) {
        parts.push(rng.gen_range(1900..2030).to_string());
    }
    if rng.gen_bool(0.6) {
        parts.push(format!("V{}", rng.gen_range(0..200)));
    }
    if rng.gen_bool(0.6) {
        let p = rng.gen_range(0..2000);
        parts.push(match rng.gen_range(0..3) {
            0 => format!("P{p}"),
            1 => format!("P{p}-{}", p + rng.gen_range(0..40)),
            _ => format!("P{p:04}"),
        });
    }
    let n = rng.gen_range(0..4);
    let source: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    parts.push(source.join(" "));
    if rng.gen_bool(0.1) {
        parts.push("DOI 10.1000/182".into());
    }
    if rng.gen_bool(0.2) {
        parts.shuffle(rng);
        // the author field has to stay first
        let i = parts.iter().position(|p| p.starts_with(surname)).unwrap();
        parts.swap(0, i);
    }
    let mut raw = parts.join(", ");
    match rng.gen_range(0..5) {
        0 => raw = raw.to_lowercase(),
        1 => raw = raw.to_uppercase(),
        2 => raw = raw.replace(' ', "  "),
        3 => raw = raw.replace(", ", " ,"),
        _ => {}
    }
    raw
}

// --- graphs ---------------------------------------------------------------

pub type NodeSet = BTreeSet<(String, String, u32)>;
pub type EdgeSet = BTreeSet<(String, String, u32)>;

const ODD_KEYS: [&str; 6] = [
    "A&B|1990|X",
    "C<D|2001|V3|P7",
    "E \"F\"|1999|J",
    "G'H|2000|K",
    "I\\J|1988|L",
    "Ünïcode|2005|M",
];

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> CoCitationGraph {
    let mut keys: Vec<String> = (0..n)
        .map(|i| {
            if rng.gen_bool(0.3) {
                format!("{}{i:02}", ODD_KEYS[rng.gen_range(0..ODD_KEYS.len())])
            } else {
                format!("DOC{i:02} X|{}|V{i}|P1", 1950 + i)
            }
        })
        .collect();
    keys.sort();
    keys.dedup();
    let nodes = keys
        .iter()
        .map(|k| GraphNode {
            key: k.clone(),
            display_label: format!("{k} & <label>"),
            citations: rng.gen_range(1..60),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if rng.gen_bool(p) {
                edges.push(GraphEdge {
                    source: keys[i].clone(),
                    target: keys[j].clone(),
                    weight: rng.gen_range(1..20),
                });
            }
        }
    }
    CoCitationGraph {
        threshold: 1,
        keep_isolated: true,
        nodes,
        edges,
    }
}

/// Warshall transitive closure over a boolean adjacency matrix.
pub fn reachability(g: &CoCitationGraph) -> Vec<Vec<bool>> {
    let n = g.nodes.len();
    let pos: BTreeMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.key.as_str(), i))
        .collect();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in &g.edges {
        let (a, b) = (pos[e.source.as_str()], pos[e.target.as_str()]);
        r[a][b] = true;
        r[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

pub fn read_graphml(text: &str) -> (NodeSet, EdgeSet) {
    let doc = roxmltree::Document::parse(text).expect("well-formed GraphML");
    let graph = doc.descendants().find(|n| n.has_tag_name("graph")).unwrap();
    assert_eq!(graph.attribute("edgedefault"), Some("undirected"));
    let data = |n: roxmltree::Node, key: &str| -> String {
        n.children()
            .find(|c| c.has_tag_name("data") && c.attribute("key") == Some(key))
            .and_then(|c| c.text())
            .unwrap_or("")
            .to_string()
    };
    let nodes = graph
        .children()
        .filter(|n| n.has_tag_name("node"))
        .map(|n| {
            (
                n.attribute("id").unwrap().to_string(),
                data(n, "label"),
                data(n, "citations").parse().unwrap(),
            )
        })
        .collect();
    let edges = graph
        .children()
        .filter(|n| n.has_tag_name("edge"))
        .map(|e| {
            (
                e.attribute("source").unwrap().to_string(),
                e.attribute("target").unwrap().to_string(),
                data(e, "weight").parse().unwrap(),
            )
        })
        .collect();
    (nodes, edges)
}

/// Random symmetric matrix through the documented JSON form.
pub fn random_matrix(rng: &mut impl Rng, n: usize, max: u32) -> CoCitationMatrix {
    let keys: Vec<String> = (0..n).map(|i| format!("K{i:02}")).collect();
    let docs: Vec<_> = keys
        .iter()
        .map(|k| json!({"key": k, "display_label": k, "citations": max}))
        .collect();
    let mut cells = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                cells.push(
                    json!({"key_a": keys[i], "key_b": keys[j], "weight": rng.gen_range(1..=max)}),
                );
            }
        }
    }
    CoCitationMatrix::from_json(&json!({"docs": docs, "cells": cells}).to_string()).unwrap()
}

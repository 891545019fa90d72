mod common;

use std::collections::{BTreeMap, BTreeSet};

use cocite::citation::{
    count_citations, count_citations_sequential, format_percent, min_citations_for_coverage,
    select_by_min_citations, CitationIndex, COVERAGE_TOLERANCE,
};
use cocite::normalize::AliasTable;
use cocite::record::{parse_corpus, Corpus, ParseOptions};
use proptest::prelude::*;

fn fixture(name: &str) -> Corpus {
    parse_corpus(&common::read_fixture(name), &ParseOptions::default())
        .unwrap()
        .corpus
}

fn index_of(corpus: &Corpus) -> CitationIndex {
    count_citations(corpus, &AliasTable::new())
}

fn counts(index: &CitationIndex) -> BTreeMap<String, u32> {
    index
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.count))
        .collect()
}

#[test]
fn counts_match_brute_force_on_random_corpora() {
    let mut rng = common::rng(11);
    for _ in 0..60 {
        let rc = common::random_corpus(&mut rng, 50, 40, 25);
        let index = index_of(&rc.corpus);
        let (want, total) = common::brute_force_counts(&rc);
        assert_eq!(counts(&index), want);
        assert_eq!(index.total_refs, total);
        assert_eq!(index.distinct_docs, want.len());
        let bad: usize = rc.truth.iter().flatten().filter(|t| t.is_none()).count();
        assert_eq!(index.unparseable.len(), bad);
        index.validate().unwrap();
        for (key, entry) in &index.entries {
            let citing: BTreeSet<String> = rc
                .truth
                .iter()
                .zip(&rc.corpus.records)
                .filter(|(ids, _)| {
                    ids.iter()
                        .flatten()
                        .any(|&d| rc.docs[d].expected_key() == *key)
                })
                .map(|(_, r)| r.id.clone())
                .collect();
            assert_eq!(entry.citing_ids, citing, "{key}");
        }
    }
}

#[test]
fn counts_ignore_article_and_reference_order() {
    let mut rng = common::rng(12);
    for _ in 0..20 {
        let rc = common::random_corpus(&mut rng, 50, 30, 20);
        let shuffled = common::shuffled(&rc.corpus, &mut rng);
        let a = index_of(&rc.corpus);
        let b = index_of(&shuffled);
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.total_refs, b.total_refs);
    }
}

#[test]
fn parallel_and_sequential_counts_agree() {
    let mut rng = common::rng(13);
    for _ in 0..20 {
        let rc = common::random_corpus(&mut rng, 50, 30, 20);
        let aliases = AliasTable::new();
        let par = count_citations(&rc.corpus, &aliases);
        let seq = count_citations_sequential(&rc.corpus, &aliases);
        assert_eq!(par.entries, seq.entries);
        assert_eq!(par.total_refs, seq.total_refs);
        assert_eq!(par.unparseable, seq.unparseable);
    }
    let gem = fixture("gem_corpus.txt");
    assert_eq!(
        counts(&count_citations(&gem, &AliasTable::new())),
        counts(&count_citations_sequential(&gem, &AliasTable::new()))
    );
}

#[test]
fn gem_threshold_five() {
    let corpus = fixture("gem_corpus.txt");
    assert_eq!(corpus.len(), 86);
    let index = index_of(&corpus);
    assert_eq!(index.total_refs, 4908);
    assert_eq!(index.distinct_docs, 3347);
    let report = select_by_min_citations(&index, 5).unwrap();
    assert_eq!(report.selected_docs, 118);
    assert_eq!(report.covered_refs, 979);
    assert_eq!(report.coverage_percent(), "19.95%");
    assert!((report.coverage * 100.0 - 19.95).abs() <= 0.01);
    let mut got: Vec<u32> = report.selected.iter().map(|d| d.count).collect();
    let mut want: Vec<u32> = common::load_table("gem_table1.tsv")
        .iter()
        .map(|(c, _)| *c)
        .collect();
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);
}

#[test]
fn psed_threshold_three() {
    let corpus = fixture("psed_corpus.txt");
    assert_eq!(corpus.len(), 34);
    let index = index_of(&corpus);
    assert_eq!(index.total_refs, 1974);
    assert_eq!(index.distinct_docs, 1515);
    let report = select_by_min_citations(&index, 3).unwrap();
    assert_eq!(report.selected_docs, 92);
    assert_eq!(report.covered_refs, 417);
    assert_eq!(report.coverage_percent(), "21.12%");
    assert!((report.coverage * 100.0 - 21.12).abs() <= 0.01);
}

#[test]
fn coverage_targets_recover_the_thresholds() {
    let gem = index_of(&fixture("gem_corpus.txt"));
    assert_eq!(
        min_citations_for_coverage(&gem, 0.1995)
            .unwrap()
            .min_citations,
        5
    );
    let psed = index_of(&fixture("psed_corpus.txt"));
    assert_eq!(
        min_citations_for_coverage(&psed, 0.2112)
            .unwrap()
            .min_citations,
        3
    );
}

#[test]
fn gem_rows_are_ordered_by_count_then_key() {
    let report = select_by_min_citations(&index_of(&fixture("gem_corpus.txt")), 5).unwrap();
    for w in report.selected.windows(2) {
        assert!(
            (w[1].count, &w[0].key) < (w[0].count, &w[1].key),
            "{:?} {:?}",
            w[0],
            w[1]
        );
    }
    assert_eq!(report.selected[0].count, 46);
    assert_eq!(report.selected[0].key, "REYNOLDS P|2005|V24|P205");
}

#[test]
fn invalid_thresholds_are_rejected() {
    let index = index_of(&fixture("psed_corpus.txt"));
    assert!(select_by_min_citations(&index, 0).is_err());
    for t in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(min_citations_for_coverage(&index, t).is_err(), "{t}");
    }
}

#[test]
fn percent_rounds_half_up() {
    for (covered, total, want) in [
        (979, 4908, "19.95%"),
        (417, 1974, "21.12%"),
        (1, 8, "12.50%"),
        (1, 3, "33.33%"),
        (2, 3, "66.67%"),
        (1, 160, "0.63%"),
        (1, 1600, "0.06%"),
        (0, 10, "0.00%"),
        (10, 10, "100.00%"),
        (0, 0, "0.00%"),
    ] {
        assert_eq!(format_percent(covered, total), want, "{covered}/{total}");
    }
}

/// Scans every threshold from the top and keeps the first that reaches `target`.
fn scan_oracle(index: &CitationIndex, target: f64) -> u32 {
    let max = index.entries.values().map(|e| e.count).max().unwrap_or(1);
    for t in (1..=max).rev() {
        let covered: u64 = index
            .entries
            .values()
            .filter(|e| e.count >= t)
            .map(|e| u64::from(e.count))
            .sum();
        if index.total_refs > 0
            && covered as f64 / index.total_refs as f64 + COVERAGE_TOLERANCE >= target
        {
            return t;
        }
    }
    1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thresholds_are_monotone_and_conserve_refs(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rc = common::random_corpus(&mut rng, 40, 25, 20);
        let index = index_of(&rc.corpus);
        let sum: u64 = index.entries.values().map(|e| u64::from(e.count)).sum();
        prop_assert_eq!(sum, index.total_refs);
        let max = index.entries.values().map(|e| e.count).max().unwrap_or(1);
        let mut prev = select_by_min_citations(&index, 1).unwrap();
        prop_assert_eq!(prev.covered_refs, index.total_refs);
        for t in 2..=max + 1 {
            let next = select_by_min_citations(&index, t).unwrap();
            prop_assert!(next.selected_keys().is_subset(&prev.selected_keys()));
            prop_assert!(next.covered_refs <= prev.covered_refs);
            prop_assert!(next.coverage <= prev.coverage);
            prop_assert!(next.covered_refs <= next.total_refs);
            prev = next;
        }
        prop_assert_eq!(prev.selected_docs, 0);
    }

    #[test]
    fn coverage_search_matches_linear_scan(seed in any::<u64>(), target in 0.001f64..=1.0) {
        let mut rng = common::rng(seed);
        let rc = common::random_corpus(&mut rng, 40, 25, 20);
        let index = index_of(&rc.corpus);
        let report = min_citations_for_coverage(&index, target).unwrap();
        prop_assert_eq!(report.min_citations, scan_oracle(&index, target));
        if index.total_refs > 0 {
            prop_assert!(report.coverage + COVERAGE_TOLERANCE >= target);
        }
    }
}

//! Citation and document co-citation analysis over citation-index exports.
//!
//! The stages mirror a science-mapping workflow: [`record`] reads the
//! field-tagged export, [`query`] selects the citing sample, [`normalize`]
//! turns raw cited references into canonical document keys, [`citation`]
//! counts and thresholds them, [`cocitation`] builds the raw co-citation
//! matrix and graph, and [`metrics`]/[`export`] summarize and write graphs.
//! [`pipeline`] chains them with intermediate files.

pub mod citation;
pub mod cocitation;
pub mod error;
pub mod export;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod query;
pub mod record;

pub use citation::{
    count_citations, min_citations_for_coverage, select_by_min_citations, CitationIndex,
    ThresholdReport,
};
pub use cocitation::{
    build_cocitation, threshold_edges, CoCitationGraph, CoCitationMatrix, Cocite,
};
pub use error::{Error, Result};
pub use export::{export_graph, ExportFormat};
pub use metrics::{compute_metrics, MetricsReport};
pub use normalize::{canonicalize, parse_cited_ref, variant_report, AliasTable, CitedRef, DocKey};
pub use query::{filter_corpus, parse_query, Query};
pub use record::{parse_corpus, write_corpus, ArticleRecord, Corpus, ParseOptions};

//! Graph writers for external layout tools: DOT, GraphML, edge list, JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::cocitation::CoCitationGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExportFormat {
    Dot,
    Graphml,
    Edgelist,
    Json,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 4] = [
        ExportFormat::Dot,
        ExportFormat::Graphml,
        ExportFormat::Edgelist,
        ExportFormat::Json,
    ];

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Graphml => "graphml",
            ExportFormat::Edgelist => "tsv",
            ExportFormat::Json => "json",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Graphml => "graphml",
            ExportFormat::Edgelist => "edgelist",
            ExportFormat::Json => "json",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::Graphml),
            "edgelist" | "tsv" => Ok(ExportFormat::Edgelist),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

pub fn export_graph(graph: &CoCitationGraph, format: ExportFormat) -> Result<String> {
    Ok(match format {
        ExportFormat::Dot => to_dot(graph),
        ExportFormat::Graphml => to_graphml(graph),
        ExportFormat::Edgelist => to_edgelist(graph),
        ExportFormat::Json => {
            let mut s = graph.to_json()?;
            s.push('\n');
            s
        }
    })
}

/// Parses the format name first, so unknown names fail with `UnsupportedFormat`.
pub fn export_graph_as(graph: &CoCitationGraph, format: &str) -> Result<String> {
    export_graph(graph, format.parse()?)
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn to_dot(graph: &CoCitationGraph) -> String {
    let mut out = String::from("graph cocitation {\n");
    for node in &graph.nodes {
        let _ = writeln!(
            out,
            "  {} [label={}, citations={}];",
            dot_quote(&node.key),
            dot_quote(&node.display_label),
            node.citations
        );
    }
    for edge in &graph.edges {
        let _ = writeln!(
            out,
            "  {} -- {} [weight={}];",
            dot_quote(&edge.source),
            dot_quote(&edge.target),
            edge.weight
        );
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn to_graphml(graph: &CoCitationGraph) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n  \
         <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n  \
         <key id=\"citations\" for=\"node\" attr.name=\"citations\" attr.type=\"int\"/>\n  \
         <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n",
    );
    let _ = writeln!(
        out,
        "  <graph id=\"cocitation\" edgedefault=\"undirected\">"
    );
    for node in &graph.nodes {
        let _ = writeln!(
            out,
            "    <node id=\"{}\"><data key=\"label\">{}</data><data key=\"citations\">{}</data></node>",
            xml_escape(&node.key),
            xml_escape(&node.display_label),
            node.citations
        );
    }
    for edge in &graph.edges {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data></edge>",
            xml_escape(&edge.source),
            xml_escape(&edge.target),
            edge.weight
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn to_edgelist(graph: &CoCitationGraph) -> String {
    let mut out = format!("# key_a\tkey_b\tweight (min_cocite={})\n", graph.threshold);
    for edge in &graph.edges {
        let _ = writeln!(out, "{}\t{}\t{}", edge.source, edge.target, edge.weight);
    }
    out
}

//! Degree-based measures and connected components of a co-citation graph.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cocitation::CoCitationGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub key: String,
    pub degree: usize,
    pub weighted_degree: u64,
    pub degree_centrality: f64,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub density: f64,
    pub component_count: usize,
    /// Members sorted by key; components ordered by their smallest key.
    pub components: Vec<Vec<String>>,
    pub nodes: Vec<NodeMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

pub fn compute_metrics(graph: &CoCitationGraph) -> MetricsReport {
    let n = graph.nodes.len();
    let index: BTreeMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.key.as_str(), i))
        .collect();

    let mut adjacency = vec![Vec::new(); n];
    let mut weighted = vec![0u64; n];
    for edge in &graph.edges {
        let (Some(&a), Some(&b)) = (
            index.get(edge.source.as_str()),
            index.get(edge.target.as_str()),
        ) else {
            continue;
        };
        adjacency[a].push(b);
        adjacency[b].push(a);
        weighted[a] += u64::from(edge.weight);
        weighted[b] += u64::from(edge.weight);
    }

    // BFS from nodes in key order numbers components by their smallest key.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| graph.nodes[a].key.cmp(&graph.nodes[b].key));
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<String>> = Vec::new();
    for &start in &order {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        while let Some(v) = queue.pop_front() {
            members.push(graph.nodes[v].key.clone());
            for &w in &adjacency[v] {
                if component[w] == usize::MAX {
                    component[w] = id;
                    queue.push_back(w);
                }
            }
        }
        members.sort();
        components.push(members);
    }

    let edge_count = graph.edges.len();
    let (density, denom) = if n >= 2 {
        let pairs = (n * (n - 1)) as f64;
        (2.0 * edge_count as f64 / pairs, (n - 1) as f64)
    } else {
        (0.0, 0.0)
    };
    let nodes = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| NodeMetrics {
            key: node.key.clone(),
            degree: adjacency[i].len(),
            weighted_degree: weighted[i],
            degree_centrality: if n >= 2 {
                adjacency[i].len() as f64 / denom
            } else {
                0.0
            },
            component: component[i],
        })
        .collect();

    MetricsReport {
        node_count: n,
        edge_count,
        density,
        component_count: components.len(),
        components,
        nodes,
    }
}

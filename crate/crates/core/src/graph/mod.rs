//! Citation graph over training papers and DeepWalk/Node2vec node embeddings.

mod skipgram;
mod walk;

pub use skipgram::{
    context_pairs, train_skipgram, train_skipgram_model, SkipGramConfig, SkipGramModel,
};
pub use walk::{
    generate_walks, transition_weights, Direction, LazyWalks, WalkConfig, WalkSource, Walks,
};

use std::collections::HashMap;

use crate::corpus::Corpus;

pub type NodeId = u32;

/// Directed citation graph. Nodes are numbered in ascending paper-id order;
/// adjacency lists are sorted and free of self-loops and parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    out_adj: Vec<Vec<NodeId>>,
    in_adj: Vec<Vec<NodeId>>,
}

impl CitationGraph {
    /// Builds from node ids and (citing, cited) pairs. Unknown endpoints,
    /// self-loops and repeated edges are ignored.
    pub fn from_edges<'a>(
        ids: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        let mut nodes: Vec<String> = ids.into_iter().map(str::to_string).collect();
        nodes.sort();
        nodes.dedup();
        let index: HashMap<String, NodeId> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as NodeId))
            .collect();
        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        for (u, v) in edges {
            let (Some(&u), Some(&v)) = (index.get(u), index.get(v)) else {
                continue;
            };
            if u != v {
                out_adj[u as usize].push(v);
                in_adj[v as usize].push(u);
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        CitationGraph {
            nodes,
            index,
            out_adj,
            in_adj,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> &[String] {
        &self.nodes
    }

    pub fn id(&self, node: NodeId) -> &str {
        &self.nodes[node as usize]
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn out_neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.out_adj[node as usize]
    }

    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.in_adj[node as usize]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.out_adj[u as usize].binary_search(&v).is_ok()
    }

    /// Sorted union of out- and in-neighbors.
    pub fn undirected_neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let (a, b) = (self.out_neighbors(node), self.in_neighbors(node));
        let mut merged = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            merged.push(next);
        }
        merged
    }
}

/// One node per training paper, one edge per retained reference.
pub fn build_citation_graph(train: &Corpus) -> CitationGraph {
    CitationGraph::from_edges(
        train.ids(),
        train.papers().flat_map(|p| {
            p.references
                .iter()
                .map(move |r| (p.id.as_str(), r.as_str()))
        }),
    )
}

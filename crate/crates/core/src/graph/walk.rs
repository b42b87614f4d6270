use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CitationGraph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Follow citations from citing to cited paper. Walks stop at papers
    /// with no in-graph references.
    #[default]
    Directed,
    /// Treat every citation as an undirected edge.
    Undirected,
}

/// Random-walk parameters. `p = q = 1` gives DeepWalk's uniform walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Maximum number of nodes in a walk, start node included.
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub seed: u64,
    pub direction: Direction,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 200,
            walk_length: 80,
            p: 4.0,
            q: 2.0,
            seed: 0,
            direction: Direction::Directed,
        }
    }
}

impl WalkConfig {
    pub fn deepwalk() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 {
            return Err(Error::config("walks_per_node and walk_length must be >= 1"));
        }
        if !(self.p > 0.0 && self.q > 0.0 && self.p.is_finite() && self.q.is_finite()) {
            return Err(Error::config(format!(
                "p and q must be positive, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        Ok(())
    }
}

/// Neighbor lists for the configured direction, computed once.
#[derive(Debug, Clone)]
struct Adjacency {
    lists: Vec<Vec<NodeId>>,
}

impl Adjacency {
    fn new(graph: &CitationGraph, direction: Direction) -> Self {
        let lists = (0..graph.len() as NodeId)
            .map(|u| match direction {
                Direction::Directed => graph.out_neighbors(u).to_vec(),
                Direction::Undirected => graph.undirected_neighbors(u),
            })
            .collect();
        Adjacency { lists }
    }

    fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.lists[u as usize]
    }

    fn is_neighbor(&self, u: NodeId, v: NodeId) -> bool {
        self.lists[u as usize].binary_search(&v).is_ok()
    }

    /// Second-order bias: 1/p to return to `prev`, 1 for nodes adjacent to
    /// `prev`, 1/q for everything further away.
    fn weights_into(&self, prev: Option<NodeId>, curr: NodeId, p: f64, q: f64, out: &mut Vec<f64>) {
        out.clear();
        let neighbors = self.neighbors(curr);
        match prev {
            None => out.extend(std::iter::repeat_n(1.0, neighbors.len())),
            Some(t) => out.extend(neighbors.iter().map(|&x| {
                if x == t {
                    1.0 / p
                } else if self.is_neighbor(t, x) {
                    1.0
                } else {
                    1.0 / q
                }
            })),
        }
    }
}

/// Unnormalized transition weights out of `curr` given the previous node.
/// Empty when `curr` has no neighbors.
pub fn transition_weights(
    graph: &CitationGraph,
    prev: Option<NodeId>,
    curr: NodeId,
    cfg: &WalkConfig,
) -> Vec<(NodeId, f64)> {
    let neighbors = |u: NodeId| match cfg.direction {
        Direction::Directed => graph.out_neighbors(u).to_vec(),
        Direction::Undirected => graph.undirected_neighbors(u),
    };
    let candidates = neighbors(curr);
    let prev_neighbors = prev.map(neighbors);
    candidates
        .into_iter()
        .map(|x| {
            let w = match (prev, &prev_neighbors) {
                (Some(t), _) if x == t => 1.0 / cfg.p,
                (Some(_), Some(pn)) if pn.binary_search(&x).is_ok() => 1.0,
                (Some(_), _) => 1.0 / cfg.q,
                (None, _) => 1.0,
            };
            (x, w)
        })
        .collect()
}

/// Independent stream per (seed, start node, round).
fn walk_rng(seed: u64, start: NodeId, round: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&u64::from(start).to_le_bytes());
    key[16..24].copy_from_slice(&(round as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn sample(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.len() - 1
}

fn walk_from(
    adj: &Adjacency,
    cfg: &WalkConfig,
    start: NodeId,
    round: usize,
    walk: &mut Vec<NodeId>,
    scratch: &mut Vec<f64>,
) {
    walk.clear();
    walk.push(start);
    let mut rng = walk_rng(cfg.seed, start, round);
    let mut prev = None;
    let mut curr = start;
    while walk.len() < cfg.walk_length {
        let neighbors = adj.neighbors(curr);
        if neighbors.is_empty() {
            break;
        }
        adj.weights_into(prev, curr, cfg.p, cfg.q, scratch);
        let next = neighbors[sample(scratch, &mut rng)];
        walk.push(next);
        prev = Some(curr);
        curr = next;
    }
}

/// Anything that can hand out walks by index.
pub trait WalkSource: Sync {
    fn num_walks(&self) -> usize;

    /// Upper bound (exclusive) on node ids appearing in walks.
    fn num_nodes(&self) -> usize;

    /// Writes walk `i` into `buf`, replacing its contents.
    fn walk_into(&self, i: usize, buf: &mut Vec<NodeId>);
}

/// Materialized walks, ordered round by round and, within a round, by start node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walks {
    nodes: Vec<NodeId>,
    offsets: Vec<usize>,
    num_nodes: usize,
}

impl Walks {
    pub fn from_walks(walks: impl IntoIterator<Item = Vec<NodeId>>, num_nodes: usize) -> Self {
        let mut nodes = Vec::new();
        let mut offsets = vec![0];
        for w in walks {
            debug_assert!(w.iter().all(|&n| (n as usize) < num_nodes));
            nodes.extend_from_slice(&w);
            offsets.push(nodes.len());
        }
        Walks {
            nodes,
            offsets,
            num_nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[NodeId] {
        &self.nodes[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[NodeId]> {
        (0..self.len()).map(|i| self.get(i))
    }

    /// One walk per line, paper ids separated by spaces.
    pub fn write<W: Write>(&self, graph: &CitationGraph, mut out: W) -> Result<()> {
        for walk in self.iter() {
            let ids: Vec<&str> = walk.iter().map(|&n| graph.id(n)).collect();
            writeln!(out, "{}", ids.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }
}

impl WalkSource for Walks {
    fn num_walks(&self) -> usize {
        self.len()
    }

    fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    fn walk_into(&self, i: usize, buf: &mut Vec<NodeId>) {
        buf.clear();
        buf.extend_from_slice(self.get(i));
    }
}

/// Regenerates walks on demand instead of storing them. Yields exactly the
/// walks [`generate_walks`] would materialize for the same inputs.
#[derive(Debug, Clone)]
pub struct LazyWalks {
    adj: Adjacency,
    cfg: WalkConfig,
}

impl LazyWalks {
    pub fn new(graph: &CitationGraph, cfg: &WalkConfig) -> Result<Self> {
        cfg.validate()?;
        if graph.is_empty() {
            return Err(Error::Empty("citation graph"));
        }
        Ok(LazyWalks {
            adj: Adjacency::new(graph, cfg.direction),
            cfg: *cfg,
        })
    }

    pub fn materialize(&self) -> Walks {
        let n = self.num_nodes();
        let walks: Vec<Vec<NodeId>> = (0..self.num_walks())
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| {
                let mut walk = Vec::with_capacity(self.cfg.walk_length);
                walk_from(
                    &self.adj,
                    &self.cfg,
                    (i % n) as NodeId,
                    i / n,
                    &mut walk,
                    scratch,
                );
                walk
            })
            .collect();
        Walks::from_walks(walks, n)
    }
}

impl WalkSource for LazyWalks {
    fn num_walks(&self) -> usize {
        self.adj.lists.len() * self.cfg.walks_per_node
    }

    fn num_nodes(&self) -> usize {
        self.adj.lists.len()
    }

    fn walk_into(&self, i: usize, buf: &mut Vec<NodeId>) {
        let n = self.num_nodes();
        let mut scratch = Vec::new();
        walk_from(
            &self.adj,
            &self.cfg,
            (i % n) as NodeId,
            i / n,
            buf,
            &mut scratch,
        );
    }
}

/// `walks_per_node` walks from every node, each up to `walk_length` nodes
/// and cut short at nodes without neighbors. Output depends only on the
/// graph and the config (including its seed), not on thread scheduling.
pub fn generate_walks(graph: &CitationGraph, cfg: &WalkConfig) -> Result<Walks> {
    Ok(LazyWalks::new(graph, cfg)?.materialize())
}

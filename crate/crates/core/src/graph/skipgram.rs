//! Skip-Gram with negative sampling over node sequences.
//!
//! Parameters live in relaxed atomics so that several workers can update
//! them without locks (lost updates are tolerated, as in word2vec). With a
//! single worker training is fully reproducible from the seed.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::WalkSource;
use super::NodeId;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub seed: u64,
    /// Worker threads; 1 is deterministic, 0 uses every available core.
    pub workers: usize,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            seed: 0,
            workers: 1,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 {
            return Err(Error::config("dim, window and negatives must be >= 1"));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::config("initial_lr must be positive"));
        }
        Ok(())
    }
}

const MIN_LR_FRACTION: f64 = 1e-4;

struct AtomicMatrix {
    dim: usize,
    data: Vec<AtomicU32>,
}

impl AtomicMatrix {
    fn from_values(dim: usize, values: impl IntoIterator<Item = f32>) -> Self {
        AtomicMatrix {
            dim,
            data: values
                .into_iter()
                .map(|v| AtomicU32::new(v.to_bits()))
                .collect(),
        }
    }

    fn load_row(&self, row: usize, out: &mut [f32]) {
        let base = row * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.data[base..base + self.dim]) {
            *o = f32::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    /// `row += scale * delta`, element by element.
    fn add_scaled(&self, row: usize, scale: f32, delta: &[f32]) {
        let base = row * self.dim;
        for (cell, d) in self.data[base..base + self.dim].iter().zip(delta) {
            let v = f32::from_bits(cell.load(Ordering::Relaxed)) + scale * d;
            cell.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|c| f32::from_bits(c.into_inner()))
            .collect()
    }
}

/// Cumulative unigram^0.75 distribution for drawing negatives.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Option<Self> {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        (acc > 0.0).then_some(NoiseTable { cumulative })
    }

    fn draw(&self, rng: &mut impl Rng) -> NodeId {
        let total = *self.cumulative.last().expect("non-empty");
        let target = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        idx.min(self.cumulative.len() - 1) as NodeId
    }
}

fn sigmoid(x: f32) -> f32 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Input ("center") and output ("context") vectors, row-major by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramModel {
    pub dim: usize,
    pub input: Vec<f32>,
    pub output: Vec<f32>,
}

impl SkipGramModel {
    /// Center vectors uniform in [-0.5/dim, 0.5/dim], context vectors zero.
    pub fn init(num_nodes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f32;
        let input = (0..num_nodes * dim)
            .map(|_| rng.random_range(-half..half))
            .collect();
        SkipGramModel {
            dim,
            input,
            output: vec![0.0; num_nodes * dim],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.input.len() / self.dim
    }

    pub fn center(&self, node: NodeId) -> &[f32] {
        let i = node as usize * self.dim;
        &self.input[i..i + self.dim]
    }

    pub fn context(&self, node: NodeId) -> &[f32] {
        let i = node as usize * self.dim;
        &self.output[i..i + self.dim]
    }

    /// Center vectors keyed by `ids[node]`.
    pub fn to_table(&self, ids: &[String]) -> Result<EmbeddingTable> {
        if ids.len() != self.num_nodes() {
            return Err(Error::dim(self.num_nodes(), ids.len(), "node id list"));
        }
        let mut table = EmbeddingTable::with_capacity(self.dim, ids.len());
        let mut row = vec![0.0f64; self.dim];
        for (node, id) in ids.iter().enumerate() {
            for (r, &v) in row.iter_mut().zip(self.center(node as NodeId)) {
                *r = f64::from(v);
            }
            table.push(id.as_str(), &row)?;
        }
        Ok(table)
    }

    /// Mean full-softmax cross-entropy over (center, context) pairs.
    /// Quadratic in the node count; meant for tiny graphs.
    pub fn softmax_loss(&self, pairs: &[(NodeId, NodeId)]) -> f64 {
        let n = self.num_nodes();
        let mut total = 0.0;
        for &(c, o) in pairs {
            let v = self.center(c);
            let logits: Vec<f64> = (0..n as NodeId)
                .map(|t| f64::from(dot(self.context(t), v)))
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            total += lse - logits[o as usize];
        }
        total / pairs.len().max(1) as f64
    }

    /// One full-batch gradient-descent step on [`Self::softmax_loss`].
    pub fn softmax_step(&mut self, pairs: &[(NodeId, NodeId)], lr: f64) {
        let n = self.num_nodes();
        let dim = self.dim;
        let mut g_in = vec![0.0f64; self.input.len()];
        let mut g_out = vec![0.0f64; self.output.len()];
        let scale = 1.0 / pairs.len().max(1) as f64;
        for &(c, o) in pairs {
            let v = self.center(c);
            let logits: Vec<f64> = (0..n as NodeId)
                .map(|t| f64::from(dot(self.context(t), v)))
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            for t in 0..n {
                // d loss / d logit_t = softmax_t - [t == o]
                let err = (exps[t] / z - if t == o as usize { 1.0 } else { 0.0 }) * scale;
                let u = self.context(t as NodeId);
                for k in 0..dim {
                    g_in[c as usize * dim + k] += err * f64::from(u[k]);
                    g_out[t * dim + k] += err * f64::from(v[k]);
                }
            }
        }
        for (w, g) in self.input.iter_mut().zip(&g_in) {
            *w -= (lr * g) as f32;
        }
        for (w, g) in self.output.iter_mut().zip(&g_out) {
            *w -= (lr * g) as f32;
        }
    }
}

/// Every (center, context) pair within `window` positions, in walk order.
pub fn context_pairs(
    walk: &[NodeId],
    window: usize,
) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
    (0..walk.len()).flat_map(move |i| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        (lo..=hi)
            .filter(move |&j| j != i)
            .map(move |j| (walk[i], walk[j]))
    })
}

fn pair_rng(seed: u64, epoch: usize, walk: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(epoch as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(walk as u64).to_le_bytes());
    key[24] = 0x5a;
    ChaCha8Rng::from_seed(key)
}

struct Trainer<'a> {
    cfg: &'a SkipGramConfig,
    input: AtomicMatrix,
    output: AtomicMatrix,
    noise: NoiseTable,
    processed: AtomicUsize,
    total_tokens: usize,
}

impl Trainer<'_> {
    fn learning_rate(&self) -> f32 {
        let progress = self.processed.load(Ordering::Relaxed) as f64 / self.total_tokens as f64;
        (self.cfg.initial_lr * (1.0 - progress).max(MIN_LR_FRACTION)) as f32
    }

    fn train_walk(&self, walk: &[NodeId], rng: &mut ChaCha8Rng, bufs: &mut Buffers) {
        let lr = self.learning_rate();
        for (center, context) in context_pairs(walk, self.cfg.window) {
            self.input.load_row(center as usize, &mut bufs.center);
            bufs.grad.iter_mut().for_each(|g| *g = 0.0);
            self.update(context, 1.0, lr, bufs);
            for _ in 0..self.cfg.negatives {
                let neg = self.noise.draw(rng);
                if neg != context {
                    self.update(neg, 0.0, lr, bufs);
                }
            }
            self.input.add_scaled(center as usize, 1.0, &bufs.grad);
        }
        self.processed.fetch_add(walk.len(), Ordering::Relaxed);
    }

    /// Gradient ascent on log sigma(u.v) (label 1) or log sigma(-u.v) (label 0).
    fn update(&self, target: NodeId, label: f32, lr: f32, bufs: &mut Buffers) {
        self.output.load_row(target as usize, &mut bufs.target);
        let g = (label - sigmoid(dot(&bufs.target, &bufs.center))) * lr;
        for (acc, u) in bufs.grad.iter_mut().zip(&bufs.target) {
            *acc += g * u;
        }
        self.output.add_scaled(target as usize, g, &bufs.center);
    }
}

struct Buffers {
    center: Vec<f32>,
    target: Vec<f32>,
    grad: Vec<f32>,
    walk: Vec<NodeId>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        Buffers {
            center: vec![0.0; dim],
            target: vec![0.0; dim],
            grad: vec![0.0; dim],
            walk: Vec::new(),
        }
    }
}

/// Trains node vectors on `walks` and returns the raw model.
pub fn train_skipgram_model<W: WalkSource>(
    walks: &W,
    cfg: &SkipGramConfig,
) -> Result<SkipGramModel> {
    cfg.validate()?;
    let num_nodes = walks.num_nodes();
    if walks.num_walks() == 0 || num_nodes == 0 {
        return Err(Error::Empty("walk corpus"));
    }

    let mut counts = vec![0u64; num_nodes];
    let mut tokens = 0usize;
    let mut buf = Vec::new();
    for i in 0..walks.num_walks() {
        walks.walk_into(i, &mut buf);
        tokens += buf.len();
        for &n in &buf {
            counts[n as usize] += 1;
        }
    }
    let noise = NoiseTable::new(&counts).ok_or(Error::Empty("walk corpus"))?;

    let init = SkipGramModel::init(num_nodes, cfg.dim, cfg.seed);
    let trainer = Trainer {
        cfg,
        input: AtomicMatrix::from_values(cfg.dim, init.input),
        output: AtomicMatrix::from_values(cfg.dim, init.output),
        noise,
        processed: AtomicUsize::new(0),
        total_tokens: (tokens * cfg.epochs).max(1),
    };

    for epoch in 0..cfg.epochs {
        if cfg.workers == 1 {
            let mut bufs = Buffers::new(cfg.dim);
            for i in 0..walks.num_walks() {
                walks.walk_into(i, &mut bufs.walk);
                let walk = std::mem::take(&mut bufs.walk);
                trainer.train_walk(&walk, &mut pair_rng(cfg.seed, epoch, i), &mut bufs);
                bufs.walk = walk;
            }
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..walks.num_walks()).into_par_iter().for_each_init(
                    || Buffers::new(cfg.dim),
                    |bufs, i| {
                        walks.walk_into(i, &mut bufs.walk);
                        let walk = std::mem::take(&mut bufs.walk);
                        trainer.train_walk(&walk, &mut pair_rng(cfg.seed, epoch, i), bufs);
                        bufs.walk = walk;
                    },
                )
            });
        }
        log::debug!(
            "skip-gram epoch {} done, lr {:.6}",
            epoch + 1,
            trainer.learning_rate()
        );
    }

    Ok(SkipGramModel {
        dim: cfg.dim,
        input: trainer.input.into_values(),
        output: trainer.output.into_values(),
    })
}

/// Trains node vectors and returns the center vectors keyed by `ids[node]`.
pub fn train_skipgram<W: WalkSource>(
    walks: &W,
    ids: &[String],
    cfg: &SkipGramConfig,
) -> Result<EmbeddingTable> {
    train_skipgram_model(walks, cfg)?.to_table(ids)
}

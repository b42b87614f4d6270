//! In-memory pipeline stages. Each stage consumes only what its predecessors
//! produced, so callers can persist artifacts between any two of them.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::config::{FusionMethod, RunConfig, TextModel, View};
use crate::corpus::{
    corpus_stats, parse_corpus, partition_stats, prune, temporal_split, Corpus, GroundTruth,
    ParseReport, PartitionStats, SplitCorpus, StatsReport,
};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_run, MetricsReport};
use crate::fusion::{fit_cca, fit_dcca, FusionModel, FusionStrategy, PairedViews};
use crate::graph::{build_citation_graph, train_skipgram, LazyWalks};
use crate::inference::{fuse_tables, NeighborEstimate, NodeEstimator};
use crate::retrieval::{ensure_disjoint, DenseIndex, RankedList, SparseIndex};
use crate::text::{fit_tfidf, SparseVector, TfidfModel};

pub const PQ_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const ALPHA_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone)]
pub struct Prepared {
    pub parse: ParseReport,
    /// Corpus after pruning, before the split.
    pub pruned: PartitionStats,
    pub split: SplitCorpus,
    pub stats: StatsReport,
}

/// Parse, prune and split.
pub fn prepare<R: BufRead>(reader: R, cfg: &RunConfig) -> Result<Prepared> {
    let (corpus, parse) = parse_corpus(reader)?;
    prepare_corpus(&corpus, parse, cfg)
}

pub fn prepare_corpus(corpus: &Corpus, parse: ParseReport, cfg: &RunConfig) -> Result<Prepared> {
    cfg.split.validate()?;
    let pruned = prune(corpus, &cfg.prune);
    log::info!(
        "pruned {} -> {} papers, {} citations",
        corpus.len(),
        pruned.len(),
        pruned.edge_count()
    );
    let split = temporal_split(&pruned, &cfg.split)?;
    let stats = corpus_stats(&split);
    Ok(Prepared {
        parse,
        pruned: partition_stats(&pruned),
        split,
        stats,
    })
}

/// Text vectors for one partition.
#[derive(Debug, Clone, PartialEq)]
pub enum TextView {
    Dense(EmbeddingTable),
    Sparse {
        dim: usize,
        rows: Vec<(String, SparseVector)>,
    },
}

impl TextView {
    pub fn len(&self) -> usize {
        match self {
            TextView::Dense(t) => t.len(),
            TextView::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            TextView::Dense(t) => t.dim(),
            TextView::Sparse { dim, .. } => *dim,
        }
    }

    pub fn ids(&self) -> Vec<String> {
        match self {
            TextView::Dense(t) => t.ids().to_vec(),
            TextView::Sparse { rows, .. } => rows.iter().map(|(id, _)| id.clone()).collect(),
        }
    }

    pub fn to_dense(&self) -> Result<EmbeddingTable> {
        match self {
            TextView::Dense(t) => Ok(t.clone()),
            TextView::Sparse { dim, rows } => {
                let mut t = EmbeddingTable::with_capacity(*dim, rows.len());
                for (id, v) in rows {
                    t.push(id.as_str(), &v.to_dense())?;
                }
                Ok(t)
            }
        }
    }

    pub fn dense(&self) -> Result<&EmbeddingTable> {
        match self {
            TextView::Dense(t) => Ok(t),
            TextView::Sparse { .. } => Err(Error::config("a dense text view is required here")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextViews {
    pub train: TextView,
    pub test: TextView,
}

/// Fits TF-IDF on training papers only.
pub fn fit_text_model(train: &Corpus, cfg: &RunConfig) -> Result<TfidfModel> {
    let texts: Vec<String> = train.papers().map(|p| p.text()).collect();
    let model = fit_tfidf(texts.iter().map(String::as_str), cfg.text.min_df)?;
    match cfg.text.max_features {
        Some(m) => model.limit_features(m),
        None => Ok(model),
    }
}

/// TF-IDF vectors of a corpus; dense when `cfg.dense_text()`.
pub fn tfidf_view(model: &TfidfModel, corpus: &Corpus, dense: bool) -> Result<TextView> {
    let rows: Vec<(String, SparseVector)> = corpus
        .papers()
        .map(|p| (p.id.clone(), model.embed(&p.text())))
        .collect();
    let view = TextView::Sparse {
        dim: model.dim(),
        rows,
    };
    if dense {
        Ok(TextView::Dense(view.to_dense()?))
    } else {
        Ok(view)
    }
}

pub fn tfidf_views(model: &TfidfModel, split: &SplitCorpus, cfg: &RunConfig) -> Result<TextViews> {
    Ok(TextViews {
        train: tfidf_view(model, &split.train, cfg.dense_text())?,
        test: tfidf_view(model, &split.test, cfg.dense_text())?,
    })
}

/// Train and test rows of a precomputed embedding table.
pub fn external_views(table: &EmbeddingTable, split: &SplitCorpus) -> Result<TextViews> {
    let pick = |c: &Corpus| -> Result<TextView> {
        for id in c.ids() {
            if !table.contains(id) {
                return Err(Error::UnknownId(format!(
                    "{id} (missing from external text embeddings)"
                )));
            }
        }
        Ok(TextView::Dense(table.select(c.ids())?))
    };
    Ok(TextViews {
        train: pick(&split.train)?,
        test: pick(&split.test)?,
    })
}

/// Text stage for either text model. `external` must be supplied for
/// [`TextModel::External`].
pub fn embed_text(
    split: &SplitCorpus,
    cfg: &RunConfig,
    external: Option<&EmbeddingTable>,
) -> Result<(TextViews, Option<TfidfModel>)> {
    match cfg.text.model {
        TextModel::Tfidf => {
            let model = fit_text_model(&split.train, cfg)?;
            Ok((tfidf_views(&model, split, cfg)?, Some(model)))
        }
        TextModel::External => {
            let table =
                external.ok_or_else(|| Error::config("external text embeddings not loaded"))?;
            Ok((external_views(table, split)?, None))
        }
    }
}

/// Node vectors for every training paper.
pub fn embed_graph(train: &Corpus, cfg: &RunConfig) -> Result<EmbeddingTable> {
    let graph = build_citation_graph(train);
    let walks = LazyWalks::new(&graph, &cfg.graph.walk(cfg.seed))?;
    log::info!(
        "graph: {} nodes, {} edges; p = {}, q = {}",
        graph.len(),
        graph.edge_count(),
        cfg.graph.p,
        cfg.graph.q
    );
    train_skipgram(
        &walks,
        graph.ids(),
        &cfg.graph.skipgram(cfg.seed, cfg.deterministic),
    )
}

/// Fits CCA or DCCA on training papers, or returns `None` when the strategy
/// needs no model.
pub fn train_fusion(
    train_text: &EmbeddingTable,
    train_node: &EmbeddingTable,
    cfg: &RunConfig,
) -> Result<Option<FusionModel>> {
    cfg.fusion.validate()?;
    if !cfg.fusion.trains_model() {
        return Ok(None);
    }
    let views = PairedViews::from_tables(train_text.ids(), train_text, train_node)?;
    let model = match cfg.fusion.method {
        FusionMethod::Cca => FusionModel::Cca(fit_cca(&views, &cfg.fusion.cca())?),
        FusionMethod::Dcca => FusionModel::Dcca(fit_dcca(&views, &cfg.fusion.dcca(cfg.seed))?),
        FusionMethod::None => unreachable!("trains_model() is false for method none"),
    };
    Ok(Some(model))
}

/// Estimated node vectors for test papers.
pub fn estimate_test_nodes(
    text: &TextViews,
    train_node: &EmbeddingTable,
    cfg: &RunConfig,
) -> Result<(EmbeddingTable, Vec<NeighborEstimate>)> {
    match (&text.train, &text.test) {
        (TextView::Dense(train), TextView::Dense(test)) => {
            let est = NodeEstimator::new(DenseIndex::new(train), train_node)?;
            est.estimate_all(test.ids(), |i| test.row(i), &cfg.inference)
        }
        (TextView::Sparse { dim, rows }, TextView::Sparse { rows: test, .. }) => {
            let index = SparseIndex::new(*dim, rows.clone())?;
            let est = NodeEstimator::new(index, train_node)?;
            let ids: Vec<String> = test.iter().map(|(id, _)| id.clone()).collect();
            est.estimate_all(&ids, |i| &test[i].1, &cfg.inference)
        }
        _ => Err(Error::config(
            "train and test text views must both be dense or both sparse",
        )),
    }
}

/// Recomputes estimates against different node vectors, reusing the
/// neighbour sets (text similarity does not depend on the graph).
pub fn reestimate(
    estimates: &[NeighborEstimate],
    node: &EmbeddingTable,
    weighted: bool,
) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::with_capacity(node.dim(), estimates.len());
    let mut v = vec![0.0; node.dim()];
    for e in estimates {
        let w: Vec<f64> = if weighted && e.similarities.iter().any(|&s| s > 0.0) {
            e.similarities.iter().map(|s| s.max(0.0)).collect()
        } else {
            vec![1.0; e.neighbor_ids.len()]
        };
        let total: f64 = w.iter().sum();
        v.iter_mut().for_each(|x| *x = 0.0);
        for (id, &wi) in e.neighbor_ids.iter().zip(&w) {
            let row = node.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            for (acc, x) in v.iter_mut().zip(row) {
                *acc += wi * x;
            }
        }
        v.iter_mut().for_each(|x| *x /= total);
        table.push(e.query_id.as_str(), &v)?;
    }
    Ok(table)
}

/// Fused train and test tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Fused {
    pub train: EmbeddingTable,
    pub test: EmbeddingTable,
}

pub fn fuse_partitions(
    text: &TextViews,
    train_node: &EmbeddingTable,
    test_node: &EmbeddingTable,
    model: Option<&FusionModel>,
    strategy: FusionStrategy,
) -> Result<Fused> {
    let train_text = text.train.dense()?;
    let train_node = train_node.select(train_text.ids().iter().map(String::as_str))?;
    Ok(Fused {
        train: fuse_tables(train_text, &train_node, model, strategy)?,
        test: fuse_tables(text.test.dense()?, test_node, model, strategy)?,
    })
}

/// Ranks test papers against training papers in one view.
pub fn rank_view(
    view: View,
    text: &TextViews,
    train_node: &EmbeddingTable,
    test_node: &EmbeddingTable,
    fused: Option<&Fused>,
    k: usize,
) -> Result<Vec<RankedList>> {
    match view {
        View::Fused => {
            let f = fused.ok_or_else(|| Error::config("fused view requested but not computed"))?;
            rank_dense(&f.train, &f.test, k)
        }
        View::Node => rank_dense(train_node, test_node, k),
        View::Text => match (&text.train, &text.test) {
            (TextView::Dense(train), TextView::Dense(test)) => rank_dense(train, test, k),
            (TextView::Sparse { dim, rows }, TextView::Sparse { rows: test, .. }) => {
                let index = SparseIndex::new(*dim, rows.clone())?;
                let train: HashSet<&str> = rows.iter().map(|(id, _)| id.as_str()).collect();
                ensure_disjoint(test.iter().map(|(id, _)| id.as_str()), |c| {
                    train.contains(c)
                })?;
                index.rank_all(test, k)
            }
            _ => Err(Error::config(
                "train and test text views must both be dense or both sparse",
            )),
        },
    }
}

pub fn rank_dense(
    candidates: &EmbeddingTable,
    queries: &EmbeddingTable,
    k: usize,
) -> Result<Vec<RankedList>> {
    ensure_disjoint(queries.ids().iter().map(String::as_str), |c| {
        candidates.contains(c)
    })?;
    DenseIndex::new(candidates).rank_all(queries, k)
}

pub fn evaluate(
    recs: &[RankedList],
    truth: &GroundTruth,
    cfg: &RunConfig,
) -> Result<MetricsReport> {
    evaluate_run(recs, truth, &cfg.eval)
}

/// Every intermediate product of a full run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub prepared: Prepared,
    pub text: TextViews,
    pub tfidf: Option<TfidfModel>,
    pub train_node: EmbeddingTable,
    pub test_node: EmbeddingTable,
    pub estimates: Vec<NeighborEstimate>,
    pub model: Option<FusionModel>,
    pub fused: Option<Fused>,
    pub recommendations: Vec<RankedList>,
    pub metrics: MetricsReport,
}

/// Runs every stage after `prepare`.
pub fn run_prepared(
    prepared: Prepared,
    cfg: &RunConfig,
    external: Option<&EmbeddingTable>,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let split = &prepared.split;
    let (text, tfidf) = embed_text(split, cfg, external)?;
    let train_node = embed_graph(&split.train, cfg)?;
    let (test_node, estimates) = estimate_test_nodes(&text, &train_node, cfg)?;
    let (model, fused) = if cfg.retrieval.view == View::Fused {
        let model = train_fusion(text.train.dense()?, &train_node, cfg)?;
        let fused = fuse_partitions(
            &text,
            &train_node,
            &test_node,
            model.as_ref(),
            cfg.fusion.strategy(),
        )?;
        (model, Some(fused))
    } else {
        (None, None)
    };
    let recommendations = rank_view(
        cfg.retrieval.view,
        &text,
        &train_node,
        &test_node,
        fused.as_ref(),
        cfg.rank_k(),
    )?;
    let metrics = evaluate(&recommendations, &split.ground_truth, cfg)?;
    Ok(PipelineOutput {
        prepared,
        text,
        tfidf,
        train_node,
        test_node,
        estimates,
        model,
        fused,
        recommendations,
        metrics,
    })
}

pub fn run_pipeline<R: BufRead>(
    reader: R,
    cfg: &RunConfig,
    external: Option<&EmbeddingTable>,
) -> Result<PipelineOutput> {
    run_prepared(prepare(reader, cfg)?, cfg, external)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqRow {
    pub p: f64,
    pub q: f64,
    /// `precision@k` etc. for node-only retrieval.
    pub metrics: serde_json::Value,
    /// MAP at the smallest cutoff, used for selection.
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqGrid {
    pub k: usize,
    pub rows: Vec<PqRow>,
    pub best: (f64, f64),
}

/// Highest MAP at `k`; ties go to smaller p, then smaller q.
pub fn best_pq(rows: &[PqRow]) -> Option<(f64, f64)> {
    rows.iter()
        .min_by(|a, b| {
            b.map
                .total_cmp(&a.map)
                .then(a.p.total_cmp(&b.p))
                .then(a.q.total_cmp(&b.q))
        })
        .map(|r| (r.p, r.q))
}

/// Node-only retrieval over the node2vec (p, q) grid.
pub fn grid_pq(
    split: &SplitCorpus,
    text: &TextViews,
    cfg: &RunConfig,
    grid: &[f64],
) -> Result<PqGrid> {
    let k = *cfg
        .eval
        .ks
        .iter()
        .min()
        .ok_or_else(|| Error::config("no evaluation cutoffs"))?;
    let mut estimates: Option<Vec<NeighborEstimate>> = None;
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for &p in grid {
        for &q in grid {
            let mut run = cfg.clone();
            run.graph.p = p;
            run.graph.q = q;
            let train_node = embed_graph(&split.train, &run)?;
            let test_node = match &estimates {
                Some(e) => reestimate(e, &train_node, cfg.inference.weighted)?,
                None => {
                    let (t, e) = estimate_test_nodes(text, &train_node, cfg)?;
                    estimates = Some(e);
                    t
                }
            };
            let recs = rank_dense(&train_node, &test_node, cfg.rank_k())?;
            let report = evaluate(&recs, &split.ground_truth, cfg)?;
            log::info!(
                "grid p = {p}, q = {q}: MAP@{k} = {:.4}",
                report.per_k[&k].map
            );
            rows.push(PqRow {
                p,
                q,
                map: report.per_k[&k].map,
                metrics: report.to_json(),
            });
        }
    }
    let best = best_pq(&rows).ok_or(Error::Empty("p, q grid"))?;
    Ok(PqGrid { k, rows, best })
}

/// One report per linear-combination weight, sharing one fitted model.
pub fn grid_alpha(
    text: &TextViews,
    train_node: &EmbeddingTable,
    test_node: &EmbeddingTable,
    model: &FusionModel,
    truth: &GroundTruth,
    cfg: &RunConfig,
    alphas: &[f64],
) -> Result<Vec<(f64, MetricsReport)>> {
    alphas
        .iter()
        .map(|&alpha| {
            let strategy = FusionStrategy::LinearCombination { alpha };
            let fused = fuse_partitions(text, train_node, test_node, Some(model), strategy)?;
            let recs = rank_dense(&fused.train, &fused.test, cfg.rank_k())?;
            Ok((alpha, evaluate(&recs, truth, cfg)?))
        })
        .collect()
}

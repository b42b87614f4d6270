//! Embeddings for papers outside the citation graph.
//!
//! A test paper has no node vector, so one is estimated as the mean node
//! vector of its `n` most textually similar training papers. Nothing here
//! reads citations of test papers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::fusion::{fuse, matrix_table, table_matrix, FusionModel, FusionStrategy, Side};
use crate::retrieval::{DenseIndex, NeighborSearch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    /// Neighbours averaged per estimate.
    #[serde(rename = "N")]
    pub n: usize,
    /// Weight neighbours by (non-negative) text similarity.
    pub weighted: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            n: 5,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEstimate {
    pub query_id: String,
    pub neighbor_ids: Vec<String>,
    /// Cosine similarities, descending.
    pub similarities: Vec<f64>,
    pub estimated_vector: Vec<f64>,
}

/// Text-neighbour search over training papers paired with their node vectors.
#[derive(Debug, Clone)]
pub struct NodeEstimator<'a, S> {
    text: S,
    node: &'a EmbeddingTable,
    /// Row in `node` of each text candidate.
    node_rows: Vec<usize>,
}

impl<'a, S: NeighborSearch> NodeEstimator<'a, S> {
    /// Every text candidate must have a node vector.
    pub fn new(text: S, train_node: &'a EmbeddingTable) -> Result<Self> {
        if text.candidate_ids().is_empty() || train_node.is_empty() {
            return Err(Error::Empty("training embeddings for node estimation"));
        }
        let node_rows = text
            .candidate_ids()
            .iter()
            .map(|id| {
                train_node
                    .position(id)
                    .ok_or_else(|| Error::UnknownId(id.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(NodeEstimator {
            text,
            node: train_node,
            node_rows,
        })
    }

    pub fn node_dim(&self) -> usize {
        self.node.dim()
    }

    pub fn estimate(
        &self,
        query_id: &str,
        query_text: &S::Query,
        cfg: &InferenceConfig,
    ) -> Result<NeighborEstimate> {
        if cfg.n == 0 {
            return Err(Error::config("inference N must be at least 1"));
        }
        let top = self.text.top_k(query_text, cfg.n)?;
        let weights: Vec<f64> = if cfg.weighted {
            let w: Vec<f64> = top.iter().map(|&(_, s)| s.max(0.0)).collect();
            if w.iter().sum::<f64>() > 0.0 {
                w
            } else {
                vec![1.0; top.len()]
            }
        } else {
            vec![1.0; top.len()]
        };
        let total: f64 = weights.iter().sum();

        let mut est = vec![0.0; self.node.dim()];
        for (&(pos, _), &w) in top.iter().zip(&weights) {
            for (e, v) in est.iter_mut().zip(self.node.row(self.node_rows[pos])) {
                *e += w * v;
            }
        }
        est.iter_mut().for_each(|e| *e /= total);

        let ids = self.text.candidate_ids();
        Ok(NeighborEstimate {
            query_id: query_id.to_string(),
            neighbor_ids: top.iter().map(|&(p, _)| ids[p].clone()).collect(),
            similarities: top.iter().map(|&(_, s)| s).collect(),
            estimated_vector: est,
        })
    }

    /// Estimates a node vector for each `ids[i]` with text `query(i)`.
    pub fn estimate_all<'q, F>(
        &self,
        ids: &[String],
        query: F,
        cfg: &InferenceConfig,
    ) -> Result<(EmbeddingTable, Vec<NeighborEstimate>)>
    where
        F: Fn(usize) -> &'q S::Query + Sync,
        S::Query: 'q,
    {
        let estimates: Vec<NeighborEstimate> = (0..ids.len())
            .into_par_iter()
            .map(|i| self.estimate(&ids[i], query(i), cfg))
            .collect::<Result<_>>()?;
        let mut table = EmbeddingTable::with_capacity(self.node.dim(), estimates.len());
        for e in &estimates {
            table.push(e.query_id.as_str(), &e.estimated_vector)?;
        }
        Ok((table, estimates))
    }
}

/// One-shot dense form of [`NodeEstimator::estimate`].
pub fn estimate_node_embedding(
    query_text: &[f64],
    train_text: &EmbeddingTable,
    train_node: &EmbeddingTable,
    n: usize,
) -> Result<NeighborEstimate> {
    let cfg = InferenceConfig { n, weighted: false };
    NodeEstimator::new(DenseIndex::new(train_text), train_node)?.estimate("", query_text, &cfg)
}

/// Fuses row-aligned text and node tables (same ids, same order).
///
/// `model` is required for strategies that consume projections and ignored
/// by `SimpleConcat`.
pub fn fuse_tables(
    text: &EmbeddingTable,
    node: &EmbeddingTable,
    model: Option<&FusionModel>,
    strategy: FusionStrategy,
) -> Result<EmbeddingTable> {
    let ids = text.ids();
    let x = table_matrix(text, ids)?;
    let y = table_matrix(node, ids)?;
    let fused = if strategy.needs_projection() {
        let model = model.ok_or_else(|| {
            Error::config(format!(
                "fusion strategy `{}` needs a trained fusion model",
                strategy.name()
            ))
        })?;
        fuse(
            &model.project(&x, Side::X)?,
            &model.project(&y, Side::Y)?,
            strategy,
        )?
    } else {
        fuse(&x, &y, strategy)?
    };
    matrix_table(ids, &fused)
}

/// Fused representations of test papers from their text vectors alone.
pub fn embed_test_set(
    test_text: &EmbeddingTable,
    estimator: &NodeEstimator<'_, DenseIndex<'_>>,
    model: Option<&FusionModel>,
    strategy: FusionStrategy,
    cfg: &InferenceConfig,
) -> Result<(EmbeddingTable, Vec<NeighborEstimate>)> {
    let (node, estimates) = estimator.estimate_all(test_text.ids(), |i| test_text.row(i), cfg)?;
    Ok((fuse_tables(test_text, &node, model, strategy)?, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{CcaModel, Standardizer};
    use nalgebra::{DMatrix, DVector};

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].1.len());
        for (id, v) in rows {
            t.push(*id, v).unwrap();
        }
        t
    }

    fn train() -> (EmbeddingTable, EmbeddingTable) {
        // text sims to query (1, 0): 0.9, 0.8, 0.1
        let text = table(&[
            ("a", &[0.9, (1.0f64 - 0.81).sqrt()]),
            ("b", &[0.8, 0.6]),
            ("c", &[0.1, (1.0f64 - 0.01).sqrt()]),
        ]);
        let node = table(&[("c", &[5.0, 5.0]), ("b", &[0.0, 1.0]), ("a", &[1.0, 0.0])]);
        (text, node)
    }

    #[test]
    fn top_two_by_similarity() {
        let (text, node) = train();
        let e = estimate_node_embedding(&[1.0, 0.0], &text, &node, 2).unwrap();
        assert_eq!(e.neighbor_ids, ["a", "b"]);
        assert!((e.similarities[0] - 0.9).abs() < 1e-12 && (e.similarities[1] - 0.8).abs() < 1e-12);
        assert_eq!(e.estimated_vector, [0.5, 0.5]);
    }

    #[test]
    fn single_neighbor_copies_its_vector() {
        let (text, node) = train();
        let e = estimate_node_embedding(&[0.1, 0.99], &text, &node, 1).unwrap();
        assert_eq!(e.neighbor_ids, ["c"]);
        assert_eq!(e.estimated_vector, node.get("c").unwrap());
    }

    #[test]
    fn n_larger_than_train_uses_all() {
        let (text, node) = train();
        let e = estimate_node_embedding(&[1.0, 0.0], &text, &node, 10).unwrap();
        assert_eq!(e.neighbor_ids.len(), 3);
        assert_eq!(e.estimated_vector, [2.0, 2.0]);
    }

    #[test]
    fn weighted_mean_behind_flag() {
        let (text, node) = train();
        let est = NodeEstimator::new(DenseIndex::new(&text), &node).unwrap();
        let e = est
            .estimate(
                "q",
                &[1.0, 0.0],
                &InferenceConfig {
                    n: 2,
                    weighted: true,
                },
            )
            .unwrap();
        let (wa, wb) = (e.similarities[0], e.similarities[1]);
        assert!((e.estimated_vector[0] - wa / (wa + wb)).abs() < 1e-12);
        assert!((e.estimated_vector[1] - wb / (wa + wb)).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let (text, node) = train();
        assert!(estimate_node_embedding(&[1.0, 0.0], &text, &node, 0).is_err());
        assert!(estimate_node_embedding(&[1.0], &text, &node, 1).is_err());
        let partial = table(&[("a", &[1.0, 0.0])]);
        assert!(NodeEstimator::new(DenseIndex::new(&text), &partial).is_err());
        assert!(NodeEstimator::new(DenseIndex::new(&EmbeddingTable::new(2)), &node).is_err());
    }

    #[test]
    fn test_set_widths() {
        let (text, node) = train();
        let est = NodeEstimator::new(DenseIndex::new(&text), &node).unwrap();
        let queries = table(&[("q1", &[1.0, 0.0]), ("q2", &[0.0, 1.0])]);
        let cfg = InferenceConfig::default();
        let (fused, estimates) =
            embed_test_set(&queries, &est, None, FusionStrategy::SimpleConcat, &cfg).unwrap();
        assert_eq!(fused.dim(), 4);
        assert_eq!(fused.ids(), ["q1", "q2"]);
        assert_eq!(estimates.len(), 2);
        assert!(
            embed_test_set(&queries, &est, None, FusionStrategy::ProjectedConcat, &cfg).is_err()
        );

        let model = FusionModel::Cca(CcaModel {
            x_norm: Standardizer::identity(2),
            y_norm: Standardizer::identity(2),
            wx: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            wy: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            correlations: DVector::from_element(1, 1.0),
            reg: 0.0,
        });
        let (fused, _) = embed_test_set(
            &queries,
            &est,
            Some(&model),
            FusionStrategy::ProjectedConcat,
            &cfg,
        )
        .unwrap();
        assert_eq!(fused.dim(), 2);
        let (fused, _) = embed_test_set(
            &queries,
            &est,
            Some(&model),
            FusionStrategy::LinearCombination { alpha: 0.5 },
            &cfg,
        )
        .unwrap();
        assert_eq!(fused.dim(), 1);
    }

    #[test]
    fn textually_identical_test_paper_inherits_node_vector() {
        let (text, node) = train();
        let est = NodeEstimator::new(DenseIndex::new(&text), &node).unwrap();
        let queries = table(&[("q", text.get("b").unwrap())]);
        let (est_node, _) = est
            .estimate_all(
                queries.ids(),
                |i| queries.row(i),
                &InferenceConfig {
                    n: 1,
                    weighted: false,
                },
            )
            .unwrap();
        assert_eq!(est_node.get("q").unwrap(), node.get("b").unwrap());
    }

    #[test]
    fn sparse_search_agrees_with_dense() {
        use crate::retrieval::SparseIndex;
        use crate::text::SparseVector;
        let (text, node) = train();
        let docs = text
            .iter()
            .map(|(id, v)| {
                let e = v.iter().copied().enumerate().collect();
                (id.to_string(), SparseVector::new(2, e).unwrap())
            })
            .collect();
        let sparse = NodeEstimator::new(SparseIndex::new(2, docs).unwrap(), &node).unwrap();
        let q = SparseVector::new(2, vec![(0, 1.0)]).unwrap();
        let cfg = InferenceConfig {
            n: 2,
            weighted: false,
        };
        let e = sparse.estimate("q", &q, &cfg).unwrap();
        let d = estimate_node_embedding(&[1.0, 0.0], &text, &node, 2).unwrap();
        assert_eq!(e.neighbor_ids, d.neighbor_ids);
        assert_eq!(e.estimated_vector, d.estimated_vector);
    }

    #[test]
    fn estimate_is_permutation_invariant() {
        let (text, node) = train();
        let rev_text = text.select(["c", "b", "a"]).unwrap();
        let e1 = estimate_node_embedding(&[1.0, 0.0], &text, &node, 3).unwrap();
        let e2 = estimate_node_embedding(&[1.0, 0.0], &rev_text, &node, 3).unwrap();
        assert_eq!(e1, e2);
    }
}

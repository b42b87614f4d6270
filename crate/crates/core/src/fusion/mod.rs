//! Multi-view fusion: CCA, Deep CCA, and the three fusion strategies.
//!
//! Matrices are `n × d` with one sample per row.

mod cca;
mod dcca;
pub mod linalg;
mod model_io;
mod strategy;

pub use cca::{fit_cca, CcaConfig, CcaModel};
pub use dcca::{
    correlation_objective, fit_dcca, total_correlation, Activation, CorrelationLoss, DccaConfig,
    DccaModel, Dense, Mlp,
};
pub use model_io::{read_model, write_model};
pub use strategy::{fuse, FusionStrategy};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Text view.
    X,
    /// Node view.
    Y,
}

/// Row-aligned text (`x`) and node (`y`) views of the same papers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedViews {
    pub ids: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl PairedViews {
    pub fn new(ids: Vec<String>, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != ids.len() || y.nrows() != ids.len() {
            return Err(Error::dim(
                ids.len(),
                x.nrows().max(y.nrows()),
                "paired view rows",
            ));
        }
        if ids.len() < 2 {
            return Err(Error::config("paired views need at least two samples"));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::config(
                "paired views need at least one feature per view",
            ));
        }
        Ok(PairedViews { ids, x, y })
    }

    /// Pairs rows of two tables by id, in the order of `ids`.
    pub fn from_tables(
        ids: &[String],
        text: &EmbeddingTable,
        node: &EmbeddingTable,
    ) -> Result<Self> {
        let x = table_matrix(text, ids)?;
        let y = table_matrix(node, ids)?;
        Self::new(ids.to_vec(), x, y)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Rows of `table` for `ids`, as an `ids.len() × dim` matrix.
pub fn table_matrix(table: &EmbeddingTable, ids: &[String]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(ids.len(), table.dim());
    for (i, id) in ids.iter().enumerate() {
        let row = table.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Builds a table from matrix rows keyed by `ids`.
pub fn matrix_table(ids: &[String], m: &DMatrix<f64>) -> Result<EmbeddingTable> {
    if ids.len() != m.nrows() {
        return Err(Error::dim(ids.len(), m.nrows(), "matrix rows vs ids"));
    }
    let mut table = EmbeddingTable::with_capacity(m.ncols(), ids.len());
    let mut row = vec![0.0; m.ncols()];
    for (i, id) in ids.iter().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = m[(i, j)];
        }
        table.push(id.as_str(), &row)?;
    }
    Ok(table)
}

/// Per-feature affine normalization `(v - mean) / scale`, fitted on
/// training data and reused at inference time.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    /// z-scores with the sample standard deviation; constant features keep
    /// scale 1. With `scale = false` only the mean is removed.
    pub fn fit(m: &DMatrix<f64>, scale: bool) -> Self {
        let mean = linalg::column_means(m);
        let n = m.nrows();
        let scale = DVector::from_iterator(
            m.ncols(),
            m.column_iter().zip(mean.iter()).map(|(col, mu)| {
                if !scale || n < 2 {
                    return 1.0;
                }
                let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            }),
        );
        Standardizer { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: DVector::zeros(dim),
            scale: DVector::from_element(dim, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.dim() {
            return Err(Error::dim(self.dim(), m.ncols(), "input feature count"));
        }
        let mut out = m.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (mu, s) = (self.mean[j], self.scale[j]);
            col.apply(|v| *v = (*v - mu) / s);
        }
        Ok(out)
    }
}

/// A fitted CCA or DCCA model.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionModel {
    Cca(CcaModel),
    Dcca(DccaModel),
}

impl FusionModel {
    pub fn project(&self, view: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
        match self {
            FusionModel::Cca(m) => m.project(view, side),
            FusionModel::Dcca(m) => m.project(view, side),
        }
    }

    /// Dimension of the shared space.
    pub fn dim(&self) -> usize {
        match self {
            FusionModel::Cca(m) => m.dim(),
            FusionModel::Dcca(m) => m.dim(),
        }
    }

    pub fn input_dim(&self, side: Side) -> usize {
        match self {
            FusionModel::Cca(m) => m.input_dim(side),
            FusionModel::Dcca(m) => m.input_dim(side),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_zscores() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = Standardizer::fit(&m, true);
        assert_eq!(s.scale.as_slice(), &[1.0, 1.0]);
        let z = s.apply(&m).unwrap();
        assert_eq!(z.column(0).as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(z.column(1).as_slice(), &[0.0, 0.0, 0.0]);
        assert!(s.apply(&DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn table_round_trip() {
        let mut t = EmbeddingTable::new(2);
        t.push("a", &[1.0, 2.0]).unwrap();
        t.push("b", &[3.0, 4.0]).unwrap();
        let ids = vec!["b".to_string(), "a".to_string()];
        let m = table_matrix(&t, &ids).unwrap();
        assert_eq!(m[(0, 0)], 3.0);
        let back = matrix_table(&ids, &m).unwrap();
        assert_eq!(back.get("a"), t.get("a"));
        assert!(table_matrix(&t, &["zz".to_string()]).is_err());
    }

    #[test]
    fn paired_views_validation() {
        let ids = vec!["a".to_string()];
        assert!(PairedViews::new(ids, DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).is_err());
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(PairedViews::new(ids.clone(), DMatrix::zeros(2, 1), DMatrix::zeros(3, 1)).is_err());
        assert!(PairedViews::new(ids, DMatrix::zeros(2, 1), DMatrix::zeros(2, 1)).is_ok());
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::{add_ridge, cross_covariance, inv_sqrt_spd};
use super::{PairedViews, Side, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcaConfig {
    /// Shared dimension.
    pub d: usize,
    /// Ridge added to both view covariances.
    pub reg: f64,
    /// z-score inputs before fitting.
    pub standardize: bool,
}

impl Default for CcaConfig {
    fn default() -> Self {
        CcaConfig {
            d: 128,
            reg: 1e-4,
            standardize: true,
        }
    }
}

/// Linear CCA projections. `project(x) = ((x - mean) / scale) · W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    pub x_norm: Standardizer,
    pub y_norm: Standardizer,
    /// `d_x × d`
    pub wx: DMatrix<f64>,
    /// `d_y × d`
    pub wy: DMatrix<f64>,
    /// Canonical correlations, descending.
    pub correlations: DVector<f64>,
    pub reg: f64,
}

/// Fits CCA by whitening: `T = Σxx^{-1/2} Σxy Σyy^{-1/2}`, whose singular
/// values are the canonical correlations and whose singular vectors, mapped
/// back through the whitening, are the projection directions.
pub fn fit_cca(views: &PairedViews, cfg: &CcaConfig) -> Result<CcaModel> {
    let (n, dx, dy) = (views.len(), views.x.ncols(), views.y.ncols());
    let max_d = dx.min(dy).min(n.saturating_sub(1));
    if cfg.d == 0 || cfg.d > max_d {
        return Err(Error::config(format!(
            "CCA dimension d = {} must be in 1..={max_d} (min of d_x = {dx}, d_y = {dy}, n - 1 = {})",
            cfg.d,
            n.saturating_sub(1)
        )));
    }
    if !(cfg.reg >= 0.0) {
        return Err(Error::config("CCA regularizer must be non-negative"));
    }

    let x_norm = Standardizer::fit(&views.x, cfg.standardize);
    let y_norm = Standardizer::fit(&views.y, cfg.standardize);
    let x = x_norm.apply(&views.x)?;
    let y = y_norm.apply(&views.y)?;

    let mut sxx = cross_covariance(&x, &x);
    let mut syy = cross_covariance(&y, &y);
    add_ridge(&mut sxx, cfg.reg);
    add_ridge(&mut syy, cfg.reg);
    let sxy = cross_covariance(&x, &y);

    let kx = inv_sqrt_spd(&sxx, "text")?;
    let ky = inv_sqrt_spd(&syy, "node")?;
    let t = &kx * sxy * &ky;
    let svd = t.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(cfg.d);

    let mut wx = DMatrix::zeros(dx, cfg.d);
    let mut wy = DMatrix::zeros(dy, cfg.d);
    let mut correlations = DVector::zeros(cfg.d);
    for (j, &k) in order.iter().enumerate() {
        wx.set_column(j, &(&kx * u.column(k)));
        wy.set_column(j, &(&ky * v_t.row(k).transpose()));
        correlations[j] = svd.singular_values[k];
    }

    Ok(CcaModel {
        x_norm,
        y_norm,
        wx,
        wy,
        correlations,
        reg: cfg.reg,
    })
}

impl CcaModel {
    pub fn dim(&self) -> usize {
        self.wx.ncols()
    }

    pub fn input_dim(&self, side: Side) -> usize {
        match side {
            Side::X => self.wx.nrows(),
            Side::Y => self.wy.nrows(),
        }
    }

    pub fn total_correlation(&self) -> f64 {
        self.correlations.sum()
    }

    pub fn project(&self, view: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
        let (norm, w) = match side {
            Side::X => (&self.x_norm, &self.wx),
            Side::Y => (&self.y_norm, &self.wy),
        };
        Ok(norm.apply(view)? * w)
    }
}

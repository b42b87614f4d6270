use nalgebra::DMatrix;

use super::linalg::hstack;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionStrategy {
    /// `[text | node]` of the raw, unprojected views.
    SimpleConcat,
    /// `[X′ | Y′]`, 2d columns.
    ProjectedConcat,
    /// `α·X′ + (1-α)·Y′`, d columns.
    LinearCombination { alpha: f64 },
}

impl FusionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            FusionStrategy::SimpleConcat => "simple_concat",
            FusionStrategy::ProjectedConcat => "projected_concat",
            FusionStrategy::LinearCombination { .. } => "linear_combination",
        }
    }

    /// Parses a strategy name; `alpha` is required for (and only used by)
    /// `linear_combination`.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        let strategy = match name {
            "simple_concat" => FusionStrategy::SimpleConcat,
            "projected_concat" => FusionStrategy::ProjectedConcat,
            "linear_combination" => FusionStrategy::LinearCombination {
                alpha: alpha.ok_or_else(|| Error::config("linear_combination needs alpha"))?,
            },
            other => return Err(Error::config(format!("unknown fusion strategy `{other}`"))),
        };
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FusionStrategy::LinearCombination { alpha } if !(0.0..=1.0).contains(&alpha) => Err(
                Error::config(format!("alpha must lie in [0, 1], got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// True when the strategy consumes projections from a fitted model.
    pub fn needs_projection(&self) -> bool {
        !matches!(self, FusionStrategy::SimpleConcat)
    }

    /// Fused width for text width `dx`, node width `dy` and shared width `d`.
    pub fn output_dim(&self, dx: usize, dy: usize, d: usize) -> usize {
        match self {
            FusionStrategy::SimpleConcat => dx + dy,
            FusionStrategy::ProjectedConcat => 2 * d,
            FusionStrategy::LinearCombination { .. } => d,
        }
    }
}

/// Combines text-side and node-side rows into one matrix.
pub fn fuse(x: &DMatrix<f64>, y: &DMatrix<f64>, strategy: FusionStrategy) -> Result<DMatrix<f64>> {
    strategy.validate()?;
    if x.nrows() != y.nrows() {
        return Err(Error::dim(x.nrows(), y.nrows(), "rows of fused views"));
    }
    match strategy {
        FusionStrategy::SimpleConcat | FusionStrategy::ProjectedConcat => {
            if strategy == FusionStrategy::ProjectedConcat && x.ncols() != y.ncols() {
                return Err(Error::dim(
                    x.ncols(),
                    y.ncols(),
                    "projected views must share d",
                ));
            }
            hstack(x, y)
        }
        FusionStrategy::LinearCombination { alpha } => {
            if x.ncols() != y.ncols() {
                return Err(Error::dim(
                    x.ncols(),
                    y.ncols(),
                    "projected views must share d",
                ));
            }
            // Exact endpoints: alpha = 1 returns x, alpha = 0 returns y.
            if alpha == 1.0 {
                return Ok(x.clone());
            }
            if alpha == 0.0 {
                return Ok(y.clone());
            }
            Ok(x * alpha + y * (1.0 - alpha))
        }
    }
}

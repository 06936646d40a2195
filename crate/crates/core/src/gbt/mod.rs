//! Weighted multiclass histogram gradient boosting.
//!
//! One regression tree per class per round, Newton leaves on the diagonal
//! of the softmax hessian, depth-wise growth over quantile histograms.

mod bins;
mod ensemble;
mod loss;
mod tree;

use serde::{Deserialize, Serialize};

pub use bins::{bin_features, BinMapper, BinnedMatrix, MISSING_BIN};
pub(crate) use bins::{column_edges, percentile};
pub use ensemble::{Ensemble, RoundStats};
pub use loss::{softmax, softmax_grad_hess, weighted_log_loss, PROB_CLAMP};
pub use tree::{grow_tree, Node, Tree};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtConfig {
    pub learning_rate: f64,
    pub n_iterations: usize,
    pub max_depth: usize,
    pub max_bins: usize,
    /// Minimum summed hessian in each child of a split.
    pub min_child_weight: f64,
    /// Minimum number of rows in each child of a split.
    pub min_samples_leaf: usize,
    pub l2_regularization: f64,
    /// Leaf values are clipped to `[-max_delta_step, max_delta_step]`; 0
    /// disables the cap.
    pub max_delta_step: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            n_iterations: 100,
            max_depth: 5,
            max_bins: 255,
            min_child_weight: 1e-3,
            min_samples_leaf: 20,
            l2_regularization: 0.0,
            max_delta_step: 2.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must lie in [0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if !(2..=255).contains(&self.max_bins) {
            return Err(Error::InvalidArgument(format!(
                "max_bins must lie in [2, 255], got {}",
                self.max_bins
            )));
        }
        if !(self.min_child_weight >= 0.0)
            || !(self.l2_regularization >= 0.0)
            || !(self.max_delta_step >= 0.0)
        {
            return Err(Error::InvalidArgument(
                "min_child_weight, l2_regularization and max_delta_step must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

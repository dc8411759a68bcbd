use alloc::format;

use super::GbtError;

/// The six tuned boosting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Maximum number of boosting rounds.
    pub nrounds: u32,
    /// Initial prediction of every row.
    pub base_score: f64,
    /// Learning rate applied to leaf weights, in `[0, 1]`.
    pub eta: f64,
    /// Minimum loss reduction for a split, `>= 0`.
    pub gamma: f64,
    /// Maximum tree depth, `>= 1`. Depth 1 grows stumps.
    pub max_depth: u32,
    /// Fraction of rows drawn per round, in `(0, 1]`.
    pub subsample: f64,
}

impl HyperParams {
    /// Untuned defaults: eta 0.3, gamma 0, depth 6, subsample 1, 100 rounds.
    pub fn defaults(base_score: f64) -> Self {
        Self { nrounds: 100, base_score, eta: 0.3, gamma: 0.0, max_depth: 6, subsample: 1.0 }
    }

    pub fn validate(&self) -> Result<(), GbtError> {
        let bad = |what: &str| Err(GbtError::InvalidParam(format!("{what} out of range: {self:?}")));
        if !self.base_score.is_finite() {
            return bad("base_score");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma");
        }
        if self.max_depth < 1 {
            return bad("max_depth");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample");
        }
        Ok(())
    }
}

/// Tree-growing constants that are not tuned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSettings {
    /// L2 regularization of leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child; with squared loss, a row count.
    pub min_child_weight: f64,
}

impl Default for TreeSettings {
    fn default() -> Self {
        Self { lambda: 1.0, min_child_weight: 1.0 }
    }
}

//! Gradient-boosted regression trees.
//!
//! [`Booster`] indexes a training set once and can then be fit many times
//! with different [`HyperParams`]. Training is deterministic in
//! `(data, params, seed)`; the seed only drives row subsampling.

mod importance;
mod matrix;
mod params;
mod train;
mod tree;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use importance::importance;
pub use matrix::{FeatureMatrix, FeatureVector};
pub use params::{HyperParams, TreeSettings};
pub use train::{midpoint, subsample_size, Booster, SplitTrace};
pub use tree::{Node, Tree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GbtError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite input at row {row}{}", column.map(|c| alloc::format!(", feature {c}")).unwrap_or_else(|| ", target".into()))]
    NonFiniteInput { row: usize, column: Option<usize> },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("FeatureMismatch: {0}")]
    FeatureMismatch(String),
    #[error("model has no splits")]
    NoSplits,
}

/// A trained ensemble: `base_score` plus the sum of tree outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub params: HyperParams,
    pub settings: TreeSettings,
    pub seed: u64,
    feature_names: Vec<String>,
    trees: Vec<Tree>,
    /// Accumulated split gain per feature.
    gain: Vec<f64>,
}

impl GbtModel {
    /// Assembles a model, e.g. after deserialization.
    pub fn from_parts(
        params: HyperParams,
        settings: TreeSettings,
        seed: u64,
        feature_names: Vec<String>,
        trees: Vec<Tree>,
        gain: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(feature_names.len(), gain.len());
        Self { params, settings, seed, feature_names, trees, gain }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn n_splits(&self) -> usize {
        self.trees.iter().map(Tree::n_splits).sum()
    }

    /// Prediction for a row in the model's feature order.
    ///
    /// Panics if the row is shorter than the feature list.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        assert!(row.len() >= self.feature_names.len(), "row too short for model");
        let mut p = self.params.base_score;
        for t in &self.trees {
            p += t.predict(row);
        }
        p
    }

    /// Prediction for named features, which must match the model's names
    /// and order exactly.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64, GbtError> {
        self.check_names(&features.names)?;
        if features.values.len() != features.names.len() {
            return Err(GbtError::Shape("names and values differ in length".into()));
        }
        Ok(self.predict_row(&features.values))
    }

    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>, GbtError> {
        self.check_names(matrix.names())?;
        Ok(matrix.rows().map(|r| self.predict_row(r)).collect())
    }

    fn check_names(&self, names: &[String]) -> Result<(), GbtError> {
        if names == self.feature_names.as_slice() {
            return Ok(());
        }
        let detail = match names.iter().zip(&self.feature_names).position(|(a, b)| a != b) {
            Some(i) => alloc::format!(
                "feature {i} is {:?}, model expects {:?}",
                names[i],
                self.feature_names[i]
            ),
            None => alloc::format!(
                "{} features given, model expects {}",
                names.len(),
                self.feature_names.len()
            ),
        };
        Err(GbtError::FeatureMismatch(detail))
    }
}

/// Trains a model on `matrix` and `targets`.
pub fn train(
    matrix: &FeatureMatrix,
    targets: &[f64],
    hp: &HyperParams,
    seed: u64,
) -> Result<GbtModel, GbtError> {
    Booster::new(matrix, targets)?.fit(hp, seed)
}

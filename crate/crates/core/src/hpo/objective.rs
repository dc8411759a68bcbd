use alloc::vec::Vec;

use super::search::{Objective, Score};
use super::HpoError;
use crate::dataprep::DatasetSplit;
use crate::gbt::{Booster, FeatureMatrix, GbtError, HyperParams, Tree};
use crate::metrics;

/// Validation RMSE of boosted trees, measured in indicator units.
///
/// Each validation row carries the `(mean, sd)` that maps a model output
/// back to the indicator scale; `(0, 1)` leaves it unchanged.
pub struct GbtObjective {
    booster: Booster,
    validation: FeatureMatrix,
    actual: Vec<f64>,
    scale: Vec<(f64, f64)>,
    seed: u64,
}

impl GbtObjective {
    pub fn new(
        booster: Booster,
        validation: FeatureMatrix,
        actual: Vec<f64>,
        scale: Vec<(f64, f64)>,
        seed: u64,
    ) -> Result<Self, HpoError> {
        let m = validation.n_rows();
        if m == 0 {
            return Err(HpoError::EmptyValidation);
        }
        if actual.len() != m || scale.len() != m {
            return Err(HpoError::Gbt(GbtError::Shape(alloc::format!(
                "validation has {m} rows, {} actual values and {} scales",
                actual.len(),
                scale.len()
            ))));
        }
        Ok(Self { booster, validation, actual, scale, seed })
    }

    /// Trains on the split's training rows and scores its validation rows.
    pub fn from_split(split: &DatasetSplit, seed: u64) -> Result<Self, HpoError> {
        let train = split.matrix(&split.train)?;
        let targets: Vec<f64> = split.train.iter().map(|r| r.target).collect();
        let booster = Booster::new(&train, &targets)?;
        let validation = split.matrix(&split.validation)?;
        let actual = split.validation.iter().map(|r| r.raw_target).collect();
        let scale = split
            .validation
            .iter()
            .map(|r| split.scale(&split.stats_key(r)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(booster, validation, actual, scale, seed)
    }

    pub fn training_targets(&self) -> &[f64] {
        self.booster.targets()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rmse_of(&self, preds: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(preds.iter().zip(&self.scale).map(|(p, (mean, sd))| p * sd + mean));
        metrics::rmse(&self.actual, buf)
    }
}

impl Objective for GbtObjective {
    fn score(&self, hp: &HyperParams) -> Result<Score, HpoError> {
        let mut preds = alloc::vec![hp.base_score; self.validation.n_rows()];
        let mut buf = Vec::with_capacity(preds.len());
        let mut trajectory = Vec::with_capacity(hp.nrounds as usize + 1);
        trajectory.push(self.rmse_of(&preds, &mut buf));
        let mut on_tree = |tree: &Tree| {
            for (p, row) in preds.iter_mut().zip(self.validation.rows()) {
                *p += tree.predict(row);
            }
            trajectory.push(self.rmse_of(&preds, &mut buf));
        };
        self.booster.fit_with(hp, self.seed, &mut on_tree)?;
        Ok(Score::Trajectory(trajectory))
    }
}

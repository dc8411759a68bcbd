use alloc::vec::Vec;
use core::fmt;

use super::HpoError;
use crate::gbt::HyperParams;

/// The six tuned parameters. The derived order is alphabetical by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    BaseScore,
    Eta,
    Gamma,
    MaxDepth,
    Nrounds,
    Subsample,
}

impl Param {
    pub const ALL: [Param; 6] =
        [Param::BaseScore, Param::Eta, Param::Gamma, Param::MaxDepth, Param::Nrounds, Param::Subsample];

    pub fn name(self) -> &'static str {
        match self {
            Param::BaseScore => "base_score",
            Param::Eta => "eta",
            Param::Gamma => "gamma",
            Param::MaxDepth => "max_depth",
            Param::Nrounds => "nrounds",
            Param::Subsample => "subsample",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn get(self, hp: &HyperParams) -> f64 {
        match self {
            Param::BaseScore => hp.base_score,
            Param::Eta => hp.eta,
            Param::Gamma => hp.gamma,
            Param::MaxDepth => f64::from(hp.max_depth),
            Param::Nrounds => f64::from(hp.nrounds),
            Param::Subsample => hp.subsample,
        }
    }

    /// `hp` with this parameter set to `value`; integer parameters take the
    /// rounded value.
    pub fn set(self, hp: &HyperParams, value: f64) -> HyperParams {
        let mut out = *hp;
        match self {
            Param::BaseScore => out.base_score = value,
            Param::Eta => out.eta = value,
            Param::Gamma => out.gamma = value,
            Param::MaxDepth => out.max_depth = libm::round(value) as u32,
            Param::Nrounds => out.nrounds = libm::round(value) as u32,
            Param::Subsample => out.subsample = value,
        }
        out
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Candidate values per parameter, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    values: [Vec<f64>; 6],
}

impl ParamGrid {
    pub fn get(&self, p: Param) -> &[f64] {
        &self.values[p.index()]
    }

    /// Replaces one grid, e.g. to shrink a search in tests.
    pub fn with(mut self, p: Param, values: Vec<f64>) -> Self {
        self.values[p.index()] = values;
        self
    }

    /// Model trainings in one sequential pass.
    pub fn pass_len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

/// Empirical quantile of sorted data, interpolating linearly between order
/// statistics: `x[h]` with `h = (n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Grids for a training set with the given targets. The `base_score` grid
/// holds the deciles 0, 0.1, ..., 1 of the targets with duplicates removed.
pub fn build_grids(targets: &[f64]) -> Result<ParamGrid, HpoError> {
    if targets.is_empty() {
        return Err(HpoError::EmptyTargets);
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(HpoError::NonFiniteTarget);
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut base: Vec<f64> = (0..=10).map(|i| quantile(&sorted, i as f64 / 10.0)).collect();
    base.dedup();

    let mut values: [Vec<f64>; 6] = Default::default();
    values[Param::BaseScore.index()] = base;
    values[Param::Eta.index()] = (0..=10).map(|i| i as f64 / 10.0).collect();
    values[Param::Gamma.index()] = (0..=10).map(|i| i as f64).collect();
    values[Param::MaxDepth.index()] = [1.0, 4.0, 7.0, 10.0, 13.0].to_vec();
    values[Param::Nrounds.index()] = (0..=10).map(|i| (1 + 20 * i) as f64).collect();
    values[Param::Subsample.index()] = (0..10).map(|i| (1.0 + 1000.0 * i as f64) / 10000.0).collect();
    Ok(ParamGrid { values })
}

/// Defaults before tuning, with `base_score` the mean target.
pub fn default_params(targets: &[f64]) -> Result<HyperParams, HpoError> {
    if targets.is_empty() {
        return Err(HpoError::EmptyTargets);
    }
    Ok(HyperParams::defaults(targets.iter().sum::<f64>() / targets.len() as f64))
}

/// Neighbourhood candidates around `incumbent`, ascending, clipped to the
/// legal range and deduplicated.
pub fn neighbourhood(p: Param, incumbent: f64, grid: &ParamGrid) -> Vec<f64> {
    let (lo, hi) = match p {
        Param::BaseScore => {
            let g = grid.get(p);
            let below = g.iter().rev().find(|&&v| v < incumbent);
            let above = g.iter().find(|&&v| v > incumbent);
            let mut out = Vec::with_capacity(3);
            if let Some(b) = below {
                out.push(incumbent - (incumbent - b) / 2.0);
            }
            out.push(incumbent);
            if let Some(a) = above {
                out.push(incumbent + (a - incumbent) / 2.0);
            }
            out.dedup();
            return out;
        }
        Param::Eta => (incumbent - 0.05, incumbent + 0.05),
        Param::Gamma => (incumbent - 0.5, incumbent + 0.5),
        Param::MaxDepth => (incumbent - 1.0, incumbent + 1.0),
        Param::Nrounds => (incumbent - 10.0, incumbent + 10.0),
        Param::Subsample => (incumbent - 0.05, incumbent + 0.05),
    };
    let clip = |v: f64| match p {
        Param::Eta => v.clamp(0.0, 1.0),
        Param::Gamma => v.max(0.0),
        Param::MaxDepth => libm::round(v).max(1.0),
        Param::Nrounds => libm::round(v).max(0.0),
        Param::Subsample => v.clamp(1e-4, 1.0),
        Param::BaseScore => v,
    };
    let mut out = Vec::with_capacity(3);
    for v in [clip(lo), clip(incumbent), clip(hi)] {
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let g = build_grids(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]).unwrap();
        assert_eq!(g.get(Param::Nrounds).len(), 11);
        assert_eq!(g.get(Param::Nrounds).last(), Some(&201.0));
        assert_eq!(g.get(Param::Eta).len(), 11);
        assert_eq!(g.get(Param::Gamma), [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(g.get(Param::MaxDepth), [1.0, 4.0, 7.0, 10.0, 13.0]);
        assert_eq!(g.get(Param::Subsample)[0], 0.0001);
        assert_eq!(g.get(Param::Subsample)[9], 0.9001);
        assert_eq!(g.pass_len(), 59);
    }

    #[test]
    fn base_score_deciles() {
        let targets: Vec<f64> = (0..=100).map(f64::from).collect();
        let g = build_grids(&targets).unwrap();
        let expected: Vec<f64> = (0..=10).map(|i| f64::from(i * 10)).collect();
        assert_eq!(g.get(Param::BaseScore), expected.as_slice());
        assert!(build_grids(&[]).is_err());
        assert_eq!(build_grids(&[4.0; 7]).unwrap().get(Param::BaseScore), [4.0]);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 2.0, 4.0], 0.75), 3.0);
        assert_eq!(quantile(&[5.0], 0.3), 5.0);
    }

    #[test]
    fn neighbourhoods() {
        let g = build_grids(&(0..=100).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(neighbourhood(Param::Nrounds, 1.0, &g), [0.0, 1.0, 11.0]);
        assert_eq!(neighbourhood(Param::MaxDepth, 1.0, &g), [1.0, 2.0]);
        assert_eq!(neighbourhood(Param::Eta, 1.0, &g), [0.95, 1.0]);
        assert_eq!(neighbourhood(Param::Gamma, 0.0, &g), [0.0, 0.5]);
        assert_eq!(neighbourhood(Param::BaseScore, 30.0, &g), [25.0, 30.0, 35.0]);
        assert_eq!(neighbourhood(Param::BaseScore, 100.0, &g), [95.0, 100.0]);
        assert_eq!(neighbourhood(Param::Subsample, 0.0001, &g), [0.0001, 0.0001 + 0.05]);
    }

    #[test]
    fn alphabetical_order() {
        let mut names: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
        names.sort_unstable();
        assert_eq!(names, Param::ALL.iter().map(|p| p.name()).collect::<Vec<_>>());
    }
}

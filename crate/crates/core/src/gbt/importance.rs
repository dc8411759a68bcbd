use alloc::string::String;
use alloc::vec::Vec;

use super::{GbtError, GbtModel};

/// Gain importance relative to the top feature: the first entry is 1.0 and
/// features that never split are left out. Ties keep feature order.
pub fn importance(model: &GbtModel) -> Result<Vec<(String, f64)>, GbtError> {
    let max = model.gain().iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(GbtError::NoSplits);
    }
    let mut ranked: Vec<(String, f64)> = model
        .feature_names()
        .iter()
        .zip(model.gain())
        .filter(|(_, &g)| g > 0.0)
        .map(|(name, &g)| (name.clone(), g / max))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

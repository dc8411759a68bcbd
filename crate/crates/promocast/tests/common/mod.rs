#![allow(dead_code)]

use std::path::Path;

use promocast::config::RunConfig;
use promocast_core::synth::GenConfig;

/// A small run writing under `out`.
pub fn small_config(out: &Path) -> RunConfig {
    RunConfig {
        out: out.to_path_buf(),
        budget: 1,
        synth: GenConfig { n_stores: 2, products_per_group: 3, filler_products: 3, promotions_per_year: 10, ..GenConfig::default() },
        ..RunConfig::default()
    }
}

/// Synthetic data plus default models under `out`.
pub fn trained(out: &Path) -> RunConfig {
    let cfg = small_config(out);
    promocast::pipeline::cmd_synth(&cfg).unwrap();
    promocast::pipeline::cmd_train(&cfg).unwrap();
    cfg
}

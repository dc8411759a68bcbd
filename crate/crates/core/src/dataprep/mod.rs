//! From receipts and promotions to model-ready datasets.

mod assemble;
mod features;
mod matching;
mod standardize;

use alloc::string::String;

use thiserror::Error;

pub use assemble::{
    assemble_datasets, validation_len, Assembly, AssemblySummary, DatasetSplit, FeatureRow, Part, PrepConfig,
    WindowKey,
};
pub use features::{
    build_features, calendar_features, channel_feature_names, channel_features, concurrency_counts, season,
    FeatureSchema,
};
pub use matching::{find_matching_period, implied_regular_price, RegularPrices, MATCH_WEEKS};
pub use standardize::{destandardize, fit_standardizer, standardize, Moments, StandardizerStats, StatsKey};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrepError {
    #[error("no standardization stats for group {group}, product {product:?}, store {store}")]
    UnknownGroupNoFallback { group: String, product: Option<String>, store: String },
    #[error("group {0} has no usable promotion rows for training or testing")]
    EmptyGroup(String),
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("store {0} has a different attribute set than the first store")]
    StoreSchema(String),
    #[error("unknown {kind} {id}")]
    UnknownReference { kind: &'static str, id: String },
}

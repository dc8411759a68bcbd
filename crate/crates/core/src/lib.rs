//! Forecasting promotion efficiency in grocery retail.
//!
//! This crate holds the algorithmic core and builds without `std`
//! (it needs `alloc`):
//!
//! * [`domain`]: receipts, promotion windows, store profiles and the catalog.
//! * [`indicators`]: the six per-promotion efficiency indicators.
//! * [`dataprep`]: feature engineering, matching no-promotion periods,
//!   per product/store z-scores and chronological dataset assembly.
//! * [`gbt`]: gradient-boosted regression trees with gain importance.
//! * [`metrics`]: MAE, RMSE, MAPE and WMAPE.
//! * [`hpo`]: permutation-ordered sequential grid search.
//! * [`synth`]: a seeded generator of receipts with planted promotion effects.
//!
//! File formats, the CLI and the HTTP service live in the `promocast` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataprep;
pub mod domain;
pub mod gbt;
pub mod hpo;
pub mod indicators;
pub mod metrics;
pub mod seed;
pub mod synth;

pub use domain::{
    Catalog, Channels, DomainError, IndicatorKind, ProductId, ProductRef, Receipt, ReceiptLine,
    SoldBy, StoreId, StoreProfile, PromotionWindow,
};
pub use gbt::{GbtModel, HyperParams};
pub use indicators::{compute_indicators, IndicatorValues};
pub use metrics::{evaluate, EvalReport};

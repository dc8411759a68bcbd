//! Hyperparameter search.
//!
//! A sequential pass fixes the six parameters one after another, in a given
//! order, each at the grid value with the lowest validation RMSE. Passes run
//! from the defaults for many orders; the best order's result is then
//! refined in a half-step neighbourhood.

mod grid;
mod objective;
mod search;

use alloc::string::String;

use thiserror::Error;

pub use grid::{build_grids, default_params, neighbourhood, quantile, Param, ParamGrid};
pub use objective::GbtObjective;
pub use search::{
    all_orders, optimize, select_orders, EvalRecord, HpoConfig, HpoResult, Objective, Order, PassResult,
    Score, Search, N_ORDERS,
};

use crate::dataprep::PrepError;
use crate::gbt::GbtError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HpoError {
    #[error("no training targets")]
    EmptyTargets,
    #[error("non-finite training target")]
    NonFiniteTarget,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("permutation budget is zero")]
    BudgetZero,
    #[error("invalid parameter order: {0}")]
    InvalidOrder(String),
    #[error("objective returned no scores")]
    EmptyTrajectory,
    #[error("objective returned a non-finite score")]
    NonFiniteScore,
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error(transparent)]
    Prep(#[from] PrepError),
}

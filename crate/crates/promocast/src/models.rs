//! Trained models on disk and the forecast shared by the CLI and service.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use promocast_core::dataprep::{destandardize, Moments, PrepError, StandardizerStats, StatsKey};
use promocast_core::domain::{IndicatorKind, ProductId, PromotionWindow, StoreId, StoreProfile};
use promocast_core::gbt::{importance, FeatureVector, GbtError};
use promocast_core::dataprep::FeatureSchema;
use thiserror::Error;

use crate::model_file::{self, ModelFileError, StoredModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    File(#[from] ModelFileError),
    #[error("{path}: {reason}")]
    Stats { path: PathBuf, reason: String },
    #[error("{0}: missing meta {1:?}")]
    Meta(PathBuf, &'static str),
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error("{0} is standardized; a store_id is needed to map it back")]
    NeedsStore(IndicatorKind),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A model with the statistics that map its output back to indicator units.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub group: String,
    pub kind: IndicatorKind,
    pub stored: StoredModel,
    pub stats: Option<StandardizerStats>,
}

/// `<group>__<INDICATOR>`, the stem of every per-model file.
pub fn stem(group: &str, kind: IndicatorKind) -> String {
    format!("{group}__{}", kind.name())
}

pub fn stats_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("stats.csv")
}

/// Stats as CSV. The `*,*` row holds the group moments.
pub fn stats_csv(group: &str, stats: &StandardizerStats) -> String {
    let mut s = String::from("product_id,store_id,mean,sd,n\n");
    let row = |s: &mut String, p: &str, st: &str, m: &Moments| {
        let _ = writeln!(s, "{p},{st},{},{},{}", m.mean, m.sd, m.n);
    };
    if let Some(m) = stats.group(group) {
        row(&mut s, "*", "*", &m);
    }
    for ((p, st), m) in stats.pairs() {
        row(&mut s, p.as_str(), st.as_str(), m);
    }
    s
}

pub fn parse_stats(group: &str, text: &str, path: &Path) -> Result<StandardizerStats, ModelError> {
    let err = |line: usize, reason: &str| ModelError::Stats { path: path.to_path_buf(), reason: format!("line {line}: {reason}") };
    let mut pairs = BTreeMap::new();
    let mut groups = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "product_id,store_id,mean,sd,n")) => {}
        _ => return Err(err(1, "bad header")),
    }
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        let [p, st, mean, sd, n] = f.as_slice() else {
            return Err(err(i + 1, "expected 5 fields"));
        };
        let m = Moments {
            mean: mean.parse().map_err(|_| err(i + 1, "bad mean"))?,
            sd: sd.parse().map_err(|_| err(i + 1, "bad sd"))?,
            n: n.parse().map_err(|_| err(i + 1, "bad n"))?,
        };
        if (*p, *st) == ("*", "*") {
            groups.insert(group.to_string(), m);
        } else {
            pairs.insert((ProductId::new(p), StoreId::new(st)), m);
        }
    }
    Ok(StandardizerStats::from_parts(pairs, groups))
}

/// Loads a model file and, for standardized indicators, its stats file.
pub fn load_model(path: &Path) -> Result<LoadedModel, ModelError> {
    let stored = model_file::load(path)?;
    let group = stored.meta("group").ok_or_else(|| ModelError::Meta(path.to_path_buf(), "group"))?.to_string();
    let kind = stored
        .meta("indicator")
        .and_then(IndicatorKind::parse)
        .ok_or_else(|| ModelError::Meta(path.to_path_buf(), "indicator"))?;
    let stats = if kind.is_standardized() {
        let sp = stats_path(path);
        let text = std::fs::read_to_string(&sp).map_err(|source| ModelError::Io { path: sp.clone(), source })?;
        Some(parse_stats(&group, &text, &sp)?)
    } else {
        None
    };
    Ok(LoadedModel { group, kind, stored, stats })
}

/// Every `*.model` file in `dir`, by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<LoadedModel>, ModelError> {
    let io = |source| ModelError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "model"));
    paths.sort();
    paths.iter().map(|p| load_model(p)).collect()
}

/// A forecast in indicator units. Standardized indicators need the store,
/// and use the product's own stats when `product` has usable ones.
pub fn forecast(
    model: &LoadedModel,
    features: &FeatureVector,
    store: Option<&StoreId>,
    product: Option<&ProductId>,
) -> Result<f64, ModelError> {
    let raw = model.stored.model.predict(features)?;
    match &model.stats {
        None => Ok(raw),
        Some(stats) => {
            let store = store.ok_or(ModelError::NeedsStore(model.kind))?;
            let key = StatsKey { group: model.group.clone(), product: product.cloned(), store: store.clone() };
            Ok(destandardize(raw, &key, stats)?)
        }
    }
}

/// Gain importance, truncated to `top_k`.
pub fn top_features(model: &LoadedModel, top_k: usize) -> Result<Vec<(String, f64)>, ModelError> {
    let mut ranked = importance(&model.stored.model)?;
    ranked.truncate(top_k);
    Ok(ranked)
}

/// Features of a planned promotion. The window counts itself among the
/// concurrent promotions, together with `others`.
pub fn what_if_features(window: &PromotionWindow, store: &StoreProfile, others: &[PromotionWindow]) -> FeatureVector {
    let schema = FeatureSchema::for_store(store);
    let values = schema.values(window, store, std::iter::once(window).chain(others));
    FeatureVector { names: schema.names().to_vec(), values }
}

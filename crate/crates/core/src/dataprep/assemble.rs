//! Chronological datasets per product group and indicator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;

use super::features::FeatureSchema;
use super::matching::{find_matching_period, RegularPrices};
use super::standardize::{fit_standardizer, StandardizerStats, StatsKey};
use super::PrepError;
use crate::domain::{Catalog, IndicatorKind, ProductId, PromotionWindow, Receipt, StoreId, StoreProfile};
use crate::gbt::{FeatureMatrix, GbtError};
use crate::indicators::{compute_indicators, IndicatorValues, ReceiptIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct PrepConfig {
    pub train_years: Vec<i32>,
    pub test_year: i32,
    /// Share of training rows, taken from the end, held out for validation.
    pub validation_fraction: f64,
    /// Product groups to model; empty means every group of the catalog.
    pub groups: Vec<String>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            train_years: alloc::vec![2015, 2016, 2017],
            test_year: 2018,
            validation_fraction: 0.2,
            groups: ["vegetables", "fruits", "dairy"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if self.train_years.is_empty() {
            return Err(PrepError::InvalidConfig("no training years".into()));
        }
        if let Some(y) = self.train_years.iter().find(|&&y| y >= self.test_year) {
            return Err(PrepError::InvalidConfig(format!(
                "training year {y} does not precede test year {}",
                self.test_year
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(PrepError::InvalidConfig(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WindowKey {
    pub store: StoreId,
    pub product: ProductId,
    pub start: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub key: WindowKey,
    /// Values in the owning split's `feature_names` order.
    pub features: Vec<f64>,
    /// Model target: a z-score for standardized indicators, else the value.
    pub target: f64,
    /// The indicator value itself.
    pub raw_target: f64,
    pub is_promotion: bool,
}

/// Whether a split holds training or evaluation data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub group: String,
    pub kind: IndicatorKind,
    pub feature_names: Vec<String>,
    /// Training rows without the validation tail, oldest first.
    pub train: Vec<FeatureRow>,
    /// The most recent training rows.
    pub validation: Vec<FeatureRow>,
    pub test: Vec<FeatureRow>,
    /// Present for standardized indicators.
    pub stats: Option<StandardizerStats>,
}

impl DatasetSplit {
    pub fn rows(&self, part: Part) -> &[FeatureRow] {
        match part {
            Part::Train => &self.train,
            Part::Validation => &self.validation,
            Part::Test => &self.test,
        }
    }

    /// Training and validation rows together, oldest first.
    pub fn all_training(&self) -> impl Iterator<Item = &FeatureRow> {
        self.train.iter().chain(&self.validation)
    }

    pub fn matrix<'r, I>(&self, rows: I) -> Result<FeatureMatrix, GbtError>
    where
        I: IntoIterator<Item = &'r FeatureRow>,
    {
        FeatureMatrix::from_rows(self.feature_names.clone(), rows.into_iter().map(|r| r.features.as_slice()))
    }

    pub fn stats_key(&self, row: &FeatureRow) -> StatsKey {
        StatsKey { group: self.group.clone(), product: Some(row.key.product.clone()), store: row.key.store.clone() }
    }

    /// `(mean, sd)` mapping model output back to indicator units; `(0, 1)`
    /// for indicators that are not standardized.
    pub fn scale(&self, key: &StatsKey) -> Result<(f64, f64), PrepError> {
        match &self.stats {
            Some(stats) => stats.resolve(key),
            None => Ok((0.0, 1.0)),
        }
    }

    /// A model output for `row` in indicator units.
    pub fn to_raw(&self, row: &FeatureRow, prediction: f64) -> Result<f64, PrepError> {
        let (mean, sd) = self.scale(&self.stats_key(row))?;
        Ok(prediction * sd + mean)
    }
}

/// Counts describing one assembly run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblySummary {
    pub promotions_used: usize,
    /// Promotions skipped because no receipt held the product.
    pub no_hit: usize,
    pub matched: usize,
    pub unmatched: usize,
    /// Matching periods skipped for lack of receipts or for falling
    /// outside the training years.
    pub matched_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub splits: Vec<DatasetSplit>,
    pub summary: AssemblySummary,
}

impl Assembly {
    pub fn split(&self, group: &str, kind: IndicatorKind) -> Option<&DatasetSplit> {
        self.splits.iter().find(|s| s.group == group && s.kind == kind)
    }
}

struct Prepared {
    key: WindowKey,
    features: Vec<f64>,
    values: IndicatorValues,
    is_promotion: bool,
    test: bool,
}

/// Builds one split per configured group and indicator, groups in config
/// order and indicators in [`IndicatorKind::ALL`] order.
///
/// Promotions from training years contribute a row and, when one exists,
/// a row for their matching period. Promotions from the test year form
/// the test set. Windows whose receipts never hold the product are left
/// out.
pub fn assemble_datasets(
    promotions: &[PromotionWindow],
    receipts: &[Receipt],
    stores: &[StoreProfile],
    catalog: &Catalog,
    config: &PrepConfig,
) -> Result<Assembly, PrepError> {
    config.validate()?;
    let groups = if config.groups.is_empty() { catalog.groups() } else { config.groups.clone() };
    let store_map: BTreeMap<&StoreId, &StoreProfile> = stores.iter().map(|s| (&s.store_id, s)).collect();
    let schema = match stores.first() {
        Some(s) => FeatureSchema::for_store(s),
        None => return Err(PrepError::InvalidConfig("no stores".into())),
    };
    if let Some(s) = stores.iter().find(|s| !schema.accepts(s)) {
        return Err(PrepError::StoreSchema(s.store_id.as_str().into()));
    }

    let mut by_store: BTreeMap<&StoreId, Vec<&PromotionWindow>> = BTreeMap::new();
    for p in promotions.iter().filter(|p| p.is_promotion()) {
        by_store.entry(&p.store_id).or_default().push(p);
    }
    let no_promotions = Vec::new();
    let index = ReceiptIndex::new(receipts);
    let regular = RegularPrices::from_receipts(receipts, promotions);
    let mut summary = AssemblySummary::default();
    let mut prepared: BTreeMap<&str, Vec<Prepared>> = groups.iter().map(|g| (g.as_str(), Vec::new())).collect();

    for p in promotions.iter().filter(|p| p.is_promotion()) {
        let year = p.start_year();
        let test = year == config.test_year;
        if !test && !config.train_years.contains(&year) {
            continue;
        }
        let product = catalog.get(&p.product).ok_or_else(|| PrepError::UnknownReference {
            kind: "product",
            id: p.product.as_str().into(),
        })?;
        let Some(rows) = prepared.get_mut(product.group.as_str()) else { continue };
        let store = *store_map.get(&p.store_id).ok_or_else(|| PrepError::UnknownReference {
            kind: "store",
            id: p.store_id.as_str().into(),
        })?;
        let same_store = by_store.get(&p.store_id).unwrap_or(&no_promotions);

        let values = match compute_indicators(p, index.window(p)) {
            Ok(v) => v,
            Err(_) => {
                summary.no_hit += 1;
                continue;
            }
        };
        summary.promotions_used += 1;
        rows.push(Prepared {
            key: WindowKey { store: p.store_id.clone(), product: p.product.clone(), start: p.start_date },
            features: schema.values(p, store, same_store.iter().copied()),
            values,
            is_promotion: true,
            test,
        });
        if test {
            continue;
        }

        match find_matching_period(p, promotions, regular.get(&p.store_id, &p.product)) {
            None => summary.unmatched += 1,
            Some(m) => {
                summary.matched += 1;
                let in_years = config.train_years.contains(&m.start_year());
                match compute_indicators(&m, index.window(&m)) {
                    Ok(values) if in_years => rows.push(Prepared {
                        key: WindowKey { store: m.store_id.clone(), product: m.product.clone(), start: m.start_date },
                        features: schema.values(&m, store, same_store.iter().copied()),
                        values,
                        is_promotion: false,
                        test: false,
                    }),
                    _ => summary.matched_dropped += 1,
                }
            }
        }
    }

    let mut splits = Vec::with_capacity(groups.len() * IndicatorKind::ALL.len());
    for group in &groups {
        let mut rows = prepared.remove(group.as_str()).unwrap_or_default();
        rows.sort_by(|a, b| (a.key.start, &a.key.store, &a.key.product, a.is_promotion).cmp(&(
            b.key.start,
            &b.key.store,
            &b.key.product,
            b.is_promotion,
        )));
        let (test_rows, train_rows): (Vec<Prepared>, Vec<Prepared>) = rows.into_iter().partition(|r| r.test);
        if train_rows.is_empty() || test_rows.is_empty() {
            return Err(PrepError::EmptyGroup(group.clone()));
        }
        let n_val = validation_len(train_rows.len(), config.validation_fraction);
        for kind in IndicatorKind::ALL {
            splits.push(build_split(group, kind, &schema, &train_rows, &test_rows, n_val)?);
        }
    }
    Ok(Assembly { splits, summary })
}

/// `floor(n * fraction)`, at least one row when `n >= 2`, never all rows.
pub fn validation_len(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return 0;
    }
    let k = libm::floor(n as f64 * fraction) as usize;
    k.clamp(1, n - 1)
}

fn build_split(
    group: &str,
    kind: IndicatorKind,
    schema: &FeatureSchema,
    train_rows: &[Prepared],
    test_rows: &[Prepared],
    n_val: usize,
) -> Result<DatasetSplit, PrepError> {
    let stats = kind.is_standardized().then(|| {
        fit_standardizer(train_rows.iter().map(|r| (group, &r.key.product, &r.key.store, r.values.get(kind))))
    });
    let to_row = |p: &Prepared| -> Result<FeatureRow, PrepError> {
        let raw = p.values.get(kind);
        let target = match &stats {
            Some(s) => {
                let key = StatsKey { group: group.into(), product: Some(p.key.product.clone()), store: p.key.store.clone() };
                let (mean, sd) = s.resolve(&key)?;
                (raw - mean) / sd
            }
            None => raw,
        };
        Ok(FeatureRow {
            key: p.key.clone(),
            features: p.features.clone(),
            target,
            raw_target: raw,
            is_promotion: p.is_promotion,
        })
    };
    let mut train: Vec<FeatureRow> = train_rows.iter().map(to_row).collect::<Result<_, _>>()?;
    let validation = train.split_off(train.len() - n_val);
    let test = test_rows.iter().map(to_row).collect::<Result<_, _>>()?;
    Ok(DatasetSplit {
        group: group.into(),
        kind,
        feature_names: schema.names().to_vec(),
        train,
        validation,
        test,
        stats,
    })
}

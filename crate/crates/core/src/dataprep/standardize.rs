//! Z-scores per product and store, with a per-group fallback.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::PrepError;
use crate::domain::{ProductId, StoreId};

/// Mean, sample standard deviation and count of one set of values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub sd: f64,
    pub n: usize,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            libm::sqrt(ss / (n - 1) as f64)
        };
        Some(Self { mean, sd, n })
    }

    fn usable(&self) -> bool {
        self.sd > 0.0 && self.sd.is_finite()
    }
}

/// What a value is standardized against. `product: None` asks for the
/// group statistics directly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StatsKey {
    pub group: String,
    pub product: Option<ProductId>,
    pub store: StoreId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StandardizerStats {
    pairs: BTreeMap<(ProductId, StoreId), Moments>,
    groups: BTreeMap<String, Moments>,
}

impl StandardizerStats {
    /// Builds stats from already computed moments, e.g. after reading them
    /// back from a file.
    pub fn from_parts(
        pairs: BTreeMap<(ProductId, StoreId), Moments>,
        groups: BTreeMap<String, Moments>,
    ) -> Self {
        Self { pairs, groups }
    }

    pub fn pairs(&self) -> &BTreeMap<(ProductId, StoreId), Moments> {
        &self.pairs
    }

    pub fn groups(&self) -> &BTreeMap<String, Moments> {
        &self.groups
    }

    pub fn pair(&self, product: &ProductId, store: &StoreId) -> Option<Moments> {
        self.pairs.get(&(product.clone(), store.clone())).copied()
    }

    pub fn group(&self, group: &str) -> Option<Moments> {
        self.groups.get(group).copied()
    }

    /// The `(mean, sd)` used for `key`: the pair's own when it has a
    /// positive sd, the group's otherwise.
    pub fn resolve(&self, key: &StatsKey) -> Result<(f64, f64), PrepError> {
        if let Some(product) = &key.product {
            if let Some(m) = self.pair(product, &key.store).filter(Moments::usable) {
                return Ok((m.mean, m.sd));
            }
        }
        match self.group(&key.group).filter(Moments::usable) {
            Some(m) => Ok((m.mean, m.sd)),
            None => Err(PrepError::UnknownGroupNoFallback {
                group: key.group.clone(),
                product: key.product.as_ref().map(|p| p.as_str().into()),
                store: key.store.as_str().into(),
            }),
        }
    }
}

/// Fits stats on training values given as `(group, product, store, value)`.
pub fn fit_standardizer<'a, I>(samples: I) -> StandardizerStats
where
    I: IntoIterator<Item = (&'a str, &'a ProductId, &'a StoreId, f64)>,
{
    let mut by_pair: BTreeMap<(ProductId, StoreId), Vec<f64>> = BTreeMap::new();
    let mut by_group: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (group, product, store, v) in samples {
        by_pair.entry((product.clone(), store.clone())).or_default().push(v);
        by_group.entry(group.into()).or_default().push(v);
    }
    fn moments<K>((k, v): (K, Vec<f64>)) -> Option<(K, Moments)> {
        Moments::of(&v).map(|m| (k, m))
    }
    StandardizerStats {
        pairs: by_pair.into_iter().filter_map(moments).collect(),
        groups: by_group.into_iter().filter_map(moments).collect(),
    }
}

pub fn standardize(value: f64, key: &StatsKey, stats: &StandardizerStats) -> Result<f64, PrepError> {
    let (mean, sd) = stats.resolve(key)?;
    Ok((value - mean) / sd)
}

pub fn destandardize(z: f64, key: &StatsKey, stats: &StandardizerStats) -> Result<f64, PrepError> {
    let (mean, sd) = stats.resolve(key)?;
    Ok(z * sd + mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(product: Option<&str>, store: &str) -> StatsKey {
        StatsKey { group: "fruits".into(), product: product.map(ProductId::from), store: store.into() }
    }

    fn fit(samples: &[(&str, &str, f64)]) -> StandardizerStats {
        let ids: Vec<(ProductId, StoreId, f64)> =
            samples.iter().map(|&(p, s, v)| (p.into(), s.into(), v)).collect();
        fit_standardizer(ids.iter().map(|(p, s, v)| ("fruits", p, s, *v)))
    }

    #[test]
    fn sample_sd() {
        let stats = fit(&[("apple", "1", 1.0), ("apple", "1", 2.0), ("apple", "1", 3.0)]);
        let m = stats.pair(&"apple".into(), &"1".into()).unwrap();
        assert_eq!((m.mean, m.sd, m.n), (2.0, 1.0, 3));
        assert_eq!(standardize(3.0, &key(Some("apple"), "1"), &stats), Ok(1.0));
    }

    #[test]
    fn single_record_pair_uses_group() {
        let stats = fit(&[("apple", "1", 1.0), ("apple", "1", 3.0), ("pear", "1", 8.0)]);
        assert_eq!(stats.pair(&"pear".into(), &"1".into()).unwrap().sd, 0.0);
        let g = stats.group("fruits").unwrap();
        let z = standardize(8.0, &key(Some("pear"), "1"), &stats).unwrap();
        assert_eq!(z, (8.0 - g.mean) / g.sd);
        // Unseen pairs and product-less keys land on the same fallback.
        assert_eq!(standardize(8.0, &key(Some("plum"), "9"), &stats).unwrap(), z);
        assert_eq!(standardize(8.0, &key(None, "1"), &stats).unwrap(), z);
    }

    #[test]
    fn no_fallback_is_an_error() {
        let stats = fit(&[("apple", "1", 2.0)]);
        assert!(matches!(
            standardize(1.0, &key(Some("apple"), "1"), &stats),
            Err(PrepError::UnknownGroupNoFallback { .. })
        ));
        let other = StatsKey { group: "dairy".into(), ..key(None, "1") };
        assert!(destandardize(0.0, &other, &StandardizerStats::default()).is_err());
    }

    #[test]
    fn round_trip() {
        let stats = fit(&[("apple", "1", 1.5), ("apple", "1", 4.25), ("apple", "1", 2.0)]);
        let k = key(Some("apple"), "1");
        for x in [-1e3, -2.5, 0.0, 0.1, 7.0, 12345.678] {
            let back = destandardize(standardize(x, &k, &stats).unwrap(), &k, &stats).unwrap();
            assert!((back - x).abs() <= 1e-9, "{x} -> {back}");
        }
    }
}

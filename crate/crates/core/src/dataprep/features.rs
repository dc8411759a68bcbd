//! Feature vectors for promotion windows.
//!
//! Columns, in order:
//!
//! 1. price: `promo_price`, `price_change`
//! 2. time: `duration_days`, `start_weekday` (Monday = 1), `year`, `month`,
//!    `day_of_month`, `week_of_year` (ISO), `day_of_year`, `season`
//!    (winter = 1 for Dec-Feb, spring, summer, autumn = 4)
//! 3. channels: `tv`, `radio`, `internet`, `other`
//! 4. channel combinations: `or_*` and `and_*` over every subset of two to
//!    four channels, then `xor_*` over every pair
//! 5. every store attribute, in the store's order
//! 6. promotions active in the store during the window: `n_promotions`,
//!    `n_promotions_media` (TV, radio or internet), `n_promotions_any_channel`

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};

use crate::domain::{Channels, PromotionWindow, StoreProfile};
use crate::gbt::FeatureVector;

const TIME_FEATURES: [&str; 8] = [
    "duration_days",
    "start_weekday",
    "year",
    "month",
    "day_of_month",
    "week_of_year",
    "day_of_year",
    "season",
];

const CONCURRENCY_FEATURES: [&str; 3] =
    ["n_promotions", "n_promotions_media", "n_promotions_any_channel"];

/// Channel index subsets used for OR/AND features, by size then
/// lexicographically.
fn channel_subsets() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 2..=4 {
        for mask in 0u32..16 {
            if mask.count_ones() == size {
                out.push((0..4).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>());
            }
        }
    }
    // Masks enumerate in numeric order; sort each size block lexicographically.
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn channel_pairs() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            out.push((a, b));
        }
    }
    out
}

fn combo_name(op: &str, members: &[usize]) -> String {
    let mut name = String::from(op);
    for &i in members {
        name.push('_');
        name.push_str(Channels::NAMES[i]);
    }
    name
}

/// Season code: 1 winter (Dec-Feb), 2 spring, 3 summer, 4 autumn.
pub fn season(month: u32) -> u32 {
    match month {
        12 | 1 | 2 => 1,
        3..=5 => 2,
        6..=8 => 3,
        _ => 4,
    }
}

/// The calendar columns for a window starting at `start` and lasting
/// `duration_days`.
pub fn calendar_features(start: NaiveDate, duration_days: i64) -> [f64; 8] {
    [
        duration_days as f64,
        f64::from(start.weekday().number_from_monday()),
        f64::from(start.year()),
        f64::from(start.month()),
        f64::from(start.day()),
        f64::from(start.iso_week().week()),
        f64::from(start.ordinal()),
        f64::from(season(start.month())),
    ]
}

/// Raw flags, then OR and AND over 2-4 channel subsets, then pairwise XOR.
pub fn channel_features(channels: &Channels) -> Vec<f64> {
    let flags = channels.as_array();
    let subsets = channel_subsets();
    let as_f = |b: bool| if b { 1.0 } else { 0.0 };
    let mut out: Vec<f64> = flags.iter().map(|&b| as_f(b)).collect();
    out.extend(subsets.iter().map(|s| as_f(s.iter().any(|&i| flags[i]))));
    out.extend(subsets.iter().map(|s| as_f(s.iter().all(|&i| flags[i]))));
    out.extend(channel_pairs().iter().map(|&(a, b)| as_f(flags[a] ^ flags[b])));
    out
}

/// Names of [`channel_features`], in the same order.
pub fn channel_feature_names() -> Vec<String> {
    let subsets = channel_subsets();
    let mut out: Vec<String> = Channels::NAMES.iter().map(|s| s.to_string()).collect();
    out.extend(subsets.iter().map(|s| combo_name("or", s)));
    out.extend(subsets.iter().map(|s| combo_name("and", s)));
    out.extend(channel_pairs().iter().map(|&(a, b)| combo_name("xor", &[a, b])));
    out
}

/// Promotions of `window`'s store overlapping it: all of them, those in
/// TV/radio/internet, and those on any channel. A window that is itself in
/// `promotions` counts itself.
pub fn concurrency_counts<'a, I>(window: &PromotionWindow, promotions: I) -> [f64; 3]
where
    I: IntoIterator<Item = &'a PromotionWindow>,
{
    let mut counts = [0.0; 3];
    for p in promotions {
        if p.store_id != window.store_id || !p.is_promotion() || !p.overlaps(window) {
            continue;
        }
        counts[0] += 1.0;
        if p.channels.in_media() {
            counts[1] += 1.0;
        }
        if p.channels.any() {
            counts[2] += 1.0;
        }
    }
    counts
}

/// Column layout for one store-attribute set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    names: Vec<String>,
    n_store_attributes: usize,
}

impl FeatureSchema {
    pub fn new<S: AsRef<str>>(store_attributes: &[S]) -> Self {
        let mut names: Vec<String> = ["promo_price", "price_change"].iter().map(|s| s.to_string()).collect();
        names.extend(TIME_FEATURES.iter().map(|s| s.to_string()));
        names.extend(channel_feature_names());
        names.extend(store_attributes.iter().map(|s| s.as_ref().to_string()));
        names.extend(CONCURRENCY_FEATURES.iter().map(|s| s.to_string()));
        Self { names, n_store_attributes: store_attributes.len() }
    }

    pub fn for_store(store: &StoreProfile) -> Self {
        let attrs: Vec<&str> = store.attribute_names().collect();
        Self::new(&attrs)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// True when `store` carries exactly this schema's attributes, in order.
    pub fn accepts(&self, store: &StoreProfile) -> bool {
        let start = self.names.len() - CONCURRENCY_FEATURES.len() - self.n_store_attributes;
        let expected = &self.names[start..start + self.n_store_attributes];
        store.attributes().len() == expected.len()
            && store.attribute_names().zip(expected).all(|(a, b)| a == b)
    }

    /// Feature values in schema order. `store` must be `window`'s store and
    /// pass [`FeatureSchema::accepts`].
    pub fn values<'a, I>(&self, window: &PromotionWindow, store: &StoreProfile, promotions: I) -> Vec<f64>
    where
        I: IntoIterator<Item = &'a PromotionWindow>,
    {
        debug_assert_eq!(window.store_id, store.store_id);
        debug_assert!(self.accepts(store), "{}", format!("store {} does not fit schema", store.store_id));
        let mut v = Vec::with_capacity(self.names.len());
        v.push(window.promo_price);
        v.push(window.price_change);
        v.extend(calendar_features(window.start_date, window.duration_days()));
        v.extend(channel_features(&window.channels));
        v.extend(store.attributes().iter().map(|(_, x)| *x));
        v.extend(concurrency_counts(window, promotions));
        v
    }
}

/// Named features of `window` in `store`, given every known promotion.
pub fn build_features(
    window: &PromotionWindow,
    store: &StoreProfile,
    all_promotions: &[PromotionWindow],
) -> FeatureVector {
    let schema = FeatureSchema::for_store(store);
    let values = schema.values(window, store, all_promotions);
    FeatureVector { names: schema.names, values }
}

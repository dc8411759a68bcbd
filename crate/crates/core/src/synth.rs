//! Seeded synthetic receipts with planted promotion effects.
//!
//! Expected daily units of a product in a store are
//!
//! ```text
//! base * (1 + elasticity * price_change) * channel lift * store size * season
//! ```
//!
//! scaled by `1 + noise * z` for a standard normal `z`. Units are sold to
//! distinct clients in fixed per-product quantities. Clients per store and
//! day scale with store size, weekday and the number of advertised
//! promotions running in the store. Every receipt also carries one line of
//! a filler product from the `other` group, so baskets are never empty.
//!
//! All randomness comes from ChaCha8 streams derived from the seed, so the
//! output is identical across platforms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::domain::{
    Catalog, Channels, DomainError, ProductId, ProductRef, PromotionWindow, Receipt, ReceiptLine, SoldBy, StoreId,
    StoreProfile, MAX_PROMOTION_DAYS, REQUIRED_STORE_ATTRIBUTES,
};
use crate::seed::{rng_for, Rng};

/// Group of the filler products.
pub const FILLER_GROUP: &str = "other";

/// Relative client traffic per weekday, Monday first.
const WEEKDAY_TRAFFIC: [f64; 7] = [0.9, 0.9, 0.95, 1.0, 1.1, 1.25, 0.9];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub n_stores: usize,
    pub products_per_group: usize,
    pub groups: Vec<String>,
    /// Products of the filler group.
    pub filler_products: usize,
    pub start_year: i32,
    /// Calendar years generated, starting at `start_year`.
    pub n_years: u32,
    /// Mean daily units of a product before any effect.
    pub base_demand: f64,
    /// Mean clients per day in a store of size 1.
    pub clients_per_day: f64,
    /// Promotions per product, store and year.
    pub promotions_per_year: u32,
    /// Demand grows by `elasticity * price_change`.
    pub elasticity: f64,
    /// Demand factor of each advertising channel: tv, radio, internet, other.
    pub channel_lift: [f64; 4],
    /// Relative client gain per advertised promotion running in the store.
    pub traffic_lift: f64,
    /// Amplitude of the yearly demand cycle.
    pub seasonal_amplitude: f64,
    /// Range of the store size factor.
    pub store_size: (f64, f64),
    /// Relative standard deviation of daily units and clients.
    pub noise: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_stores: 4,
            products_per_group: 6,
            groups: ["vegetables", "fruits", "dairy"].iter().map(|s| s.to_string()).collect(),
            filler_products: 8,
            start_year: 2015,
            n_years: 4,
            base_demand: 6.0,
            clients_per_day: 40.0,
            promotions_per_year: 12,
            elasticity: 3.0,
            channel_lift: [1.3, 1.1, 1.15, 1.05],
            traffic_lift: 0.02,
            seasonal_amplitude: 0.2,
            store_size: (0.6, 1.6),
            noise: 0.25,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_stores == 0 || self.products_per_group == 0 || self.filler_products == 0 {
            return bad("store and product counts must be at least 1".into());
        }
        if self.groups.is_empty() || self.groups.iter().any(|g| g.is_empty() || g == FILLER_GROUP) {
            return bad(format!("groups must be non-empty names other than {FILLER_GROUP:?}"));
        }
        if self.n_years < 2 {
            return bad("at least two years are needed for training and testing".into());
        }
        if self.promotions_per_year == 0 || self.promotions_per_year > 26 {
            return bad("promotions_per_year must be in 1..=26".into());
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_nonneg(self.elasticity) && finite_nonneg(self.noise) && finite_nonneg(self.traffic_lift)) {
            return bad("elasticity, noise and traffic_lift must be finite and >= 0".into());
        }
        if !(self.base_demand > 0.0 && self.clients_per_day >= 1.0) {
            return bad("base_demand must be > 0 and clients_per_day >= 1".into());
        }
        if !self.channel_lift.iter().all(|&l| l.is_finite() && l > 0.0) {
            return bad("channel lifts must be positive".into());
        }
        if !(0.0..1.0).contains(&self.seasonal_amplitude) {
            return bad("seasonal_amplitude must be in [0, 1)".into());
        }
        let (lo, hi) = self.store_size;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("store size range must be positive and ordered".into());
        }
        if NaiveDate::from_ymd_opt(self.start_year, 1, 1).is_none()
            || NaiveDate::from_ymd_opt(self.start_year + self.n_years as i32, 1, 1).is_none()
        {
            return bad("years out of range".into());
        }
        Ok(())
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("validated")
    }

    pub fn last_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start_year + self.n_years as i32, 1, 1).expect("validated") - Duration::days(1)
    }
}

/// Noise-free daily means behind a promotion, in indicator units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planted {
    pub avg_amount: f64,
    pub avg_nb_receipts: f64,
    pub avg_nb_clients: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub catalog: Catalog,
    pub stores: Vec<StoreProfile>,
    pub promotions: Vec<PromotionWindow>,
    pub receipts: Vec<Receipt>,
    /// Planted values of `promotions[i]`.
    pub planted: Vec<Planted>,
}

struct Product {
    id: ProductId,
    regular_price: f64,
    /// Quantity bought by one client.
    quantity: f64,
    base: f64,
    /// Day of year where the season peaks.
    season_peak: f64,
}

fn cents(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generates a dataset. Equal configs give equal output.
pub fn generate(config: &GenConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let first = config.first_day();
    let last = config.last_day();
    let n_days = (last - first).num_days() as usize + 1;

    // Catalog.
    let mut rng = rng_for(config.seed, "synth-products");
    let mut catalog = Catalog::new();
    let mut modeled: Vec<Product> = Vec::new();
    for (gi, group) in config.groups.iter().enumerate() {
        let season_peak = 365.25 * gi as f64 / config.groups.len() as f64 + 30.0;
        for i in 0..config.products_per_group {
            let id = ProductId::new(&format!("{group}-{:02}", i + 1));
            let sold_by = if i % 2 == 0 { SoldBy::Weight } else { SoldBy::Unit };
            let quantity = match sold_by {
                SoldBy::Weight => f64::from(rng.random_range(2u32..=6)) * 0.25,
                SoldBy::Unit => f64::from(rng.random_range(1u32..=2)),
            };
            catalog.insert(ProductRef::new(id.as_str(), group, sold_by)?)?;
            modeled.push(Product {
                id,
                regular_price: cents(rng.random_range(0.5..6.0)),
                quantity,
                base: config.base_demand * rng.random_range(0.6..1.4),
                season_peak,
            });
        }
    }
    let mut fillers: Vec<(ProductId, f64)> = Vec::new();
    for i in 0..config.filler_products {
        let id = ProductId::new(&format!("{FILLER_GROUP}-{:02}", i + 1));
        catalog.insert(ProductRef::new(id.as_str(), FILLER_GROUP, SoldBy::Unit)?)?;
        fillers.push((id, cents(rng.random_range(0.5..15.0))));
    }

    // Stores.
    let mut rng = rng_for(config.seed, "synth-stores");
    let mut stores = Vec::with_capacity(config.n_stores);
    let mut sizes = Vec::with_capacity(config.n_stores);
    for s in 0..config.n_stores {
        let (lo, hi) = config.store_size;
        let size = if hi > lo { rng.random_range(lo..hi) } else { lo };
        sizes.push(size);
        let mut jitter = || rng.random_range(0.8..1.2);
        let attrs: Vec<f64> = vec![
            libm::round(4000.0 * size * jitter()),
            libm::round(1500.0 * size * jitter()),
            libm::round(15000.0 * size * jitter()),
            libm::round(45000.0 * size * jitter()),
            libm::round(1200.0 * size * jitter()),
            cents(6.0 * jitter()),
            libm::round(450.0 * jitter()),
            libm::round(4500.0 * jitter()),
            cents(0.1 * jitter()),
            libm::round(3.0 * size * jitter()),
            cents(1.5 * jitter() / size),
            cents(size * jitter()),
        ];
        let named = REQUIRED_STORE_ATTRIBUTES.iter().map(|n| n.to_string()).zip(attrs).collect();
        stores.push(StoreProfile::new(StoreId::new(&format!("{}", s + 1)), named)?);
    }

    // Promotions: one per slot of the year for every product and store,
    // placed at random inside the slot.
    let mut rng = rng_for(config.seed, "synth-promotions");
    let mut promotions = Vec::new();
    for store in &stores {
        for p in &modeled {
            for year in 0..config.n_years as i32 {
                let y0 = NaiveDate::from_ymd_opt(config.start_year + year, 1, 1).expect("validated");
                let y1 = NaiveDate::from_ymd_opt(config.start_year + year + 1, 1, 1).expect("validated");
                let year_days = (y1 - y0).num_days();
                let slot = year_days / i64::from(config.promotions_per_year);
                for k in 0..i64::from(config.promotions_per_year) {
                    let duration = rng.random_range(1..=MAX_PROMOTION_DAYS);
                    let latest = (slot - duration).max(0);
                    let start = y0 + Duration::days(k * slot + rng.random_range(0..=latest));
                    let end = start + Duration::days(duration - 1);
                    let price_change = f64::from(rng.random_range(1u32..=9)) * 0.05;
                    let channels = Channels {
                        tv: rng.random_bool(0.25),
                        radio: rng.random_bool(0.3),
                        internet: rng.random_bool(0.4),
                        other: rng.random_bool(0.3),
                    };
                    let promo_price = cents(p.regular_price * (1.0 - price_change)).max(0.01);
                    promotions.push(PromotionWindow::new(
                        store.store_id.clone(),
                        p.id.clone(),
                        start,
                        end,
                        promo_price,
                        price_change,
                        channels,
                    )?);
                }
            }
        }
    }

    // Active promotions per store and day.
    let product_index: BTreeMap<&ProductId, usize> = modeled.iter().enumerate().map(|(i, p)| (&p.id, i)).collect();
    let store_index: BTreeMap<&StoreId, usize> = stores.iter().enumerate().map(|(i, s)| (&s.store_id, i)).collect();
    let mut active: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n_days]; stores.len()];
    for (pi, w) in promotions.iter().enumerate() {
        let s = store_index[&w.store_id];
        for d in 0..w.duration_days() {
            let day = (w.start_date - first).num_days() + d;
            if (0..n_days as i64).contains(&day) {
                active[s][day as usize].push(pi);
            }
        }
    }

    // Daily demand and receipts.
    let mut rng = rng_for(config.seed, "synth-receipts");
    let mut receipts = Vec::new();
    let mut planted_sums = vec![(0.0f64, 0.0f64, 0.0f64); promotions.len()];
    let mut baskets: Vec<Vec<ReceiptLine>> = Vec::new();
    for (s, store) in stores.iter().enumerate() {
        for (day, today) in active[s].iter().enumerate() {
            let date = first + Duration::days(day as i64);
            let advertised = today.iter().filter(|&&pi| promotions[pi].channels.any()).count() as f64;
            let weekday = WEEKDAY_TRAFFIC[date.weekday().num_days_from_monday() as usize];
            let mean_clients = config.clients_per_day * sizes[s] * weekday * (1.0 + config.traffic_lift * advertised);
            let planned_clients = libm::round(mean_clients).max(1.0);
            let n_clients = libm::round(mean_clients * noise_factor(&mut rng, config.noise)).max(1.0) as usize;

            baskets.clear();
            baskets.resize_with(n_clients, Vec::new);
            for (pi, p) in modeled.iter().enumerate() {
                let promo = today.iter().copied().find(|&w| product_index[&promotions[w].product] == pi);
                let (price_change, channels, price) = match promo {
                    Some(w) => (promotions[w].price_change, promotions[w].channels, promotions[w].promo_price),
                    None => (0.0, Channels::NONE, p.regular_price),
                };
                let mut lift = 1.0;
                for (on, l) in channels.as_array().iter().zip(config.channel_lift) {
                    if *on {
                        lift *= l;
                    }
                }
                let doy = f64::from(date.ordinal());
                let season = 1.0 + config.seasonal_amplitude * libm::cos(2.0 * PI * (doy - p.season_peak) / 365.25);
                let units = p.base * (1.0 + config.elasticity * price_change) * lift * sizes[s] * season;

                let planned_buyers = libm::round(units / p.quantity).min(planned_clients);
                let buyers = (libm::round(units * noise_factor(&mut rng, config.noise) / p.quantity) as usize).min(n_clients);
                if let Some(w) = promo {
                    let acc = &mut planted_sums[w];
                    acc.0 += planned_buyers * p.quantity;
                    acc.1 += planned_buyers;
                    acc.2 += planned_clients;
                }
                let value = cents(price * p.quantity);
                for c in index::sample(&mut rng, n_clients, buyers) {
                    baskets[c].push(ReceiptLine::new(p.id.clone(), p.quantity, value)?);
                }
            }
            for (c, mut lines) in baskets.drain(..).enumerate() {
                let (id, price) = &fillers[rng.random_range(0..fillers.len())];
                lines.push(ReceiptLine::new(id.clone(), 1.0, *price)?);
                let receipt_id = format!(
                    "{}-{:04}{:02}{:02}-{}",
                    store.store_id,
                    date.year(),
                    date.month(),
                    date.day(),
                    c + 1
                );
                receipts.push(Receipt::new(&receipt_id, store.store_id.clone(), date, lines)?);
            }
        }
    }

    let planted = promotions
        .iter()
        .zip(planted_sums)
        .map(|(w, (amount, hits, clients))| {
            let days = w.duration_days() as f64;
            Planted { avg_amount: amount / days, avg_nb_receipts: hits / days, avg_nb_clients: clients / days }
        })
        .collect();

    Ok(SynthData { catalog, stores, promotions, receipts, planted })
}

fn noise_factor(rng: &mut Rng, noise: f64) -> f64 {
    if noise == 0.0 {
        return 1.0;
    }
    (1.0 + noise * normal(rng)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig { n_stores: 2, products_per_group: 2, filler_products: 3, n_years: 2, promotions_per_year: 6, ..GenConfig::default() }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&GenConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.receipts, c.receipts);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&GenConfig { n_years: 1, ..small() }).is_err());
        assert!(generate(&GenConfig { n_stores: 0, ..small() }).is_err());
        assert!(generate(&GenConfig { elasticity: -1.0, ..small() }).is_err());
        assert!(generate(&GenConfig { groups: alloc::vec!["other".into()], ..small() }).is_err());
    }

    #[test]
    fn references_and_span() {
        let cfg = small();
        let data = generate(&cfg).unwrap();
        for w in &data.promotions {
            assert!(data.catalog.get(&w.product).is_some());
            assert!(data.stores.iter().any(|s| s.store_id == w.store_id));
            assert!(w.duration_days() <= MAX_PROMOTION_DAYS);
        }
        for r in &data.receipts {
            assert!(cfg.first_day() <= r.date && r.date <= cfg.last_day());
            assert!(!r.lines().is_empty());
        }
        assert_eq!(data.promotions.len(), 2 * 6 * 6 * 2);
    }
}

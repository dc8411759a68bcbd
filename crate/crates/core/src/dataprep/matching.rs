//! Matching periods without promotion.
//!
//! For a promotion, the matching period covers the same product and store,
//! lasts as long, starts on the same weekday 1 to 4 weeks earlier, and has
//! no promotion of the product on any of its days. The closest such week
//! wins.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::domain::{Channels, ProductId, PromotionWindow, Receipt, StoreId};

/// Week offsets tried, closest first.
pub const MATCH_WEEKS: [i64; 4] = [1, 2, 3, 4];

/// The matching no-promotion window of `window`, if any.
///
/// The result has no channels, `price_change` 0 and `promo_price` set to
/// `regular_price`, or to the price implied by the promotion's discount
/// when `regular_price` is `None`.
pub fn find_matching_period(
    window: &PromotionWindow,
    all_promotions: &[PromotionWindow],
    regular_price: Option<f64>,
) -> Option<PromotionWindow> {
    let blocked = |start: NaiveDate, end: NaiveDate| {
        all_promotions.iter().any(|p| {
            p.store_id == window.store_id
                && p.product == window.product
                && p.is_promotion()
                && p.overlaps_span(start, end)
        })
    };
    let price = regular_price
        .filter(|p| p.is_finite() && *p > 0.0)
        .unwrap_or_else(|| implied_regular_price(window));

    MATCH_WEEKS.iter().find_map(|&k| {
        let candidate = window.shifted(-7 * k);
        (!blocked(candidate.start_date, candidate.end_date)).then_some(PromotionWindow {
            promo_price: price,
            price_change: 0.0,
            channels: Channels::NONE,
            ..candidate
        })
    })
}

/// `promo_price / (1 - price_change)`.
pub fn implied_regular_price(window: &PromotionWindow) -> f64 {
    window.promo_price / (1.0 - window.price_change)
}

/// Modal unit price of each product in each store, over receipt lines
/// dated outside the product's promotions. Prices are compared in cents;
/// ties go to the lower price.
#[derive(Debug, Clone, Default)]
pub struct RegularPrices {
    prices: BTreeMap<(StoreId, ProductId), f64>,
}

impl RegularPrices {
    pub fn from_receipts(receipts: &[Receipt], promotions: &[PromotionWindow]) -> Self {
        struct Slot {
            promo_spans: Vec<(NaiveDate, NaiveDate)>,
            cents: BTreeMap<i64, u32>,
        }
        let mut slots: BTreeMap<(StoreId, ProductId), Slot> = BTreeMap::new();
        for p in promotions.iter().filter(|p| p.is_promotion()) {
            slots
                .entry((p.store_id.clone(), p.product.clone()))
                .or_insert_with(|| Slot { promo_spans: Vec::new(), cents: BTreeMap::new() })
                .promo_spans
                .push((p.start_date, p.end_date));
        }

        for r in receipts {
            for line in r.lines() {
                let k = (r.store_id.clone(), line.product.clone());
                let slot = slots
                    .entry(k)
                    .or_insert_with(|| Slot { promo_spans: Vec::new(), cents: BTreeMap::new() });
                if slot.promo_spans.iter().any(|&(s, e)| s <= r.date && r.date <= e) {
                    continue;
                }
                let cents = libm::round(line.line_value / line.quantity * 100.0) as i64;
                *slot.cents.entry(cents).or_insert(0) += 1;
            }
        }

        let prices = slots
            .into_iter()
            .filter_map(|(k, slot)| {
                let mut best: Option<(i64, u32)> = None;
                for (&c, &n) in &slot.cents {
                    if c > 0 && best.map_or(true, |(_, bn)| n > bn) {
                        best = Some((c, n));
                    }
                }
                best.map(|(c, _)| (k, c as f64 / 100.0))
            })
            .collect();
        Self { prices }
    }

    pub fn get(&self, store: &StoreId, product: &ProductId) -> Option<f64> {
        self.prices.get(&(store.clone(), product.clone())).copied()
    }
}

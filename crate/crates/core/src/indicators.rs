//! The six per-promotion efficiency indicators.
//!
//! With `D` the window length in days, `H` the receipts holding the product
//! and `A` all receipts of the store during the window:
//!
//! | indicator                 | value                                   |
//! |---------------------------|-----------------------------------------|
//! | `AVG_AMOUNT`              | product quantity over `H` / `D`         |
//! | `AVG_NB_RECEIPTS`         | `|H| / D`                               |
//! | `AVG_BASKET`              | mean receipt total over `H`             |
//! | `AVG_BASKET_WITHOUT_ITEM` | mean of total minus product value, `H`  |
//! | `AVG_NB_UNIQUE_ITEMS`     | mean count of distinct products, `H`    |
//! | `AVG_NB_CLIENTS`          | `|A| / D`                               |
//!
//! A receipt with several lines of the product counts once in `H`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;

use chrono::NaiveDate;
use thiserror::Error;

use crate::domain::{IndicatorKind, ProductId, PromotionWindow, Receipt, StoreId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    /// No receipt in the window holds the product, so the four basket
    /// means are undefined.
    #[error("no receipt in the window contains product {0}")]
    NoHitReceipts(ProductId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorValues {
    values: [f64; 6],
    pub n_days: u32,
    pub n_hit_receipts: u32,
    pub n_all_receipts: u32,
}

impl IndicatorValues {
    pub fn get(&self, kind: IndicatorKind) -> f64 {
        self.values[kind.index()]
    }

    /// Values in [`IndicatorKind::ALL`] order.
    pub fn as_array(&self) -> [f64; 6] {
        self.values
    }
}

/// Computes the indicators of `window`. Receipts outside the window's store
/// or dates are ignored, so callers may pass a superset.
pub fn compute_indicators<'a, I>(
    window: &PromotionWindow,
    receipts: I,
) -> Result<IndicatorValues, IndicatorError>
where
    I: IntoIterator<Item = &'a Receipt>,
{
    let n_days = window.duration_days();
    debug_assert!(n_days >= 1);

    let mut n_all = 0u32;
    let mut n_hit = 0u32;
    let mut quantity = 0.0;
    let mut basket = 0.0;
    let mut basket_without = 0.0;
    let mut unique = 0.0;
    let mut seen: Vec<&ProductId> = Vec::new();

    for r in receipts {
        if r.store_id != window.store_id || !window.contains(r.date) {
            continue;
        }
        n_all += 1;

        let mut hit = false;
        let mut product_qty = 0.0;
        let mut product_value = 0.0;
        for line in r.lines() {
            if line.product == window.product {
                hit = true;
                product_qty += line.quantity;
                product_value += line.line_value;
            }
        }
        if !hit {
            continue;
        }
        n_hit += 1;
        let total = r.total_value();
        quantity += product_qty;
        basket += total;
        basket_without += total - product_value;

        seen.clear();
        for line in r.lines() {
            if !seen.contains(&&line.product) {
                seen.push(&line.product);
            }
        }
        unique += seen.len() as f64;
    }

    if n_hit == 0 {
        return Err(IndicatorError::NoHitReceipts(window.product.clone()));
    }

    let days = n_days as f64;
    let hits = f64::from(n_hit);
    let mut values = [0.0; 6];
    values[IndicatorKind::AvgAmount.index()] = quantity / days;
    values[IndicatorKind::AvgNbReceipts.index()] = hits / days;
    values[IndicatorKind::AvgBasket.index()] = basket / hits;
    values[IndicatorKind::AvgBasketWithoutItem.index()] = basket_without / hits;
    values[IndicatorKind::AvgNbUniqueItems.index()] = unique / hits;
    values[IndicatorKind::AvgNbClients.index()] = f64::from(n_all) / days;

    Ok(IndicatorValues { values, n_days: n_days as u32, n_hit_receipts: n_hit, n_all_receipts: n_all })
}

/// Receipts grouped by store and day for window lookups.
#[derive(Debug)]
pub struct ReceiptIndex<'a> {
    receipts: &'a [Receipt],
    order: Vec<u32>,
    days: BTreeMap<(StoreId, NaiveDate), Range<usize>>,
}

impl<'a> ReceiptIndex<'a> {
    pub fn new(receipts: &'a [Receipt]) -> Self {
        let mut order: Vec<u32> = (0..receipts.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&receipts[a as usize], &receipts[b as usize]);
            (&ra.store_id, ra.date).cmp(&(&rb.store_id, rb.date))
        });

        let mut days = BTreeMap::new();
        let mut start = 0;
        while start < order.len() {
            let first = &receipts[order[start] as usize];
            let mut end = start + 1;
            while end < order.len() {
                let r = &receipts[order[end] as usize];
                if r.store_id != first.store_id || r.date != first.date {
                    break;
                }
                end += 1;
            }
            days.insert((first.store_id.clone(), first.date), start..end);
            start = end;
        }
        Self { receipts, order, days }
    }

    /// Receipts of `store` dated within `[start, end]`, in input order per day.
    pub fn span<'s>(
        &'s self,
        store: &StoreId,
        start: NaiveDate,
        end: NaiveDate,
    ) -> impl Iterator<Item = &'a Receipt> + 's {
        let lo = (store.clone(), start);
        let hi = (store.clone(), end);
        self.days
            .range(lo..=hi)
            .flat_map(move |(_, r)| self.order[r.clone()].iter())
            .map(move |&i| &self.receipts[i as usize])
    }

    pub fn window<'s>(&'s self, window: &PromotionWindow) -> impl Iterator<Item = &'a Receipt> + 's {
        self.span(&window.store_id, window.start_date, window.end_date)
    }

    pub fn receipts(&self) -> &'a [Receipt] {
        self.receipts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Channels, ReceiptLine};
    use alloc::vec;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, day).unwrap()
    }

    fn line(p: &str, q: f64, v: f64) -> ReceiptLine {
        ReceiptLine::new(p.into(), q, v).unwrap()
    }

    fn apple_fixture() -> (PromotionWindow, Vec<Receipt>) {
        let w = PromotionWindow::new("s".into(), "apple".into(), d(1), d(2), 1.0, 0.2, Channels::NONE)
            .unwrap();
        let receipts = vec![
            Receipt::new("R1", "s".into(), d(1), vec![line("apple", 2.0, 2.0), line("milk", 1.0, 2.0)])
                .unwrap(),
            Receipt::new("R2", "s".into(), d(1), vec![line("bread", 1.0, 1.5)]).unwrap(),
            Receipt::new("R3", "s".into(), d(2), vec![line("apple", 3.0, 3.0)]).unwrap(),
        ];
        (w, receipts)
    }

    #[test]
    fn apple_worked_example() {
        let (w, receipts) = apple_fixture();
        let v = compute_indicators(&w, &receipts).unwrap();
        assert_eq!(v.as_array(), [2.5, 1.0, 3.5, 1.0, 1.5, 1.5]);
        assert_eq!((v.n_days, v.n_hit_receipts, v.n_all_receipts), (2, 2, 3));
    }

    #[test]
    fn basket_with_small_promoted_share() {
        // 50 total, promoted product 10% of it.
        let w = PromotionWindow::new("s".into(), "x".into(), d(1), d(1), 5.0, 0.1, Channels::NONE)
            .unwrap();
        let r = Receipt::new("R", "s".into(), d(1), vec![line("x", 1.0, 5.0), line("y", 1.0, 45.0)])
            .unwrap();
        let v = compute_indicators(&w, [&r]).unwrap();
        assert_eq!(v.get(IndicatorKind::AvgBasket), 50.0);
        assert_eq!(v.get(IndicatorKind::AvgBasketWithoutItem), 45.0);
    }

    #[test]
    fn no_hit_receipts() {
        let (mut w, receipts) = apple_fixture();
        w.product = "pomelo".into();
        assert_eq!(
            compute_indicators(&w, &receipts),
            Err(IndicatorError::NoHitReceipts("pomelo".into()))
        );
    }

    #[test]
    fn repeated_product_lines_count_once() {
        let w = PromotionWindow::new("s".into(), "x".into(), d(1), d(1), 1.0, 0.1, Channels::NONE)
            .unwrap();
        let r = Receipt::new("R", "s".into(), d(1), vec![line("x", 1.0, 1.0), line("x", 2.0, 2.0)])
            .unwrap();
        let v = compute_indicators(&w, [&r]).unwrap();
        assert_eq!(v.get(IndicatorKind::AvgNbReceipts), 1.0);
        assert_eq!(v.get(IndicatorKind::AvgAmount), 3.0);
        assert_eq!(v.get(IndicatorKind::AvgNbUniqueItems), 1.0);
        assert_eq!(v.get(IndicatorKind::AvgBasketWithoutItem), 0.0);
    }

    #[test]
    fn index_returns_window_receipts() {
        let (w, mut receipts) = apple_fixture();
        receipts.push(Receipt::new("R4", "s".into(), d(3), vec![line("apple", 1.0, 1.0)]).unwrap());
        receipts.push(Receipt::new("R5", "t".into(), d(1), vec![line("apple", 1.0, 1.0)]).unwrap());
        let index = ReceiptIndex::new(&receipts);
        let ids: Vec<&str> = index.window(&w).map(|r| r.receipt_id.as_str()).collect();
        assert_eq!(ids, ["R1", "R2", "R3"]);
        assert_eq!(
            compute_indicators(&w, index.window(&w)).unwrap(),
            compute_indicators(&w, &receipts).unwrap()
        );
    }
}

//! Indicators against a brute-force enumerator that builds the hit set and
//! the window set explicitly.

use std::collections::BTreeSet;
use std::time::Instant;

use chrono::{Duration, NaiveDate};
use promocast_core::domain::{Channels, IndicatorKind, ProductId, PromotionWindow, Receipt, ReceiptLine, StoreId};
use promocast_core::indicators::{compute_indicators, IndicatorError, ReceiptIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn line(p: &str, q: f64, v: f64) -> ReceiptLine {
    ReceiptLine::new(p.into(), q, v).unwrap()
}

fn window(store: &str, product: &str, start: NaiveDate, days: i64) -> PromotionWindow {
    PromotionWindow::new(store.into(), product.into(), start, start + Duration::days(days - 1), 1.0, 0.2, Channels::NONE)
        .unwrap()
}

fn own<'r>(r: &'r Receipt, product: &'r ProductId) -> impl Iterator<Item = &'r ReceiptLine> {
    r.lines().iter().filter(move |l| &l.product == product)
}

/// The six values, computed set by set.
fn brute_force(w: &PromotionWindow, receipts: &[Receipt]) -> Option<[f64; 6]> {
    let a: Vec<&Receipt> = receipts
        .iter()
        .filter(|r| r.store_id == w.store_id && r.date >= w.start_date && r.date <= w.end_date)
        .collect();
    let h: Vec<&Receipt> = a.iter().copied().filter(|r| r.lines().iter().any(|l| l.product == w.product)).collect();
    if h.is_empty() {
        return None;
    }
    let days = ((w.end_date - w.start_date).num_days() + 1) as f64;
    let n = h.len() as f64;
    let qty: f64 = h.iter().map(|r| own(r, &w.product).map(|l| l.quantity).sum::<f64>()).sum();
    let totals: f64 = h.iter().map(|r| r.lines().iter().map(|l| l.line_value).sum::<f64>()).sum();
    let without: f64 = h
        .iter()
        .map(|r| r.lines().iter().map(|l| l.line_value).sum::<f64>() - own(r, &w.product).map(|l| l.line_value).sum::<f64>())
        .sum();
    let unique: f64 = h.iter().map(|r| r.lines().iter().map(|l| &l.product).collect::<BTreeSet<_>>().len() as f64).sum();
    Some([qty / days, n / days, totals / n, without / n, unique / n, a.len() as f64 / days])
}

#[test]
fn worked_apple_example() {
    let day1 = d(2018, 3, 5);
    let day2 = d(2018, 3, 6);
    let receipts = vec![
        Receipt::new("R1", "1".into(), day1, vec![line("apple", 2.0, 2.0), line("milk", 1.0, 2.0)]).unwrap(),
        Receipt::new("R2", "1".into(), day1, vec![line("bread", 1.0, 1.5)]).unwrap(),
        Receipt::new("R3", "1".into(), day2, vec![line("apple", 3.0, 3.0)]).unwrap(),
    ];
    let v = compute_indicators(&window("1", "apple", day1, 2), &receipts).unwrap();
    assert_eq!(v.as_array(), [2.5, 1.0, 3.5, 1.0, 1.5, 1.5]);
    assert_eq!((v.n_days, v.n_hit_receipts, v.n_all_receipts), (2, 2, 3));
}

#[test]
fn basket_without_item_keeps_the_rest() {
    let day = d(2018, 6, 1);
    let receipts = vec![Receipt::new("R", "1".into(), day, vec![line("cheese", 1.0, 5.0), line("wine", 1.0, 45.0)]).unwrap()];
    let v = compute_indicators(&window("1", "cheese", day, 1), &receipts).unwrap();
    assert_eq!(v.get(IndicatorKind::AvgBasket), 50.0);
    assert_eq!(v.get(IndicatorKind::AvgBasketWithoutItem), 45.0);
}

#[test]
fn no_hit_window() {
    let day = d(2018, 6, 1);
    let receipts = vec![Receipt::new("R", "1".into(), day, vec![line("wine", 1.0, 9.0)]).unwrap()];
    assert_eq!(
        compute_indicators(&window("1", "cheese", day, 3), &receipts),
        Err(IndicatorError::NoHitReceipts(ProductId::new("cheese")))
    );
}

/// Random receipts whose quantities and values are multiples of 1/4, so
/// every sum is exact in any order.
fn fixture(rng: &mut ChaCha8Rng) -> (Vec<Receipt>, PromotionWindow) {
    let products = ["apple", "pear", "milk", "bread", "eggs", "tea"];
    let first = d(2017, 1, 1);
    let n = rng.random_range(1..=500);
    let receipts = (0..n)
        .map(|i| {
            let store = if rng.random_bool(0.8) { "1" } else { "2" };
            let date = first + Duration::days(rng.random_range(0..14));
            let lines = (0..rng.random_range(1..=6))
                .map(|_| {
                    let p = products[rng.random_range(0..products.len())];
                    line(p, f64::from(rng.random_range(1..=12)) / 4.0, f64::from(rng.random_range(0..=80)) / 4.0)
                })
                .collect();
            Receipt::new(&format!("r{i}"), StoreId::new(store), date, lines).unwrap()
        })
        .collect();
    let start = first + Duration::days(rng.random_range(0..10));
    let w = window("1", products[rng.random_range(0..3)], start, rng.random_range(1..=7));
    (receipts, w)
}

#[test]
fn matches_brute_force_on_random_fixtures() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..25 {
        let (receipts, w) = fixture(&mut rng);
        let index = ReceiptIndex::new(&receipts);
        match brute_force(&w, &receipts) {
            Some(expected) => {
                assert_eq!(compute_indicators(&w, &receipts).unwrap().as_array(), expected);
                assert_eq!(compute_indicators(&w, index.window(&w)).unwrap().as_array(), expected);
                checked += 1;
            }
            None => assert!(compute_indicators(&w, &receipts).is_err()),
        }
    }
    assert!(checked >= 20, "only {checked} fixtures had hits");
    assert!(t.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn duplicating_receipts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (receipts, w) = fixture(&mut rng);
        let Ok(once) = compute_indicators(&w, &receipts) else { continue };
        let twice: Vec<Receipt> = receipts.iter().chain(&receipts).cloned().collect();
        let twice = compute_indicators(&w, &twice).unwrap();
        for k in IndicatorKind::ALL {
            let factor = match k {
                IndicatorKind::AvgAmount | IndicatorKind::AvgNbReceipts | IndicatorKind::AvgNbClients => 2.0,
                _ => 1.0,
            };
            assert_eq!(twice.get(k), once.get(k) * factor, "{k}");
        }
    }
}

#[test]
fn scaling_line_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let (receipts, w) = fixture(&mut rng);
        let Ok(base) = compute_indicators(&w, &receipts) else { continue };
        let scaled: Vec<Receipt> = receipts
            .iter()
            .map(|r| {
                let lines = r.lines().iter().map(|l| line(l.product.as_str(), l.quantity, l.line_value * 2.0)).collect();
                Receipt::new(&r.receipt_id, r.store_id.clone(), r.date, lines).unwrap()
            })
            .collect();
        let s = compute_indicators(&w, &scaled).unwrap();
        for k in IndicatorKind::ALL {
            let factor = match k {
                IndicatorKind::AvgBasket | IndicatorKind::AvgBasketWithoutItem => 2.0,
                _ => 1.0,
            };
            assert_eq!(s.get(k), base.get(k) * factor, "{k}");
        }
    }
}

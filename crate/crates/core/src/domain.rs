//! Core data model: products, receipts, promotion windows and stores.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use chrono::{Datelike, Duration, NaiveDate};
use thiserror::Error;

/// Longest promotion accepted, in days.
pub const MAX_PROMOTION_DAYS: i64 = 7;

/// Store-surroundings attributes every [`StoreProfile`] must carry.
pub const REQUIRED_STORE_ATTRIBUTES: [&str; 12] = [
    "inhabitants_1km",
    "inhabitants_per_km2",
    "inhabitants_5min_drive",
    "inhabitants_10min_drive",
    "inhabitants_500m",
    "unemployment_rate",
    "cars_per_1000",
    "avg_monthly_salary",
    "tourism_ratio",
    "n_competitors",
    "competitor_distance",
    "purchasing_rate",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("unknown {kind} reference {id}")]
    UnknownReference { kind: &'static str, id: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(id: &str) -> Self {
                Self(Arc::from(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self::new(id)
            }
        }
    };
}

id_type!(
    /// Opaque product identifier. Clones share one allocation.
    ProductId
);
id_type!(
    /// Opaque store identifier. Clones share one allocation.
    StoreId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SoldBy {
    Unit,
    Weight,
}

impl SoldBy {
    pub fn as_str(self) -> &'static str {
        match self {
            SoldBy::Unit => "unit",
            SoldBy::Weight => "weight",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit" => Some(SoldBy::Unit),
            "weight" => Some(SoldBy::Weight),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductRef {
    pub product_id: ProductId,
    pub group: String,
    pub sold_by: SoldBy,
}

impl ProductRef {
    pub fn new(product_id: &str, group: &str, sold_by: SoldBy) -> Result<Self, DomainError> {
        if product_id.is_empty() {
            return Err(DomainError::InvariantViolation("empty product_id".into()));
        }
        if group.is_empty() {
            return Err(DomainError::InvariantViolation(format!(
                "product {product_id} has an empty group"
            )));
        }
        Ok(Self { product_id: ProductId::new(product_id), group: group.to_string(), sold_by })
    }
}

/// Product catalog with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    products: Vec<ProductRef>,
    by_id: BTreeMap<ProductId, usize>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_products(products: Vec<ProductRef>) -> Result<Self, DomainError> {
        let mut catalog = Self::new();
        for p in products {
            catalog.insert(p)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, product: ProductRef) -> Result<(), DomainError> {
        if self.by_id.contains_key(&product.product_id) {
            return Err(DomainError::DuplicateId(product.product_id.to_string()));
        }
        self.by_id.insert(product.product_id.clone(), self.products.len());
        self.products.push(product);
        Ok(())
    }

    pub fn get(&self, id: &ProductId) -> Option<&ProductRef> {
        self.by_id.get(id).map(|&i| &self.products[i])
    }

    pub fn get_str(&self, id: &str) -> Option<&ProductRef> {
        self.get(&ProductId::new(id))
    }

    pub fn group_of(&self, id: &ProductId) -> Option<&str> {
        self.get(id).map(|p| p.group.as_str())
    }

    pub fn products(&self) -> &[ProductRef] {
        &self.products
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// Distinct groups in first-seen order.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.products {
            if !out.contains(&p.group) {
                out.push(p.group.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiptLine {
    pub product: ProductId,
    /// Units or kilograms, depending on the product.
    pub quantity: f64,
    pub line_value: f64,
}

impl ReceiptLine {
    pub fn new(product: ProductId, quantity: f64, line_value: f64) -> Result<Self, DomainError> {
        if !(quantity.is_finite() && quantity > 0.0) {
            return Err(DomainError::InvariantViolation(format!(
                "line quantity must be positive, got {quantity}"
            )));
        }
        if !(line_value.is_finite() && line_value >= 0.0) {
            return Err(DomainError::InvariantViolation(format!(
                "line value must be non-negative, got {line_value}"
            )));
        }
        Ok(Self { product, quantity, line_value })
    }
}

/// One transaction. Always holds at least one line.
#[derive(Debug, Clone, PartialEq)]
pub struct Receipt {
    pub receipt_id: String,
    pub store_id: StoreId,
    pub date: NaiveDate,
    lines: Vec<ReceiptLine>,
}

impl Receipt {
    pub fn new(
        receipt_id: &str,
        store_id: StoreId,
        date: NaiveDate,
        lines: Vec<ReceiptLine>,
    ) -> Result<Self, DomainError> {
        if lines.is_empty() {
            return Err(DomainError::InvariantViolation(format!(
                "receipt {receipt_id} has no lines"
            )));
        }
        Ok(Self { receipt_id: receipt_id.to_string(), store_id, date, lines })
    }

    pub fn lines(&self) -> &[ReceiptLine] {
        &self.lines
    }

    pub fn total_value(&self) -> f64 {
        self.lines.iter().map(|l| l.line_value).sum()
    }

    pub fn contains(&self, product: &ProductId) -> bool {
        self.lines.iter().any(|l| &l.product == product)
    }
}

/// Advertisement channels of a promotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Channels {
    pub tv: bool,
    pub radio: bool,
    pub internet: bool,
    pub other: bool,
}

impl Channels {
    pub const NAMES: [&'static str; 4] = ["tv", "radio", "internet", "other"];

    pub const NONE: Channels = Channels { tv: false, radio: false, internet: false, other: false };

    pub fn from_array(flags: [bool; 4]) -> Self {
        Self { tv: flags[0], radio: flags[1], internet: flags[2], other: flags[3] }
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.tv, self.radio, self.internet, self.other]
    }

    /// Advertised on TV, radio or the internet.
    pub fn in_media(&self) -> bool {
        self.tv || self.radio || self.internet
    }

    pub fn any(&self) -> bool {
        self.in_media() || self.other
    }
}

/// One promotion of one product in one store. A window with
/// `price_change == 0` describes a period without promotion.
#[derive(Debug, Clone, PartialEq)]
pub struct PromotionWindow {
    pub store_id: StoreId,
    pub product: ProductId,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Price per sold unit or kilogram during the window.
    pub promo_price: f64,
    /// Relative price reduction, 0.2 means 20% off.
    pub price_change: f64,
    pub channels: Channels,
}

impl PromotionWindow {
    pub fn new(
        store_id: StoreId,
        product: ProductId,
        start_date: NaiveDate,
        end_date: NaiveDate,
        promo_price: f64,
        price_change: f64,
        channels: Channels,
    ) -> Result<Self, DomainError> {
        let w = Self { store_id, product, start_date, end_date, promo_price, price_change, channels };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.end_date < self.start_date {
            return Err(DomainError::InvariantViolation(format!(
                "promotion ends ({}) before it starts ({})",
                self.end_date, self.start_date
            )));
        }
        let days = self.duration_days();
        if days > MAX_PROMOTION_DAYS {
            return Err(DomainError::InvariantViolation(format!(
                "promotion lasts {days} days, longer than {MAX_PROMOTION_DAYS}"
            )));
        }
        if !(self.price_change.is_finite() && (0.0..1.0).contains(&self.price_change)) {
            return Err(DomainError::InvariantViolation(format!(
                "price_change {} outside [0, 1)",
                self.price_change
            )));
        }
        if !(self.promo_price.is_finite() && self.promo_price > 0.0) {
            return Err(DomainError::InvariantViolation(format!(
                "promo_price must be positive, got {}",
                self.promo_price
            )));
        }
        Ok(())
    }

    /// Inclusive length in calendar days.
    pub fn duration_days(&self) -> i64 {
        (self.end_date - self.start_date).num_days() + 1
    }

    pub fn is_promotion(&self) -> bool {
        self.price_change > 0.0
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start_date <= date && date <= self.end_date
    }

    /// True when the two inclusive date spans share at least one day.
    pub fn overlaps_span(&self, start: NaiveDate, end: NaiveDate) -> bool {
        self.start_date <= end && start <= self.end_date
    }

    pub fn overlaps(&self, other: &PromotionWindow) -> bool {
        self.overlaps_span(other.start_date, other.end_date)
    }

    /// The same window moved by `days` (negative moves back in time).
    pub fn shifted(&self, days: i64) -> Self {
        Self {
            start_date: self.start_date + Duration::days(days),
            end_date: self.end_date + Duration::days(days),
            ..self.clone()
        }
    }

    pub fn start_year(&self) -> i32 {
        self.start_date.year()
    }
}

/// A store and its surroundings, as ordered named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreProfile {
    pub store_id: StoreId,
    attributes: Vec<(String, f64)>,
}

impl StoreProfile {
    /// Every attribute must be finite and non-negative, and the
    /// [`REQUIRED_STORE_ATTRIBUTES`] must all be present.
    pub fn new(store_id: StoreId, attributes: Vec<(String, f64)>) -> Result<Self, DomainError> {
        for (name, value) in &attributes {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(DomainError::InvariantViolation(format!(
                    "store {store_id}: attribute {name} = {value} must be finite and non-negative"
                )));
            }
        }
        for required in REQUIRED_STORE_ATTRIBUTES {
            if !attributes.iter().any(|(n, _)| n == required) {
                return Err(DomainError::InvariantViolation(format!(
                    "store {store_id}: missing attribute {required}"
                )));
            }
        }
        for (i, (name, _)) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|(n, _)| n == name) {
                return Err(DomainError::InvariantViolation(format!(
                    "store {store_id}: attribute {name} given twice"
                )));
            }
        }
        Ok(Self { store_id, attributes })
    }

    pub fn attributes(&self) -> &[(String, f64)] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<f64> {
        self.attributes.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|(n, _)| n.as_str())
    }
}

/// The six promotion-efficiency indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndicatorKind {
    AvgAmount,
    AvgNbReceipts,
    AvgBasket,
    AvgBasketWithoutItem,
    AvgNbUniqueItems,
    AvgNbClients,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 6] = [
        IndicatorKind::AvgAmount,
        IndicatorKind::AvgNbReceipts,
        IndicatorKind::AvgBasket,
        IndicatorKind::AvgBasketWithoutItem,
        IndicatorKind::AvgNbUniqueItems,
        IndicatorKind::AvgNbClients,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Machine name, e.g. `AVG_NB_RECEIPTS`.
    pub fn name(self) -> &'static str {
        match self {
            IndicatorKind::AvgAmount => "AVG_AMOUNT",
            IndicatorKind::AvgNbReceipts => "AVG_NB_RECEIPTS",
            IndicatorKind::AvgBasket => "AVG_BASKET",
            IndicatorKind::AvgBasketWithoutItem => "AVG_BASKET_WITHOUT_ITEM",
            IndicatorKind::AvgNbUniqueItems => "AVG_NB_UNIQUE_ITEMS",
            IndicatorKind::AvgNbClients => "AVG_NB_CLIENTS",
        }
    }

    /// Report label, e.g. `AVG. NB. RECEIPTS`.
    pub fn label(self) -> &'static str {
        match self {
            IndicatorKind::AvgAmount => "AVG. AMOUNT",
            IndicatorKind::AvgNbReceipts => "AVG. NB. RECEIPTS",
            IndicatorKind::AvgBasket => "AVG. BASKET",
            IndicatorKind::AvgBasketWithoutItem => "AVG. BASKET WITHOUT ITEM",
            IndicatorKind::AvgNbUniqueItems => "AVG. NB. UNIQUE ITEMS",
            IndicatorKind::AvgNbClients => "AVG. NB. CLIENTS",
        }
    }

    /// Accepts the machine name or the report label, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s) || k.label().eq_ignore_ascii_case(s))
    }

    /// Targets of these two kinds are z-scored per product and store.
    pub fn is_standardized(self) -> bool {
        matches!(self, IndicatorKind::AvgAmount | IndicatorKind::AvgNbReceipts)
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn window(start: NaiveDate, end: NaiveDate) -> Result<PromotionWindow, DomainError> {
        PromotionWindow::new(
            "10".into(),
            "pears".into(),
            start,
            end,
            2.5,
            0.2,
            Channels::NONE,
        )
    }

    #[test]
    fn four_day_promotion_is_accepted() {
        let w = window(d(2018, 1, 22), d(2018, 1, 25)).unwrap();
        assert_eq!(w.duration_days(), 4);
    }

    #[test]
    fn nine_day_promotion_is_rejected() {
        let err = window(d(2018, 1, 22), d(2018, 1, 30)).unwrap_err();
        assert!(matches!(err, DomainError::InvariantViolation(_)));
        assert!(window(d(2018, 1, 22), d(2018, 1, 28)).is_ok());
    }

    #[test]
    fn receipt_without_lines_is_rejected() {
        let err = Receipt::new("r1", "10".into(), d(2018, 1, 22), Vec::new()).unwrap_err();
        assert!(matches!(err, DomainError::InvariantViolation(_)));
    }

    #[test]
    fn catalog_rejects_duplicates_and_empty_groups() {
        let p1 = ProductRef::new("P1", "fruits", SoldBy::Weight).unwrap();
        let p1b = ProductRef::new("P1", "dairy", SoldBy::Unit).unwrap();
        assert_eq!(
            Catalog::from_products(alloc::vec![p1, p1b]).unwrap_err(),
            DomainError::DuplicateId("P1".into())
        );
        assert!(ProductRef::new("P2", "", SoldBy::Unit).is_err());
    }

    #[test]
    fn six_indicators_two_standardized() {
        assert_eq!(IndicatorKind::ALL.len(), 6);
        let standardized: Vec<_> =
            IndicatorKind::ALL.into_iter().filter(|k| k.is_standardized()).collect();
        assert_eq!(standardized, [IndicatorKind::AvgAmount, IndicatorKind::AvgNbReceipts]);
        for k in IndicatorKind::ALL {
            assert_eq!(IndicatorKind::parse(k.name()), Some(k));
            assert_eq!(IndicatorKind::parse(k.label()), Some(k));
        }
    }

    #[test]
    fn store_profile_requires_attributes() {
        let attrs: Vec<(String, f64)> =
            REQUIRED_STORE_ATTRIBUTES.iter().map(|n| (n.to_string(), 1.0)).collect();
        assert!(StoreProfile::new("1".into(), attrs.clone()).is_ok());
        assert!(StoreProfile::new("1".into(), attrs[1..].to_vec()).is_err());
        let mut bad = attrs;
        bad[0].1 = f64::NAN;
        assert!(StoreProfile::new("1".into(), bad).is_err());
    }
}

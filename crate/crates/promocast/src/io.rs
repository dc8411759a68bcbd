//! CSV files for catalog, receipts, promotions and stores.
//!
//! Every loader reads a header line and then one record per row. Rows that
//! fail validation are collected as [`Rejected`] diagnostics; the `load_*`
//! wrappers turn the first of them into an error instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use promocast_core::domain::{
    Catalog, Channels, DomainError, ProductId, ProductRef, PromotionWindow, Receipt, ReceiptLine, SoldBy, StoreId,
    StoreProfile,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {error}")]
    Rejected { path: PathBuf, line: u64, error: DomainError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    CsvWrite(#[from] csv::Error),
}

/// A row that did not make it into the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    /// 1-based line in the file; the header is line 1.
    pub line: u64,
    pub error: DomainError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub rejected: Vec<Rejected>,
    /// Data rows read, accepted or not.
    pub rows: usize,
}

impl<T> Ingested<T> {
    fn strict(self, path: &Path) -> Result<Vec<T>, IoError> {
        match self.rejected.into_iter().next() {
            Some(r) => Err(IoError::Rejected { path: path.to_path_buf(), line: r.line, error: r.error }),
            None => Ok(self.records),
        }
    }
}

/// Known products and stores for reference checks. `None` skips a check.
#[derive(Debug, Clone, Copy, Default)]
pub struct Refs<'a> {
    pub catalog: Option<&'a Catalog>,
    pub stores: Option<&'a [StoreProfile]>,
}

impl Refs<'_> {
    fn check(&self, store: &StoreId, product: Option<&ProductId>) -> Result<(), DomainError> {
        if let Some(stores) = self.stores {
            if !stores.iter().any(|s| &s.store_id == store) {
                return Err(DomainError::UnknownReference { kind: "store", id: store.to_string() });
            }
        }
        if let (Some(catalog), Some(p)) = (self.catalog, product) {
            if catalog.get(p).is_none() {
                return Err(DomainError::UnknownReference { kind: "product", id: p.to_string() });
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Open { path: path.to_path_buf(), source })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn malformed(line: u64, reason: impl ToString) -> DomainError {
    DomainError::MalformedRow { line: line as usize, reason: reason.to_string() }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

fn parse_flag(s: &str, name: &str) -> Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("{name} must be 0 or 1, got {s:?}")),
    }
}

/// Runs `parse` on every data row, collecting rejections.
fn ingest<R, T, F>(input: R, mut parse: F) -> Result<Ingested<T>, csv::Error>
where
    R: Read,
    F: FnMut(&csv::StringRecord, &csv::StringRecord, u64) -> Result<T, DomainError>,
{
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let mut out = Ingested { records: Vec::new(), rejected: Vec::new(), rows: 0 };
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rows += 1;
                out.rejected.push(Rejected { line, error: malformed(line, e) });
                continue;
            }
        };
        out.rows += 1;
        let line = line_of(&record);
        match parse(&headers, &record, line) {
            Ok(v) => out.records.push(v),
            Err(error) => out.rejected.push(Rejected { line, error }),
        }
    }
    Ok(out)
}

fn deserialize<'de, T: Deserialize<'de>>(
    record: &'de csv::StringRecord,
    headers: &'de csv::StringRecord,
    line: u64,
) -> Result<T, DomainError> {
    record.deserialize(Some(headers)).map_err(|e| malformed(line, e))
}

#[derive(Deserialize)]
struct CatalogRow {
    product_id: String,
    group: String,
    sold_by: String,
}

pub fn read_catalog<R: Read>(input: R) -> Result<Ingested<ProductRef>, csv::Error> {
    let mut seen = BTreeSet::new();
    ingest(input, |headers, record, line| {
        let row: CatalogRow = deserialize(record, headers, line)?;
        let sold_by = SoldBy::parse(&row.sold_by)
            .ok_or_else(|| malformed(line, format!("sold_by must be unit or weight, got {:?}", row.sold_by)))?;
        if row.group.is_empty() {
            return Err(malformed(line, "empty group"));
        }
        let product = ProductRef::new(&row.product_id, &row.group, sold_by)?;
        if !seen.insert(row.product_id.clone()) {
            return Err(DomainError::DuplicateId(row.product_id));
        }
        Ok(product)
    })
}

pub fn load_catalog(path: &Path) -> Result<Catalog, IoError> {
    let products = read_catalog(open(path)?)
        .map_err(|source| IoError::Csv { path: path.into(), source })?
        .strict(path)?;
    Catalog::from_products(products).map_err(|error| IoError::Rejected { path: path.into(), line: 0, error })
}

#[derive(Deserialize)]
struct ReceiptRow {
    receipt_id: String,
    store_id: String,
    date: String,
    product_id: String,
    quantity: f64,
    line_value: f64,
}

/// Reads receipt lines. Rows sharing a `receipt_id` form one receipt, which
/// must keep one store and date. Receipts come out in order of first row.
pub fn read_receipts<R: Read>(input: R, refs: Refs<'_>) -> Result<Ingested<Receipt>, csv::Error> {
    struct Pending {
        store: StoreId,
        date: NaiveDate,
        lines: Vec<ReceiptLine>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut pending: BTreeMap<String, Pending> = BTreeMap::new();
    let lines = ingest(input, |headers, record, line| {
        let row: ReceiptRow = deserialize(record, headers, line)?;
        let date = parse_date(&row.date).map_err(|e| malformed(line, e))?;
        let store = StoreId::new(&row.store_id);
        let product = ProductId::new(&row.product_id);
        refs.check(&store, Some(&product))?;
        let receipt_line = ReceiptLine::new(product, row.quantity, row.line_value)?;
        match pending.get_mut(&row.receipt_id) {
            Some(p) if p.store != store || p.date != date => Err(DomainError::InvariantViolation(format!(
                "receipt {} already seen in store {} on {}",
                row.receipt_id, p.store, p.date
            ))),
            Some(p) => {
                p.lines.push(receipt_line);
                Ok(())
            }
            None => {
                order.push(row.receipt_id.clone());
                pending.insert(row.receipt_id, Pending { store, date, lines: vec![receipt_line] });
                Ok(())
            }
        }
    })?;
    let mut records = Vec::with_capacity(order.len());
    for id in order {
        let p = pending.remove(&id).expect("pending receipt");
        records.push(Receipt::new(&id, p.store, p.date, p.lines).expect("non-empty lines"));
    }
    Ok(Ingested { records, rejected: lines.rejected, rows: lines.rows })
}

pub fn load_receipts(path: &Path, refs: Refs<'_>) -> Result<Vec<Receipt>, IoError> {
    read_receipts(open(path)?, refs)
        .map_err(|source| IoError::Csv { path: path.into(), source })?
        .strict(path)
}

#[derive(Deserialize)]
struct PromotionRow {
    store_id: String,
    product_id: String,
    start_date: String,
    end_date: String,
    promo_price: f64,
    price_change: f64,
    tv: String,
    radio: String,
    internet: String,
    other: String,
}

pub fn read_promotions<R: Read>(input: R, refs: Refs<'_>) -> Result<Ingested<PromotionWindow>, csv::Error> {
    ingest(input, |headers, record, line| {
        let row: PromotionRow = deserialize(record, headers, line)?;
        let bad = |e: String| malformed(line, e);
        let start = parse_date(&row.start_date).map_err(bad)?;
        let end = parse_date(&row.end_date).map_err(bad)?;
        let channels = Channels {
            tv: parse_flag(&row.tv, "tv").map_err(bad)?,
            radio: parse_flag(&row.radio, "radio").map_err(bad)?,
            internet: parse_flag(&row.internet, "internet").map_err(bad)?,
            other: parse_flag(&row.other, "other").map_err(bad)?,
        };
        let store = StoreId::new(&row.store_id);
        let product = ProductId::new(&row.product_id);
        refs.check(&store, Some(&product))?;
        PromotionWindow::new(store, product, start, end, row.promo_price, row.price_change, channels)
    })
}

pub fn load_promotions(path: &Path, refs: Refs<'_>) -> Result<Vec<PromotionWindow>, IoError> {
    read_promotions(open(path)?, refs)
        .map_err(|source| IoError::Csv { path: path.into(), source })?
        .strict(path)
}

/// Reads store profiles: `store_id`, then one numeric column per attribute.
pub fn read_stores<R: Read>(input: R) -> Result<Ingested<StoreProfile>, csv::Error> {
    let mut seen = BTreeSet::new();
    ingest(input, |headers, record, line| {
        if headers.get(0) != Some("store_id") {
            return Err(malformed(line, "first column must be store_id"));
        }
        if record.len() != headers.len() {
            return Err(malformed(line, format!("{} fields, header has {}", record.len(), headers.len())));
        }
        let id = record.get(0).unwrap_or_default();
        if id.is_empty() {
            return Err(malformed(line, "empty store_id"));
        }
        let mut attrs = Vec::with_capacity(headers.len() - 1);
        for (name, value) in headers.iter().zip(record.iter()).skip(1) {
            let v: f64 = value.parse().map_err(|_| malformed(line, format!("{name}: not a number: {value:?}")))?;
            attrs.push((name.to_string(), v));
        }
        let store = StoreProfile::new(StoreId::new(id), attrs)?;
        if !seen.insert(id.to_string()) {
            return Err(DomainError::DuplicateId(id.to_string()));
        }
        Ok(store)
    })
}

pub fn load_stores(path: &Path) -> Result<Vec<StoreProfile>, IoError> {
    read_stores(open(path)?)
        .map_err(|source| IoError::Csv { path: path.into(), source })?
        .strict(path)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_catalog<W: Write>(out: W, catalog: &Catalog) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_id", "group", "sold_by"])?;
    for p in catalog.products() {
        w.write_record([p.product_id.as_str(), &p.group, p.sold_by.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_receipts<W: Write>(out: W, receipts: &[Receipt]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["receipt_id", "store_id", "date", "product_id", "quantity", "line_value"])?;
    for r in receipts {
        let date = r.date.to_string();
        for l in r.lines() {
            w.write_record([
                r.receipt_id.as_str(),
                r.store_id.as_str(),
                &date,
                l.product.as_str(),
                &l.quantity.to_string(),
                &l.line_value.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_promotions<W: Write>(out: W, promotions: &[PromotionWindow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "store_id",
        "product_id",
        "start_date",
        "end_date",
        "promo_price",
        "price_change",
        "tv",
        "radio",
        "internet",
        "other",
    ])?;
    for p in promotions {
        let c = p.channels;
        w.write_record([
            p.store_id.as_str(),
            p.product.as_str(),
            &p.start_date.to_string(),
            &p.end_date.to_string(),
            &p.promo_price.to_string(),
            &p.price_change.to_string(),
            flag(c.tv),
            flag(c.radio),
            flag(c.internet),
            flag(c.other),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes stores with the first store's attribute columns.
pub fn write_stores<W: Write>(out: W, stores: &[StoreProfile]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<&str> = stores.first().map(|s| s.attribute_names().collect()).unwrap_or_default();
    let mut header = vec!["store_id"];
    header.extend(&names);
    w.write_record(&header)?;
    for s in stores {
        let mut row = vec![s.store_id.to_string()];
        for n in &names {
            row.push(s.attribute(n).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The four input files of one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub catalog: PathBuf,
    pub receipts: PathBuf,
    pub promotions: PathBuf,
    pub stores: PathBuf,
}

impl DataPaths {
    /// `catalog.csv`, `receipts.csv`, `promotions.csv` and `stores.csv` in `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            catalog: dir.join("catalog.csv"),
            receipts: dir.join("receipts.csv"),
            promotions: dir.join("promotions.csv"),
            stores: dir.join("stores.csv"),
        }
    }
}

/// Loaded and cross-checked input data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub catalog: Catalog,
    pub stores: Vec<StoreProfile>,
    pub promotions: Vec<PromotionWindow>,
    pub receipts: Vec<Receipt>,
}

pub fn load_dataset(paths: &DataPaths) -> Result<Dataset, IoError> {
    let catalog = load_catalog(&paths.catalog)?;
    let stores = load_stores(&paths.stores)?;
    let refs = Refs { catalog: Some(&catalog), stores: Some(&stores) };
    let promotions = load_promotions(&paths.promotions, refs)?;
    let receipts = load_receipts(&paths.receipts, refs)?;
    Ok(Dataset { catalog, stores, promotions, receipts })
}

pub fn write_dataset(paths: &DataPaths, data: &Dataset) -> Result<(), IoError> {
    let create = |p: &Path| -> Result<std::io::BufWriter<File>, IoError> {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(std::io::BufWriter::new(File::create(p)?))
    };
    write_catalog(create(&paths.catalog)?, &data.catalog)?;
    write_stores(create(&paths.stores)?, &data.stores)?;
    write_promotions(create(&paths.promotions)?, &data.promotions)?;
    write_receipts(create(&paths.receipts)?, &data.receipts)?;
    Ok(())
}

//! The pipeline stages behind the CLI subcommands.
//!
//! Every per-model seed comes from the run seed and a label naming the
//! stage, group and indicator, so stages can be re-run on their own:
//! `train/<group>/<INDICATOR>` seeds row subsampling of the models and
//! `hpo/<group>/<INDICATOR>` seeds the choice of parameter orders.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use promocast_core::dataprep::{assemble_datasets, Assembly, DatasetSplit, PrepError};
use promocast_core::domain::{IndicatorKind, ProductId, StoreId};
use promocast_core::gbt::{Booster, FeatureVector, GbtError, HyperParams};
use promocast_core::hpo::{build_grids, default_params, optimize, GbtObjective, HpoConfig, HpoError, HpoResult};
use promocast_core::indicators::{compute_indicators, ReceiptIndex};
use promocast_core::metrics::{evaluate, EvalReport, MetricsError};
use promocast_core::seed;
use promocast_core::synth::{generate, SynthError};
use thiserror::Error;

use crate::config::RunConfig;
use crate::io::{load_dataset, write_dataset, Dataset, IoError};
use crate::model_file::{self, ModelFileError, StoredModel};
use crate::models::{self, stats_csv, stats_path, stem, LoadedModel, ModelError};
use crate::report::{self, DiffRow, MetricRow};
use crate::write_atomic;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error(transparent)]
    Hpo(#[from] HpoError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    write_atomic(path, text.as_bytes()).map_err(|source| PipelineError::Write { path: path.to_path_buf(), source })
}

fn label(stage: &str, group: &str, kind: IndicatorKind) -> String {
    format!("{stage}/{group}/{}", kind.name())
}

pub fn train_seed(run_seed: u64, group: &str, kind: IndicatorKind) -> u64 {
    seed::derive(run_seed, &label("train", group, kind))
}

pub fn hpo_seed(run_seed: u64, group: &str, kind: IndicatorKind) -> u64 {
    seed::derive(run_seed, &label("hpo", group, kind))
}

/// Counts written by [`cmd_synth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSummary {
    pub products: usize,
    pub stores: usize,
    pub promotions: usize,
    pub receipts: usize,
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary, PipelineError> {
    let data = generate(&cfg.synth_config())?;
    let summary = SynthSummary {
        products: data.catalog.len(),
        stores: data.stores.len(),
        promotions: data.promotions.len(),
        receipts: data.receipts.len(),
    };
    let dataset = Dataset { catalog: data.catalog, stores: data.stores, promotions: data.promotions, receipts: data.receipts };
    write_dataset(&cfg.data_paths(), &dataset)?;
    info!("synth: {summary:?}");
    Ok(summary)
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Dataset, PipelineError> {
    let paths = cfg.data_paths();
    info!("loading {}", paths.receipts.display());
    Ok(load_dataset(&paths)?)
}

pub fn assemble(cfg: &RunConfig, data: &Dataset) -> Result<Assembly, PipelineError> {
    let a = assemble_datasets(&data.promotions, &data.receipts, &data.stores, &data.catalog, &cfg.prep)?;
    info!("assembled {} splits: {:?}", a.splits.len(), a.summary);
    Ok(a)
}

fn dataset_csv(split: &DatasetSplit) -> String {
    let mut s = String::from("part,store_id,product_id,start_date,is_promotion");
    for n in &split.feature_names {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",target,raw_target\n");
    for (part, rows) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        for r in rows {
            let _ = write!(s, "{part},{},{},{},{}", r.key.store, r.key.product, r.key.start, u8::from(r.is_promotion));
            for v in &r.features {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{},{}", r.target, r.raw_target);
        }
    }
    s
}

/// Writes one feature table per split to `<out>/datasets`.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<Assembly, PipelineError> {
    let data = load_inputs(cfg)?;
    let assembly = assemble(cfg, &data)?;
    let dir = cfg.out.join("datasets");
    for split in &assembly.splits {
        let base = dir.join(stem(&split.group, split.kind));
        write(&base.with_extension("csv"), &dataset_csv(split))?;
        if let Some(stats) = &split.stats {
            write(&base.with_extension("stats.csv"), &stats_csv(&split.group, stats))?;
        }
    }
    let s = assembly.summary;
    let summary = format!(
        "promotions_used,{}\nno_hit,{}\nmatched,{}\nunmatched,{}\nmatched_dropped,{}\n",
        s.promotions_used, s.no_hit, s.matched, s.unmatched, s.matched_dropped
    );
    write(&dir.join("summary.csv"), &summary)?;
    Ok(assembly)
}

/// A final model trained on training plus validation rows, scored on the
/// test rows in indicator units.
pub struct Trained {
    pub model: LoadedModel,
    pub test: EvalReport,
}

pub fn train_final(cfg: &RunConfig, split: &DatasetSplit, params: &HyperParams, tag: &str) -> Result<Trained, PipelineError> {
    let rows: Vec<_> = split.all_training().collect();
    let matrix = split.matrix(rows.iter().copied())?;
    let targets: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let model = Booster::new(&matrix, &targets)?.fit(params, train_seed(cfg.seed, &split.group, split.kind))?;

    let test = split.matrix(&split.test)?;
    let preds = model.predict_matrix(&test)?;
    let forecast = split.test.iter().zip(&preds).map(|(r, &p)| split.to_raw(r, p)).collect::<Result<Vec<_>, _>>()?;
    let actual: Vec<f64> = split.test.iter().map(|r| r.raw_target).collect();
    let report = evaluate(&actual, &forecast)?;

    let years: Vec<String> = cfg.prep.train_years.iter().map(i32::to_string).collect();
    let meta = [
        ("group", split.group.clone()),
        ("indicator", split.kind.name().to_string()),
        ("config", tag.to_string()),
        ("train_years", years.join(",")),
        ("test_year", cfg.prep.test_year.to_string()),
        ("train_rows", split.train.len().to_string()),
        ("validation_rows", split.validation.len().to_string()),
        ("test_rows", split.test.len().to_string()),
    ];
    let stored = StoredModel { model, meta: meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect() };
    let model = LoadedModel { group: split.group.clone(), kind: split.kind, stored, stats: split.stats.clone() };
    Ok(Trained { model, test: report })
}

fn save(dir: &Path, m: &LoadedModel) -> Result<(), PipelineError> {
    let path = dir.join(stem(&m.group, m.kind)).with_extension("model");
    model_file::save(&path, &m.stored)?;
    if let Some(stats) = &m.stats {
        write(&stats_path(&path), &stats_csv(&m.group, stats))?;
    }
    Ok(())
}

fn objective(cfg: &RunConfig, split: &DatasetSplit) -> Result<GbtObjective, PipelineError> {
    Ok(GbtObjective::from_split(split, train_seed(cfg.seed, &split.group, split.kind))?)
}

/// Trains every model with default parameters and writes
/// `reports/default.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<MetricRow>, PipelineError> {
    let data = load_inputs(cfg)?;
    let assembly = assemble(cfg, &data)?;
    let dir = cfg.models_dir(false);
    let mut rows = Vec::new();
    for split in &assembly.splits {
        let defaults = default_params(objective(cfg, split)?.training_targets())?;
        let t = train_final(cfg, split, &defaults, "default")?;
        save(&dir, &t.model)?;
        info!("trained {} {}: test rmse {}", split.group, split.kind, t.test.rmse);
        rows.push(MetricRow { category: split.group.clone(), kind: split.kind, report: t.test });
    }
    write(&cfg.out.join("reports").join("default.csv"), &report::metrics_csv(&rows))?;
    Ok(rows)
}

/// Output of [`cmd_optimize`], one entry per split.
pub struct Optimized {
    pub default_rows: Vec<MetricRow>,
    pub optimized_rows: Vec<MetricRow>,
    pub diff: Vec<DiffRow>,
    pub results: Vec<(String, IndicatorKind, HpoResult)>,
}

/// Tunes every model, then writes the tuned models, `reports/optimized.csv`,
/// `reports/rmse_diff.csv` and a search report plus evaluation log per
/// model under `hpo/`. Default models and their report are written too.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<Optimized, PipelineError> {
    let data = load_inputs(cfg)?;
    let assembly = assemble(cfg, &data)?;
    let mut out = Optimized { default_rows: Vec::new(), optimized_rows: Vec::new(), diff: Vec::new(), results: Vec::new() };
    for split in &assembly.splits {
        let (group, kind) = (split.group.clone(), split.kind);
        let obj = objective(cfg, split)?;
        let defaults = default_params(obj.training_targets())?;
        let grid = build_grids(obj.training_targets())?;
        let hc = HpoConfig {
            permutation_budget: cfg.budget,
            seed: hpo_seed(cfg.seed, &group, kind),
            memoize: cfg.memoize,
            refine: cfg.refine,
        };
        let result = optimize(&obj, grid, defaults, &hc)?;
        info!(
            "optimized {group} {kind}: validation rmse {} -> {} ({} evaluations)",
            result.default_rmse, result.best_validation_rmse, result.evaluations_total
        );

        let base = cfg.out.join("hpo").join(stem(&group, kind));
        write(&base.with_extension("txt"), &report::hpo_text(&group, kind, &result))?;
        write(&base.with_extension("evals.csv"), &report::eval_log_csv(&result))?;

        let d = train_final(cfg, split, &defaults, "default")?;
        let o = train_final(cfg, split, &result.best_params, "optimized")?;
        save(&cfg.models_dir(false), &d.model)?;
        save(&cfg.models_dir(true), &o.model)?;
        out.diff.push(DiffRow {
            category: group.clone(),
            kind,
            rmse_default: result.default_rmse,
            rmse_optimized: result.best_validation_rmse,
            test_rmse_default: d.test.rmse,
            test_rmse_optimized: o.test.rmse,
        });
        out.default_rows.push(MetricRow { category: group.clone(), kind, report: d.test });
        out.optimized_rows.push(MetricRow { category: group.clone(), kind, report: o.test });
        out.results.push((group, kind, result));
    }
    let reports = cfg.out.join("reports");
    write(&reports.join("default.csv"), &report::metrics_csv(&out.default_rows))?;
    write(&reports.join("optimized.csv"), &report::metrics_csv(&out.optimized_rows))?;
    write(&reports.join("rmse_diff.csv"), &report::diff_csv(&out.diff))?;
    Ok(out)
}

/// One forecast per data row of a CSV whose header names the model's
/// features. Optional `store_id` and `product_id` columns locate the
/// statistics of standardized indicators.
pub fn cmd_forecast(model_path: &Path, rows_path: &Path) -> Result<Vec<f64>, PipelineError> {
    let model = models::load_model(model_path)?;
    let input = |reason: String| PipelineError::Input { path: rows_path.to_path_buf(), reason };
    let mut reader = csv::Reader::from_path(rows_path).map_err(|e| input(e.to_string()))?;
    let header = reader.headers().map_err(|e| input(e.to_string()))?.clone();
    let store_col = header.iter().position(|h| h == "store_id");
    let product_col = header.iter().position(|h| h == "product_id");
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != store_col && Some(i) != product_col).collect();
    let names: Vec<String> = feature_cols.iter().map(|&i| header[i].to_string()).collect();

    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| input(e.to_string()))?;
        let values = feature_cols
            .iter()
            .map(|&i| rec[i].trim().parse::<f64>().map_err(|_| input(format!("row {}: bad value {:?}", n + 1, &rec[i]))))
            .collect::<Result<Vec<_>, _>>()?;
        let store = store_col.map(|i| StoreId::new(&rec[i]));
        let product = product_col.map(|i| &rec[i]).filter(|p| !p.is_empty()).map(ProductId::new);
        let fv = FeatureVector { names: names.clone(), values };
        out.push(models::forecast(&model, &fv, store.as_ref(), product.as_ref())?);
    }
    Ok(out)
}

pub fn cmd_importance(model_path: &Path, top_k: usize) -> Result<Vec<(String, f64)>, PipelineError> {
    let model = models::load_model(model_path)?;
    Ok(models::top_features(&model, top_k)?)
}

/// Writes `indicators.csv`: the six indicators of every promotion window.
/// Windows whose receipts never hold the product get empty values.
pub fn cmd_indicators(cfg: &RunConfig) -> Result<PathBuf, PipelineError> {
    let data = load_inputs(cfg)?;
    let index = ReceiptIndex::new(&data.receipts);
    let mut s = String::from("store_id,product_id,start_date,end_date");
    for k in IndicatorKind::ALL {
        let _ = write!(s, ",{}", k.name());
    }
    s.push_str(",n_days,n_hit_receipts,n_all_receipts\n");
    for w in &data.promotions {
        let _ = write!(s, "{},{},{},{}", w.store_id, w.product, w.start_date, w.end_date);
        match compute_indicators(w, index.window(w)) {
            Ok(v) => {
                for x in v.as_array() {
                    let _ = write!(s, ",{x}");
                }
                let _ = writeln!(s, ",{},{},{}", v.n_days, v.n_hit_receipts, v.n_all_receipts);
            }
            Err(_) => {
                let n_days = w.duration_days();
                let n_all = index.window(w).count();
                let _ = writeln!(s, ",,,,,,,{n_days},0,{n_all}");
            }
        }
    }
    let path = cfg.out.join("indicators.csv");
    write(&path, &s)?;
    Ok(path)
}

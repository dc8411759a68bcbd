//! CSV and text reports.

use std::fmt::Write as _;

use promocast_core::domain::IndicatorKind;
use promocast_core::hpo::{HpoResult, PassResult};
use promocast_core::metrics::EvalReport;
use promocast_core::HyperParams;

/// One row of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub category: String,
    pub kind: IndicatorKind,
    pub report: EvalReport,
}

/// One row of the before/after comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub category: String,
    pub kind: IndicatorKind,
    /// Validation RMSE of the default and the tuned configuration.
    pub rmse_default: f64,
    pub rmse_optimized: f64,
    /// Test RMSE of the final models.
    pub test_rmse_default: f64,
    pub test_rmse_optimized: f64,
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("category,indicator,mae,rmse,mape,wmape\n");
    for r in rows {
        let mape = r.report.mape.map(num).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&r.category),
            csv_field(r.kind.label()),
            num(r.report.mae),
            num(r.report.rmse),
            mape,
            num(r.report.wmape)
        );
    }
    s
}

pub fn diff_csv(rows: &[DiffRow]) -> String {
    let mut s = String::from(
        "category,indicator,rmse_default,rmse_optimized,rmse_diff,test_rmse_default,test_rmse_optimized,test_rmse_diff\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.category),
            csv_field(r.kind.label()),
            num(r.rmse_default),
            num(r.rmse_optimized),
            num(r.rmse_default - r.rmse_optimized),
            num(r.test_rmse_default),
            num(r.test_rmse_optimized),
            num(r.test_rmse_default - r.test_rmse_optimized)
        );
    }
    s
}

fn params_line(hp: &HyperParams) -> String {
    format!(
        "nrounds={} base_score={} eta={} gamma={} max_depth={} subsample={}",
        hp.nrounds, hp.base_score, hp.eta, hp.gamma, hp.max_depth, hp.subsample
    )
}

fn order_line(pass: &PassResult) -> String {
    pass.order.iter().map(|p| p.name()).collect::<Vec<_>>().join(">")
}

/// Plain text summary of one search.
pub fn hpo_text(group: &str, kind: IndicatorKind, result: &HpoResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "group {group}");
    let _ = writeln!(s, "indicator {}", kind.name());
    let order: Vec<&str> = result.best_permutation.iter().map(|p| p.name()).collect();
    let _ = writeln!(s, "best_order {}", order.join(">"));
    let _ = writeln!(s, "best_params {}", params_line(&result.best_params));
    let _ = writeln!(s, "best_validation_rmse {}", result.best_validation_rmse);
    let _ = writeln!(s, "default_params {}", params_line(&result.default_params));
    let _ = writeln!(s, "default_rmse {}", result.default_rmse);
    let _ = writeln!(s, "evaluations_total {}", result.evaluations_total);
    let _ = writeln!(s, "cache_hits {}", result.cache_hits);
    let _ = writeln!(s, "trainings {}", result.trainings);
    let _ = writeln!(s, "passes {}", result.passes.len());
    for p in &result.passes {
        let _ = writeln!(s, "pass {} rmse={} {}", order_line(p), p.rmse, params_line(&p.params));
    }
    if let Some(r) = &result.refined {
        let _ = writeln!(s, "refined {} rmse={} {}", order_line(r), r.rmse, params_line(&r.params));
    }
    s
}

/// Every distinct configuration tried, in order of first request.
pub fn eval_log_csv(result: &HpoResult) -> String {
    let mut s = String::from("nrounds,base_score,eta,gamma,max_depth,subsample,rmse\n");
    for e in &result.log {
        let hp = e.params;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            hp.nrounds, hp.base_score, hp.eta, hp.gamma, hp.max_depth, hp.subsample, e.rmse
        );
    }
    s
}

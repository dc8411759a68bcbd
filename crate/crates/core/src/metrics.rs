//! Forecast error measures.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("actual has {actual} values, forecast has {forecast}")]
    LengthMismatch { actual: usize, forecast: usize },
    #[error("no values to evaluate")]
    EmptyVectors,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("WMAPE is undefined: actual values sum to zero")]
    WmapeUndefined,
}

/// Errors of one forecast against its actuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
    /// `None` when some actual value is zero.
    pub mape: Option<f64>,
    pub wmape: f64,
}

impl EvalReport {
    pub fn mape_undefined(&self) -> bool {
        self.mape.is_none()
    }
}

/// MAE, RMSE, MAPE and WMAPE of `forecast` against `actual`.
///
/// MAPE is reported as `None` rather than infinity when an actual value is
/// zero; the other three measures are still computed.
pub fn evaluate(actual: &[f64], forecast: &[f64]) -> Result<EvalReport, MetricsError> {
    if actual.len() != forecast.len() {
        return Err(MetricsError::LengthMismatch { actual: actual.len(), forecast: forecast.len() });
    }
    if actual.is_empty() {
        return Err(MetricsError::EmptyVectors);
    }
    if let Some(i) = actual.iter().chain(forecast).position(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite(i % actual.len()));
    }

    let n = actual.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut actual_sum = 0.0;
    let mut zero_actual = false;
    for (&a, &f) in actual.iter().zip(forecast) {
        let err = (a - f).abs();
        abs_sum += err;
        sq_sum += err * err;
        actual_sum += a;
        if a == 0.0 {
            zero_actual = true;
        } else {
            pct_sum += err / a.abs();
        }
    }
    if actual_sum == 0.0 {
        return Err(MetricsError::WmapeUndefined);
    }

    Ok(EvalReport {
        n: actual.len(),
        mae: abs_sum / n,
        rmse: libm::sqrt(sq_sum / n),
        mape: (!zero_actual).then(|| pct_sum / n),
        wmape: abs_sum / actual_sum,
    })
}

/// Root mean squared error alone, without validation beyond lengths.
pub fn rmse(actual: &[f64], forecast: &[f64]) -> f64 {
    debug_assert_eq!(actual.len(), forecast.len());
    let sq: f64 = actual.iter().zip(forecast).map(|(a, f)| (f - a) * (f - a)).sum();
    libm::sqrt(sq / actual.len() as f64)
}

/// RMSE before tuning minus RMSE after; positive means improvement.
pub fn rmse_improvement(before: f64, after: f64) -> f64 {
    before - after
}

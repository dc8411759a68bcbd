//! JSON over HTTP: what-if forecasts and importance rankings from loaded
//! models.
//!
//! | method | path                                    |
//! |--------|-----------------------------------------|
//! | POST   | `/forecast`                             |
//! | GET    | `/importance/{group}/{indicator}?top_k` |
//! | GET    | `/models`                               |
//! | GET    | `/health`                               |
//! | POST   | `/reload`                               |
//!
//! Handlers read an immutable [`Registry`] snapshot. A reload builds a new
//! registry off to the side and swaps it in.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{Duration, NaiveDate};
use promocast_core::domain::{Catalog, Channels, IndicatorKind, ProductId, PromotionWindow, StoreId, StoreProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::CorsLayer;

use crate::io::{load_catalog, load_stores, IoError};
use crate::models::{self, LoadedModel, ModelError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no models loaded")]
    ModelsNotLoaded,
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("unknown store {0:?}")]
    UnknownStore(String),
    #[error("unknown product {0:?}")]
    UnknownProduct(String),
    #[error("unknown indicator {0:?}")]
    UnknownIndicator(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("nothing to reload from")]
    NoSource,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        match self {
            ServiceError::ModelsNotLoaded => StatusCode::CONFLICT,
            ServiceError::UnknownGroup(_)
            | ServiceError::UnknownStore(_)
            | ServiceError::UnknownProduct(_)
            | ServiceError::UnknownIndicator(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NoSource | ServiceError::Model(_) | ServiceError::Io(_) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::ModelsNotLoaded => "ModelsNotLoaded",
            ServiceError::UnknownGroup(_) | ServiceError::UnknownStore(_) => "UnknownGroupOrStore",
            ServiceError::UnknownProduct(_) => "UnknownProduct",
            ServiceError::UnknownIndicator(_) => "UnknownIndicator",
            ServiceError::InvalidRequest(_) => "InvalidRequest",
            ServiceError::NoSource => "NoSource",
            ServiceError::Model(_) | ServiceError::Io(_) | ServiceError::Internal(_) => "Internal",
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code().to_string(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}

/// Where a registry is loaded from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSource {
    pub models_dir: PathBuf,
    pub stores: PathBuf,
    /// When given, requested products must exist in the requested group.
    pub catalog: Option<PathBuf>,
}

/// Models and store profiles of one load.
#[derive(Debug, Default)]
pub struct Registry {
    pub version: u64,
    pub models: BTreeMap<(String, IndicatorKind), Arc<LoadedModel>>,
    pub stores: BTreeMap<StoreId, StoreProfile>,
    pub catalog: Option<Catalog>,
}

impl Registry {
    pub fn new(models: Vec<LoadedModel>, stores: Vec<StoreProfile>, catalog: Option<Catalog>) -> Self {
        Self {
            version: 0,
            models: models.into_iter().map(|m| ((m.group.clone(), m.kind), Arc::new(m))).collect(),
            stores: stores.into_iter().map(|s| (s.store_id.clone(), s)).collect(),
            catalog,
        }
    }

    pub fn load(source: &ModelSource) -> Result<Self, ServiceError> {
        let models = models::load_dir(&source.models_dir)?;
        let stores = load_stores(&source.stores)?;
        let catalog = source.catalog.as_deref().map(load_catalog).transpose()?;
        Ok(Self::new(models, stores, catalog))
    }

    fn has_group(&self, group: &str) -> bool {
        self.models.keys().any(|(g, _)| g == group)
    }
}

struct Shared {
    registry: RwLock<Arc<Registry>>,
    source: Option<ModelSource>,
    versions: AtomicU64,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    /// A service over a fixed registry; `/reload` then answers 500.
    pub fn new(registry: Registry) -> Self {
        let state = Self {
            shared: Arc::new(Shared {
                registry: RwLock::new(Arc::new(Registry::default())),
                source: None,
                versions: AtomicU64::new(0),
            }),
        };
        state.install(registry);
        state
    }

    pub fn from_source(source: ModelSource) -> Result<Self, ServiceError> {
        let registry = Registry::load(&source)?;
        let state = Self {
            shared: Arc::new(Shared {
                registry: RwLock::new(Arc::new(Registry::default())),
                source: Some(source),
                versions: AtomicU64::new(0),
            }),
        };
        state.install(registry);
        Ok(state)
    }

    fn install(&self, mut registry: Registry) -> u64 {
        registry.version = self.shared.versions.fetch_add(1, Ordering::SeqCst) + 1;
        let v = registry.version;
        *self.shared.registry.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(registry);
        v
    }

    pub fn registry(&self) -> Arc<Registry> {
        self.shared.registry.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Reloads from the source and returns the new version.
    pub fn reload(&self) -> Result<u64, ServiceError> {
        let source = self.shared.source.as_ref().ok_or(ServiceError::NoSource)?;
        let registry = Registry::load(source)?;
        Ok(self.install(registry))
    }
}

/// Another planned promotion in the same store, counted as concurrent
/// when it overlaps the forecast window.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlannedPromotion {
    pub product_id: String,
    pub start_date: NaiveDate,
    pub duration_days: i64,
    #[serde(default = "default_change")]
    pub price_change: f64,
    #[serde(default)]
    pub tv: bool,
    #[serde(default)]
    pub radio: bool,
    #[serde(default)]
    pub internet: bool,
    #[serde(default)]
    pub other: bool,
}

fn default_change() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ForecastRequest {
    pub group: String,
    pub store_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_id: Option<String>,
    pub promo_price: f64,
    pub price_change: f64,
    pub start_date: NaiveDate,
    pub duration_days: i64,
    #[serde(default)]
    pub tv: bool,
    #[serde(default)]
    pub radio: bool,
    #[serde(default)]
    pub internet: bool,
    #[serde(default)]
    pub other: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub concurrent_promotions: Vec<PlannedPromotion>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ForecastResponse {
    /// One value per indicator, keyed by machine name.
    pub forecast: BTreeMap<String, f64>,
    pub model_version: u64,
    pub request: ForecastRequest,
}

#[allow(clippy::too_many_arguments)]
fn window(
    store: &StoreId,
    product: ProductId,
    start: NaiveDate,
    days: i64,
    promo_price: f64,
    price_change: f64,
    channels: Channels,
    what: &str,
) -> Result<PromotionWindow, ServiceError> {
    if !(1..=promocast_core::domain::MAX_PROMOTION_DAYS).contains(&days) {
        return Err(ServiceError::InvalidRequest(format!("{what}duration_days must be in 1..=7, got {days}")));
    }
    PromotionWindow::new(store.clone(), product, start, start + Duration::days(days - 1), promo_price, price_change, channels)
        .map_err(|e| ServiceError::InvalidRequest(format!("{what}{e}")))
}

/// Forecasts all six indicators for a planned promotion.
pub fn forecast(registry: &Registry, req: &ForecastRequest) -> Result<BTreeMap<String, f64>, ServiceError> {
    if registry.models.is_empty() {
        return Err(ServiceError::ModelsNotLoaded);
    }
    if !registry.has_group(&req.group) {
        return Err(ServiceError::UnknownGroup(req.group.clone()));
    }
    let store_id = StoreId::new(&req.store_id);
    let store = registry.stores.get(&store_id).ok_or_else(|| ServiceError::UnknownStore(req.store_id.clone()))?;
    let product = req.product_id.as_deref().map(ProductId::new);
    if let (Some(p), Some(catalog)) = (&product, &registry.catalog) {
        if catalog.group_of(p) != Some(req.group.as_str()) {
            return Err(ServiceError::UnknownProduct(p.to_string()));
        }
    }

    // A product-less request still needs an id for the window; the group
    // name never collides with a real product of that group.
    let window_product = product.clone().unwrap_or_else(|| ProductId::new(&req.group));
    let channels = Channels::from_array([req.tv, req.radio, req.internet, req.other]);
    let planned = window(&store_id, window_product, req.start_date, req.duration_days, req.promo_price, req.price_change, channels, "")?;
    let others = req
        .concurrent_promotions
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let ch = Channels::from_array([c.tv, c.radio, c.internet, c.other]);
            let what = format!("concurrent_promotions[{i}]: ");
            window(&store_id, ProductId::new(&c.product_id), c.start_date, c.duration_days, 1.0, c.price_change, ch, &what)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let features = models::what_if_features(&planned, store, &others);

    let mut out = BTreeMap::new();
    for kind in IndicatorKind::ALL {
        let model = registry
            .models
            .get(&(req.group.clone(), kind))
            .ok_or_else(|| ServiceError::UnknownIndicator(format!("{} for group {}", kind.name(), req.group)))?;
        let value = models::forecast(model, &features, Some(&store_id), product.as_ref())?;
        out.insert(kind.name().to_string(), value);
    }
    Ok(out)
}

async fn post_forecast(
    State(state): State<AppState>,
    body: Result<Json<ForecastRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<ForecastResponse>, ServiceError> {
    let Json(req) = body.map_err(|e| ServiceError::InvalidRequest(e.body_text()))?;
    let registry = state.registry();
    let forecast = forecast(&registry, &req)?;
    Ok(Json(ForecastResponse { forecast, model_version: registry.version, request: req }))
}

#[derive(Debug, Deserialize)]
struct TopK {
    top_k: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

async fn get_importance(
    State(state): State<AppState>,
    Path((group, indicator)): Path<(String, String)>,
    Query(q): Query<TopK>,
) -> Result<Json<Vec<FeatureImportance>>, ServiceError> {
    let registry = state.registry();
    if registry.models.is_empty() {
        return Err(ServiceError::ModelsNotLoaded);
    }
    let kind = IndicatorKind::parse(&indicator).ok_or_else(|| ServiceError::UnknownIndicator(indicator.clone()))?;
    let model = registry.models.get(&(group.clone(), kind)).ok_or(ServiceError::UnknownGroup(group))?;
    let ranked = models::top_features(model, q.top_k.unwrap_or(10))?;
    Ok(Json(ranked.into_iter().map(|(feature, importance)| FeatureImportance { feature, importance }).collect()))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelInfo {
    pub group: String,
    pub indicator: String,
    pub version: u64,
    pub meta: BTreeMap<String, String>,
}

async fn get_models(State(state): State<AppState>) -> Json<Vec<ModelInfo>> {
    let registry = state.registry();
    Json(
        registry
            .models
            .values()
            .map(|m| ModelInfo {
                group: m.group.clone(),
                indicator: m.kind.name().to_string(),
                version: registry.version,
                meta: m.stored.meta.clone(),
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub models: usize,
    pub version: u64,
}

async fn get_health(State(state): State<AppState>) -> Json<Health> {
    let r = state.registry();
    Json(Health { status: "ok".into(), models: r.models.len(), version: r.version })
}

async fn post_reload(State(state): State<AppState>) -> Result<Json<Health>, ServiceError> {
    let st = state.clone();
    let version = tokio::task::spawn_blocking(move || st.reload())
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let r = state.registry();
    Ok(Json(Health { status: "ok".into(), models: r.models.len(), version }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/forecast", post(post_forecast))
        .route("/importance/{group}/{indicator}", get(get_importance))
        .route("/models", get(get_models))
        .route("/health", get(get_health))
        .route("/reload", post(post_reload))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

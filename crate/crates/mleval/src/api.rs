//! JSON HTTP interface under `/api/v1`, plus static hosting of the dashboard.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/v1/datasets` | loaded datasets |
//! | POST | `/api/v1/datasets` | upload a `.tar`/`.tar.gz` archive |
//! | GET | `/api/v1/datasets/{id}` | dataset info and validation report |
//! | GET | `/api/v1/datasets/{id}/summary` | per-run summaries |
//! | GET | `/api/v1/datasets/{id}/labels?sort=&direction=` | per-label metrics |
//! | GET | `/api/v1/datasets/{id}/stacked` | stacked F1 totals |
//! | GET | `/api/v1/datasets/{id}/similarity?precision=full` | similarity matrix |
//! | GET | `/api/v1/datasets/{id}/instances?label=&page=&page_size=` | dot chart rows |
//! | GET | `/api/v1/datasets/{id}/documents/{instance}` | document bytes |
//! | GET | `/api/v1/datasets/{id}/confusion/{run}?format=json\|csv` | tuple confusion matrix |

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use mleval_core::explore::{Direction, SortKey};
use mleval_core::{DocumentKind, Issue, IssueCode, LabelId, ValidationReport};
use serde::{Deserialize, Serialize};
use tower::ServiceExt;
use tower_http::services::{ServeDir, ServeFile};

use crate::export::tuple_confusion_csv;
use crate::ingest::{load_dataset, resolve, LoadOptions};
use crate::report::{self, canonical_json, Precision, DEFAULT_PAGE_SIZE};
use crate::store::LoadedDataset;
use crate::{archive, store};

pub const DEFAULT_UPLOAD_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Where uploaded datasets are unpacked; reloaded on start.
    pub store_dir: PathBuf,
    pub max_upload_bytes: usize,
    pub static_dir: Option<PathBuf>,
    pub load: LoadOptions,
}

impl ServerConfig {
    pub fn new(store_dir: PathBuf) -> Self {
        ServerConfig {
            store_dir,
            max_upload_bytes: DEFAULT_UPLOAD_LIMIT,
            static_dir: None,
            load: LoadOptions::default(),
        }
    }
}

#[derive(Clone)]
struct CachedBody {
    content_type: &'static str,
    body: Bytes,
}

/// Read-through cache of rendered response bodies keyed by
/// (dataset id, request). Concurrent readers, one writer at a time.
#[derive(Default)]
pub struct MetricCache {
    entries: RwLock<HashMap<(String, String), CachedBody>>,
}

impl MetricCache {
    fn get_or_insert<E>(
        &self,
        id: &str,
        key: String,
        render: impl FnOnce() -> Result<CachedBody, E>,
    ) -> Result<CachedBody, E> {
        let k = (id.to_string(), key);
        if let Some(hit) = self.entries.read().expect("cache lock").get(&k) {
            return Ok(hit.clone());
        }
        let value = render()?;
        let mut entries = self.entries.write().expect("cache lock");
        Ok(entries.entry(k).or_insert(value).clone())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loaded datasets by content ID, plus the metric cache.
pub struct SessionState {
    datasets: RwLock<BTreeMap<String, Arc<LoadedDataset>>>,
    pub cache: MetricCache,
    config: ServerConfig,
}

impl SessionState {
    pub fn new(config: ServerConfig) -> Self {
        SessionState {
            datasets: RwLock::new(BTreeMap::new()),
            cache: MetricCache::default(),
            config,
        }
    }

    /// Registers a dataset; returns false if its ID was already present.
    pub fn insert(&self, loaded: LoadedDataset) -> bool {
        let mut map = self.datasets.write().expect("dataset lock");
        if map.contains_key(&loaded.id) {
            return false;
        }
        map.insert(loaded.id.clone(), Arc::new(loaded));
        true
    }

    pub fn get(&self, id: &str) -> Option<Arc<LoadedDataset>> {
        self.datasets.read().expect("dataset lock").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        self.datasets
            .read()
            .expect("dataset lock")
            .keys()
            .cloned()
            .collect()
    }

    /// Loads every valid dataset directory found directly under the store.
    pub fn reload_store(&self) {
        let Ok(entries) = fs::read_dir(&self.config.store_dir) else {
            return;
        };
        let mut dirs: Vec<PathBuf> = entries.filter_map(Result::ok).map(|e| e.path()).collect();
        dirs.sort();
        for dir in dirs.into_iter().filter(|d| d.is_dir()) {
            match load_dataset(&dir, &self.config.load) {
                Ok(loaded) => {
                    self.insert(loaded);
                }
                Err(e) => tracing::warn!("skipping stored dataset {}: {e}", dir.display()),
            }
        }
    }
}

type AppState = Arc<SessionState>;

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ValidationReport>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    report: Option<ValidationReport>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            report: None,
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }

    fn bad_request(what: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            report: self.report,
        };
        json_response(self.status, canonical_json(&body))
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

impl IntoResponse for CachedBody {
    fn into_response(self) -> Response {
        ([(header::CONTENT_TYPE, self.content_type)], self.body).into_response()
    }
}

fn json_body<T: Serialize>(value: &T) -> CachedBody {
    CachedBody {
        content_type: "application/json",
        body: Bytes::from(canonical_json(value)),
    }
}

fn dataset(state: &SessionState, id: &str) -> Result<Arc<LoadedDataset>, ApiError> {
    state
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown dataset `{id}`")))
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_upload_bytes;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/summary", get(get_summary))
        .route("/datasets/{id}/labels", get(get_label_metrics))
        .route("/datasets/{id}/stacked", get(get_stacked))
        .route("/datasets/{id}/similarity", get(get_similarity))
        .route("/datasets/{id}/instances", get(get_instances))
        .route("/datasets/{id}/documents/{instance}", get(get_document))
        .route("/datasets/{id}/confusion/{run}", get(get_tuple_confusion))
        .layer(DefaultBodyLimit::max(limit));
    let app = Router::new().nest("/api/v1", api);
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(index)),
    };
    app.with_state(state)
}

async fn index() -> Html<&'static str> {
    Html(
        "<!doctype html><html><head><meta charset=\"utf-8\"><title>mleval</title></head>\
         <body><h1>mleval</h1><p>No dashboard bundle configured. \
         The JSON API is served under <code>/api/v1/datasets</code>.</p></body></html>",
    )
}

async fn list_datasets(State(state): State<AppState>) -> Response {
    let infos: Vec<report::DatasetInfo> = state
        .ids()
        .iter()
        .filter_map(|id| state.get(id))
        .map(|d| report::dataset_info(&d))
        .collect();
    json_body(&infos).into_response()
}

#[derive(Serialize)]
struct UploadBody {
    id: String,
    created: bool,
    dataset: report::DatasetInfo,
    report: ValidationReport,
}

fn upload_failure(report: ValidationReport) -> ApiError {
    let message = report
        .errors()
        .next()
        .map(|i| i.message.clone())
        .unwrap_or_else(|| "invalid dataset".into());
    ApiError {
        status: StatusCode::BAD_REQUEST,
        message,
        report: Some(report),
    }
}

/// Unpacks, validates and registers an uploaded archive. The dataset only
/// becomes visible once it loaded without errors.
fn ingest_upload(state: &SessionState, bytes: &[u8]) -> Result<(StatusCode, UploadBody), ApiError> {
    let store_dir = &state.config.store_dir;
    fs::create_dir_all(store_dir)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let staging = tempfile::Builder::new()
        .prefix(".upload-")
        .tempdir_in(store_dir)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    archive::unpack(bytes, staging.path()).map_err(|e| {
        upload_failure(Issue::error(IssueCode::Io, format!("bad archive: {e}")).into())
    })?;
    let root = archive::dataset_root(staging.path())
        .map_err(|e| upload_failure(Issue::error(IssueCode::Io, e.to_string()).into()))?;
    let mut loaded =
        load_dataset(&root, &state.config.load).map_err(|e| upload_failure(e.to_report()))?;

    if let Some(existing) = state.get(&loaded.id) {
        return Ok((
            StatusCode::OK,
            UploadBody {
                id: existing.id.clone(),
                created: false,
                dataset: report::dataset_info(&existing),
                report: existing.report.clone(),
            },
        ));
    }
    let dest = store_dir.join(&loaded.id);
    if !dest.exists() {
        fs::rename(&root, &dest)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    }
    loaded.root = dest;
    let body = UploadBody {
        id: loaded.id.clone(),
        created: true,
        dataset: report::dataset_info(&loaded),
        report: loaded.report.clone(),
    };
    let created = state.insert(loaded);
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, UploadBody { created, ..body }))
}

async fn upload_dataset(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    if body.len() > state.config.max_upload_bytes {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "upload exceeds size cap",
        ));
    }
    let worker = state.clone();
    let (status, body) = tokio::task::spawn_blocking(move || ingest_upload(&worker, &body))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(json_response(status, canonical_json(&body)))
}

#[derive(Serialize)]
struct DatasetBody {
    dataset: report::DatasetInfo,
    report: ValidationReport,
}

async fn get_dataset(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    Ok(json_body(&DatasetBody {
        dataset: report::dataset_info(&d),
        report: d.report.clone(),
    })
    .into_response())
}

async fn get_summary(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let body = state
        .cache
        .get_or_insert::<ApiError>(&id, "summary".into(), || {
            Ok(json_body(&report::summary_body(&d)))
        })?;
    Ok(body.into_response())
}

#[derive(Debug, Deserialize)]
pub struct LabelQuery {
    sort: Option<String>,
    direction: Option<String>,
}

async fn get_label_metrics(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<LabelQuery>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let key: SortKey = q
        .sort
        .as_deref()
        .unwrap_or("id")
        .parse()
        .map_err(ApiError::bad_request)?;
    let direction: Direction = q
        .direction
        .as_deref()
        .unwrap_or("asc")
        .parse()
        .map_err(ApiError::bad_request)?;
    let cache_key = format!("labels?sort={key}&direction={direction}");
    let body = state.cache.get_or_insert(&id, cache_key, || {
        report::label_metrics_body(&d.dataset, &key, direction)
            .map(|b| json_body(&b))
            .map_err(|e| ApiError::not_found(e.to_string()))
    })?;
    Ok(body.into_response())
}

async fn get_stacked(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let body = state
        .cache
        .get_or_insert::<ApiError>(&id, "stacked".into(), || {
            Ok(json_body(&report::stacked_body(&d.dataset)))
        })?;
    Ok(body.into_response())
}

#[derive(Debug, Deserialize)]
pub struct SimilarityQuery {
    precision: Option<String>,
}

async fn get_similarity(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SimilarityQuery>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let precision = match q.precision.as_deref() {
        None | Some("4") | Some("rounded") => Precision::Rounded,
        Some("full") => Precision::Full,
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "unknown precision `{other}`"
            )))
        }
    };
    let key = format!("similarity?{precision:?}");
    let body = state.cache.get_or_insert::<ApiError>(&id, key, || {
        Ok(json_body(&report::similarity_body(&d.dataset, precision)))
    })?;
    Ok(body.into_response())
}

#[derive(Debug, Deserialize)]
pub struct InstanceQuery {
    /// Label name.
    label: Option<String>,
    /// Label ID, as an alternative to `label`.
    label_id: Option<u32>,
    page: Option<usize>,
    page_size: Option<usize>,
}

async fn get_instances(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<InstanceQuery>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let registry = d.dataset.registry();
    let filter = match (&q.label, q.label_id) {
        (Some(name), _) => Some(
            registry
                .id(name)
                .ok_or_else(|| ApiError::bad_request(format!("unknown label `{name}`")))?,
        ),
        (None, Some(raw)) => {
            let label = LabelId(raw);
            if !registry.contains(label) {
                return Err(ApiError::bad_request(format!("unknown label id {raw}")));
            }
            Some(label)
        }
        (None, None) => None,
    };
    let page = q.page.unwrap_or(0);
    let page_size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    let body = report::instances_body(&d.dataset, filter, page, page_size)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(json_body(&body).into_response())
}

async fn get_document(
    State(state): State<AppState>,
    UrlPath((id, instance)): UrlPath<(String, String)>,
    request: Request,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let index = d
        .dataset
        .instance_index(&instance)
        .ok_or_else(|| ApiError::not_found(format!("unknown instance `{instance}`")))?;
    let doc = &d.dataset.instances()[index].document;
    match doc.kind {
        DocumentKind::None => Ok(StatusCode::NO_CONTENT.into_response()),
        DocumentKind::Text => Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            doc.payload.clone(),
        )
            .into_response()),
        DocumentKind::Image | DocumentKind::Audio => {
            let path =
                resolve(&d.root, &doc.payload).map_err(|e| ApiError::bad_request(e.to_string()))?;
            serve_document_file(&path, doc.mime.as_deref(), &instance, request).await
        }
    }
}

async fn serve_document_file(
    path: &Path,
    mime: Option<&str>,
    instance: &str,
    request: Request,
) -> Result<Response, ApiError> {
    if !path.is_file() {
        return Err(ApiError {
            status: StatusCode::GONE,
            message: format!("document for instance `{instance}` is missing on disk"),
            report: Some(
                Issue::warning(
                    IssueCode::MissingDocument,
                    format!("document `{}` not found", path.display()),
                )
                .into(),
            ),
        });
    }
    let service = match mime.and_then(|m| m.parse::<mime_guess::Mime>().ok()) {
        Some(m) => ServeFile::new_with_mime(path, &m),
        None => ServeFile::new(path),
    };
    let response = service
        .oneshot(request)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let (mut parts, body) = response.into_parts();
    parts
        .headers
        .insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    Ok(Response::from_parts(parts, Body::new(body)))
}

#[derive(Debug, Deserialize)]
pub struct ConfusionQuery {
    format: Option<String>,
}

async fn get_tuple_confusion(
    State(state): State<AppState>,
    UrlPath((id, run)): UrlPath<(String, String)>,
    Query(q): Query<ConfusionQuery>,
) -> Result<Response, ApiError> {
    let d = dataset(&state, &id)?;
    let format = q.format.unwrap_or_else(|| "json".into());
    if format != "json" && format != "csv" {
        return Err(ApiError::bad_request(format!("unknown format `{format}`")));
    }
    let key = format!("confusion/{run}?{format}");
    let body = state.cache.get_or_insert(&id, key, || {
        let m = report::tuple_confusion(&d.dataset, &run)
            .map_err(|e| ApiError::not_found(e.to_string()))?;
        Ok(if format == "csv" {
            CachedBody {
                content_type: "text/csv; charset=utf-8",
                body: Bytes::from(tuple_confusion_csv(&d.dataset, &m)),
            }
        } else {
            json_body(&report::tuple_confusion_body(&d.dataset, &m))
        })
    })?;
    Ok(body.into_response())
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn serve(
    state: AppState,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Creates the session, reloading anything already in the store and adding
/// `preload` if given.
pub fn session(config: ServerConfig, preload: Option<LoadedDataset>) -> AppState {
    let state = Arc::new(SessionState::new(config));
    state.reload_store();
    if let Some(loaded) = preload {
        state.insert(loaded);
    }
    state
}

/// Content ID of an unpacked upload, without loading it.
pub fn archive_id(bytes: &[u8]) -> std::io::Result<String> {
    let dir = tempfile::tempdir()?;
    archive::unpack(bytes, dir.path())?;
    store::content_id(&archive::dataset_root(dir.path())?)
}

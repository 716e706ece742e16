//! Review service: a workspace of orthophotos segmented at startup, with an
//! HTTP API to inspect, re-segment and accept each one.
//!
//! Review state (status and parameters) persists in `.review/{id}.json`
//! sidecars next to the images; ground truth, when present, is read from
//! `ground_truth/{id}.png`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dehesa_core::evaluation::MetricReport;
use dehesa_core::raster::{
    discover_orthophoto, image_id, list_images, GroundTruthMask, Orthophoto,
};
use dehesa_core::report::{ImageFailure, ImageSummary, RunReport};
use dehesa_core::{SegmentationConfig, StockingTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{find_ground_truth, thread_pool, BatchError};
use crate::pipeline::{process, Processed};

pub const REVIEW_DIR: &str = ".review";
pub const GROUND_TRUTH_DIR: &str = "ground_truth";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pending,
    NeedsReview,
    Accepted,
}

/// Operator-adjustable parameters of one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewParams {
    pub c: usize,
    pub gamma: f64,
    pub shrub_threshold_px: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub status: Status,
    pub params: ReviewParams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    pub c: Option<usize>,
    pub gamma: Option<f64>,
    pub shrub_threshold_px: Option<u64>,
}

struct SlotState {
    params: ReviewParams,
    accepted: bool,
    revision: u64,
    outcome: Result<Arc<Processed>, String>,
}

impl SlotState {
    fn status(&self) -> Status {
        match &self.outcome {
            _ if self.accepted => Status::Accepted,
            Ok(p) if p.output.needs_review => Status::NeedsReview,
            _ => Status::Pending,
        }
    }
}

struct Slot {
    id: String,
    photo: Result<Arc<Orthophoto>, String>,
    truth: Option<Arc<GroundTruthMask>>,
    state: RwLock<SlotState>,
    /// Serializes re-segmentation of this image.
    busy: tokio::sync::Mutex<()>,
}

pub struct Workspace {
    root: PathBuf,
    base: SegmentationConfig,
    stocking: StockingTable,
    slots: BTreeMap<String, Arc<Slot>>,
}

#[derive(Debug, Clone, Default)]
pub struct ServeConfig {
    pub segmentation: SegmentationConfig,
    pub assume_pixel_size: Option<f64>,
    pub stocking: StockingTable,
    pub workers: Option<usize>,
}

fn config_for(base: &SegmentationConfig, params: &ReviewParams) -> SegmentationConfig {
    SegmentationConfig {
        gkb: base
            .gkb
            .clone()
            .with_clusters(params.c)
            .with_gamma(params.gamma),
        shrub_threshold_px: params.shrub_threshold_px,
        shrub_threshold_m2: None,
        ..base.clone()
    }
}

fn read_sidecar(path: &Path) -> Option<Sidecar> {
    let text = std::fs::read_to_string(path).ok()?;
    match serde_json::from_str(&text) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("{}: ignoring unreadable sidecar: {e}", path.display());
            None
        }
    }
}

impl Workspace {
    /// Loads every image in `root` and segments it with its saved or default
    /// parameters.
    pub fn open(root: &Path, config: ServeConfig) -> Result<Self, BatchError> {
        let images = list_images(root)?;
        let pool = thread_pool(config.workers)?;
        let base = config.segmentation;
        let slots = pool.install(|| {
            images
                .par_iter()
                .map(|path| Self::load_slot(root, path, &base, config.assume_pixel_size))
                .collect::<Vec<_>>()
        });
        Ok(Workspace {
            root: root.to_path_buf(),
            base,
            stocking: config.stocking,
            slots: slots
                .into_iter()
                .map(|s| (s.id.clone(), Arc::new(s)))
                .collect(),
        })
    }

    fn load_slot(
        root: &Path,
        path: &Path,
        base: &SegmentationConfig,
        assume_pixel_size: Option<f64>,
    ) -> Slot {
        let id = image_id(path);
        let sidecar = read_sidecar(&root.join(REVIEW_DIR).join(format!("{id}.json")));
        let loaded = discover_orthophoto(path, assume_pixel_size)
            .map_err(|e| e.to_string())
            .and_then(|(photo, _)| {
                let truth = find_ground_truth(&root.join(GROUND_TRUTH_DIR), &photo)
                    .map_err(|e| e.to_string())?;
                Ok((Arc::new(photo), truth.map(Arc::new)))
            });
        let params = match (&sidecar, &loaded) {
            (Some(s), _) => s.params,
            (None, Ok((photo, _))) => ReviewParams {
                c: base.gkb.c,
                gamma: base.gkb.gamma,
                shrub_threshold_px: base.shrub_threshold_for(photo.geo()),
            },
            (None, Err(_)) => ReviewParams {
                c: base.gkb.c,
                gamma: base.gkb.gamma,
                shrub_threshold_px: base.shrub_threshold_px,
            },
        };
        let (photo, truth, outcome) = match loaded {
            Ok((photo, truth)) => {
                let outcome = run(&photo, truth.as_deref(), base, &params);
                (Ok(photo), truth, outcome)
            }
            Err(e) => (Err(e.clone()), None, Err(e)),
        };
        if let Err(e) = &outcome {
            log::error!("{id}: {e}");
        }
        Slot {
            state: RwLock::new(SlotState {
                params,
                accepted: sidecar.is_some_and(|s| s.status == Status::Accepted),
                revision: 0,
                outcome,
            }),
            id,
            photo,
            truth,
            busy: tokio::sync::Mutex::new(()),
        }
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    fn write_sidecar(&self, id: &str, sidecar: &Sidecar) -> std::io::Result<()> {
        let dir = self.root.join(REVIEW_DIR);
        std::fs::create_dir_all(&dir)?;
        let tmp = dir.join(format!(".{id}.json.tmp"));
        let mut text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
        text.push('\n');
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, dir.join(format!("{id}.json")))
    }

    /// Report over every successfully segmented image, in current state.
    pub fn report(&self) -> RunReport {
        let mut summaries = Vec::new();
        let mut failures = Vec::new();
        for (id, slot) in &self.slots {
            match &slot.state.read().expect("state lock").outcome {
                Ok(p) => summaries.push(p.summary().clone()),
                Err(e) => failures.push(ImageFailure {
                    image_id: id.clone(),
                    error: e.clone(),
                }),
            }
        }
        RunReport::new(summaries, failures, &self.stocking)
    }
}

fn run(
    photo: &Orthophoto,
    truth: Option<&GroundTruthMask>,
    base: &SegmentationConfig,
    params: &ReviewParams,
) -> Result<Arc<Processed>, String> {
    process(photo, truth, &config_for(base, params))
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(serde_json::json!({ "error": self.message }));
        (self.status, body).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<Workspace>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageCard {
    pub image_id: String,
    pub status: Status,
    pub sac_percent: Option<f64>,
    pub class_count_used: Option<usize>,
    pub revision: u64,
    pub overlay_url: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageDetail {
    pub image_id: String,
    pub status: Status,
    pub revision: u64,
    pub params: ReviewParams,
    pub result: Option<ImageSummary>,
    pub metrics: Option<MetricReport>,
    pub escalated: bool,
    pub overlay_url: String,
    pub mask_url: String,
    pub diff_url: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewProgress {
    pub total: usize,
    pub accepted: usize,
    pub needs_review: usize,
    /// Every image accepted.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportResponse {
    #[serde(flatten)]
    pub report: RunReport,
    pub review: ReviewProgress,
}

fn url(id: &str, file: &str, revision: u64) -> String {
    format!("/api/images/{id}/{file}?rev={revision}")
}

fn card(slot: &Slot) -> ImageCard {
    let state = slot.state.read().expect("state lock");
    let summary = state.outcome.as_ref().ok().map(|p| p.summary());
    ImageCard {
        image_id: slot.id.clone(),
        status: state.status(),
        sac_percent: summary.map(|s| s.sac_percent),
        class_count_used: summary.map(|s| s.class_count_used),
        revision: state.revision,
        overlay_url: url(&slot.id, "overlay.png", state.revision),
        error: state.outcome.as_ref().err().cloned(),
    }
}

fn detail(slot: &Slot) -> ImageDetail {
    let state = slot.state.read().expect("state lock");
    let processed = state.outcome.as_ref().ok();
    let rev = state.revision;
    ImageDetail {
        image_id: slot.id.clone(),
        status: state.status(),
        revision: rev,
        params: state.params,
        result: processed.map(|p| p.summary().clone()),
        metrics: processed.and_then(|p| p.summary().metrics.clone()),
        escalated: processed.is_some_and(|p| p.output.escalated),
        overlay_url: url(&slot.id, "overlay.png", rev),
        mask_url: url(&slot.id, "mask.png", rev),
        diff_url: processed
            .and_then(|p| p.diff_png.as_ref())
            .map(|_| url(&slot.id, "diff.png", rev)),
        error: state.outcome.as_ref().err().cloned(),
    }
}

fn slot(ws: &Workspace, id: &str) -> ApiResult<Arc<Slot>> {
    ws.slots
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(&format!("image {id:?}")))
}

async fn list_images_handler(State(ws): State<Shared>) -> Json<Vec<ImageCard>> {
    Json(ws.slots.values().map(|s| card(s)).collect())
}

async fn image_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ImageDetail>> {
    Ok(Json(detail(&*slot(&ws, &id)?)))
}

#[derive(Clone, Copy)]
enum Product {
    Overlay,
    Mask,
    Diff,
}

fn png(ws: &Workspace, id: &str, product: Product) -> ApiResult<Response> {
    let slot = slot(ws, id)?;
    let state = slot.state.read().expect("state lock");
    let processed = state
        .outcome
        .as_ref()
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, e.clone()))?;
    let bytes = match product {
        Product::Overlay => processed.overlay_png.clone(),
        Product::Mask => processed.mask_png.clone(),
        Product::Diff => processed
            .diff_png
            .clone()
            .ok_or_else(|| ApiError::not_found(&format!("ground truth for {id:?}")))?,
    };
    Ok((
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "no-cache"),
        ],
        bytes,
    )
        .into_response())
}

async fn overlay_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    png(&ws, &id, Product::Overlay)
}

async fn mask_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    png(&ws, &id, Product::Mask)
}

async fn diff_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    png(&ws, &id, Product::Diff)
}

async fn segment_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(request): Json<SegmentRequest>,
) -> ApiResult<Json<ImageDetail>> {
    let slot = slot(&ws, &id)?;
    let photo = slot
        .photo
        .clone()
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, e))?;
    let _guard = slot.busy.lock().await;

    let (current, unchanged) = {
        let state = slot.state.read().expect("state lock");
        let params = ReviewParams {
            c: request.c.unwrap_or(state.params.c),
            gamma: request.gamma.unwrap_or(state.params.gamma),
            shrub_threshold_px: request
                .shrub_threshold_px
                .unwrap_or(state.params.shrub_threshold_px),
        };
        (params, params == state.params && state.outcome.is_ok())
    };
    config_for(&ws.base, &current)
        .validate()
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    if unchanged {
        return Ok(Json(detail(&slot)));
    }

    let base = ws.base.clone();
    let truth = slot.truth.clone();
    let outcome =
        tokio::task::spawn_blocking(move || run(&photo, truth.as_deref(), &base, &current))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let sidecar = {
        let mut state = slot.state.write().expect("state lock");
        state.params = current;
        state.accepted = false;
        state.revision += 1;
        state.outcome = outcome;
        Sidecar {
            status: state.status(),
            params: state.params,
        }
    };
    ws.write_sidecar(&id, &sidecar)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(detail(&slot)))
}

async fn accept_handler(
    State(ws): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ImageDetail>> {
    let slot = slot(&ws, &id)?;
    let _guard = slot.busy.lock().await;
    let sidecar = {
        let mut state = slot.state.write().expect("state lock");
        if let Err(e) = &state.outcome {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("cannot accept a failed segmentation: {e}"),
            ));
        }
        state.accepted = true;
        Sidecar {
            status: Status::Accepted,
            params: state.params,
        }
    };
    ws.write_sidecar(&id, &sidecar)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(detail(&slot)))
}

async fn report_handler(State(ws): State<Shared>) -> Json<ReportResponse> {
    let statuses: Vec<Status> = ws
        .slots
        .values()
        .map(|s| s.state.read().expect("state lock").status())
        .collect();
    let accepted = statuses.iter().filter(|s| **s == Status::Accepted).count();
    Json(ReportResponse {
        report: ws.report(),
        review: ReviewProgress {
            total: statuses.len(),
            accepted,
            needs_review: statuses
                .iter()
                .filter(|s| **s == Status::NeedsReview)
                .count(),
            complete: accepted == statuses.len(),
        },
    })
}

pub fn router(workspace: Arc<Workspace>, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/images", get(list_images_handler))
        .route("/api/images/{id}", get(image_handler))
        .route("/api/images/{id}/overlay.png", get(overlay_handler))
        .route("/api/images/{id}/mask.png", get(mask_handler))
        .route("/api/images/{id}/diff.png", get(diff_handler))
        .route("/api/images/{id}/segment", post(segment_handler))
        .route("/api/images/{id}/accept", post(accept_handler))
        .route("/api/report", get(report_handler))
        .with_state(workspace);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    workspace: Workspace,
    host: &str,
    port: u16,
    ui_dir: Option<&Path>,
) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| anyhow::anyhow!("cannot listen on {host}:{port}: {e}"))?;
    log::info!(
        "serving {} images on http://{}",
        workspace.slots.len(),
        listener.local_addr()?
    );
    axum::serve(listener, router(Arc::new(workspace), ui_dir)).await?;
    Ok(())
}

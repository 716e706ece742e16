//! Directory batch runs.

use std::path::{Path, PathBuf};

use dehesa_core::raster::{
    discover_orthophoto, image_id, list_images, load_ground_truth, GroundTruthMask, Orthophoto,
    RasterError,
};
use dehesa_core::report::{ImageFailure, ImageSummary, RunReport};
use dehesa_core::{SegmentationConfig, StockingTable};
use rayon::prelude::*;

use crate::pipeline::{process, PipelineError};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("no BMP or PNG images in {0}")]
    EmptyInput(PathBuf),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Default)]
pub struct BatchConfig {
    pub segmentation: SegmentationConfig,
    pub ground_truth_dir: Option<PathBuf>,
    /// Pixel size assumed for images without a world file.
    pub assume_pixel_size: Option<f64>,
    pub stocking: StockingTable,
    /// Worker threads; `None` uses `SAC_WORKERS` or the core count.
    pub workers: Option<usize>,
}

/// Worker count from `SAC_WORKERS`, when set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    let value = std::env::var("SAC_WORKERS").ok()?;
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring SAC_WORKERS={value:?}");
            None
        }
    }
}

pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, BatchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.or_else(workers_from_env).unwrap_or(0))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))
}

/// Ground truth for `photo` from `dir/{id}.png`, if that file exists.
pub fn find_ground_truth(
    dir: &Path,
    photo: &Orthophoto,
) -> Result<Option<GroundTruthMask>, RasterError> {
    let path = dir.join(format!("{}.png", photo.id()));
    if !path.is_file() {
        return Ok(None);
    }
    load_ground_truth(&path, photo).map(Some)
}

fn run_one(
    image: &Path,
    config: &BatchConfig,
    output_dir: &Path,
) -> Result<ImageSummary, PipelineError> {
    let (photo, _warning) = discover_orthophoto(image, config.assume_pixel_size)?;
    let truth = match &config.ground_truth_dir {
        Some(dir) => {
            let truth = find_ground_truth(dir, &photo)?;
            if truth.is_none() {
                log::warn!("{}: no ground truth in {}", photo.id(), dir.display());
            }
            truth
        }
        None => None,
    };
    let processed = process(&photo, truth.as_ref(), &config.segmentation)?;
    processed.write(&output_dir.join(photo.id()))?;
    log::info!(
        "{}: SAC {:.2}% (c = {})",
        photo.id(),
        processed.summary().sac_percent,
        processed.summary().class_count_used
    );
    Ok(processed.result.summary)
}

/// Segments every image in `input_dir`, writing per-image products and
/// `report.json` under `output_dir`. Per-image failures are recorded in the
/// report; the batch carries on.
pub fn run_batch(
    input_dir: &Path,
    config: &BatchConfig,
    output_dir: &Path,
) -> Result<RunReport, BatchError> {
    let images = list_images(input_dir)?;
    if images.is_empty() {
        return Err(BatchError::EmptyInput(input_dir.to_path_buf()));
    }
    std::fs::create_dir_all(output_dir).map_err(|source| BatchError::Io {
        path: output_dir.to_path_buf(),
        source,
    })?;

    let pool = thread_pool(config.workers)?;
    let results: Vec<Result<ImageSummary, ImageFailure>> = pool.install(|| {
        images
            .par_iter()
            .map(|image| {
                run_one(image, config, output_dir).map_err(|e| {
                    log::error!("{}: {e}", image.display());
                    ImageFailure {
                        image_id: image_id(image),
                        error: e.to_string(),
                    }
                })
            })
            .collect()
    });
    let (mut summaries, mut failures) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(f) => failures.push(f),
        }
    }

    let report = RunReport::new(summaries, failures, &config.stocking);
    let path = output_dir.join(REPORT_FILE);
    std::fs::write(&path, report.to_json()).map_err(|source| BatchError::Io { path, source })?;
    Ok(report)
}

pub fn read_report(run_dir: &Path) -> anyhow::Result<RunReport> {
    let path = run_dir.join(REPORT_FILE);
    let text =
        std::fs::read_to_string(&path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    RunReport::from_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

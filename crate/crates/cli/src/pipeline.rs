//! One image through segmentation, evaluation and rendering.

use std::path::Path;

use dehesa_core::clustering::ModelExport;
use dehesa_core::raster::{GroundTruthMask, Orthophoto, RasterError};
use dehesa_core::render;
use dehesa_core::report::ImageSummary;
use dehesa_core::segmentation::{SegmentationError, SegmentationOutput};
use dehesa_core::{evaluate, segment, Class, SegmentationConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Contents of `result.json`: the summary plus the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub summary: ImageSummary,
    pub vegetation_cluster_ids: Vec<usize>,
    pub escalated: bool,
    pub model: ModelExport,
}

/// Rendered products of one segmentation.
#[derive(Debug, Clone)]
pub struct Processed {
    pub output: SegmentationOutput,
    pub result: ImageResult,
    pub mask_png: Vec<u8>,
    pub overlay_png: Vec<u8>,
    /// Only with ground truth.
    pub diff_png: Option<Vec<u8>>,
}

impl Processed {
    pub fn summary(&self) -> &ImageSummary {
        &self.result.summary
    }

    /// Writes `mask.png`, `overlay.png`, `diff.png` and `result.json` into
    /// `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| PipelineError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut files = vec![
            ("mask.png", self.mask_png.clone()),
            ("overlay.png", self.overlay_png.clone()),
        ];
        if let Some(diff) = &self.diff_png {
            files.push(("diff.png", diff.clone()));
        }
        let mut json = serde_json::to_string_pretty(&self.result).expect("result serializes");
        json.push('\n');
        files.push(("result.json", json.into_bytes()));
        for (name, bytes) in files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok(())
    }
}

pub fn process(
    photo: &Orthophoto,
    ground_truth: Option<&GroundTruthMask>,
    config: &SegmentationConfig,
) -> Result<Processed, PipelineError> {
    let output = segment(photo, config)?;
    let metrics = ground_truth.map(|gt| evaluate(&output, gt, photo));
    let diff_png = match ground_truth {
        Some(gt) => Some(render::png_bytes(&render::difference(
            &output.mask,
            &gt.mask,
            &[Class::Tree],
        )?)?),
        None => None,
    };
    let result = ImageResult {
        summary: ImageSummary::new(&output, photo, metrics),
        vegetation_cluster_ids: output.vegetation_cluster_ids.iter().copied().collect(),
        escalated: output.escalated,
        model: output.fit.export(&output.params),
    };
    Ok(Processed {
        mask_png: output.mask.to_png_bytes()?,
        overlay_png: render::png_bytes(&render::overlay(photo, &output.mask))?,
        diff_png,
        result,
        output,
    })
}

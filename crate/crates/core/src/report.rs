//! Run reports: per-image cover percentages and metrics plus pixel-weighted
//! aggregates and stocking loads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evaluation::{nu_by_class, MetricReport, NuByClass};
use crate::raster::{Class, Orthophoto};
use crate::segmentation::{BlobKind, SegmentationOutput};
use crate::stocking::StockingTable;

/// Decimal places kept for percentages.
pub const PERCENT_DECIMALS: i32 = 4;
/// Decimal places kept for ratios (metrics, NU).
pub const RATIO_DECIMALS: i32 = 6;

pub fn round_to(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale).round() / scale
}

fn round_opt(value: Option<f64>) -> Option<f64> {
    value.map(|v| round_to(v, RATIO_DECIMALS))
}

fn round_nu(nu: &NuByClass) -> NuByClass {
    nu.iter().map(|(c, v)| (*c, round_opt(*v))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tree: usize,
    pub shrub: usize,
    pub soil: usize,
}

impl ClassCounts {
    pub fn get(&self, class: Class) -> usize {
        match class {
            Class::Tree => self.tree,
            Class::Shrub => self.shrub,
            Class::Soil => self.soil,
        }
    }

    pub fn total(&self) -> usize {
        self.tree + self.shrub + self.soil
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlobSummary {
    pub count: usize,
    pub trees: usize,
    pub shrubs: usize,
    pub touching_border: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub area_m2: f64,
    pub sac_percent: f64,
    pub shrub_percent: f64,
    pub soil_percent: f64,
    pub pixel_counts: ClassCounts,
    pub blobs: BlobSummary,
    /// NU of the predicted regions.
    pub nu_by_class: NuByClass,
    pub metrics: Option<MetricReport>,
    pub class_count_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub shrub_threshold_px: u64,
    pub needs_review: bool,
    pub review_reason: Option<String>,
}

impl ImageSummary {
    pub fn new(
        output: &SegmentationOutput,
        photo: &Orthophoto,
        metrics: Option<MetricReport>,
    ) -> Self {
        let mask = &output.mask;
        let counts = ClassCounts {
            tree: mask.count(Class::Tree),
            shrub: mask.count(Class::Shrub),
            soil: mask.count(Class::Soil),
        };
        let pct = |n: usize| round_to(100.0 * n as f64 / mask.len() as f64, PERCENT_DECIMALS);
        let trees = output
            .blobs
            .iter()
            .filter(|b| b.kind == BlobKind::Tree)
            .count();
        ImageSummary {
            image_id: output.image_id.clone(),
            width: photo.width(),
            height: photo.height(),
            area_m2: photo.image_area_m2(),
            sac_percent: pct(counts.tree),
            shrub_percent: pct(counts.shrub),
            soil_percent: pct(counts.soil),
            pixel_counts: counts,
            blobs: BlobSummary {
                count: output.blobs.len(),
                trees,
                shrubs: output.blobs.len() - trees,
                touching_border: output.blobs.iter().filter(|b| b.touches_border).count(),
            },
            nu_by_class: round_nu(&nu_by_class(photo, mask)),
            metrics: metrics.map(|m| MetricReport {
                fpr: round_opt(m.fpr),
                fnr: round_opt(m.fnr),
                isj: round_opt(m.isj),
                nu_by_class: round_nu(&m.nu_by_class),
                reference_nu_by_class: round_nu(&m.reference_nu_by_class),
                image_id: m.image_id,
            }),
            class_count_used: output.class_count_used,
            iterations: output.fit.iterations,
            converged: output.fit.converged,
            shrub_threshold_px: output.shrub_threshold_px,
            needs_review: output.needs_review,
            review_reason: output.review_reason.clone(),
        }
    }

    pub fn pixels(&self) -> usize {
        self.pixel_counts.total()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFailure {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub image_count: usize,
    pub total_area_ha: f64,
    /// Pixel-weighted cover percentages.
    pub mean_percent: BTreeMap<Class, f64>,
    /// Pixel-weighted NU over the images where it is defined.
    pub mean_nu: BTreeMap<Class, Option<f64>>,
    /// Pixel-weighted ground-truth agreement over images with metrics.
    pub mean_isj: Option<f64>,
    pub stocking_load_step: f64,
    pub stocking_load_interpolated: f64,
}

impl Aggregate {
    pub fn from_images(images: &[ImageSummary], table: &StockingTable) -> Self {
        let total_pixels: usize = images.iter().map(ImageSummary::pixels).sum();
        let mean_percent: BTreeMap<Class, f64> = Class::ALL
            .iter()
            .map(|c| {
                let n: usize = images.iter().map(|i| i.pixel_counts.get(*c)).sum();
                let pct = if total_pixels == 0 {
                    0.0
                } else {
                    100.0 * n as f64 / total_pixels as f64
                };
                (*c, round_to(pct, PERCENT_DECIMALS))
            })
            .collect();
        let weighted = |value: &dyn Fn(&ImageSummary) -> Option<f64>| {
            let (sum, weight) = images
                .iter()
                .filter_map(|i| value(i).map(|v| (v * i.pixels() as f64, i.pixels() as f64)))
                .fold((0.0, 0.0), |(s, w), (v, p)| (s + v, w + p));
            (weight > 0.0).then(|| round_to(sum / weight, RATIO_DECIMALS))
        };
        let mean_nu = Class::ALL
            .iter()
            .map(|c| (*c, weighted(&|i| i.nu_by_class.get(c).copied().flatten())))
            .collect();
        let mean_isj = weighted(&|i| i.metrics.as_ref().and_then(|m| m.isj));
        let sac = mean_percent[&Class::Tree].clamp(0.0, 100.0);
        Aggregate {
            image_count: images.len(),
            total_area_ha: round_to(images.iter().map(|i| i.area_m2).sum::<f64>() / 10_000.0, 6),
            mean_percent,
            mean_nu,
            mean_isj,
            stocking_load_step: table.load_step(sac).expect("SAC within [0, 100]"),
            stocking_load_interpolated: round_to(
                table.load_interpolated(sac).expect("SAC within [0, 100]"),
                RATIO_DECIMALS,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub per_image: Vec<ImageSummary>,
    pub failures: Vec<ImageFailure>,
    pub aggregate: Aggregate,
}

impl RunReport {
    /// Sorts images and failures by id and computes the aggregate.
    pub fn new(
        mut per_image: Vec<ImageSummary>,
        mut failures: Vec<ImageFailure>,
        table: &StockingTable,
    ) -> Self {
        per_image.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        failures.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let aggregate = Aggregate::from_images(&per_image, table);
        RunReport {
            per_image,
            failures,
            aggregate,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

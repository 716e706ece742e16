//! Automatic orthophoto segmentation into tree crowns, shrubs and soil.
//!
//! The pipeline clusters pixel colors with GK-B, takes the greenest cluster as
//! vegetation, labels connected vegetation blobs, and splits them into tree
//! crowns and shrubs by area.

mod blobs;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clustering::{fit, ClusterError, ClusterModel, FitResult, FuzzyPartition, GkbParams};
use crate::raster::{BinaryMask, Class, LabelMask, Orthophoto, RasterError, WorldFile};

pub use blobs::{
    label_blobs, split_trees_shrubs, Blob, BlobKind, BlobLabels, Component, Connectivity,
    TreeShrubSplit,
};

/// Default blob area, in pixels, at or below which vegetation is a shrub.
pub const DEFAULT_SHRUB_THRESHOLD_PX: u64 = 1650;

/// Vegetation fraction bounds outside which auto mode adds a cluster.
pub const AUTO_ESCALATION_MIN_VEGETATION: f64 = 0.005;
pub const AUTO_ESCALATION_MAX_VEGETATION: f64 = 0.85;

#[derive(Debug, thiserror::Error)]
pub enum SegmentationError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(String),
    #[error("clusters cannot be told apart: every prototype has excess green {0:.3}")]
    AmbiguousClusters(f64),
}

/// Whether a failed first pass is retried with one more cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Escalation {
    /// The operator picks the cluster count.
    #[default]
    Manual,
    /// Retry with `c + 1` when the vegetation fraction is implausible.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub gkb: GkbParams,
    pub shrub_threshold_px: u64,
    /// When set, overrides `shrub_threshold_px` using each image's pixel area.
    #[serde(default)]
    pub shrub_threshold_m2: Option<f64>,
    pub connectivity: Connectivity,
    pub escalation: Escalation,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            gkb: GkbParams::new(2),
            shrub_threshold_px: DEFAULT_SHRUB_THRESHOLD_PX,
            shrub_threshold_m2: None,
            connectivity: Connectivity::Eight,
            escalation: Escalation::Manual,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        self.gkb.validate()?;
        if self.gkb.c < 2 {
            return Err(SegmentationError::InvalidConfig(
                "segmentation needs at least 2 clusters".into(),
            ));
        }
        if let Some(m2) = self.shrub_threshold_m2 {
            if !(m2 >= 0.0) || !m2.is_finite() {
                return Err(SegmentationError::InvalidConfig(format!(
                    "shrub threshold area must be >= 0, got {m2}"
                )));
            }
        }
        Ok(())
    }

    /// Shrub threshold in pixels for a raster with georeference `geo`.
    pub fn shrub_threshold_for(&self, geo: &WorldFile) -> u64 {
        match self.shrub_threshold_m2 {
            Some(m2) => shrub_threshold_from_m2(m2, geo),
            None => self.shrub_threshold_px,
        }
    }
}

/// Largest pixel count whose ground area does not exceed `area_m2`.
pub fn shrub_threshold_from_m2(area_m2: f64, geo: &WorldFile) -> u64 {
    (area_m2 / geo.pixel_area_m2() + 1e-9).floor() as u64
}

/// Excess-green index `2G − R − B` of an RGB prototype.
pub fn excess_green(rgb: &[f64]) -> f64 {
    2.0 * rgb[1] - rgb[0] - rgb[2]
}

/// Clusters whose prototypes share the maximal excess-green index. Fails when
/// every prototype ties.
pub fn classify_clusters(model: &ClusterModel) -> Result<BTreeSet<usize>, SegmentationError> {
    if model.clusters() < 2 {
        return Err(SegmentationError::InvalidConfig(
            "vegetation classification needs at least 2 clusters".into(),
        ));
    }
    if model.dim() != 3 {
        return Err(SegmentationError::InvalidConfig(format!(
            "vegetation classification needs RGB prototypes, got dimension {}",
            model.dim()
        )));
    }
    const TIE: f64 = 1e-9;
    let indices: Vec<f64> = model.prototypes.iter().map(|p| excess_green(p)).collect();
    let best = indices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: BTreeSet<usize> = indices
        .iter()
        .enumerate()
        .filter(|(_, v)| best - **v <= TIE)
        .map(|(i, _)| i)
        .collect();
    if winners.len() == indices.len() {
        return Err(SegmentationError::AmbiguousClusters(best));
    }
    Ok(winners)
}

/// Vegetation region `R_1`: pixels whose strongest membership is a vegetation
/// cluster (lowest index wins ties).
pub fn binarize(
    partition: &FuzzyPartition,
    vegetation: &BTreeSet<usize>,
    width: usize,
    height: usize,
) -> Result<BinaryMask, SegmentationError> {
    let bits = (0..partition.points())
        .map(|k| vegetation.contains(&partition.argmax(k)))
        .collect();
    Ok(BinaryMask::new(width, height, bits)?)
}

/// Share of the image covered by tree crowns, in percent.
pub fn compute_sac(trees: &BinaryMask, total_pixels: usize) -> f64 {
    if total_pixels == 0 {
        return 0.0;
    }
    100.0 * trees.count() as f64 / total_pixels as f64
}

/// Everything produced for one orthophoto.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationOutput {
    pub image_id: String,
    pub mask: LabelMask,
    pub blobs: Vec<Blob>,
    pub fit: FitResult,
    /// Clustering parameters of the run that produced `mask`.
    pub params: GkbParams,
    pub class_count_used: usize,
    pub vegetation_cluster_ids: BTreeSet<usize>,
    pub shrub_threshold_px: u64,
    pub escalated: bool,
    pub needs_review: bool,
    pub review_reason: Option<String>,
}

impl SegmentationOutput {
    pub fn percent(&self, class: Class) -> f64 {
        100.0 * self.mask.fraction(class)
    }

    pub fn sac_percent(&self) -> f64 {
        compute_sac(&self.mask.region(Class::Tree), self.mask.len())
    }
}

struct Attempt {
    fit: FitResult,
    params: GkbParams,
    vegetation: Option<BTreeSet<usize>>,
    region: BinaryMask,
}

impl Attempt {
    fn vegetation_fraction(&self) -> f64 {
        self.region.count() as f64 / self.region.len() as f64
    }

    fn implausible(&self) -> Option<String> {
        if self.vegetation.is_none() {
            return Some(format!(
                "clusters indistinguishable by color with c = {}",
                self.params.c
            ));
        }
        let f = self.vegetation_fraction();
        if !(AUTO_ESCALATION_MIN_VEGETATION..=AUTO_ESCALATION_MAX_VEGETATION).contains(&f) {
            return Some(format!(
                "vegetation covers {:.2}% of the image with c = {}",
                100.0 * f,
                self.params.c
            ));
        }
        None
    }
}

fn attempt(photo: &Orthophoto, params: GkbParams) -> Result<Attempt, SegmentationError> {
    let data = photo.feature_matrix();
    let result = fit(&data, &params)?;
    let (vegetation, region) = match classify_clusters(&result.model) {
        Ok(ids) => {
            let region = binarize(&result.partition, &ids, photo.width(), photo.height())?;
            (Some(ids), region)
        }
        Err(SegmentationError::AmbiguousClusters(_)) => {
            (None, BinaryMask::empty(photo.width(), photo.height()))
        }
        Err(e) => return Err(e),
    };
    Ok(Attempt {
        fit: result,
        params,
        vegetation,
        region,
    })
}

/// Runs the full automatic pipeline on one orthophoto.
pub fn segment(
    photo: &Orthophoto,
    config: &SegmentationConfig,
) -> Result<SegmentationOutput, SegmentationError> {
    config.validate()?;
    let mut run = attempt(photo, config.gkb.clone())?;
    let mut escalated = false;
    let mut review_reason = None;

    if let Some(reason) = run.implausible() {
        let next_c = config.gkb.c + 1;
        if config.escalation == Escalation::Auto && next_c < photo.len() {
            log::info!("{}: {reason}; retrying with c = {next_c}", photo.id());
            run = attempt(photo, config.gkb.clone().with_clusters(next_c))?;
            escalated = true;
            review_reason = Some(match run.implausible() {
                Some(again) => format!("{reason}; after escalation: {again}"),
                None => format!("{reason}; escalated to c = {next_c}"),
            });
        } else if run.vegetation.is_none() {
            review_reason = Some(reason);
        }
    }

    let threshold = config.shrub_threshold_for(photo.geo());
    let labels = label_blobs(&run.region, config.connectivity);
    let split = split_trees_shrubs(&labels, threshold);
    let mask = LabelMask::from_regions(&split.trees, &split.shrubs)?;

    Ok(SegmentationOutput {
        image_id: photo.id().to_string(),
        mask,
        blobs: split.blobs,
        class_count_used: run.params.c,
        params: run.params,
        fit: run.fit,
        vegetation_cluster_ids: run.vegetation.unwrap_or_default(),
        shrub_threshold_px: threshold,
        escalated,
        needs_review: review_reason.is_some(),
        review_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn model(prototypes: Vec<Vec<f64>>) -> ClusterModel {
        let c = prototypes.len();
        ClusterModel::new(prototypes, vec![DMatrix::identity(3, 3); c], &vec![1.0; c]).unwrap()
    }

    #[test]
    fn greenest_prototype_is_vegetation() {
        let m = model(vec![vec![60.0, 90.0, 50.0], vec![150.0, 130.0, 110.0]]);
        assert_eq!(excess_green(&m.prototypes[0]), 70.0);
        assert_eq!(excess_green(&m.prototypes[1]), 0.0);
        assert_eq!(classify_clusters(&m).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn three_clusters_one_vegetation() {
        let m = model(vec![
            vec![160.0, 130.0, 100.0],
            vec![55.0, 85.0, 45.0],
            vec![200.0, 180.0, 150.0],
        ]);
        assert_eq!(classify_clusters(&m).unwrap(), BTreeSet::from([1]));
    }

    #[test]
    fn identical_prototypes_are_ambiguous() {
        let m = model(vec![vec![100.0, 100.0, 100.0]; 2]);
        assert!(matches!(
            classify_clusters(&m),
            Err(SegmentationError::AmbiguousClusters(_))
        ));
    }

    #[test]
    fn binarize_tie_goes_to_lowest_index() {
        let u = FuzzyPartition::from_rows(vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]]).unwrap();
        let veg = BTreeSet::from([0]);
        let r1 = binarize(&u, &veg, 3, 1).unwrap();
        assert_eq!(r1.as_slice(), &[true, false, true]);
        let veg = BTreeSet::from([1]);
        let r1 = binarize(&u, &veg, 3, 1).unwrap();
        assert_eq!(r1.as_slice(), &[false, true, false]);
        assert_eq!(r1.count() + r1.complement().count(), 3);
    }

    #[test]
    fn sac_is_tree_fraction() {
        let m = BinaryMask::from_fn(8, 8, |x, _| x < 2);
        assert_eq!(compute_sac(&m, 64), 25.0);
        assert_eq!(compute_sac(&BinaryMask::empty(8, 8), 64), 0.0);
    }

    #[test]
    fn area_threshold_conversion() {
        let geo = WorldFile::with_pixel_size(0.25);
        assert_eq!(shrub_threshold_from_m2(103.125, &geo), 1650);
        assert_eq!(shrub_threshold_from_m2(103.1, &geo), 1649);
        let config = SegmentationConfig {
            shrub_threshold_m2: Some(103.125),
            shrub_threshold_px: 5,
            ..SegmentationConfig::default()
        };
        assert_eq!(config.shrub_threshold_for(&geo), 1650);
    }

    #[test]
    fn single_cluster_config_rejected() {
        let config = SegmentationConfig {
            gkb: GkbParams::new(1),
            ..SegmentationConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(SegmentationError::InvalidConfig(_))
        ));
    }
}

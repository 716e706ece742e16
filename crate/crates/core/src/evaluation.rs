//! Agreement and homogeneity measures for segmentation masks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryMask, Class, GroundTruthMask, LabelMask, Orthophoto};
use crate::segmentation::SegmentationOutput;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("masks differ in size")]
    ShapeMismatch,
    #[error("reference set is empty, rate is undefined")]
    EmptyReference,
    #[error("region is empty")]
    EmptyRegion,
    #[error("image has zero variance in every band")]
    ZeroVariance,
}

fn same_shape(a: &BinaryMask, b: &BinaryMask) -> Result<(), EvalError> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(EvalError::ShapeMismatch)
    }
}

/// `|B_O ∩ F_T| / |B_O|`: reference background predicted as foreground.
pub fn false_positive_rate(
    reference_background: &BinaryMask,
    predicted_foreground: &BinaryMask,
) -> Result<f64, EvalError> {
    same_shape(reference_background, predicted_foreground)?;
    let total = reference_background.count();
    if total == 0 {
        return Err(EvalError::EmptyReference);
    }
    Ok(reference_background.intersection_count(predicted_foreground) as f64 / total as f64)
}

/// `|F_O ∩ B_T| / |F_O|`: reference foreground predicted as background.
pub fn false_negative_rate(
    reference_foreground: &BinaryMask,
    predicted_background: &BinaryMask,
) -> Result<f64, EvalError> {
    same_shape(reference_foreground, predicted_background)?;
    let total = reference_foreground.count();
    if total == 0 {
        return Err(EvalError::EmptyReference);
    }
    Ok(reference_foreground.intersection_count(predicted_background) as f64 / total as f64)
}

/// Intersection over union. Two empty masks agree perfectly.
pub fn jaccard(predicted: &BinaryMask, reference: &BinaryMask) -> Result<f64, EvalError> {
    same_shape(predicted, reference)?;
    let union = predicted.union_count(reference);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(predicted.intersection_count(reference) as f64 / union as f64)
}

fn variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
}

/// Non-uniformity of a region: `(|region| / N) · σ²_region / σ²_image` per
/// color band, averaged over the bands with non-zero image variance.
/// Variances are population variances.
pub fn non_uniformity(photo: &Orthophoto, region: &BinaryMask) -> Result<f64, EvalError> {
    if region.width() != photo.width() || region.height() != photo.height() {
        return Err(EvalError::ShapeMismatch);
    }
    let size = region.count();
    if size == 0 {
        return Err(EvalError::EmptyRegion);
    }
    let share = size as f64 / photo.len() as f64;
    let pixels = photo.pixels();
    let mut sum = 0.0;
    let mut bands = 0;
    for band in 0..3 {
        let whole = variance(pixels.iter().map(move |p| f64::from(p[band])));
        if whole == 0.0 {
            continue;
        }
        let inside = variance(
            pixels
                .iter()
                .zip(region.as_slice())
                .filter(|(_, inside)| **inside)
                .map(move |(p, _)| f64::from(p[band])),
        );
        sum += share * inside / whole;
        bands += 1;
    }
    if bands == 0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(sum / bands as f64)
}

/// Which predicted/reference classes count as foreground for FPR/FNR/ISJ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Foreground {
    /// Tree crowns only; shrubs count as background.
    #[default]
    TreeOnly,
    /// Trees and shrubs together.
    Vegetation,
}

impl Foreground {
    fn classes(self) -> &'static [Class] {
        match self {
            Foreground::TreeOnly => &[Class::Tree],
            Foreground::Vegetation => &[Class::Tree, Class::Shrub],
        }
    }
}

/// Per-class NU; `None` where the class region is empty or NU is undefined.
pub type NuByClass = BTreeMap<Class, Option<f64>>;

pub fn nu_by_class(photo: &Orthophoto, mask: &LabelMask) -> NuByClass {
    Class::ALL
        .iter()
        .map(|c| (*c, non_uniformity(photo, &mask.region(*c)).ok()))
        .collect()
}

/// Comparison of one predicted mask against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub image_id: String,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub isj: Option<f64>,
    /// NU of the predicted regions.
    pub nu_by_class: NuByClass,
    /// NU of the ground-truth regions.
    pub reference_nu_by_class: NuByClass,
}

/// FPR, FNR and ISJ on `foreground` classes, plus NU of every class in both
/// masks. Undefined values are left empty.
pub fn evaluate_masks(
    image_id: &str,
    predicted: &LabelMask,
    reference: &LabelMask,
    photo: &Orthophoto,
    foreground: Foreground,
) -> MetricReport {
    let classes = foreground.classes();
    let pred_fg = predicted.regions(classes);
    let ref_fg = reference.regions(classes);
    MetricReport {
        image_id: image_id.to_string(),
        fpr: false_positive_rate(&ref_fg.complement(), &pred_fg).ok(),
        fnr: false_negative_rate(&ref_fg, &pred_fg.complement()).ok(),
        isj: jaccard(&pred_fg, &ref_fg).ok(),
        nu_by_class: nu_by_class(photo, predicted),
        reference_nu_by_class: nu_by_class(photo, reference),
    }
}

/// Tree-class comparison of a segmentation with its expert mask.
pub fn evaluate(
    output: &SegmentationOutput,
    ground_truth: &GroundTruthMask,
    photo: &Orthophoto,
) -> MetricReport {
    evaluate_masks(
        &output.image_id,
        &output.mask,
        &ground_truth.mask,
        photo,
        Foreground::TreeOnly,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::WorldFile;

    fn grid(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(rows[0].len(), rows.len(), |x, y| {
            rows[y].as_bytes()[x] == b'#'
        })
    }

    #[test]
    fn fpr_hand_count() {
        // 8 background pixels on the left half, 2 of them predicted foreground
        let background = grid(&["##..", "##..", "##..", "##.."]);
        let predicted = grid(&["#...", "....", ".#..", "..##"]);
        assert_eq!(false_positive_rate(&background, &predicted).unwrap(), 0.25);
        assert_eq!(
            false_positive_rate(&background, &BinaryMask::empty(4, 4)).unwrap(),
            0.0
        );
        assert_eq!(
            false_positive_rate(&background, &grid(&["####"; 4])).unwrap(),
            1.0
        );
        assert_eq!(
            false_positive_rate(&BinaryMask::empty(4, 4), &predicted),
            Err(EvalError::EmptyReference)
        );
    }

    #[test]
    fn fnr_hand_count() {
        let foreground = grid(&["....", ".##.", ".##.", "...."]);
        let missed = grid(&["#...", ".#..", "....", "...#"]);
        assert_eq!(false_negative_rate(&foreground, &missed).unwrap(), 0.25);
        assert_eq!(
            false_negative_rate(&foreground, &BinaryMask::empty(4, 4)).unwrap(),
            0.0
        );
        assert_eq!(false_negative_rate(&foreground, &foreground).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_cases() {
        let a = grid(&["##..", "##.."]);
        let b = grid(&[".##.", ".##."]);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &a.complement()).unwrap(), 0.0);
        assert!((jaccard(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let e = BinaryMask::empty(4, 2);
        assert_eq!(jaccard(&e, &e).unwrap(), 1.0);
        assert_eq!(
            jaccard(&e, &BinaryMask::empty(2, 4)),
            Err(EvalError::ShapeMismatch)
        );
    }

    fn photo(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Orthophoto {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Orthophoto::new("p", width, height, pixels, WorldFile::with_pixel_size(1.0)).unwrap()
    }

    #[test]
    fn nu_extremes() {
        let p = photo(4, 4, |x, y| [(x * 40) as u8, (y * 30) as u8, 7]);
        let whole = BinaryMask::from_fn(4, 4, |_, _| true);
        assert!((non_uniformity(&p, &whole).unwrap() - 1.0).abs() < 1e-15);
        let uniform = photo(
            4,
            4,
            |x, _| if x < 2 { [10, 200, 30] } else { [90, 60, 20] },
        );
        let left = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        assert_eq!(non_uniformity(&uniform, &left).unwrap(), 0.0);
    }

    #[test]
    fn checkerboard_region_has_zero_nu() {
        let p = photo(6, 6, |x, y| {
            if (x + y) % 2 == 0 {
                [200, 40, 90]
            } else {
                [20, 180, 90]
            }
        });
        let black = BinaryMask::from_fn(6, 6, |x, y| (x + y) % 2 == 0);
        assert_eq!(non_uniformity(&p, &black).unwrap(), 0.0);
    }

    #[test]
    fn nu_skips_constant_bands() {
        // only the red band varies: NU is the red-band ratio alone
        let p = photo(4, 1, |x, _| [[0, 10, 20, 30][x], 5, 5]);
        let region = BinaryMask::from_fn(4, 1, |x, _| x < 2);
        // region var = 25, image var = 125, share = 0.5
        assert!((non_uniformity(&p, &region).unwrap() - 0.1).abs() < 1e-15);
        let flat = photo(2, 2, |_, _| [1, 1, 1]);
        assert_eq!(
            non_uniformity(&flat, &BinaryMask::from_fn(2, 2, |_, _| true)),
            Err(EvalError::ZeroVariance)
        );
        assert_eq!(
            non_uniformity(&p, &BinaryMask::empty(4, 1)),
            Err(EvalError::EmptyRegion)
        );
    }

    #[test]
    fn identical_masks_score_perfectly() {
        let p = photo(4, 4, |x, y| [(x * 50) as u8, (y * 50) as u8, 0]);
        let labels = (0..16)
            .map(|i| [Class::Tree, Class::Soil, Class::Shrub, Class::Soil][i % 4])
            .collect();
        let mask = LabelMask::new(4, 4, labels).unwrap();
        let report = evaluate_masks("p", &mask, &mask, &p, Foreground::TreeOnly);
        assert_eq!(report.fpr, Some(0.0));
        assert_eq!(report.fnr, Some(0.0));
        assert_eq!(report.isj, Some(1.0));
        assert_eq!(report.nu_by_class, report.reference_nu_by_class);
    }

    #[test]
    fn shrubs_count_as_background_unless_requested() {
        let p = photo(2, 1, |x, _| [x as u8 * 100, 0, 0]);
        let pred = LabelMask::new(2, 1, vec![Class::Tree, Class::Shrub]).unwrap();
        let reference = LabelMask::new(2, 1, vec![Class::Tree, Class::Tree]).unwrap();
        let tree_only = evaluate_masks("p", &pred, &reference, &p, Foreground::TreeOnly);
        assert_eq!(tree_only.isj, Some(0.5));
        assert_eq!(tree_only.fpr, None);
        let veg = evaluate_masks("p", &pred, &reference, &p, Foreground::Vegetation);
        assert_eq!(veg.isj, Some(1.0));
    }
}

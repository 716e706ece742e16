//! Synthetic orthophotos with known vegetation stencils, for tests, benches
//! and demos.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::FeatureMatrix;
use crate::raster::{BinaryMask, Class, LabelMask, Orthophoto, WorldFile};

/// Pixel size of the reference orthophotos, in meters.
pub const ORTHO_PIXEL_SIZE_M: f64 = 0.25;
/// Side of the reference orthophotos, in pixels.
pub const ORTHO_SIDE_PX: usize = 256;

/// Filled disks `(cx, cy, r)`.
pub fn disks(width: usize, height: usize, disks: &[(f64, f64, f64)]) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| {
        disks.iter().any(|(cx, cy, r)| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    })
}

/// A single centered blob covering as close to `fraction` of the raster as
/// the pixel grid allows: a disk when it fits, otherwise full rows from the
/// top.
pub fn area_stencil(width: usize, height: usize, fraction: f64) -> BinaryMask {
    let target = (fraction.clamp(0.0, 1.0) * (width * height) as f64).round() as usize;
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let max_r = (width.min(height) as f64 - 1.0) / 2.0;
    let count = |r: f64| disks(width, height, &[(cx, cy, r)]).count();
    if count(max_r) >= target {
        let (mut lo, mut hi) = (0.0, max_r);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if count(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let best = if target.abs_diff(count(lo)) < target.abs_diff(count(hi)) {
            lo
        } else {
            hi
        };
        return disks(width, height, &[(cx, cy, best)]);
    }
    BinaryMask::from_fn(width, height, |x, y| y * width + x < target)
}

/// Mean colors and per-channel noise of the two surface types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Palette {
    pub vegetation: [f64; 3],
    pub soil: [f64; 3],
    pub noise_sigma: f64,
}

impl Default for Palette {
    /// Dark green crowns on light brown soil.
    fn default() -> Self {
        Palette {
            vegetation: [62.0, 94.0, 48.0],
            soil: [168.0, 140.0, 108.0],
            noise_sigma: 8.0,
        }
    }
}

/// Paints `stencil` with vegetation color over soil, adding seeded Gaussian
/// noise.
pub fn render(
    id: &str,
    stencil: &BinaryMask,
    palette: &Palette,
    pixel_size: f64,
    seed: u64,
) -> Orthophoto {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, palette.noise_sigma.max(0.0)).expect("valid sigma");
    let pixels = stencil
        .as_slice()
        .iter()
        .map(|veg| {
            let base = if *veg {
                palette.vegetation
            } else {
                palette.soil
            };
            base.map(|c| (c + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        })
        .collect();
    Orthophoto::new(
        id,
        stencil.width(),
        stencil.height(),
        pixels,
        WorldFile::with_pixel_size(pixel_size),
    )
    .expect("stencil is non-empty")
}

/// Ground truth for a rendered stencil: blobs larger than `shrub_threshold_px`
/// are trees, the rest shrubs.
pub fn stencil_truth(stencil: &BinaryMask, shrub_threshold_px: u64) -> LabelMask {
    use crate::segmentation::{label_blobs, split_trees_shrubs, Connectivity};
    let split = split_trees_shrubs(
        &label_blobs(stencil, Connectivity::Eight),
        shrub_threshold_px,
    );
    LabelMask::from_regions(&split.trees, &split.shrubs).expect("disjoint regions")
}

/// All-tree truth for a stencil, regardless of blob size.
pub fn tree_truth(stencil: &BinaryMask) -> LabelMask {
    let labels = stencil
        .as_slice()
        .iter()
        .map(|v| if *v { Class::Tree } else { Class::Soil })
        .collect();
    LabelMask::new(stencil.width(), stencil.height(), labels).expect("non-empty")
}

/// Isotropic Gaussian clouds around `centers`, `per_blob` points each, with
/// the generating blob index of every point.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    sigma: f64,
    per_blob: usize,
    seed: u64,
) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let dim = centers[0].len();
    let mut values = Vec::with_capacity(centers.len() * per_blob * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_blob);
    for (b, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            values.extend(center.iter().map(|c| c + noise.sample(&mut rng)));
            labels.push(b);
        }
    }
    (
        FeatureMatrix::new(dim, values).expect("rectangular"),
        labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_stencil_hits_fraction() {
        for f in [0.0, 0.05, 0.3, 0.5, 0.9] {
            let s = area_stencil(64, 48, f);
            let got = s.count() as f64 / s.len() as f64;
            assert!((got - f).abs() < 0.01, "fraction {f} -> {got}");
        }
    }

    #[test]
    fn render_is_deterministic() {
        let s = area_stencil(16, 16, 0.3);
        let a = render("a", &s, &Palette::default(), 0.25, 7);
        let b = render("a", &s, &Palette::default(), 0.25, 7);
        assert_eq!(a, b);
        assert_ne!(a, render("a", &s, &Palette::default(), 0.25, 8));
    }

    #[test]
    fn truth_splits_by_size() {
        let s = disks(40, 40, &[(10.0, 10.0, 6.0), (30.0, 30.0, 1.0)]);
        let truth = stencil_truth(&s, 20);
        assert_eq!(truth.count(Class::Shrub), 5);
        assert_eq!(truth.count(Class::Tree) + 5, s.count());
    }
}

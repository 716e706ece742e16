//! Visual products: class contours over the photo and prediction/reference
//! difference maps.

use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};

use crate::raster::{Class, LabelMask, Orthophoto, RasterError};

pub const TREE_CONTOUR: Rgb<u8> = Rgb([0, 255, 0]);
pub const SHRUB_CONTOUR: Rgb<u8> = Rgb([255, 255, 0]);
pub const FALSE_POSITIVE: Rgb<u8> = Rgb([0, 0, 255]);
pub const FALSE_NEGATIVE: Rgb<u8> = Rgb([255, 165, 0]);
pub const TRUE_POSITIVE: Rgb<u8> = Rgb([255, 255, 255]);
pub const TRUE_NEGATIVE: Rgb<u8> = Rgb([0, 0, 0]);

fn on_boundary(mask: &LabelMask, x: usize, y: usize) -> bool {
    let class = mask.get(x, y);
    let (w, h) = (mask.width(), mask.height());
    (x > 0 && mask.get(x - 1, y) != class)
        || (y > 0 && mask.get(x, y - 1) != class)
        || (x + 1 < w && mask.get(x + 1, y) != class)
        || (y + 1 < h && mask.get(x, y + 1) != class)
}

/// The photo with tree crowns outlined in green and shrubs in yellow.
pub fn overlay(photo: &Orthophoto, mask: &LabelMask) -> RgbImage {
    let mut img = photo.to_rgb_image();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let color = match mask.get(x, y) {
                Class::Tree => TREE_CONTOUR,
                Class::Shrub => SHRUB_CONTOUR,
                Class::Soil => continue,
            };
            if on_boundary(mask, x, y) {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
    img
}

/// Per-pixel agreement of `predicted` with `reference` on `classes`: false
/// positives blue, false negatives orange, agreement white/black.
pub fn difference(
    predicted: &LabelMask,
    reference: &LabelMask,
    classes: &[Class],
) -> Result<RgbImage, RasterError> {
    if predicted.width() != reference.width() || predicted.height() != reference.height() {
        return Err(RasterError::Dimensions(
            "predicted and reference masks differ in size".into(),
        ));
    }
    let (w, h) = (predicted.width() as u32, predicted.height() as u32);
    Ok(RgbImage::from_fn(w, h, |x, y| {
        let p = classes.contains(&predicted.get(x as usize, y as usize));
        let r = classes.contains(&reference.get(x as usize, y as usize));
        match (p, r) {
            (true, true) => TRUE_POSITIVE,
            (false, false) => TRUE_NEGATIVE,
            (true, false) => FALSE_POSITIVE,
            (false, true) => FALSE_NEGATIVE,
        }
    }))
}

pub fn png_bytes(img: &RgbImage) -> Result<Vec<u8>, RasterError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| RasterError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::WorldFile;

    #[test]
    fn contours_drawn_on_region_edges() {
        let photo = Orthophoto::new(
            "o",
            5,
            5,
            vec![[10, 10, 10]; 25],
            WorldFile::with_pixel_size(1.0),
        )
        .unwrap();
        let labels = (0..25)
            .map(|i| {
                let (x, y) = (i % 5, i / 5);
                if (1..4).contains(&x) && (1..4).contains(&y) {
                    Class::Tree
                } else {
                    Class::Soil
                }
            })
            .collect();
        let mask = LabelMask::new(5, 5, labels).unwrap();
        let img = overlay(&photo, &mask);
        assert_eq!(*img.get_pixel(1, 1), TREE_CONTOUR);
        // interior pixel keeps the photo color
        assert_eq!(*img.get_pixel(2, 2), Rgb([10, 10, 10]));
        assert_eq!(*img.get_pixel(0, 0), Rgb([10, 10, 10]));
    }

    #[test]
    fn difference_colors() {
        let pred = LabelMask::new(
            4,
            1,
            vec![Class::Tree, Class::Tree, Class::Soil, Class::Shrub],
        )
        .unwrap();
        let reference = LabelMask::new(
            4,
            1,
            vec![Class::Tree, Class::Soil, Class::Tree, Class::Soil],
        )
        .unwrap();
        let img = difference(&pred, &reference, &[Class::Tree]).unwrap();
        assert_eq!(*img.get_pixel(0, 0), TRUE_POSITIVE);
        assert_eq!(*img.get_pixel(1, 0), FALSE_POSITIVE);
        assert_eq!(*img.get_pixel(2, 0), FALSE_NEGATIVE);
        assert_eq!(*img.get_pixel(3, 0), TRUE_NEGATIVE);
        assert!(png_bytes(&img).unwrap().starts_with(b"\x89PNG"));
    }
}

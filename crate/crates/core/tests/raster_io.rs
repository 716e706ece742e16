use std::fs;

use dehesa_core::evaluation::{evaluate_masks, Foreground};
use dehesa_core::raster::{
    discover_orthophoto, list_images, load_ground_truth, load_orthophoto, Class, LabelMask,
    Orthophoto, RasterError, WorldFile,
};
use dehesa_core::synthetic::{area_stencil, render, Palette};

fn indexed_png(width: u32, height: u32, indices: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width, height);
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_palette(vec![0, 0, 0, 0, 255, 0, 255, 255, 0, 255, 0, 0]);
    let mut writer = encoder.write_header().unwrap();
    writer.write_image_data(indices).unwrap();
    writer.finish().unwrap();
    out
}

#[test]
fn orthophoto_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let photo = render(
        "tile_07",
        &area_stencil(40, 30, 0.3),
        &Palette::default(),
        0.25,
        2,
    );
    for (ext, world_ext) in [("bmp", "bpw"), ("png", "pgw")] {
        let image = dir.path().join(format!("tile_07.{ext}"));
        let world = dir.path().join(format!("tile_07.{world_ext}"));
        photo.write(&image, &world).unwrap();
        let back = load_orthophoto(&image, &world).unwrap();
        assert_eq!(back, photo);
        let (found, warning) = discover_orthophoto(&image, None).unwrap();
        assert_eq!(found, photo);
        assert!(warning.is_none());
    }
    assert_eq!(list_images(dir.path()).unwrap().len(), 2);
}

#[test]
fn missing_world_file_needs_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let photo = render(
        "bare",
        &area_stencil(8, 8, 0.5),
        &Palette::default(),
        0.25,
        0,
    );
    let image = dir.path().join("bare.png");
    photo.to_rgb_image().save(&image).unwrap();
    assert!(matches!(
        discover_orthophoto(&image, None),
        Err(RasterError::MissingWorldFile(_))
    ));
    let (found, warning) = discover_orthophoto(&image, Some(0.5)).unwrap();
    assert!(warning.is_some());
    assert_eq!(found.image_area_m2(), 16.0);
}

#[test]
fn tile_area_follows_world_file() {
    let photo = Orthophoto::new(
        "a",
        256,
        256,
        vec![[0, 0, 0]; 256 * 256],
        WorldFile::with_pixel_size(0.25),
    )
    .unwrap();
    assert_eq!(photo.image_area_m2(), 4096.0);
}

#[test]
fn ground_truth_half_tree_scores_half() {
    let dir = tempfile::tempdir().unwrap();
    let photo = render("gt", &area_stencil(4, 4, 0.5), &Palette::default(), 0.25, 0);
    // left half tree
    let indices: Vec<u8> = (0..16).map(|i| u8::from(i % 4 < 2)).collect();
    let path = dir.path().join("gt.png");
    fs::write(&path, indexed_png(4, 4, &indices)).unwrap();
    let truth = load_ground_truth(&path, &photo).unwrap();
    assert_eq!(truth.mask.fraction(Class::Tree), 0.5);

    let all_tree = LabelMask::filled(4, 4, Class::Tree);
    let m = evaluate_masks("gt", &all_tree, &truth.mask, &photo, Foreground::TreeOnly);
    assert_eq!(m.isj, Some(0.5));
    assert_eq!(m.fpr, Some(1.0));
    assert_eq!(m.fnr, Some(0.0));
}

#[test]
fn ground_truth_rejects_bad_masks() {
    let dir = tempfile::tempdir().unwrap();
    let photo = render("gt", &area_stencil(4, 4, 0.5), &Palette::default(), 0.25, 0);

    let small = dir.path().join("small.png");
    fs::write(&small, indexed_png(3, 4, &[0; 12])).unwrap();
    assert!(matches!(
        load_ground_truth(&small, &photo),
        Err(RasterError::Dimensions(_))
    ));

    let mut indices = vec![0u8; 16];
    indices[5] = 3;
    let bad = dir.path().join("bad.png");
    fs::write(&bad, indexed_png(4, 4, &indices)).unwrap();
    assert!(matches!(
        load_ground_truth(&bad, &photo),
        Err(RasterError::LabelRange {
            x: 1,
            y: 1,
            value: 3
        })
    ));
}

#[test]
fn label_mask_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let labels: Vec<Class> = (0..30).map(|i| Class::from_index(i % 3).unwrap()).collect();
    let mask = LabelMask::new(6, 5, labels).unwrap();
    let path = dir.path().join("m.png");
    mask.write_png(&path).unwrap();
    assert_eq!(LabelMask::read_png(&path).unwrap(), mask);
}

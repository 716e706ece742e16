mod common;

use std::process::{Command, Stdio};

use common::{write_fixtures, FIXTURES};
use dehesa_cli::batch::{run_batch, BatchConfig, BatchError, REPORT_FILE};
use dehesa_cli::export::write_csv;
use dehesa_core::raster::LabelMask;
use dehesa_core::segmentation::Escalation;
use dehesa_core::{Class, SegmentationConfig};

const SIDE: usize = 160;

fn auto_config() -> BatchConfig {
    BatchConfig {
        segmentation: SegmentationConfig {
            escalation: Escalation::Auto,
            ..SegmentationConfig::default()
        },
        ..BatchConfig::default()
    }
}

#[test]
fn fixture_sacs_match_stencils() {
    let dir = tempfile::tempdir().unwrap();
    let (input, truth, out) = (
        dir.path().join("in"),
        dir.path().join("gt"),
        dir.path().join("out"),
    );
    let stencils = write_fixtures(&input, Some(&truth), SIDE);
    let config = BatchConfig {
        ground_truth_dir: Some(truth),
        ..auto_config()
    };
    let report = run_batch(&input, &config, &out).unwrap();
    assert!(report.failures.is_empty());
    assert_eq!(report.per_image.len(), FIXTURES.len());

    for ((id, stencil), image) in stencils.iter().zip(&report.per_image) {
        assert_eq!(&image.image_id, id);
        let expected = 100.0 * stencil.count() as f64 / stencil.len() as f64;
        assert!(
            (image.sac_percent - expected).abs() <= 1.0,
            "{id}: {} vs {expected}",
            image.sac_percent
        );
        let total = image.sac_percent + image.shrub_percent + image.soil_percent;
        assert!((total - 100.0).abs() <= 0.01);
        let metrics = image.metrics.as_ref().unwrap();
        assert!(metrics.isj.unwrap() >= 0.95);

        let product = out.join(id);
        for file in ["mask.png", "overlay.png", "diff.png", "result.json"] {
            assert!(product.join(file).is_file(), "{id}/{file}");
        }
        let mask = LabelMask::read_png(&product.join("mask.png")).unwrap();
        assert_eq!(mask.count(Class::Tree), image.pixel_counts.tree);
    }
    assert!(out.join(REPORT_FILE).is_file());

    // aggregate is pixel-weighted; all fixtures share a size here
    let mean: f64 = report.per_image.iter().map(|i| i.sac_percent).sum::<f64>() / 4.0;
    assert!((report.aggregate.mean_percent[&Class::Tree] - mean).abs() < 1e-3);
    assert_eq!(report.aggregate.image_count, 4);
}

#[test]
fn predictions_as_ground_truth_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let (input, first, second) = (
        dir.path().join("in"),
        dir.path().join("a"),
        dir.path().join("b"),
    );
    write_fixtures(&input, None, 96);
    let report = run_batch(&input, &auto_config(), &first).unwrap();
    assert!(report.per_image.iter().all(|i| i.metrics.is_none()));

    let truth = dir.path().join("gt");
    std::fs::create_dir_all(&truth).unwrap();
    for (id, _) in FIXTURES {
        std::fs::copy(
            first.join(id).join("mask.png"),
            truth.join(format!("{id}.png")),
        )
        .unwrap();
    }
    let config = BatchConfig {
        ground_truth_dir: Some(truth),
        ..auto_config()
    };
    let report = run_batch(&input, &config, &second).unwrap();
    for image in &report.per_image {
        let m = image.metrics.as_ref().unwrap();
        assert_eq!(m.isj, Some(1.0));
        assert_eq!(m.fpr, Some(0.0));
        // FNR is undefined where the reference has no trees
        let expected_fnr = (image.pixel_counts.tree > 0).then_some(0.0);
        assert_eq!(m.fnr, expected_fnr);
    }
    assert_eq!(report.aggregate.mean_isj, Some(1.0));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_fixtures(&input, None, 96);
    let one = BatchConfig {
        workers: Some(1),
        ..auto_config()
    };
    let many = BatchConfig {
        workers: Some(4),
        ..auto_config()
    };
    run_batch(&input, &one, &dir.path().join("a")).unwrap();
    run_batch(&input, &many, &dir.path().join("b")).unwrap();
    let read = |run: &str| std::fs::read(dir.path().join(run).join(REPORT_FILE)).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn unreadable_images_are_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_fixtures(&input, None, 64);
    std::fs::write(input.join("broken.bmp"), b"not a bitmap").unwrap();
    std::fs::write(input.join("broken.bpw"), "0.25\n0\n0\n-0.25\n0\n0\n").unwrap();
    let report = run_batch(&input, &auto_config(), &dir.path().join("out")).unwrap();
    assert_eq!(report.per_image.len(), 4);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].image_id, "broken");
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_batch(dir.path(), &auto_config(), &dir.path().join("out")),
        Err(BatchError::EmptyInput(_))
    ));
}

#[test]
fn csv_has_one_row_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_fixtures(&input, None, 64);
    let report = run_batch(&input, &auto_config(), &dir.path().join("out")).unwrap();
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("image_id,width,height,area_m2,sac_percent"));
    assert!(lines[1].starts_with("Im_55,64,64,256"));
}

fn dehesa() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dehesa"));
    cmd.env("RUST_LOG", "off").stderr(Stdio::null());
    cmd
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let status = dehesa()
        .args(["segment", "--input"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = dehesa().args(["segment", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let input = dir.path().join("in");
    write_fixtures(&input, None, 64);
    let out = dir.path().join("run");
    let status = dehesa()
        .args(["segment", "--seed", "3", "--c", "2", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let csv = dehesa()
        .args(["report", "--csv", "--run"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(csv.status.success());
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 5);
    let table = dehesa()
        .args(["report", "--run"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(String::from_utf8(table.stdout)
        .unwrap()
        .contains("stocking load"));

    std::fs::write(input.join("zz_broken.png"), b"junk").unwrap();
    let status = dehesa()
        .args(["segment", "--assume-pixel-size", "0.25", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(dir.path().join("run2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

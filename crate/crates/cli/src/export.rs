//! Spreadsheet and terminal renderings of a run report.

use std::io::Write;

use dehesa_core::report::RunReport;
use dehesa_core::Class;
use serde::Serialize;

#[derive(Serialize)]
struct Row<'a> {
    image_id: &'a str,
    width: usize,
    height: usize,
    area_m2: f64,
    sac_percent: f64,
    shrub_percent: f64,
    soil_percent: f64,
    blobs: usize,
    tree_blobs: usize,
    shrub_blobs: usize,
    class_count_used: usize,
    needs_review: bool,
    fpr: Option<f64>,
    fnr: Option<f64>,
    isj: Option<f64>,
    nu_tree: Option<f64>,
    nu_shrub: Option<f64>,
    nu_soil: Option<f64>,
}

/// One row per image, header first.
pub fn write_csv<W: Write>(report: &RunReport, out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for image in &report.per_image {
        let nu = |c: Class| image.nu_by_class.get(&c).copied().flatten();
        let metric =
            |f: fn(&dehesa_core::MetricReport) -> Option<f64>| image.metrics.as_ref().and_then(f);
        writer.serialize(Row {
            image_id: &image.image_id,
            width: image.width,
            height: image.height,
            area_m2: image.area_m2,
            sac_percent: image.sac_percent,
            shrub_percent: image.shrub_percent,
            soil_percent: image.soil_percent,
            blobs: image.blobs.count,
            tree_blobs: image.blobs.trees,
            shrub_blobs: image.blobs.shrubs,
            class_count_used: image.class_count_used,
            needs_review: image.needs_review,
            fpr: metric(|m| m.fpr),
            fnr: metric(|m| m.fnr),
            isj: metric(|m| m.isj),
            nu_tree: nu(Class::Tree),
            nu_shrub: nu(Class::Shrub),
            nu_soil: nu(Class::Soil),
        })?;
    }
    writer.flush()?;
    Ok(())
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.decimals$}"))
}

pub fn write_table<W: Write>(report: &RunReport, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>8} {:>3} {:>7} {:>7}  review",
        "image", "SAC%", "shrub%", "soil%", "c", "ISJ", "NU"
    )?;
    for i in &report.per_image {
        writeln!(
            out,
            "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>3} {:>7} {:>7}  {}",
            i.image_id,
            i.sac_percent,
            i.shrub_percent,
            i.soil_percent,
            i.class_count_used,
            opt(i.metrics.as_ref().and_then(|m| m.isj), 4),
            opt(i.nu_by_class.get(&Class::Tree).copied().flatten(), 4),
            if i.needs_review { "yes" } else { "" }
        )?;
    }
    for f in &report.failures {
        writeln!(out, "{:<16} FAILED: {}", f.image_id, f.error)?;
    }
    let a = &report.aggregate;
    writeln!(out)?;
    writeln!(out, "images:        {}", a.image_count)?;
    writeln!(out, "area:          {:.4} ha", a.total_area_ha)?;
    for class in Class::ALL {
        writeln!(
            out,
            "{:<14} {:.2}% (NU {})",
            format!("{}:", class.name()),
            a.mean_percent[&class],
            opt(a.mean_nu[&class], 4)
        )?;
    }
    writeln!(out, "mean ISJ:      {}", opt(a.mean_isj, 4))?;
    writeln!(
        out,
        "stocking load: {:.2} LU/ha (step), {:.3} LU/ha (interpolated)",
        a.stocking_load_step, a.stocking_load_interpolated
    )
}

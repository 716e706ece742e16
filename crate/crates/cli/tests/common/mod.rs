#![allow(dead_code)]

use std::path::Path;

use dehesa_core::synthetic::{area_stencil, render, tree_truth, Palette, ORTHO_PIXEL_SIZE_M};
use dehesa_core::BinaryMask;

pub const FIXTURES: [(&str, f64); 4] = [
    ("Im_55", 0.12),
    ("Im_56", 0.25),
    ("Im_57", 0.40),
    ("Im_58", 0.55),
];

/// Writes `{id}.bmp` + `{id}.bpw` for each fixture into `dir`, and the
/// all-tree stencil truth into `truth_dir` when given. Returns the stencils.
pub fn write_fixtures(
    dir: &Path,
    truth_dir: Option<&Path>,
    side: usize,
) -> Vec<(String, BinaryMask)> {
    std::fs::create_dir_all(dir).unwrap();
    if let Some(t) = truth_dir {
        std::fs::create_dir_all(t).unwrap();
    }
    FIXTURES
        .iter()
        .enumerate()
        .map(|(i, (id, fraction))| {
            let stencil = area_stencil(side, side, *fraction);
            let photo = render(
                id,
                &stencil,
                &Palette::default(),
                ORTHO_PIXEL_SIZE_M,
                100 + i as u64,
            );
            photo
                .write(
                    &dir.join(format!("{id}.bmp")),
                    &dir.join(format!("{id}.bpw")),
                )
                .unwrap();
            if let Some(t) = truth_dir {
                tree_truth(&stencil)
                    .write_png(&t.join(format!("{id}.png")))
                    .unwrap();
            }
            (id.to_string(), stencil)
        })
        .collect()
}

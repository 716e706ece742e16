//! Shared fixtures for the benchmarks.

use dehesa_core::synthetic::{disks, render, Palette, ORTHO_PIXEL_SIZE_M, ORTHO_SIDE_PX};
use dehesa_core::Orthophoto;

/// A reference-sized tile with a few crowns of mixed size.
pub fn tile(seed: u64) -> Orthophoto {
    let side = ORTHO_SIDE_PX as f64;
    let stencil = disks(
        ORTHO_SIDE_PX,
        ORTHO_SIDE_PX,
        &[
            (0.3 * side, 0.3 * side, 0.18 * side),
            (0.7 * side, 0.6 * side, 0.12 * side),
            (0.2 * side, 0.8 * side, 0.05 * side),
            (0.85 * side, 0.15 * side, 0.03 * side),
        ],
    );
    render(
        "bench",
        &stencil,
        &Palette::default(),
        ORTHO_PIXEL_SIZE_M,
        seed,
    )
}

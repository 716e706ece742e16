use std::collections::VecDeque;

use dehesa_core::raster::BinaryMask;
use dehesa_core::segmentation::Connectivity;
use rand::{Rng, SeedableRng};

/// Breadth-first flood fill; components numbered by first pixel in raster
/// order.
pub fn flood_fill(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Option<u32>> {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let offsets: Vec<(isize, isize)> = match connectivity {
        Connectivity::Four => vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|d| *d != (0, 0))
            .collect(),
    };
    let mut labels = vec![None; mask.len()];
    let mut next = 0;
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !mask.get(x as usize, y as usize) || labels[idx].is_some() {
                continue;
            }
            labels[idx] = Some(next);
            let mut queue = VecDeque::from([(x, y)]);
            while let Some((cx, cy)) = queue.pop_front() {
                for (dx, dy) in &offsets {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let n = (ny * w + nx) as usize;
                    if mask.get(nx as usize, ny as usize) && labels[n].is_none() {
                        labels[n] = Some(next);
                        queue.push_back((nx, ny));
                    }
                }
            }
            next += 1;
        }
    }
    labels
}

pub fn random_mask(width: usize, height: usize, density: f64, seed: u64) -> BinaryMask {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..width * height)
        .map(|_| rng.random_bool(density))
        .collect();
    BinaryMask::new(width, height, bits).unwrap()
}

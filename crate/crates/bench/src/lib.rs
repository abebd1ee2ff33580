//! Fixtures shared by the benchmarks.

use pef_core::{PefParams, Point, RegionGrid, RgbRaster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TYPES: usize = 5;

/// A `size x size` grid of square blocks with random types.
pub fn block_grid(size: usize, block: usize, meters_per_pixel: f64, seed: u64) -> RegionGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_side = size.div_ceil(block);
    let blocks: Vec<u16> = (0..per_side * per_side)
        .map(|_| rng.random_range(0..TYPES as u16))
        .collect();
    let labels = (0..size * size)
        .map(|i| blocks[(i / size / block) * per_side + (i % size) / block])
        .collect();
    RegionGrid::new(size, size, meters_per_pixel, TYPES, labels).unwrap()
}

pub fn params() -> PefParams {
    PefParams::new(74.95, vec![1.12, 1.74, 2.38, 4.39, 1.08], 6.8).unwrap()
}

pub fn center(grid: &RegionGrid) -> Point {
    Point::new(grid.width_m() / 2.0, grid.height_m() / 2.0)
}

/// Receivers drawn uniformly over the grid, at least `min_distance` from `tx`.
pub fn receivers(grid: &RegionGrid, tx: Point, min_distance: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Point::new(rng.random::<f64>() * grid.width_m(), rng.random::<f64>() * grid.height_m());
        if p.distance(&tx) > min_distance {
            out.push(p);
        }
    }
    out
}

/// The grid painted with `TYPES` colors plus mild per-pixel noise.
pub fn noisy_map(grid: &RegionGrid, seed: u64) -> RgbRaster {
    const PALETTE: [[u8; 3]; TYPES] =
        [[200, 40, 40], [240, 200, 60], [60, 160, 70], [40, 60, 200], [230, 230, 230]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = grid
        .labels()
        .iter()
        .map(|&l| PALETTE[usize::from(l)].map(|c| c.saturating_add(rng.random_range(0..4))))
        .collect();
    RgbRaster::new(grid.width(), grid.height(), pixels).unwrap()
}

#![allow(dead_code)]

use pef_core::{PefParams, Point, RegionGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Intercept, per-type exponents, and deviation of the heterogeneous
/// five-type reference scenario.
pub const REF_C: f64 = 74.95;
pub const REF_N: [f64; 5] = [1.12, 1.74, 2.38, 4.39, 1.08];
pub const REF_SIGMA: f64 = 6.80;
pub const REF_L: f64 = 140.0;
pub const REF_D0: f64 = 1.0;

pub fn reference_params() -> PefParams {
    PefParams::new(REF_C, REF_N.to_vec(), REF_SIGMA).unwrap()
}

/// Side of the reference map in cells, and cell size in meters.
pub const REF_SIZE: usize = 400;
pub const REF_MPP: f64 = 2.5;

pub fn reference_tx() -> Point {
    Point::new(500.0, 500.0)
}

/// A 1 km square Voronoi map of five region types around `sites` random
/// seeds. The seed nearest the transmitter is type 0.
pub fn voronoi_map(size: usize, mpp: f64, sites: usize, tx: Point, seed: u64) -> RegionGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = size as f64 * mpp;
    let mut centers: Vec<(f64, f64, u16)> = (0..sites)
        .map(|i| {
            (
                rng.random::<f64>() * extent,
                rng.random::<f64>() * extent,
                (i % 5) as u16,
            )
        })
        .collect();
    let d2 = |c: &(f64, f64, u16), x: f64, y: f64| (c.0 - x).powi(2) + (c.1 - y).powi(2);
    let home = (0..sites)
        .min_by(|&a, &b| d2(&centers[a], tx.x, tx.y).total_cmp(&d2(&centers[b], tx.x, tx.y)))
        .unwrap();
    let home_type = centers[home].2;
    // Swap types so the transmitter's site has type 0 and counts stay equal.
    for c in centers.iter_mut() {
        if c.2 == 0 {
            c.2 = home_type;
        } else if c.2 == home_type {
            c.2 = 0;
        }
    }
    centers[home].2 = 0;
    let labels = (0..size * size)
        .map(|i| {
            let x = ((i % size) as f64 + 0.5) * mpp;
            let y = ((i / size) as f64 + 0.5) * mpp;
            centers
                .iter()
                .min_by(|a, b| d2(a, x, y).total_cmp(&d2(b, x, y)))
                .unwrap()
                .2
        })
        .collect();
    RegionGrid::new(size, size, mpp, 5, labels).unwrap()
}

pub fn reference_map() -> RegionGrid {
    voronoi_map(REF_SIZE, REF_MPP, 120, reference_tx(), 2024)
}

/// Colors the reference map is painted with, one per type.
pub const REF_PALETTE: [[u8; 3]; 5] = [
    [200, 40, 40],
    [240, 200, 60],
    [60, 160, 70],
    [40, 60, 200],
    [230, 230, 230],
];

/// The grid rendered as a color map, ready for classification.
pub fn paint(grid: &RegionGrid, palette: &[[u8; 3]]) -> pef_core::RgbRaster {
    let pixels = grid.labels().iter().map(|&l| palette[usize::from(l)]).collect();
    pef_core::RgbRaster::new(grid.width(), grid.height(), pixels).unwrap()
}

/// Random labels in rectangular blobs on a `width x height` grid.
pub fn random_grid(
    width: usize,
    height: usize,
    meters_per_pixel: f64,
    num_types: usize,
    seed: u64,
) -> RegionGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u16> = (0..width * height)
        .map(|_| rng.random_range(0..num_types) as u16)
        .collect();
    for _ in 0..(width * height / 8).max(1) {
        let c0 = rng.random_range(0..width);
        let r0 = rng.random_range(0..height);
        let c1 = (c0 + rng.random_range(1..=4)).min(width);
        let r1 = (r0 + rng.random_range(1..=4)).min(height);
        let t = rng.random_range(0..num_types) as u16;
        for r in r0..r1 {
            for c in c0..c1 {
                labels[r * width + c] = t;
            }
        }
    }
    RegionGrid::new(width, height, meters_per_pixel, num_types, labels).unwrap()
}

pub fn random_point(grid: &RegionGrid, rng: &mut impl Rng) -> Point {
    Point::new(
        rng.random::<f64>() * grid.width_m(),
        rng.random::<f64>() * grid.height_m(),
    )
}

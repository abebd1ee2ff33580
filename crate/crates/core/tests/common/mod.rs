#![allow(dead_code)]

use pef_core::{Point, RegionGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random labels on a `width x height` grid with `num_types` types, in
/// rectangular blobs so that runs longer than one cell occur.
pub fn random_grid(
    width: usize,
    height: usize,
    meters_per_pixel: f64,
    num_types: usize,
    seed: u64,
) -> RegionGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![0u16; width * height];
    for l in labels.iter_mut() {
        *l = rng.random_range(0..num_types) as u16;
    }
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

/// Uniform point strictly inside the grid.
pub fn random_point(grid: &RegionGrid, rng: &mut impl Rng) -> Point {
    Point::new(
        rng.random::<f64>() * grid.width_m(),
        rng.random::<f64>() * grid.height_m(),
    )
}

/// Per-type length of `tx -> rx` beyond `d0`, by sampling `samples` evenly
/// spaced midpoints and looking up each one's cell.
pub fn dense_type_lengths(
    grid: &RegionGrid,
    tx: Point,
    rx: Point,
    d0: f64,
    samples: usize,
) -> Vec<f64> {
    let total = tx.distance(&rx);
    let dl = total / samples as f64;
    let mut lengths = vec![0.0; grid.num_types()];
    for s in 0..samples {
        let t = (s as f64 + 0.5) / samples as f64;
        if t * total < d0 {
            continue;
        }
        let p = Point::new(tx.x + t * (rx.x - tx.x), tx.y + t * (rx.y - tx.y));
        lengths[grid.label_at(p).unwrap() as usize] += dl;
    }
    lengths
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Voronoi partition of a `size x size` grid around `sites` random seeds,
/// each site given a type in round-robin order so every type is present.
pub fn voronoi_grid(
    size: usize,
    meters_per_pixel: f64,
    num_types: usize,
    sites: usize,
    seed: u64,
) -> RegionGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<(f64, f64)> = (0..sites)
        .map(|_| (rng.random::<f64>() * size as f64, rng.random::<f64>() * size as f64))
        .collect();
    let labels = (0..size * size)
        .map(|i| {
            let (c, r) = ((i % size) as f64 + 0.5, (i / size) as f64 + 0.5);
            let nearest = (0..sites)
                .min_by(|&a, &b| {
                    let da = (centers[a].0 - c).powi(2) + (centers[a].1 - r).powi(2);
                    let db = (centers[b].0 - c).powi(2) + (centers[b].1 - r).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            (nearest % num_types) as u16
        })
        .collect();
    RegionGrid::new(size, size, meters_per_pixel, num_types, labels).unwrap()
}

/// `count` kept `(d, l)` pairs from the log-distance model with `d0 = 1`:
/// `d` log-uniform over `[10, 10^4]`, draws at or above `cap` discarded.
pub fn logdist_sample(
    c: f64,
    n: f64,
    sigma: f64,
    cap: Option<f64>,
    count: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = 10f64.powf(rng.random_range(1.0..4.0));
        let l = c + 10.0 * n * d.log10() + noise.sample(&mut rng);
        if cap.is_none_or(|cap| l < cap) {
            out.push((d, l));
        }
    }
    out
}

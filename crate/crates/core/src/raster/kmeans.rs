//! Weighted k-means over the distinct colors of a raster.
//!
//! Clustering the color histogram instead of individual pixels gives the same
//! objective and assignments (every pixel of one color lands in the same
//! cluster) at a fraction of the cost for palette-like map images.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{RegionGrid, Rgb, RgbRaster};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

/// Relative luminance weights (Rec. 709).
pub fn luminance(c: [f64; 3]) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    /// Cluster centers, ordered by ascending luminance.
    pub centroids: Vec<[f64; 3]>,
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    /// Weighted objective after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(p: &[f64; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Draws an index with probability proportional to `weights`.
fn sample_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut target = rng.random::<f64>() * total;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if target < w {
                return Some(i);
            }
            target -= w;
            last_positive = Some(i);
        }
    }
    last_positive
}

fn plus_plus_init(
    points: &[[f64; 3]],
    weights: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<[f64; 3]> {
    let first = sample_weighted(rng, weights).expect("weights are positive");
    let mut centroids = vec![points[first]];
    let mut closest: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centroids.len() < k {
        let scores: Vec<f64> = closest.iter().zip(weights).map(|(d, w)| d * w).collect();
        // Fewer distinct points than k cannot happen; callers check.
        let next = sample_weighted(rng, &scores).expect("k does not exceed distinct points");
        let c = points[next];
        for (d, p) in closest.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding on weighted points.
///
/// Stops when an assignment step changes nothing or after `max_iterations`.
/// An emptied cluster is re-seeded at the point farthest from its centroid.
/// Requires `k <= points.len()` with all points distinct and weights positive.
pub fn kmeans_colors(
    points: &[[f64; 3]],
    weights: &[f64],
    k: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<KMeansOutcome> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} must be in 1..={} (distinct colors)",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, weights, k, &mut rng);
    let mut assignment = vec![usize::MAX; points.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        let step: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        let changed = step
            .iter()
            .zip(&assignment)
            .any(|((new, _), old)| new != old);
        for (slot, (c, _)) in assignment.iter_mut().zip(&step) {
            *slot = *c;
        }
        objective.push(step.iter().zip(weights).map(|((_, d), w)| d * w).sum());
        if !changed {
            converged = true;
            break;
        }

        let mut sums = vec![[0.0f64; 3]; k];
        let mut mass = vec![0.0f64; k];
        for ((p, &w), &c) in points.iter().zip(weights).zip(&assignment) {
            for ch in 0..3 {
                sums[c][ch] += w * p[ch];
            }
            mass[c] += w;
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                centroids[c] = sums[c].map(|s| s / mass[c]);
            }
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                continue;
            }
            let far = (0..points.len())
                .max_by(|&a, &b| {
                    let da = dist2(&points[a], &centroids[assignment[a]]);
                    let db = dist2(&points[b], &centroids[assignment[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("points is non-empty");
            let old = assignment[far];
            centroids[c] = points[far];
            assignment[far] = c;
            mass[old] -= weights[far];
            mass[c] = weights[far];
        }
    }

    // Canonical order: ascending luminance, ties by channel values.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        luminance(centroids[a])
            .total_cmp(&luminance(centroids[b]))
            .then_with(|| centroids[a].partial_cmp(&centroids[b]).unwrap())
    });
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    Ok(KMeansOutcome {
        centroids: order.iter().map(|&c| centroids[c]).collect(),
        assignment: assignment.iter().map(|&c| rank[c]).collect(),
        objective,
        iterations,
        converged,
    })
}

/// Labels every pixel with the nearest of `k` RGB centroids.
pub fn classify_regions(
    raster: &RgbRaster,
    k: usize,
    seed: u64,
    meters_per_pixel: f64,
) -> Result<RegionGrid> {
    let mut histogram: BTreeMap<Rgb, usize> = BTreeMap::new();
    for &p in raster.pixels() {
        *histogram.entry(p).or_default() += 1;
    }
    if k > histogram.len() {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} exceeds the {} distinct colors in the map",
            histogram.len()
        )));
    }
    let colors: Vec<Rgb> = histogram.keys().copied().collect();
    let points: Vec<[f64; 3]> = colors.iter().map(|c| c.map(f64::from)).collect();
    let weights: Vec<f64> = histogram.values().map(|&n| n as f64).collect();
    let outcome = kmeans_colors(&points, &weights, k, seed, MAX_ITERATIONS)?;

    let lookup: BTreeMap<Rgb, u16> = colors
        .iter()
        .zip(&outcome.assignment)
        .map(|(&c, &label)| (c, label as u16))
        .collect();
    let labels = raster.pixels().iter().map(|p| lookup[p]).collect();
    let type_colors = outcome
        .centroids
        .iter()
        .map(|c| c.map(|v| v.round().clamp(0.0, 255.0) as u8))
        .collect();
    RegionGrid::new(raster.width(), raster.height(), meters_per_pixel, k, labels)?
        .with_type_colors(type_colors)
}

//! Path loss prediction: the multi-exponent model, its single-exponent
//! log-distance special case, shadow fading draws, and coverage heatmaps.

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::pathtrace::{path_coefficients, CoefficientVector};
use crate::raster::RegionGrid;

/// Parameters of the multi-exponent model.
#[derive(Debug, Clone, PartialEq)]
pub struct PefParams {
    /// Path loss at the close-in distance, dB.
    pub intercept_c: f64,
    /// One path loss exponent per region type.
    pub exponents: Vec<f64>,
    /// Shadow fading standard deviation, dB.
    pub sigma: f64,
}

impl PefParams {
    pub fn new(intercept_c: f64, exponents: Vec<f64>, sigma: f64) -> Result<Self> {
        let p = Self {
            intercept_c,
            exponents,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_types(&self) -> usize {
        self.exponents.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.exponents.is_empty() {
            return Err(Error::InvalidInput("at least one exponent is required".into()));
        }
        let finite = self.intercept_c.is_finite()
            && self.sigma.is_finite()
            && self.exponents.iter().all(|n| n.is_finite());
        if !finite {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "shadow fading deviation must be non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// The single-exponent model with the same intercept and deviation.
    pub fn uniform(intercept_c: f64, n: f64, num_types: usize, sigma: f64) -> Self {
        Self {
            intercept_c,
            exponents: vec![n; num_types],
            sigma,
        }
    }

    /// Reads a JSON params document `{"c", "n": [...], "sigma", "d0"?}`.
    pub fn load(path: &Path) -> Result<(PefParams, Option<f64>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: PefParamsDoc = serde_json::from_str(&text)
            .map_err(|e| Error::format("params document", e.to_string()))?;
        let params = PefParams::new(doc.c, doc.n, doc.sigma)?;
        Ok((params, doc.d0))
    }

    pub fn save(&self, d0: Option<f64>, path: &Path) -> Result<()> {
        let doc = PefParamsDoc {
            c: self.intercept_c,
            n: self.exponents.clone(),
            sigma: self.sigma,
            d0,
        };
        write_json(&doc, path)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PefParamsDoc {
    c: f64,
    n: Vec<f64>,
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d0: Option<f64>,
}

fn write_json<T: Serialize>(doc: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::format("params document", e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parameters of the log-distance model `C + 10 n log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogDistParams {
    #[serde(rename = "c")]
    pub intercept_c: f64,
    pub n: f64,
    pub sigma: f64,
    pub d0: f64,
}

impl LogDistParams {
    pub fn validate(&self) -> Result<()> {
        if ![self.intercept_c, self.n, self.sigma, self.d0]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        if self.sigma < 0.0 || self.d0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "need sigma >= 0 and d0 > 0, got sigma={} d0={}",
                self.sigma, self.d0
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: LogDistParams = serde_json::from_str(&text)
            .map_err(|e| Error::format("params document", e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

/// Mean path loss `C + sum_i D_i n_i`, dB.
pub fn predict_mean(coeffs: &CoefficientVector, params: &PefParams) -> Result<f64> {
    if coeffs.num_types() != params.num_types() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.num_types(),
            found: params.num_types(),
        });
    }
    Ok(params.intercept_c
        + coeffs
            .coeffs
            .iter()
            .zip(&params.exponents)
            .map(|(d, n)| d * n)
            .sum::<f64>())
}

/// Mean path loss along the straight line `tx -> rx` (no shadow fading).
pub fn predict_pef(
    grid: &RegionGrid,
    tx: Point,
    rx: Point,
    d0: f64,
    params: &PefParams,
) -> Result<f64> {
    if params.num_types() != grid.num_types() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_types(),
            found: params.num_types(),
        });
    }
    predict_mean(&path_coefficients(grid, tx, rx, d0)?, params)
}

/// Log-distance mean path loss at distance `d >= d0`, dB.
pub fn predict_logdist(d: f64, params: &LogDistParams) -> Result<f64> {
    params.validate()?;
    if !(d >= params.d0) {
        return Err(Error::WithinCloseIn {
            distance: d,
            d0: params.d0,
        });
    }
    Ok(params.intercept_c + 10.0 * params.n * (d / params.d0).log10())
}

/// Seeded source of zero-mean Gaussian shadow fading.
#[derive(Debug, Clone)]
pub struct ShadowFading {
    normal: Normal<f64>,
    rng: ChaCha8Rng,
}

impl ShadowFading {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "shadow fading deviation must be non-negative, got {sigma}"
            )));
        }
        Ok(Self {
            normal: Normal::new(0.0, sigma).expect("sigma checked above"),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sample(&mut self, mean: f64) -> f64 {
        if self.normal.std_dev() == 0.0 {
            return mean;
        }
        mean + self.normal.sample(&mut self.rng)
    }
}

/// `mean` plus one seeded N(0, sigma^2) draw.
pub fn sample_shadowed(mean: f64, sigma: f64, seed: u64) -> Result<f64> {
    Ok(ShadowFading::new(sigma, seed)?.sample(mean))
}

/// Predicted path loss on a regular subsample of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub cols: usize,
    pub rows: usize,
    /// Grid cells between consecutive samples.
    pub stride: usize,
    /// Row-major dB values.
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Grid cell sampled by heatmap entry `(col, row)`.
    pub fn grid_cell(&self, col: usize, row: usize) -> (usize, usize) {
        (col * self.stride, row * self.stride)
    }

    /// Comma-separated dB values, one heatmap row per line, 2 decimals.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        for row in self.values.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Min-max normalized 8-bit graymap (P5); brighter means more loss.
    pub fn write_pgm(&self, out: &mut impl Write) -> std::io::Result<()> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        write!(out, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect();
        out.write_all(&bytes)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write_csv(w))
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write_pgm(w))
    }
}

fn save_with(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Mean path loss at the center of every `stride`-th cell in both axes.
/// Cells whose center lies within `d0` of `tx` report the intercept `C`.
pub fn heatmap(
    grid: &RegionGrid,
    tx: Point,
    d0: f64,
    params: &PefParams,
    stride: usize,
) -> Result<Heatmap> {
    params.validate()?;
    if stride == 0 {
        return Err(Error::InvalidInput("heatmap stride must be at least 1".into()));
    }
    if params.num_types() != grid.num_types() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_types(),
            found: params.num_types(),
        });
    }
    grid.cell_of(tx)?;
    let cols = grid.width().div_ceil(stride);
    let rows = grid.height().div_ceil(stride);
    let row_values: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let rx = grid.cell_center(c * stride, r * stride);
                    if tx.distance(&rx) <= d0 {
                        Ok(params.intercept_c)
                    } else {
                        predict_pef(grid, tx, rx, d0, params)
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Heatmap {
        cols,
        rows,
        stride,
        values: row_values.into_iter().flatten().collect(),
    })
}

//! Path loss measurement sets: CSV ingestion, truncation, and a seeded
//! synthetic generator that draws from the model itself.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::inference::DesignMatrix;
use crate::pathtrace::path_coefficients;
use crate::propagation::{predict_pef, PefParams};
use crate::raster::RegionGrid;

pub const CSV_HEADER: [&str; 5] = ["tx_x_m", "tx_y_m", "rx_x_m", "rx_y_m", "pathloss_db"];

/// Candidate draws per generation batch.
const GEN_BATCH: usize = 4096;
/// Draws allowed per requested record before giving up.
const GEN_DRAWS_PER_RECORD: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub rx: Point,
    /// dB
    pub pathloss: f64,
}

/// Path loss observations from one transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub tx: Point,
    pub records: Vec<Measurement>,
    /// Level at and above which losses go unrecorded, dB.
    pub truncation: Option<f64>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(distance, path loss)` per record.
    pub fn distance_pairs(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (self.tx.distance(&r.rx), r.pathloss))
            .collect()
    }

    pub fn check_within(&self, grid: &RegionGrid) -> Result<()> {
        grid.cell_of(self.tx)?;
        for r in &self.records {
            grid.cell_of(r.rx)?;
        }
        Ok(())
    }

    /// Traces every record through `grid` into a design matrix. Records at
    /// or above `truncation` are dropped (see [`DesignMatrix::rejected`]).
    pub fn design(
        &self,
        grid: &RegionGrid,
        d0: f64,
        truncation: Option<f64>,
    ) -> Result<DesignMatrix> {
        let coeffs = self
            .records
            .par_iter()
            .map(|r| path_coefficients(grid, self.tx, r.rx, d0))
            .collect::<Result<Vec<_>>>()?;
        let mut design = DesignMatrix::new(grid.num_types(), truncation)?;
        for (c, r) in coeffs.iter().zip(&self.records) {
            design.push_path(c, r.pathloss)?;
        }
        Ok(design)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::format("measurement csv", e.to_string())
}

/// Reads a measurement CSV with header
/// `tx_x_m,tx_y_m,rx_x_m,rx_y_m,pathloss_db`. All rows must share one Tx.
pub fn load_measurements(path: &Path) -> Result<MeasurementSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(file)
}

pub fn parse_measurements(reader: impl std::io::Read) -> Result<MeasurementSet> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::format(
            "measurement csv",
            format!("expected header `{}`", CSV_HEADER.join(",")),
        ));
    }
    let mut tx: Option<Point> = None;
    let mut records = Vec::new();
    for (i, row) in csv.deserialize::<[f64; 5]>().enumerate() {
        let line = i + 2;
        let v = row.map_err(|e| {
            Error::format("measurement csv", format!("line {line}: {e}"))
        })?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::format(
                "measurement csv",
                format!("line {line}: non-finite value"),
            ));
        }
        let row_tx = Point::new(v[0], v[1]);
        match tx {
            None => tx = Some(row_tx),
            Some(t) if t != row_tx => {
                return Err(Error::format(
                    "measurement csv",
                    format!("line {line}: second transmitter position {row_tx}, expected {t}"),
                ))
            }
            Some(_) => {}
        }
        records.push(Measurement {
            rx: Point::new(v[2], v[3]),
            pathloss: v[4],
        });
    }
    let tx = tx.ok_or_else(|| Error::format("measurement csv", "no measurement rows"))?;
    Ok(MeasurementSet {
        tx,
        records,
        truncation: None,
    })
}

/// Writes values in shortest round-trip form, so a reload is exact.
pub fn save_measurements(set: &MeasurementSet, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_measurements(set, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_measurements(set: &MeasurementSet, writer: impl std::io::Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in &set.records {
        csv.write_record(
            [set.tx.x, set.tx.y, r.rx.x, r.rx.y, r.pathloss].map(|v| v.to_string()),
        )
        .map_err(csv_error)?;
    }
    csv.flush()
        .map_err(|e| Error::format("measurement csv", e.to_string()))
}

/// Keeps records strictly below `level` and records it as the truncation.
pub fn truncate(set: &MeasurementSet, level: f64) -> Result<MeasurementSet> {
    if !level.is_finite() {
        return Err(Error::InvalidInput(format!(
            "truncation level must be finite, got {level}"
        )));
    }
    Ok(MeasurementSet {
        tx: set.tx,
        records: set
            .records
            .iter()
            .filter(|r| r.pathloss < level)
            .copied()
            .collect(),
        truncation: Some(set.truncation.map_or(level, |l| l.min(level))),
    })
}

/// Draws `count` measurements from the model: receivers at uniformly chosen
/// cell centers more than `d0` from `tx`, path loss = mean prediction plus
/// N(0, sigma^2). With `truncation`, draws at or above it are discarded
/// until `count` are kept.
pub fn gen_synthetic(
    grid: &RegionGrid,
    tx: Point,
    params: &PefParams,
    d0: f64,
    count: usize,
    truncation: Option<f64>,
    seed: u64,
) -> Result<MeasurementSet> {
    params.validate()?;
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if params.num_types() != grid.num_types() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_types(),
            found: params.num_types(),
        });
    }
    if truncation.is_some_and(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("truncation level must be finite".into()));
    }
    grid.cell_of(tx)?;
    let noise = Normal::new(0.0, params.sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = count.saturating_mul(GEN_DRAWS_PER_RECORD);
    let mut draws = 0;
    let mut records = Vec::with_capacity(count);

    while records.len() < count {
        if draws >= budget {
            return Err(Error::RetryBudgetExhausted {
                kept: records.len(),
                requested: count,
                draws,
            });
        }
        let batch = GEN_BATCH.min(budget - draws);
        let candidates: Vec<(Point, f64)> = (0..batch)
            .map(|_| {
                let col = rng.random_range(0..grid.width());
                let row = rng.random_range(0..grid.height());
                (grid.cell_center(col, row), noise.sample(&mut rng))
            })
            .collect();
        let means: Vec<Option<f64>> = candidates
            .par_iter()
            .map(|&(rx, _)| {
                if tx.distance(&rx) <= d0 {
                    Ok(None)
                } else {
                    predict_pef(grid, tx, rx, d0, params).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        for ((rx, shadow), mean) in candidates.into_iter().zip(means) {
            draws += 1;
            let Some(mean) = mean else { continue };
            let pathloss = mean + shadow;
            if truncation.is_some_and(|l| pathloss >= l) {
                continue;
            }
            records.push(Measurement { rx, pathloss });
            if records.len() == count {
                break;
            }
        }
    }
    Ok(MeasurementSet {
        tx,
        records,
        truncation,
    })
}

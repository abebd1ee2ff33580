//! Scoring predictions against measurements.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{Measurement, MeasurementSet};
use crate::error::{Error, Result};
use crate::propagation::{predict_logdist, predict_pef, LogDistParams, PefParams};
use crate::raster::RegionGrid;

/// RMSE differences at or below this count as a tie, dB.
pub const TIE_TOLERANCE_DB: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rmse: f64,
    pub mean_abs_error: f64,
    /// Empirical CDF of `|residual|` as `(error, fraction <= error)`, one
    /// entry per distinct error, ending at fraction 1.
    pub error_cdf: Vec<(f64, f64)>,
    /// `observed - predicted` per record, dB.
    pub residuals: Vec<f64>,
}

impl EvalReport {
    pub fn from_residuals(residuals: Vec<f64>) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::InvalidInput("cannot evaluate an empty measurement set".into()));
        }
        let k = residuals.len() as f64;
        let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / k).sqrt();
        let mut abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let mean_abs_error = abs.iter().sum::<f64>() / k;
        let mut error_cdf: Vec<(f64, f64)> = Vec::new();
        for (i, &e) in abs.iter().enumerate() {
            let frac = (i + 1) as f64 / k;
            match error_cdf.last_mut() {
                Some(last) if last.0 == e => last.1 = frac,
                _ => error_cdf.push((e, frac)),
            }
        }
        Ok(Self {
            rmse,
            mean_abs_error,
            error_cdf,
            residuals,
        })
    }

    /// `abs_error_db,fraction` rows.
    pub fn write_cdf_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "abs_error_db,fraction")?;
        for (e, f) in &self.error_cdf {
            writeln!(out, "{e:.2},{f:.6}")?;
        }
        Ok(())
    }

    pub fn save_cdf_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_cdf_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Residual statistics of `predictor` over every record of `set`.
pub fn evaluate_model<F>(set: &MeasurementSet, predictor: F) -> Result<EvalReport>
where
    F: Fn(&Measurement) -> Result<f64> + Sync,
{
    let residuals = set
        .records
        .par_iter()
        .map(|r| predictor(r).map(|p| r.pathloss - p))
        .collect::<Result<Vec<f64>>>()?;
    EvalReport::from_residuals(residuals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Pef,
    LogDistance,
    Tie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pef: EvalReport,
    pub logdist: EvalReport,
    /// `rmse(log-distance) - rmse(PEFs)`; positive favours the PEFs model.
    pub rmse_delta: f64,
    pub winner: Winner,
}

/// Scores the multi-exponent model and the log-distance model on the same
/// records.
pub fn compare_models(
    set: &MeasurementSet,
    grid: &RegionGrid,
    pef_params: &PefParams,
    logdist_params: &LogDistParams,
    d0: f64,
) -> Result<Comparison> {
    let pef = evaluate_model(set, |r| predict_pef(grid, set.tx, r.rx, d0, pef_params))?;
    let logdist = evaluate_model(set, |r| predict_logdist(set.tx.distance(&r.rx), logdist_params))?;
    let rmse_delta = logdist.rmse - pef.rmse;
    let winner = if rmse_delta.abs() <= TIE_TOLERANCE_DB {
        Winner::Tie
    } else if rmse_delta > 0.0 {
        Winner::Pef
    } else {
        Winner::LogDistance
    };
    Ok(Comparison {
        pef,
        logdist,
        rmse_delta,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn set(losses: &[f64]) -> MeasurementSet {
        MeasurementSet {
            tx: Point::new(0.5, 0.5),
            records: losses
                .iter()
                .enumerate()
                .map(|(i, &pathloss)| Measurement {
                    rx: Point::new(10.5 + i as f64, 3.5),
                    pathloss,
                })
                .collect(),
            truncation: None,
        }
    }

    #[test]
    fn perfect_predictor() {
        let s = set(&[100.0, 110.0, 95.0]);
        let rep = evaluate_model(&s, |r| Ok(r.pathloss)).unwrap();
        assert_eq!(rep.rmse, 0.0);
        assert_eq!(rep.error_cdf, vec![(0.0, 1.0)]);
    }

    #[test]
    fn constant_offset() {
        let s = set(&[100.0, 110.0, 95.0, 120.0]);
        let rep = evaluate_model(&s, |r| Ok(r.pathloss - 2.0)).unwrap();
        assert!((rep.rmse - 2.0).abs() < 1e-12);
        assert!((rep.mean_abs_error - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_rmse_invariants() {
        let s = set(&[1.0, -3.0, 2.0, 2.0, -0.5]);
        let rep = evaluate_model(&s, |_| Ok(0.0)).unwrap();
        for w in rep.error_cdf.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
        assert_eq!(rep.error_cdf.last().unwrap().1, 1.0);
        let ms = rep.residuals.iter().map(|r| r * r).sum::<f64>() / 5.0;
        assert!((rep.rmse * rep.rmse - ms).abs() <= 1e-12 * ms);
        let mut buf = Vec::new();
        rep.write_cdf_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("abs_error_db,fraction\n0.50,0.200000\n"));
    }

    #[test]
    fn errors_propagate() {
        assert!(evaluate_model(&set(&[]), |_| Ok(0.0)).is_err());
        let s = set(&[1.0]);
        assert!(evaluate_model(&s, |_| Err(Error::Numerical("x".into()))).is_err());
    }

    #[test]
    fn uniform_map_models_tie() {
        let grid = RegionGrid::uniform(40, 10, 1.0).unwrap();
        let pef = PefParams::new(50.0, vec![2.3], 4.0).unwrap();
        let ld = LogDistParams { intercept_c: 50.0, n: 2.3, sigma: 4.0, d0: 1.0 };
        let s = set(&[80.0, 75.0, 90.0, 70.0]);
        let cmp = compare_models(&s, &grid, &pef, &ld, 1.0).unwrap();
        assert!(cmp.rmse_delta.abs() < 1e-9);
        assert_eq!(cmp.winner, Winner::Tie);
    }
}

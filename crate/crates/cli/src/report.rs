//! Plain-text reports. dB quantities always carry two decimals.

use std::fmt::Write as _;

use pef_core::{EvalReport, FitReport, LogDistParams, PefParams, RegionGrid};

pub fn db(v: f64) -> String {
    format!("{v:.2}")
}

pub fn opt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_owned(), db)
}

/// Header lines shared by both fit reports.
pub struct FitSummary {
    pub records: usize,
    pub rejected: usize,
    pub truncation: Option<f64>,
    pub d0: f64,
}

impl FitSummary {
    fn write(&self, s: &mut String) {
        let _ = writeln!(s, "records: {}", self.records);
        let _ = writeln!(s, "rejected_at_or_above_L: {}", self.rejected);
        let _ = writeln!(s, "L_db: {}", opt_db(self.truncation));
        let _ = writeln!(s, "d0_m: {}", self.d0);
    }
}

fn write_status<P>(s: &mut String, fit: &FitReport<P>) {
    let _ = writeln!(s, "iterations: {}", fit.iterations);
    let _ = writeln!(s, "converged: {}", fit.converged);
    let _ = writeln!(s, "final_gradient_norm: {:.3e}", fit.final_gradient_norm);
    let _ = writeln!(s, "log_likelihood: {}", db(fit.log_likelihood));
    let _ = writeln!(s, "rmse_in_sample_db: {}", db(fit.rmse_in_sample));
}

fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("parameter".len());
    let mut s = format!("{:<width$}  value\n", "parameter");
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<width$}  {v:>6}");
    }
    s
}

/// Parameter listing: intercept, one exponent per region type, deviation.
pub fn pef_table(params: &PefParams, grid: Option<&RegionGrid>) -> String {
    let names = grid.and_then(RegionGrid::type_names);
    let mut rows = vec![("C (dB)".to_owned(), db(params.intercept_c))];
    for (i, n) in params.exponents.iter().enumerate() {
        let label = match names {
            Some(names) => format!("n_{} ({})", i + 1, names[i]),
            None => format!("n_{}", i + 1),
        };
        rows.push((label, db(*n)));
    }
    rows.push(("sigma (dB)".to_owned(), db(params.sigma)));
    table(&rows)
}

pub fn logdist_table(params: &LogDistParams) -> String {
    table(&[
        ("C (dB)".to_owned(), db(params.intercept_c)),
        ("n".to_owned(), db(params.n)),
        ("sigma (dB)".to_owned(), db(params.sigma)),
    ])
}

pub fn fit_report(summary: &FitSummary, fit: &FitReport, grid: &RegionGrid) -> String {
    let mut s = String::from("# multi-exponent maximum likelihood fit\n");
    summary.write(&mut s);
    write_status(&mut s, fit);
    s.push('\n');
    s.push_str(&pef_table(&fit.params, Some(grid)));
    s
}

pub fn logdist_report(
    summary: &FitSummary,
    ls: &LogDistParams,
    ml: Option<&FitReport<LogDistParams>>,
) -> String {
    let mut s = String::from("# log-distance fit\n");
    summary.write(&mut s);
    s.push_str("\n## least squares\n");
    s.push_str(&logdist_table(ls));
    if let Some(ml) = ml {
        s.push_str("\n## maximum likelihood\n");
        write_status(&mut s, ml);
        s.push('\n');
        s.push_str(&logdist_table(&ml.params));
    }
    s
}

pub fn eval_section(name: &str, r: &EvalReport) -> String {
    let mut s = format!("## {name}\n");
    let _ = writeln!(s, "records: {}", r.residuals.len());
    let _ = writeln!(s, "rmse_db: {}", db(r.rmse));
    let _ = writeln!(s, "mean_abs_error_db: {}", db(r.mean_abs_error));
    let median = r
        .error_cdf
        .iter()
        .find(|(_, f)| *f >= 0.5)
        .map(|(e, _)| *e)
        .unwrap_or(0.0);
    let _ = writeln!(s, "median_abs_error_db: {}", db(median));
    s
}

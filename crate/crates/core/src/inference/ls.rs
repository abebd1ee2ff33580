use crate::error::{Error, Result};
use crate::propagation::LogDistParams;

/// Ordinary least squares line `y = intercept + slope x`, with the residual
/// standard deviation on `K - 2` degrees of freedom.
pub(crate) fn ls_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let k = x.len();
    if k < 3 {
        return Err(Error::NotIdentifiable {
            found: k,
            required: 3,
        });
    }
    let kf = k as f64;
    let mx = x.iter().sum::<f64>() / kf;
    let my = y.iter().sum::<f64>() / kf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if !(sxx > 1e-12 * kf * (1.0 + mx * mx)) {
        return Err(Error::InvalidInput(
            "degenerate regressor: all distances are equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok((slope, intercept, (ssr / (kf - 2.0)).sqrt()))
}

/// Least squares fit of `l = C + 10 n log10(d / d0)` to `(d, l)` pairs.
///
/// Ignores truncation, so on right-truncated data the exponent and deviation
/// come out biased low.
pub fn ls_fit_logdist(data: &[(f64, f64)], d0: f64) -> Result<LogDistParams> {
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "close-in distance must be positive, got {d0}"
        )));
    }
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for &(d, l) in data {
        if !(d.is_finite() && l.is_finite()) {
            return Err(Error::InvalidInput("non-finite measurement".into()));
        }
        if d < d0 {
            return Err(Error::WithinCloseIn { distance: d, d0 });
        }
        x.push(10.0 * (d / d0).log10());
        y.push(l);
    }
    let (n, intercept_c, sigma) = ls_line(&x, &y)?;
    Ok(LogDistParams {
        intercept_c,
        n,
        sigma,
        d0,
    })
}

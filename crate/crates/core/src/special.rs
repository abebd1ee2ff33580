//! Standard normal tail functions.
//!
//! The truncated likelihood needs `log(1 - Phi(z))` and the hazard
//! `phi(z) / (1 - Phi(z))` for standardized offsets far into either tail.
//! Below `CF_THRESHOLD` both come from `erfc`; above it the survival
//! function underflows, so the Mills ratio is taken from its continued
//! fraction instead.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{Error, Result};

const CF_THRESHOLD: f64 = 5.0;
const CF_TERMS: u32 = 160;
/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `1 - Phi(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Phi(z)) / phi(z)` by backward evaluation of
/// `1 / (z + 1/(z + 2/(z + 3/(z + ...))))`. Accurate for `z >= CF_THRESHOLD`.
fn mills_ratio_cf(z: f64) -> f64 {
    let mut tail = 0.0;
    for k in (1..=CF_TERMS).rev() {
        tail = f64::from(k) / (z + tail);
    }
    1.0 / (z + tail)
}

/// `log(1 - Phi(z))` for any finite `z`.
pub fn log_normal_sf(z: f64) -> f64 {
    if z >= CF_THRESHOLD {
        -0.5 * z * z - LN_SQRT_2PI + mills_ratio_cf(z).ln()
    } else if z < 0.0 {
        (-normal_cdf(z)).ln_1p()
    } else {
        normal_sf(z).ln()
    }
}

pub(crate) fn hazard(z: f64) -> f64 {
    if z >= CF_THRESHOLD {
        1.0 / mills_ratio_cf(z)
    } else {
        normal_pdf(z) / normal_sf(z)
    }
}

/// Normal hazard `exp(-z^2/2) / integral_z^inf exp(-t^2/2) dt`.
///
/// Finite for every finite `z`; it tends to `z` from above as `z -> inf` and
/// underflows to zero for `z` below roughly -38.
pub fn normal_hazard(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidInput(format!(
            "normal hazard needs a finite argument, got {z}"
        )));
    }
    Ok(hazard(z))
}

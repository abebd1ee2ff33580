use rayon::prelude::*;

use super::DesignMatrix;
use crate::error::{Error, Result};
use crate::propagation::PefParams;
use crate::special::{hazard, log_normal_sf};

/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Rows per partial sum. Fixed so the summation order, and hence the result,
/// does not depend on the thread count.
const CHUNK: usize = 2048;

/// Ascent direction of the truncated log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub exponents: Vec<f64>,
    pub intercept: f64,
    pub sigma: f64,
}

impl Gradient {
    /// `[dn_1 .. dn_I, dC, dsigma]`
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.exponents.clone();
        v.push(self.intercept);
        v.push(self.sigma);
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Log-density of one point and its derivatives in `mu` and `sigma`.
#[inline]
fn point_terms(l: f64, mu: f64, sigma: f64, truncation: Option<f64>) -> (f64, f64, f64) {
    let r = l - mu;
    let s2 = sigma * sigma;
    let mut ll = -sigma.ln() - LN_SQRT_2PI - 0.5 * r * r / s2;
    let mut d_mu = r / s2;
    let mut d_sigma = -1.0 / sigma + r * r / (s2 * sigma);
    if let Some(cap) = truncation {
        let z = (mu - cap) / sigma;
        let h = hazard(z);
        ll -= log_normal_sf(z);
        d_mu += h / sigma;
        d_sigma -= h * z / sigma;
    }
    (ll, d_mu, d_sigma)
}

pub(crate) fn check(design: &DesignMatrix, params: &PefParams) -> Result<()> {
    params.validate()?;
    if params.num_types() != design.num_types() {
        return Err(Error::DimensionMismatch {
            expected: design.num_types(),
            found: params.num_types(),
        });
    }
    if !(params.sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "likelihood needs sigma > 0, got {}",
            params.sigma
        )));
    }
    if let Some(cap) = design.truncation() {
        if design.pathloss().iter().any(|&l| l >= cap) {
            return Err(Error::InvalidInput(format!(
                "path loss at or above the truncation level {cap} dB"
            )));
        }
    }
    Ok(())
}

fn mean(row: &[f64], params: &PefParams) -> f64 {
    params.intercept_c + row.iter().zip(&params.exponents).map(|(d, n)| d * n).sum::<f64>()
}

/// Log-likelihood and, on request, its gradient `[n.., C, sigma]`.
pub(crate) fn evaluate(
    design: &DesignMatrix,
    params: &PefParams,
    with_gradient: bool,
) -> (f64, Vec<f64>) {
    let ni = design.num_types();
    let dim = if with_gradient { ni + 2 } else { 0 };
    let partials: Vec<(f64, Vec<f64>)> = design
        .coeff_matrix()
        .par_chunks(CHUNK * ni)
        .zip(design.pathloss().par_chunks(CHUNK))
        .map(|(rows, losses)| {
            let mut ll = 0.0;
            let mut grad = vec![0.0; dim];
            for (row, &l) in rows.chunks_exact(ni).zip(losses) {
                let mu = mean(row, params);
                let (term, d_mu, d_sigma) = point_terms(l, mu, params.sigma, design.truncation());
                ll += term;
                if with_gradient {
                    for (g, d) in grad.iter_mut().zip(row) {
                        *g += d * d_mu;
                    }
                    grad[ni] += d_mu;
                    grad[ni + 1] += d_sigma;
                }
            }
            (ll, grad)
        })
        .collect();
    let mut ll = 0.0;
    let mut grad = vec![0.0; dim];
    for (part_ll, part_grad) in partials {
        ll += part_ll;
        for (g, p) in grad.iter_mut().zip(part_grad) {
            *g += p;
        }
    }
    (ll, grad)
}

/// Sum over points of the log truncated-normal density
/// `-log(sqrt(2 pi) sigma) - (l - mu)^2 / (2 sigma^2) - log(1 - Phi((mu - L) / sigma))`.
pub fn truncated_loglik(design: &DesignMatrix, params: &PefParams) -> Result<f64> {
    check(design, params)?;
    Ok(evaluate(design, params, false).0)
}

/// Analytic gradient of [`truncated_loglik`] (ascent direction).
pub fn loglik_gradient(design: &DesignMatrix, params: &PefParams) -> Result<Gradient> {
    check(design, params)?;
    let (_, g) = evaluate(design, params, true);
    let ni = design.num_types();
    Ok(Gradient {
        exponents: g[..ni].to_vec(),
        intercept: g[ni],
        sigma: g[ni + 1],
    })
}

/// Density of a normal right-truncated at `truncation`; zero for `l >= L`.
pub fn truncated_density(l: f64, mu: f64, sigma: f64, truncation: Option<f64>) -> f64 {
    if truncation.is_some_and(|cap| l >= cap) {
        return 0.0;
    }
    point_terms(l, mu, sigma, truncation).0.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_reference_value() {
        // l = mu, sigma = 1, L = mu + 1: -ln sqrt(2 pi) - ln(1 - Phi(-1)),
        // 50-digit reference -0.74618475418122285225
        let mut d = DesignMatrix::new(1, Some(101.0)).unwrap();
        d.push(&[10.0], 100.0).unwrap();
        let p = PefParams::new(80.0, vec![2.0], 1.0).unwrap();
        let ll = truncated_loglik(&d, &p).unwrap();
        assert!((ll - -0.746_184_754_181_222_9).abs() < 1e-14, "{ll}");
    }

    #[test]
    fn far_truncation_equals_plain_gaussian() {
        let p = PefParams::new(60.0, vec![2.0, 3.0], 5.0).unwrap();
        let rows = [([3.0, 4.0], 80.0), ([10.0, 0.0], 75.0), ([0.0, 12.0], 101.0)];
        let mut plain = DesignMatrix::new(2, None).unwrap();
        let mut far = DesignMatrix::new(2, Some(60.0 + 36.0 + 40.0 * 5.0)).unwrap();
        for (c, l) in rows {
            plain.push(&c, l).unwrap();
            far.push(&c, l).unwrap();
        }
        let a = truncated_loglik(&plain, &p).unwrap();
        let b = truncated_loglik(&far, &p).unwrap();
        assert!((a - b).abs() < 1e-9);
        let ga = loglik_gradient(&far, &p).unwrap();
        let score: f64 = rows
            .iter()
            .map(|(c, l)| (l - (60.0 + 2.0 * c[0] + 3.0 * c[1])) / 25.0)
            .sum();
        assert!((ga.intercept - score).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let mut d = DesignMatrix::new(1, Some(140.0)).unwrap();
        d.push(&[10.0], 100.0).unwrap();
        let zero_sigma = PefParams::new(80.0, vec![2.0], 0.0).unwrap();
        assert!(truncated_loglik(&d, &zero_sigma).is_err());
        let wrong_dim = PefParams::new(80.0, vec![2.0, 1.0], 1.0).unwrap();
        assert!(loglik_gradient(&d, &wrong_dim).is_err());
    }

    #[test]
    fn density_is_zero_at_and_above_cap() {
        assert_eq!(truncated_density(140.0, 130.0, 5.0, Some(140.0)), 0.0);
        assert!(truncated_density(139.9, 130.0, 5.0, Some(140.0)) > 0.0);
    }
}

use nalgebra::{DMatrix, DVector};

use super::likelihood::{check, evaluate};
use super::ls::ls_line;
use super::DesignMatrix;
use crate::error::{Error, Result};
use crate::propagation::{LogDistParams, PefParams};
use crate::special::hazard;

/// Smallest shadow fading deviation (dB) a fit may reach before it is
/// reported as collapsed.
pub const SIGMA_FLOOR: f64 = 1e-6;
const MAX_HALVINGS: usize = 60;
/// Bound on how far an accepted step may grow past `FitOptions::step`.
const STEP_GROWTH_CAP: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Halve the step until the likelihood increases; double it after each
    /// accepted step.
    Backtracking,
    /// Always take `step`, whatever happens to the likelihood.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Initial step, applied to the per-point mean gradient.
    pub step: f64,
    pub rule: StepRule,
    /// Scale the gradient by the inverse Fisher information at the start
    /// point. Without it the ascent is the raw gradient in
    /// `(n, C, log sigma)`.
    pub precondition: bool,
    pub max_iterations: usize,
    /// Converged once `max |gradient| / K` drops below this.
    pub gradient_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            rule: StepRule::Backtracking,
            precondition: true,
            max_iterations: 100_000,
            gradient_tolerance: 1e-6,
        }
    }
}

impl FitOptions {
    /// Unpreconditioned gradient ascent with a small starting step.
    pub fn plain() -> Self {
        Self {
            step: 1e-3,
            precondition: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidInput(format!("step must be positive, got {}", self.step)));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidInput("gradient tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<P = PefParams> {
    pub params: P,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max |gradient| / K` at `params`, in `(n, C, sigma)` coordinates.
    pub final_gradient_norm: f64,
    /// Root mean square of `l_k - mu_k` over the fitted points, dB.
    pub rmse_in_sample: f64,
}

/// Log-distance least squares on `sum_i D_ki`, spread over every exponent.
pub fn default_init(design: &DesignMatrix) -> Result<PefParams> {
    let x: Vec<f64> = (0..design.len()).map(|k| design.log_distance_db(k)).collect();
    let (n, c, sd) = ls_line(&x, design.pathloss())?;
    Ok(PefParams::uniform(c, n, design.num_types(), sd.max(1e-3)))
}

/// Cholesky factor of the per-point Fisher information of the truncated
/// model in `(n_1..n_I, C, log sigma)`, evaluated at `params`.
///
/// With `u = (l - mu) / sigma` a standard normal truncated above at
/// `-z`, a point with regressors `x = [D, 1]` contributes
/// `Var(u) x x^T / sigma^2`, `Cov(u, u^2) x / sigma` and `Var(u^2)`.
/// Without truncation this is `[G / sigma^2, 0; 0, 2]`, `G` the design Gram
/// matrix. Types absent from every path give zero rows; a small ridge keeps
/// the factorization defined and their step at zero.
fn fisher_metric(
    design: &DesignMatrix,
    params: &PefParams,
) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let ni = design.num_types();
    let dim = ni + 2;
    let sigma = params.sigma;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut x = vec![1.0; ni + 1];
    for k in 0..design.len() {
        x[..ni].copy_from_slice(design.row(k));
        let (var_u, cov, var_u2) = match design.truncation() {
            None => (1.0, 0.0, 2.0),
            Some(cap) => {
                let mu = params.intercept_c
                    + x[..ni].iter().zip(&params.exponents).map(|(d, n)| d * n).sum::<f64>();
                truncated_moments((mu - cap) / sigma)
            }
        };
        for a in 0..=ni {
            for b in 0..=a {
                m[(a, b)] += var_u * x[a] * x[b] / (sigma * sigma);
            }
            m[(ni + 1, a)] += cov * x[a] / sigma;
        }
        m[(ni + 1, ni + 1)] += var_u2;
    }
    let inv_k = 1.0 / design.len() as f64;
    for a in 0..dim {
        for b in 0..=a {
            m[(a, b)] *= inv_k;
            m[(b, a)] = m[(a, b)];
        }
    }
    let ridge = 1e-10 * m.trace() / dim as f64;
    for a in 0..dim {
        m[(a, a)] += ridge;
    }
    m.cholesky()
}

/// `(Var(u), Cov(u, u^2), Var(u^2))` for `u` standard normal conditioned on
/// `u < -z`, from the raw moments `E u^k = (k - 1) E u^(k-2) - (-z)^(k-1) h`
/// with `h` the hazard at `z`.
fn truncated_moments(z: f64) -> (f64, f64, f64) {
    let h = hazard(z);
    let m1 = -h;
    let m2 = 1.0 + z * h;
    let m3 = -(2.0 + z * z) * h;
    let m4 = 3.0 + (3.0 * z + z * z * z) * h;
    let floor = 1e-12;
    (
        (m2 - m1 * m1).max(floor),
        m3 - m1 * m2,
        (m4 - m2 * m2).max(floor),
    )
}

fn with_step(params: &PefParams, dir: &[f64], step: f64) -> PefParams {
    let ni = params.num_types();
    PefParams {
        intercept_c: params.intercept_c + step * dir[ni],
        exponents: params
            .exponents
            .iter()
            .zip(dir)
            .map(|(n, d)| n + step * d)
            .collect(),
        sigma: params.sigma * (step * dir[ni + 1]).exp(),
    }
}

fn rmse(design: &DesignMatrix, params: &PefParams) -> f64 {
    let k = design.len();
    let ss: f64 = (0..k)
        .map(|i| {
            let mu = params.intercept_c
                + design
                    .row(i)
                    .iter()
                    .zip(&params.exponents)
                    .map(|(d, n)| d * n)
                    .sum::<f64>();
            (design.pathloss()[i] - mu).powi(2)
        })
        .sum();
    (ss / k as f64).sqrt()
}

/// Maximum likelihood fit of the truncated model by gradient ascent.
///
/// Iterates on `(n_1..n_I, C, log sigma)`. With `precondition` the
/// gradient is multiplied by the inverse Fisher information at `init`,
/// rescaled to the current sigma.
pub fn fit_ml(
    design: &DesignMatrix,
    init: &PefParams,
    options: &FitOptions,
) -> Result<FitReport> {
    options.validate()?;
    check(design, init)?;
    let ni = design.num_types();
    if design.len() < ni + 2 {
        return Err(Error::NotIdentifiable {
            found: design.len(),
            required: ni + 2,
        });
    }
    let kf = design.len() as f64;
    let metric = if options.precondition {
        Some(fisher_metric(design, init).ok_or_else(|| {
            Error::Numerical("Fisher information is not positive definite".into())
        })?)
    } else {
        None
    };

    let mut params = init.clone();
    let (mut ll, mut grad) = evaluate(design, &params, true);
    if !ll.is_finite() {
        return Err(Error::Numerical(
            "log-likelihood is not finite at the initial parameters".into(),
        ));
    }
    let grad_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / kf;

    let mut step = options.step;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        if grad_norm(&grad) < options.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let mut dir: Vec<f64> = grad.iter().map(|g| g / kf).collect();
        dir[ni + 1] *= params.sigma;
        if let Some(chol) = &metric {
            // The mean block of the information scales as 1/sigma^2; follow
            // sigma while keeping the truncation weights from the start.
            let ratio = params.sigma / init.sigma;
            dir[..=ni].iter_mut().for_each(|d| *d *= ratio);
            let scaled = chol.solve(&DVector::from_column_slice(&dir));
            dir.copy_from_slice(scaled.as_slice());
            dir[..=ni].iter_mut().for_each(|d| *d *= ratio);
        }

        match options.rule {
            StepRule::Fixed => {
                params = with_step(&params, &dir, step);
                (ll, grad) = evaluate(design, &params, true);
                if !ll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Numerical(format!(
                        "fixed step {step} diverged at iteration {iterations}"
                    )));
                }
            }
            StepRule::Backtracking => {
                let mut trial = step;
                let mut accepted = false;
                for _ in 0..MAX_HALVINGS {
                    let candidate = with_step(&params, &dir, trial);
                    let (cand_ll, cand_grad) = evaluate(design, &candidate, true);
                    if cand_ll.is_finite() && cand_ll > ll {
                        params = candidate;
                        ll = cand_ll;
                        grad = cand_grad;
                        step = (trial * 2.0).min(options.step * STEP_GROWTH_CAP);
                        accepted = true;
                        break;
                    }
                    trial *= 0.5;
                }
                if !accepted {
                    // No representable uphill step left.
                    break;
                }
            }
        }
        if params.sigma < SIGMA_FLOOR {
            return Err(Error::SigmaCollapse {
                sigma: params.sigma,
                limit: SIGMA_FLOOR,
            });
        }
    }

    Ok(FitReport {
        rmse_in_sample: rmse(design, &params),
        final_gradient_norm: grad_norm(&grad),
        params,
        log_likelihood: ll,
        iterations,
        converged,
    })
}

/// Single-type design with `D_k = 10 log10(d_k / d0)`.
pub fn logdist_design(
    data: &[(f64, f64)],
    d0: f64,
    truncation: Option<f64>,
) -> Result<DesignMatrix> {
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "close-in distance must be positive, got {d0}"
        )));
    }
    let mut design = DesignMatrix::new(1, truncation)?;
    for &(d, l) in data {
        if !d.is_finite() {
            return Err(Error::InvalidInput("non-finite distance".into()));
        }
        if d < d0 {
            return Err(Error::WithinCloseIn { distance: d, d0 });
        }
        design.push(&[10.0 * (d / d0).log10()], l)?;
    }
    Ok(design)
}

/// Maximum likelihood log-distance fit: [`fit_ml`] on a one-type design.
/// Starts from the least squares fit unless `init` is given.
pub fn fit_ml_logdist(
    data: &[(f64, f64)],
    d0: f64,
    truncation: Option<f64>,
    init: Option<LogDistParams>,
    options: &FitOptions,
) -> Result<FitReport<LogDistParams>> {
    let design = logdist_design(data, d0, truncation)?;
    if design.len() < 3 {
        return Err(Error::NotIdentifiable {
            found: design.len(),
            required: 3,
        });
    }
    let start = match init {
        Some(p) => PefParams::new(p.intercept_c, vec![p.n], p.sigma)?,
        None => default_init(&design)?,
    };
    let report = fit_ml(&design, &start, options)?;
    Ok(FitReport {
        params: LogDistParams {
            intercept_c: report.params.intercept_c,
            n: report.params.exponents[0],
            sigma: report.params.sigma,
            d0,
        },
        log_likelihood: report.log_likelihood,
        iterations: report.iterations,
        converged: report.converged,
        final_gradient_norm: report.final_gradient_norm,
        rmse_in_sample: report.rmse_in_sample,
    })
}

//! Parameter estimation from (possibly right-truncated) path loss samples.
//!
//! The observation model is `l_k ~ N(mu_k, sigma^2)` with
//! `mu_k = C + sum_i D_ki n_i`, observed only when `l_k < L`. Estimation is
//! by gradient ascent on the truncated-normal log-likelihood; the
//! ordinary least squares log-distance fit is kept as the biased baseline and
//! as the default starting point.

mod design;
mod likelihood;
mod ls;
mod optimize;

pub use design::DesignMatrix;
pub use likelihood::{loglik_gradient, truncated_density, truncated_loglik, Gradient};
pub use ls::ls_fit_logdist;
pub use optimize::{
    default_init, fit_ml, fit_ml_logdist, logdist_design, FitOptions, FitReport, StepRule,
    SIGMA_FLOOR,
};

//! Multi-exponent path loss modelling over classified raster maps.
//!
//! A raster map is clustered into region types ([`raster`]), each Tx-Rx line
//! is traced through the resulting grid ([`pathtrace`]), and path loss is
//! predicted with one path loss exponent per region type
//! ([`propagation`]). The exponents, intercept, and shadow fading deviation
//! are estimated from right-truncated measurements by maximum likelihood
//! ([`inference`]), and fitted models are scored with [`evaluate`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod geom;
pub mod inference;
pub mod kv;
pub mod pathtrace;
pub mod propagation;
pub mod raster;
pub mod special;

pub use dataset::{
    gen_synthetic, load_measurements, save_measurements, truncate, Measurement, MeasurementSet,
};
pub use error::{Error, Result};
pub use evaluate::{compare_models, evaluate_model, Comparison, EvalReport, Winner};
pub use geom::Point;
pub use inference::{
    fit_ml, fit_ml_logdist, loglik_gradient, ls_fit_logdist, truncated_loglik, DesignMatrix,
    FitOptions, FitReport, StepRule,
};
pub use pathtrace::{
    like_term_coefficients, path_coefficients, trace_path, CoefficientVector, PathMatrix,
    Segment,
};
pub use propagation::{
    heatmap, predict_logdist, predict_mean, predict_pef, sample_shadowed, Heatmap,
    LogDistParams, PefParams, ShadowFading,
};
pub use raster::{
    classify_regions, load_raster, load_region_grid, save_raster, save_region_grid, RegionGrid,
    RgbRaster,
};
pub use special::normal_hazard;

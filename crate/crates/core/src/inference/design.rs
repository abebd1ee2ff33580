use crate::error::{Error, Result};
use crate::pathtrace::CoefficientVector;

/// Per-point exponent weights `D_ki` and observed path losses `l_k`.
///
/// Points at or above the truncation level are dropped on insertion and
/// counted in [`DesignMatrix::rejected`]; the truncated density gives them
/// zero mass, so every stored point satisfies `l_k < L`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    num_types: usize,
    coeffs: Vec<f64>,
    pathloss: Vec<f64>,
    truncation: Option<f64>,
    rejected: usize,
}

impl DesignMatrix {
    pub fn new(num_types: usize, truncation: Option<f64>) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::InvalidInput("design needs at least one region type".into()));
        }
        if truncation.is_some_and(|l| !l.is_finite()) {
            return Err(Error::InvalidInput("truncation level must be finite".into()));
        }
        Ok(Self {
            num_types,
            coeffs: Vec::new(),
            pathloss: Vec::new(),
            truncation,
            rejected: 0,
        })
    }

    /// Adds a point; returns `false` if truncation dropped it.
    pub fn push(&mut self, coeffs: &[f64], pathloss: f64) -> Result<bool> {
        if coeffs.len() != self.num_types {
            return Err(Error::DimensionMismatch {
                expected: self.num_types,
                found: coeffs.len(),
            });
        }
        if !pathloss.is_finite() || coeffs.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidInput(
                "design rows need finite path loss and non-negative finite coefficients".into(),
            ));
        }
        if self.truncation.is_some_and(|l| pathloss >= l) {
            self.rejected += 1;
            return Ok(false);
        }
        self.coeffs.extend_from_slice(coeffs);
        self.pathloss.push(pathloss);
        Ok(true)
    }

    pub fn push_path(&mut self, coeffs: &CoefficientVector, pathloss: f64) -> Result<bool> {
        self.push(&coeffs.coeffs, pathloss)
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn len(&self) -> usize {
        self.pathloss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pathloss.is_empty()
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// Points dropped for reaching the truncation level.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.coeffs[k * self.num_types..(k + 1) * self.num_types]
    }

    pub fn pathloss(&self) -> &[f64] {
        &self.pathloss
    }

    pub(crate) fn coeff_matrix(&self) -> &[f64] {
        &self.coeffs
    }

    /// `sum_i D_ki`, i.e. `10 log10(d_k / d0)`.
    pub fn log_distance_db(&self, k: usize) -> f64 {
        self.row(k).iter().sum()
    }
}

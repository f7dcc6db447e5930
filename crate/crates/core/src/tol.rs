use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every predicate in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancePolicy {
    /// Entrywise equality of matrices and vectors.
    pub eq_tol: f64,
    /// Slack on eigenvalue nonnegativity, relative to the largest Gram diagonal.
    pub psd_tol: f64,
    /// Interior margin required for strict cone feasibility.
    pub lp_tol: f64,
    /// Gap required to call an argmax unique.
    pub sample_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            psd_tol: 1e-8,
            lp_tol: 1e-9,
            sample_tol: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eq_tol", self.eq_tol),
            ("psd_tol", self.psd_tol),
            ("lp_tol", self.lp_tol),
            ("sample_tol", self.sample_tol),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.eq_tol > self.sample_tol {
            return Err(Error::InvalidTolerance(format!(
                "eq_tol ({}) must not exceed sample_tol ({})",
                self.eq_tol, self.sample_tol
            )));
        }
        Ok(())
    }
}

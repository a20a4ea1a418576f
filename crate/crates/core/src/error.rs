use std::fmt;

use thiserror::Error;

/// A single broken configuration invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub reason: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, value: impl fmt::Display, reason: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.field, self.value, self.reason)
    }
}

/// Every violation found in one configuration, not just the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.0.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} invalid setting(s)", self.0.len())?;
        for v in &self.0 {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationErrors),

    #[error("config parse error: {0}")]
    Config(String),

    #[error("no equilibrium: detuning {detuning} rad/s is not red of resonance")]
    NoEquilibrium { detuning: f64 },

    #[error("non-finite ion state at pulse {pulse}")]
    NonFiniteState { pulse: u64 },

    #[error("insufficient dynamic range for damping fit: {e_foldings:.2} e-foldings (need {required})")]
    InsufficientRange { e_foldings: f64, required: f64 },

    #[error("object unresolved: image width {x_im:e} m does not exceed resolution {x_r:e} m")]
    Unresolvable { x_im: f64, x_r: f64 },

    #[error("waist geometry: x_w² - x²·sin²φ = {radicand:e} m² is not positive")]
    WaistGeometry { radicand: f64 },

    #[error("crossection centroid ({column:.1}) outside image of width {width}")]
    CentroidOutside { column: f64, width: usize },

    #[error("gaussian fit did not converge: {0}")]
    FitFailed(String),

    #[error("sech² fit did not converge (init A={amplitude:e}, tau={tau:e}, center={center:e}): {reason}")]
    LineshapeFit {
        amplitude: f64,
        tau: f64,
        center: f64,
        reason: String,
    },

    #[error("precondition: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Config(_) | Error::Precondition(_) | Error::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

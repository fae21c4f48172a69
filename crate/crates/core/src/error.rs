use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

/// Why the reduced dynamics fails the ergodicity assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotErgodicReason {
    /// Eigenvalue 1 is not simple.
    DegenerateOne,
    /// An eigenvalue other than 1 sits on the unit circle.
    PeripheralEigenvalue,
}

impl fmt::Display for NotErgodicReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DegenerateOne => "degenerate-one",
            Self::PeripheralEigenvalue => "peripheral-eigenvalue",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{what} is not Hermitian (defect {defect:.3e})")]
    NotHermitian { what: String, defect: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("reduced dynamics is not ergodic: {reason}")]
    NotErgodic { reason: NotErgodicReason },
    #[error("dimension overflow: {required} exceeds limit {limit}")]
    Overflow { required: usize, limit: usize },
    #[error("chain capacity exceeded: {0}")]
    Capacity(String),
    #[error("precondition refused: {0}")]
    Precondition(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_hermitian(
    m: &crate::numerics::ComplexMatrix,
    what: &str,
    tol: f64,
) -> Result<()> {
    m.require_square()?;
    let defect = m.hermiticity_defect();
    if defect > tol * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { what: what.to_string(), defect });
    }
    Ok(())
}

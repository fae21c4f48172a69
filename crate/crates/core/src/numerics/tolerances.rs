use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every module.
///
/// Defaults are the contract values; a JSON file with any subset of the
/// fields can override them (`--tol-overrides` on the command line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Hermiticity check on user-supplied Hamiltonians and interactions.
    pub hermitian: f64,
    /// Inputs closer than this to normal are exponentiated by diagonalization.
    pub normal: f64,
    /// Relative eigenpair residual accepted by [`eig`](super::eig).
    pub eig_residual: f64,
    /// Eigenvector-matrix condition number above which a matrix counts as defective.
    pub defective_condition: f64,
    /// Eigenvalues below `-psd_floor` make an input non-PSD.
    pub psd_negative: f64,
    /// An eigenvalue with modulus above `1 - circle` lies on the unit circle.
    pub circle: f64,
    /// Two eigenvalues closer than this to 1 make the fixed point degenerate.
    pub simple: f64,
    /// Residual allowed for `M Ω_S = Ω_S`.
    pub fixed_point: f64,
    /// Residual allowed for the two-form `j₊` identity.
    pub j_plus_forms: f64,
    /// Threshold for calling an entropy production strictly positive.
    pub positive_flux: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            normal: 1e-12,
            eig_residual: 1e-8,
            defective_condition: 1e7,
            psd_negative: 1e-10,
            circle: 1e-8,
            simple: 1e-8,
            fixed_point: 1e-10,
            j_plus_forms: 1e-7,
            positive_flux: 1e-8,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The request itself is malformed or out of range.
    Input,
    /// A well-formed request hit a numerical obstruction.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("request exceeds memory cap: {required} bytes needed, cap is {cap} bytes ({what})")]
    SizeLimit { what: String, required: u128, cap: u128 },

    #[error("eigensolver failed at k_z = {kz}: {reason}")]
    Eigensolver { kz: f64, reason: String },

    #[error("linear solve failed: {reason}")]
    LinearSolve { reason: String },

    #[error("occupied-band gap collapses at k = ({kx:.6}, {ky:.6}, {kz:.6}), gap {gap:.3e}")]
    GapCollapse { kx: f64, ky: f64, kz: f64, gap: f64 },

    #[error("Wannier gap closes at k_z = {kz:.6}: Wannier value {nu:.3e} sits on 0 or 1/2")]
    WannierGap { kz: f64, nu: f64 },

    #[error("eigenphase {phase:.6} is too close to ±π for a principal-branch logarithm")]
    BranchAmbiguity { phase: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: String, expected: usize, found: usize },

    #[error("scattering map not unitary: |‖ψ_out‖ − ‖ψ_in‖| = {deviation:.3e}")]
    Unitarity { deviation: f64 },

    #[error("undefined: {reason}")]
    Undefined { reason: String },
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput { field, reason: reason.into() }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput { .. } | Error::SizeLimit { .. } => ErrorClass::Input,
            _ => ErrorClass::Numerical,
        }
    }

    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput { .. } => "invalid_input",
            Error::SizeLimit { .. } => "size_limit",
            Error::Eigensolver { .. } => "eigensolver_failure",
            Error::LinearSolve { .. } => "linear_solve_failure",
            Error::GapCollapse { .. } => "gap_collapse",
            Error::WannierGap { .. } => "wannier_gap_collapse",
            Error::BranchAmbiguity { .. } => "branch_ambiguity",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Unitarity { .. } => "unitarity_violation",
            Error::Undefined { .. } => "undefined_metric",
        }
    }
}

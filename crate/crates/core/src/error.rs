use num_complex::Complex64;
use thiserror::Error;

use crate::angular::Base;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    /// A precondition of the operation does not hold (e.g. non-Hermitian
    /// input to a Hermitian-only routine).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A hypothesis of the decomposition theory fails for this input.
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("eigensolver failure: {0}")]
    EigenFailure(String),

    #[error("region boundary meets the spectrum: eigenvalue {eigenvalue} lies within {band:e} of it")]
    IllPosedRegion { eigenvalue: Complex64, band: f64 },

    #[error("subspace is not a graph over {base:?}: sigma_min of the base block is {sigma_min:e}")]
    NotAGraph { base: Base, sigma_min: f64 },

    #[error("Sylvester equation is singular: spectral separation {separation:e} <= {threshold:e}")]
    SylvesterSingular { separation: f64, threshold: f64 },

    #[error("graph pair is not complementary: sigma_min(I - Y) = {sigma_min:e}")]
    NotComplementary { sigma_min: f64 },

    #[error("lambda = {lambda} is too close to the spectrum (distance {distance:e})")]
    Resolvent { lambda: Complex64, distance: f64 },

    #[error("Fourier symbol is singular: {0}")]
    SingularSymbol(String),

    /// A conclusion that must hold under verified hypotheses did not; this
    /// signals numerical breakdown and is itself a finding.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::Contract(_) => "contract",
            Error::Hypothesis(_) => "hypothesis",
            Error::EigenFailure(_) => "eigen_failure",
            Error::IllPosedRegion { .. } => "ill_posed_region",
            Error::NotAGraph { .. } => "not_a_graph",
            Error::SylvesterSingular { .. } => "sylvester_singular",
            Error::NotComplementary { .. } => "not_complementary",
            Error::Resolvent { .. } => "resolvent",
            Error::SingularSymbol(_) => "singular_symbol",
            Error::TheoremViolation(_) => "theorem_violation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate homogeneous pair: both coordinates vanish")]
    DegenerateDirection,

    #[error("matrix is not in SL(2): |det - 1| = {deviation:e} exceeds {tolerance:e}")]
    NotUnimodular { deviation: f64, tolerance: f64 },

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no contraction found up to n = {n_max}; best margin {best_margin:e}")]
    NoContraction { n_max: usize, best_margin: f64 },

    #[error("invariant directions did not converge: residual {residual:e}")]
    DirectionsUnconverged { residual: f64 },

    #[error("gaps did not open after {attempts} perturbations")]
    GapsStubborn { attempts: usize },

    #[error("no hyperbolic energy found in the search window")]
    NotFound,

    #[error("boundary cocycle at z = {re} + {im}i is not certified uniformly hyperbolic")]
    NotUniformlyHyperbolic { re: f64, im: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

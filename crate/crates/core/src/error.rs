use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("abscissa {x} outside ({lo}, {hi})")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("point has dimension {got}, domain has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alpha = {alpha} is not admissible (f is not in L^p for alpha <= t1 = {t1})")]
    NotAdmissible { alpha: f64, t1: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("quadrature failed on [{a}, {b}]: estimate {estimate}, error {error} after {intervals} intervals")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("analytic and numerical divergence checks disagree: {0}")]
    FormulaDrift(String),

    #[error("grid under-resolved: cusp half-width {width} at the cut is below the spacing {h}")]
    UnderResolved { width: f64, h: f64 },

    #[error("interior cells form {components} disconnected components")]
    DisconnectedInterior { components: usize },

    #[error("{stage} solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}

use alloc::string::String;

/// Errors raised by the fitting and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A linear system or regression design is (numerically) singular.
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("degenerate panel: total variance is zero")]
    DegeneratePanel,
    /// The M-scale of a series collapsed to zero; weights are undefined.
    #[error("exact fit: robust scale of series {series} is zero; try fewer components or inspect that series")]
    ExactFit { series: usize },
    #[error("analytic form unavailable: {0}")]
    AnalyticFormUnavailable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

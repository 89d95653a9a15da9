use thiserror::Error;

use crate::envelope::Envelope;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum CcxError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at node {0}")]
    NonFiniteValue(usize),
    #[error("sample set K is empty")]
    EmptySample,
    #[error("module M = {m} must exceed max |f_K| = {max_abs}")]
    ModuleTooSmall { m: f64, max_abs: f64 },
    #[error("at least two sample nodes are required")]
    SingleSample,
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("input abscissae are not strictly increasing")]
    UnsortedInput,
    #[error("invalid stencil: {0}")]
    InvalidStencil(String),
    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),
    #[error("envelope solver did not converge: residual {} after {} sweeps", .0.report.final_residual, .0.report.sweeps_used)]
    NotConverged(Box<Envelope>),
    #[error("all input points are collinear")]
    CollinearInput,
    #[error("duplicate points {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("cell has {0} co-circular generators; at most 64 are supported")]
    CellTooLarge(usize),
    #[error("theorem thresholds not satisfied: need lambda > {lambda_required}, M > {m_required}")]
    ThresholdUnsatisfied { lambda_required: f64, m_required: f64 },
    #[error("point ({0}, {1}) is outside the domain of the closed form")]
    OutOfDomain(f64, f64),
    #[error("no closed form in this parameter regime: {0}")]
    RegimeUnsupported(String),
    #[error("closed form not available: {0}")]
    NotAvailable(String),
    #[error("parameters out of range: {0}")]
    ParamOutOfRange(String),
    #[error("level {0} is never crossed")]
    EmptyLevelSet(f64),
    #[error("every node is damaged")]
    AllDamaged,
    #[error("relative error undefined: reference norm is zero")]
    ZeroDenominator,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CcxError>;

//! Error types for the numeric and algebraic subsystems.

use thiserror::Error;

use crate::exponent::Violation;

/// Errors from family construction and exponent algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExponentError {
    /// The requested exponent vector is outside the admissible region.
    /// Carries every violated condition by name.
    #[error("inadmissible p-vector: {}", format_violations(.0))]
    InadmissibleP(Vec<Violation>),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("block {block}: {condition}")]
    InvalidParam { block: usize, condition: String },
    #[error("unknown slowly varying function `{0}`")]
    UnknownSlowVary(String),
    #[error("`{name}` is not slowly varying as z -> {end}: max deviation {deviation:.3e}")]
    NotSlowlyVarying {
        name: String,
        end: &'static str,
        deviation: f64,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Errors from grid functions, norms and psi machinery.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GridError {
    #[error("axis {0} is not strictly increasing or too short")]
    BadAxis(usize),
    #[error("value shape {got:?} does not match axis lengths {want:?}")]
    ShapeMismatch { got: Vec<usize>, want: Vec<usize> },
    #[error("non-finite sample encountered")]
    NonFiniteSample,
    #[error("norm evaluation produced a non-finite result")]
    NonFiniteResult,
    #[error("exponent vector has length {got}, expected {want}")]
    RankMismatch { got: usize, want: usize },
    #[error("exponent p = {0} outside [1, inf]")]
    BadExponent(f64),
    #[error("empty exponent grid")]
    EmptyGrid,
    #[error("p-grid point outside the psi support box")]
    PointOutsideSupport,
    #[error("family member has non-finite norm on the grid: {0}")]
    UnboundedFamily(String),
    #[error("psi function is not bounded away from zero on its support")]
    PsiNotPositive,
}

/// Errors from block operator evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    #[error("family `{0}` has no numeric evaluation route")]
    UnsupportedFamily(String),
    #[error("block {block} has dimension {m}; grid evaluation requires m = 1")]
    BlockDimension { block: usize, m: u32 },
    #[error("output point x = 0 is singular for output-weight exponent {exponent}")]
    SingularOutputPoint { exponent: f64 },
    #[error("frequency |x| = {x} exceeds the resolvable band {band} of the source grid")]
    FrequencyOutOfBand { x: f64, band: f64 },
    #[error("truncation tail estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationWarning { estimate: f64, tolerance: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// Errors from the norm estimator pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimatorError {
    #[error("test function has zero norm at p = {0:?}")]
    ZeroDenominator(Vec<f64>),
    #[error("blow-up fit needs at least {want} samples, got {got}")]
    InsufficientSamples { got: usize, want: usize },
    #[error("empty scan curve")]
    EmptyCurve,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

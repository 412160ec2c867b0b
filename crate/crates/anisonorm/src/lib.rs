//! Exponent algebra, anisotropic mixed norms, and numeric evaluation of
//! weighted Riesz and Fourier operators on tensor grids, with empirical
//! operator-norm envelopes and Grand Lebesgue norm transfer checks.
//!
//! The crate is organized around five pieces:
//!
//! * [`exponent`] — operator families, admissible exponent ranges, q(p)
//!   maps, endpoint exponents, and bilateral envelope shapes;
//! * [`grid`] / [`psi`] — tensor-grid functions, mixed norms, psi functions
//!   and Grand Lebesgue norms;
//! * [`operators`] — singularity-split quadrature evaluation of the block
//!   operators and their tensor products;
//! * [`estimator`] — empirical operator-norm lower bounds, endpoint blow-up
//!   fits, envelope calibration, and norm-transfer verification;
//! * [`container`] / [`table`] — the binary grid-function container and the
//!   deterministic CSV emitters.
//!
//! All operations are pure functions of immutable inputs; scans parallelize
//! with rayon without affecting results.

pub mod container;
pub mod error;
pub mod estimator;
pub mod exponent;
pub mod grid;
pub mod operators;
pub mod psi;
pub mod quad;
pub mod slowvary;
pub mod table;

pub use error::{EstimatorError, ExponentError, GridError, OperatorError};
pub use exponent::{
    AdmissibilityReport, BlockParams, BlockRange, EnvelopeValue, ExponentPoint, FamilyKind,
    OperatorFamily, Partition, Violation,
};
pub use grid::{dilate, mixed_norm, tensor_product, Axis, GridFunction, Values};
pub use operators::{
    apply_fourier_block, apply_log_riesz_block, apply_riesz_block, apply_tensor_operator,
    BlockDomain, BlockOp, BlockOperatorSpec, QuadraturePlan,
};
pub use psi::{gls_norm, natural_psi, PGrid, PsiFunction};
pub use slowvary::{SlowVaryFn, SlowVaryRegistry, VariationEnd};

//! Exact and closed-form evaluation of k-generalized Fibonacci and
//! Fibonacci-like sequences.
//!
//! Exact values come from the recurrence and from companion-matrix powers.
//! Approximate values come from root-based closed forms evaluated in
//! high-precision complex arithmetic and rounded back to integers.

pub mod bigfloat;
pub mod charpoly;
pub mod closed_form;
pub mod complex;
pub mod error;
pub mod exact;
pub mod model;
pub mod pascal;
pub mod verify;

pub use bigfloat::BigFloat;
pub use charpoly::{
    dominant_root, evaluate_poly, find_roots, root_identity_check, CharPoly, ResidualReport,
    RootSet,
};
pub use closed_form::{
    bacani_rabago_nth, calibrate_bacani_rabago, dresden_nth, eigen_coefficients, nth_closed_form,
    product_identity_check, weights_like, weights_special, IndexAlignment, WeightVector,
};
pub use complex::HpComplex;
pub use error::{Error, Result};
pub use exact::{nth_by_matrix_power, nth_by_recurrence, sequence_slice, CompanionMatrix};
pub use model::{default_precision_for, precision_for, EvaluationReport, Method, SequenceSpec};
pub use pascal::{build_triangle, diagonal_sums, DiagonalSums, PascalTriangleK};
pub use verify::{cross_check, run_suite, CrossCheckReport, VerifyConfig, VerifyReport};

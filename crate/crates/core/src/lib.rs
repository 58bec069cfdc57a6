//! Dyadic subdivision schemes on the half-line.
//!
//! The crate decides convergence of a finite mask, computes refinable
//! functions both by cascade iteration and by transition-matrix products,
//! brackets smoothness through the joint spectral radius, and samples dyadic
//! fractal curves generated by pairs of affine operators.

pub mod cli;
pub mod criteria;
pub mod dyadic;
pub mod error;
pub mod fractal;
pub mod linalg;
pub mod render;
pub mod scheme;
pub mod spectral;

pub use criteria::{analyze, AnalyzeOptions, Overall, Verdict};
pub use dyadic::{dyadic_add, dyadic_distance, dyadic_grid, DyadicRational};
pub use error::{Error, Result};
pub use fractal::{sample_curve, AffineOperator, AffinePair, CurveSamples};
pub use scheme::{
    apply_subdivision, cascade, convergence_probe, limit_function, Mask, Mode, ProbeReport,
    ProbeVerdict, Sequence, SequenceFrame,
};
pub use spectral::{
    jsr_bounds, refinable_vector_samples, restrict_to_difference_subspace, transition_matrices,
    JsrEstimate,
};

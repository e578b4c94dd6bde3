//! Exact calculus of filtered bundles (parabolic prolongations) on the
//! punctured disk, with a numerical harness that evaluates concrete model
//! metrics, curvature norms and log-log limit invariants.

// `!(x > y)` comparisons are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calculus;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod models;
pub mod report;
pub mod weights;

pub use calculus::{Degree, FilteredBundle, SectionCoordinates};
pub use error::{Error, Result};
pub use weights::{reduce_to_window, Weight};

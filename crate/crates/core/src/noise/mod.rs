//! Gradient-noise coefficients, the derived constants γ(b), C̃, C₁, C₂, the
//! admissibility test and Brownian increments.

mod admissibility;
mod fields;
pub mod rng;

pub use admissibility::{check_admissibility, elliptic_image_norm, estimate_ctilde, AdmissibilityReport, CtildeEstimate};
pub use fields::{Polynomial, SupNorms, VectorFieldSet};
pub use rng::{brownian_increments, StreamPurpose};

//! Finite-difference discretization of the unit interval / square with
//! homogeneous Dirichlet boundary.

pub mod band;
mod field;
mod operators;
mod tensor;

pub use field::{GridField, GridSpec};
pub use operators::GridOperators;
pub use tensor::{band_half_width, TensorField};

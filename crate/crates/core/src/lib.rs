//! Numerical core for stochastic porous-media equations driven by
//! Stratonovich gradient noise,
//!
//! ```text
//! dX = (ν ΔX + Δψ(X)) dt + Σ_i ⟨b_i, ∇X⟩ ∘ dβ_i   on (0,1)^d,  X = 0 on ∂O,
//! ```
//!
//! solved through its Itô form with the Yosida-regularized nonlinearity
//! `ψ_λ`, together with extinction-time statistics for fast diffusion and
//! the sign graph, and the discrete Bak–Tang–Wiesenfeld sandpile.
//!
//! The floating point modules are generic over [`Real`] (`f32` or `f64`);
//! the `*64` aliases below fix the scalar to `f64`.

pub mod error;
pub mod extinction;
pub mod grid;
pub mod monotone;
pub mod noise;
pub mod sandpile;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{GridField, GridOperators, GridSpec, TensorField};
pub use monotone::{MonotoneGraph, YosidaParams};
pub use noise::{AdmissibilityReport, Polynomial, VectorFieldSet};
pub use sandpile::{AvalancheRecord, SandpileLattice};
pub use scalar::{Real, SampleStats};
pub use solver::{SimulationPath, SolverConfig, SpdeModel};

pub type GridField64 = GridField<f64>;
pub type GridOperators64 = GridOperators<f64>;
pub type TensorField64 = TensorField<f64>;
pub type MonotoneGraph64 = MonotoneGraph<f64>;
pub type VectorFieldSet64 = VectorFieldSet<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SpdeModel64<'a> = SpdeModel<'a, f64>;
pub type SimulationPath64 = SimulationPath<f64>;

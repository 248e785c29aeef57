//! Semi-implicit Euler–Maruyama integration of the Yosida-regularized
//! equation, Monte Carlo ensembles and λ-continuation diagnostics.

mod config;
mod continuation;
mod ensemble;
mod model;
mod path;

pub use config::SolverConfig;
pub use continuation::{coupled_sup_distances, yosida_continuation, CauchyReport};
pub use ensemble::{energy_budget, monte_carlo, EnergyBudget, EnergyRow, Ensemble, EnsembleSeries};
pub use model::{SpdeModel, StepOutcome};
pub use path::{simulate_path, write_series_csv, NormSample, PathStepper, SimulationPath, SERIES_HEADER};

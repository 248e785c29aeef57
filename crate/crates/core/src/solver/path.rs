use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::noise::rng::{bridge_split, brownian_increments};
use crate::scalar::Real;
use crate::solver::config::SolverConfig;
use crate::solver::model::SpdeModel;

/// Column order of every norm-series CSV.
pub const SERIES_HEADER: [&str; 6] = ["t", "l2", "hminus1", "l1pm", "h1semi", "cumulative_h1"];

/// Norms of the state at one recorded instant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormSample {
    pub t: f64,
    pub l2: f64,
    pub hminus1: f64,
    /// `|X|_{1+m}` with `m` the growth exponent of the graph.
    pub l1pm: f64,
    pub h1semi: f64,
    /// Trapezoid approximation of `∫₀ᵗ |∇X|₂² ds` over every step.
    pub cumulative_h1: f64,
}

impl NormSample {
    pub fn as_row(&self) -> [f64; 6] {
        [self.t, self.l2, self.hminus1, self.l1pm, self.h1semi, self.cumulative_h1]
    }
}

#[derive(Debug, Clone)]
pub struct SimulationPath<T> {
    pub seed: u64,
    pub path_index: u64,
    pub samples: Vec<NormSample>,
    /// States at the recorded instants when `keep_snapshots` is set.
    pub snapshots: Vec<GridField<T>>,
    /// First time with `‖X‖₋₁ ≤ extinction_eps`; the state is zero from then on.
    pub extinction_time: Option<f64>,
    pub newton_iterations: usize,
    /// Steps that were retried as two half steps.
    pub halved_steps: usize,
}

impl<T> SimulationPath<T> {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Advances a single path one step at a time. Used directly when several
/// runs have to be kept in lockstep.
#[derive(Debug, Clone)]
pub struct PathStepper<'m, 'a, T> {
    model: &'m SpdeModel<'a, T>,
    cfg: SolverConfig<T>,
    seed: u64,
    path_index: u64,
    state: GridField<T>,
    step: usize,
    extinct_at: Option<usize>,
    newton_iterations: usize,
    halved_steps: usize,
    exponent: T,
    h1_sq: T,
    cumulative_h1: T,
}

impl<'m, 'a, T: Real> PathStepper<'m, 'a, T> {
    pub fn new(model: &'m SpdeModel<'a, T>, x0: &GridField<T>, cfg: SolverConfig<T>, seed: u64, path_index: u64) -> Result<Self> {
        cfg.validate()?;
        let ops = model.ops();
        if x0.spec() != ops.spec() {
            return Err(Error::DimensionMismatch { expected: ops.spec().node_count(), found: x0.len() });
        }
        if let Some(index) = x0.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut stepper = Self {
            model,
            cfg,
            seed,
            path_index,
            state: x0.clone(),
            step: 0,
            extinct_at: None,
            newton_iterations: 0,
            halved_steps: 0,
            exponent: T::one() + model.graph().growth_exponent(),
            h1_sq: T::zero(),
            cumulative_h1: T::zero(),
        };
        stepper.check_extinction()?;
        stepper.h1_sq = stepper.h1_squared()?;
        Ok(stepper)
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> T {
        T::of_usize(self.step) * self.cfg.dt
    }

    pub fn state(&self) -> &GridField<T> {
        &self.state
    }

    pub fn is_extinct(&self) -> bool {
        self.extinct_at.is_some()
    }

    pub fn extinction_time(&self) -> Option<T> {
        self.extinct_at.map(|k| T::of_usize(k) * self.cfg.dt)
    }

    fn h1_squared(&self) -> Result<T> {
        let h1 = self.model.ops().h1_seminorm(&self.state)?;
        Ok(h1 * h1)
    }

    fn check_extinction(&mut self) -> Result<()> {
        if self.extinct_at.is_none() && self.model.ops().h_minus1_norm(&self.state)? <= self.cfg.extinction_eps {
            self.extinct_at = Some(self.step);
            self.state.set_zero();
        }
        Ok(())
    }

    /// Advances by one step of size `dt`. A step whose Newton solve fails is
    /// retried once as two half steps driven by a Brownian-bridge split of
    /// the same increment; a second failure is returned with the step index.
    pub fn advance(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        if self.extinct_at.is_none() {
            let n_noise = self.model.fields().n_components();
            let dw = brownian_increments(self.seed, self.path_index, self.step as u64, n_noise, dt);
            let next = match self.model.step(&self.state, &dw, dt, &self.cfg) {
                Ok(out) => {
                    self.newton_iterations += out.newton_iterations;
                    out.state
                }
                Err(Error::StepFailure { .. } | Error::Factorization { .. }) => {
                    self.halved_steps += 1;
                    let half = dt / T::lit(2.0);
                    let (first, second) = bridge_split(self.seed, self.path_index, self.step as u64, &dw, dt);
                    let mid = self.model.step(&self.state, &first, half, &self.cfg).map_err(|e| self.failure(e))?;
                    let end = self.model.step(&mid.state, &second, half, &self.cfg).map_err(|e| self.failure(e))?;
                    self.newton_iterations += mid.newton_iterations + end.newton_iterations;
                    end.state
                }
                Err(e) => return Err(e),
            };
            self.state = next;
        }
        self.step += 1;
        self.check_extinction()?;
        let h1_sq = if self.extinct_at.is_some() { T::zero() } else { self.h1_squared()? };
        self.cumulative_h1 = self.cumulative_h1 + dt * (self.h1_sq + h1_sq) / T::lit(2.0);
        self.h1_sq = h1_sq;
        Ok(())
    }

    fn failure(&self, e: Error) -> Error {
        match e {
            Error::StepFailure { residuals, .. } => Error::StepFailure { step: self.step, residuals },
            Error::Factorization { .. } => Error::StepFailure { step: self.step, residuals: Vec::new() },
            other => other,
        }
    }

    /// Norms of the current state.
    pub fn sample(&self) -> Result<NormSample> {
        let ops = self.model.ops();
        Ok(NormSample {
            t: self.time().as_f64(),
            l2: ops.l2_norm(&self.state).as_f64(),
            hminus1: ops.h_minus1_norm(&self.state)?.as_f64(),
            l1pm: ops.lp_norm(&self.state, self.exponent)?.as_f64(),
            h1semi: self.h1_sq.sqrt().as_f64(),
            cumulative_h1: self.cumulative_h1.as_f64(),
        })
    }

    pub fn into_counts(self) -> (usize, usize) {
        (self.newton_iterations, self.halved_steps)
    }
}

/// Runs one path over `⌈t_end/dt⌉` steps, recording every `record_every`
/// steps and at the final step.
pub fn simulate_path<T: Real>(
    model: &SpdeModel<'_, T>,
    x0: &GridField<T>,
    cfg: &SolverConfig<T>,
    seed: u64,
    path_index: u64,
) -> Result<SimulationPath<T>> {
    let mut stepper = PathStepper::new(model, x0, *cfg, seed, path_index)?;
    let n_steps = cfg.n_steps();
    let mut samples = Vec::with_capacity(n_steps / cfg.record_every + 2);
    let mut snapshots = Vec::new();
    let mut record = |st: &PathStepper<'_, '_, T>| -> Result<()> {
        samples.push(st.sample()?);
        if cfg.keep_snapshots {
            snapshots.push(st.state().clone());
        }
        Ok(())
    };
    record(&stepper)?;
    for k in 1..=n_steps {
        stepper.advance()?;
        if k % cfg.record_every == 0 || k == n_steps {
            record(&stepper)?;
        }
    }
    let extinction_time = stepper.extinction_time().map(|t| t.as_f64());
    let (newton_iterations, halved_steps) = stepper.into_counts();
    Ok(SimulationPath { seed, path_index, samples, snapshots, extinction_time, newton_iterations, halved_steps })
}

/// Writes a norm series with the [`SERIES_HEADER`] columns.
pub fn write_series_csv<W: Write>(writer: W, samples: &[NormSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SERIES_HEADER)?;
    for s in samples {
        w.write_record(s.as_row().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

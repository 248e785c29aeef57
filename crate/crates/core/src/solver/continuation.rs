use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::GridField;
use crate::scalar::{Real, SampleStats};
use crate::solver::config::SolverConfig;
use crate::solver::model::SpdeModel;
use crate::solver::path::PathStepper;

/// Coupled-run distances along a decreasing sequence of Yosida parameters.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CauchyReport {
    pub lambdas: Vec<f64>,
    pub n_paths: usize,
    /// `D_k = E sup_t ‖X_{λ_k}(t) − X_{λ_{k+1}}(t)‖₋₁²`.
    pub distances: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `D_k / (λ_k + λ_{k+1})`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub strictly_decreasing: bool,
    pub failed: Vec<u64>,
}

/// Runs one path for every configuration in lockstep, all driven by the
/// same Brownian increments, and returns `sup_t ‖X_a(t) − X_b(t)‖₋₁²` for
/// each consecutive pair `(cfgs[k], cfgs[k+1])`. The supremum is over every
/// time step.
pub fn coupled_sup_distances<T: Real>(
    model: &SpdeModel<'_, T>,
    x0: &GridField<T>,
    cfgs: &[SolverConfig<T>],
    seed: u64,
    path_index: u64,
) -> Result<Vec<f64>> {
    let Some(first) = cfgs.first() else {
        return Ok(Vec::new());
    };
    if cfgs.iter().any(|c| c.dt != first.dt || c.t_end != first.t_end) {
        return Err(invalid("cfgs", "coupled runs need a common dt and t_end"));
    }
    let mut steppers =
        cfgs.iter().map(|c| PathStepper::new(model, x0, *c, seed, path_index)).collect::<Result<Vec<_>>>()?;
    let ops = model.ops();
    let mut sup = vec![0.0f64; cfgs.len().saturating_sub(1)];
    let mut update = |steppers: &[PathStepper<'_, '_, T>]| {
        for (k, s) in sup.iter_mut().enumerate() {
            let diff = steppers[k].state().sub(steppers[k + 1].state());
            let d = ops.h_minus1_unchecked(diff.values()).as_f64();
            *s = s.max(d * d);
        }
    };
    update(&steppers);
    for _ in 0..first.n_steps() {
        for s in steppers.iter_mut() {
            s.advance()?;
        }
        update(&steppers);
    }
    Ok(sup)
}

/// Coupled simulations at each `λ_k` (common random numbers per path).
pub fn yosida_continuation<T: Real>(
    model: &SpdeModel<'_, T>,
    x0: &GridField<T>,
    cfg_base: &SolverConfig<T>,
    lambdas: &[T],
    n_paths: usize,
    seed: u64,
) -> Result<CauchyReport> {
    if lambdas.len() < 3 {
        return Err(invalid("lambda_seq", "needs at least 3 values"));
    }
    if lambdas.iter().any(|l| !(*l > T::zero())) || lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("lambda_seq", "must be positive and strictly decreasing"));
    }
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be >= 1"));
    }
    let cfgs: Vec<SolverConfig<T>> = lambdas.iter().map(|l| cfg_base.with_lambda(*l).with_record_every(1)).collect();
    for c in &cfgs {
        c.validate()?;
    }
    let results: Vec<Result<Vec<f64>>> =
        (0..n_paths as u64).into_par_iter().map(|i| coupled_sup_distances(model, x0, &cfgs, seed, i)).collect();
    let mut per_path = Vec::with_capacity(n_paths);
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(d) => per_path.push(d),
            Err(Error::StepFailure { .. } | Error::ResolventNonConvergence { .. } | Error::NonFinite { .. }) => {
                failed.push(i as u64)
            }
            Err(e) => return Err(e),
        }
    }
    if failed.len() * 100 > n_paths || per_path.is_empty() {
        return Err(Error::EnsembleFailure { failed: failed.len(), total: n_paths, indices: failed });
    }
    let pairs = lambdas.len() - 1;
    let mut distances = Vec::with_capacity(pairs);
    let mut stderr = Vec::with_capacity(pairs);
    let mut ratios = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let xs: Vec<f64> = per_path.iter().map(|d| d[k]).collect();
        let st = SampleStats::from_slice(&xs);
        distances.push(st.mean);
        stderr.push(st.stderr);
        ratios.push(st.mean / (lambdas[k] + lambdas[k + 1]).as_f64());
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(CauchyReport {
        lambdas: lambdas.iter().map(|l| l.as_f64()).collect(),
        n_paths,
        distances,
        stderr,
        ratios,
        max_ratio,
        strictly_decreasing,
        failed,
    })
}

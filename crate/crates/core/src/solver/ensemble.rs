use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::scalar::{Real, SampleStats};
use crate::solver::config::SolverConfig;
use crate::solver::model::SpdeModel;
use crate::solver::path::{simulate_path, NormSample, SimulationPath, SERIES_HEADER};

/// Per-instant ensemble statistics of every norm column.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnsembleSeries {
    pub t: Vec<f64>,
    pub l2: Vec<SampleStats>,
    pub hminus1: Vec<SampleStats>,
    pub l1pm: Vec<SampleStats>,
    pub h1semi: Vec<SampleStats>,
    pub cumulative_h1: Vec<SampleStats>,
}

impl EnsembleSeries {
    pub fn from_paths<T>(paths: &[SimulationPath<T>]) -> Self {
        let t = paths.first().map(|p| p.times()).unwrap_or_default();
        let col = |f: fn(&NormSample) -> f64| -> Vec<SampleStats> {
            (0..t.len())
                .map(|k| {
                    let xs: Vec<f64> = paths.iter().map(|p| f(&p.samples[k])).collect();
                    SampleStats::from_slice(&xs)
                })
                .collect()
        };
        Self {
            l2: col(|s| s.l2),
            hminus1: col(|s| s.hminus1),
            l1pm: col(|s| s.l1pm),
            h1semi: col(|s| s.h1semi),
            cumulative_h1: col(|s| s.cumulative_h1),
            t,
        }
    }

    fn write_with<W: Write>(&self, writer: W, pick: fn(&SampleStats) -> f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SERIES_HEADER)?;
        for k in 0..self.t.len() {
            let row = [
                self.t[k],
                pick(&self.l2[k]),
                pick(&self.hminus1[k]),
                pick(&self.l1pm[k]),
                pick(&self.h1semi[k]),
                pick(&self.cumulative_h1[k]),
            ];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ensemble means, one row per recorded instant.
    pub fn write_mean_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.write_with(writer, |s| s.mean)
    }

    /// Standard errors of the means, same layout as [`Self::write_mean_csv`].
    pub fn write_stderr_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.write_with(writer, |s| s.stderr)
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    pub seed: u64,
    /// Successful paths in path-index order.
    pub paths: Vec<SimulationPath<T>>,
    /// Indices of paths that aborted (at most 1% of the ensemble).
    pub failed: Vec<u64>,
    pub series: EnsembleSeries,
}

impl<T> Ensemble<T> {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn extinction_times(&self) -> Vec<Option<f64>> {
        self.paths.iter().map(|p| p.extinction_time).collect()
    }
}

/// Independent paths `0..n_paths` driven by per-path streams of `seed`.
/// Results do not depend on the number of worker threads.
pub fn monte_carlo<T: Real>(
    model: &SpdeModel<'_, T>,
    x0: &GridField<T>,
    cfg: &SolverConfig<T>,
    n_paths: usize,
    seed: u64,
) -> Result<Ensemble<T>> {
    if n_paths == 0 {
        return Err(crate::error::invalid("n_paths", "must be >= 1"));
    }
    cfg.validate()?;
    let results: Vec<Result<SimulationPath<T>>> =
        (0..n_paths as u64).into_par_iter().map(|i| simulate_path(model, x0, cfg, seed, i)).collect();
    let mut paths = Vec::with_capacity(n_paths);
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => paths.push(p),
            Err(Error::StepFailure { .. } | Error::ResolventNonConvergence { .. } | Error::NonFinite { .. }) => {
                failed.push(i as u64);
            }
            Err(e) => return Err(e),
        }
    }
    if failed.len() * 100 > n_paths || paths.is_empty() {
        return Err(Error::EnsembleFailure { failed: failed.len(), total: n_paths, indices: failed });
    }
    let series = EnsembleSeries::from_paths(&paths);
    Ok(Ensemble { seed, paths, failed, series })
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EnergyRow {
    pub t: f64,
    /// Ensemble mean of `|X(t)|₂² + 2ν ∫₀ᵗ |∇X|₂² ds`.
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Energy inequality `E|X(t)|₂² + 2ν E∫₀ᵗ|∇X|₂² ≤ |x|₂²(1 + slack) + 3·stderr`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnergyBudget {
    pub initial: f64,
    pub slack: f64,
    pub rows: Vec<EnergyRow>,
    pub passes: bool,
    /// Largest `mean / initial` over the recorded instants.
    pub max_ratio: f64,
}

pub fn energy_budget<T>(ensemble: &Ensemble<T>, nu: f64, slack: f64) -> EnergyBudget {
    let paths = &ensemble.paths;
    let initial = paths.first().map(|p| p.samples[0].l2.powi(2)).unwrap_or(0.0);
    let n_rec = paths.first().map(|p| p.samples.len()).unwrap_or(0);
    let mut rows = Vec::with_capacity(n_rec);
    let mut max_ratio: f64 = 0.0;
    for k in 0..n_rec {
        let e: Vec<f64> = paths
            .iter()
            .map(|p| {
                let s = &p.samples[k];
                s.l2 * s.l2 + 2.0 * nu * s.cumulative_h1
            })
            .collect();
        let st = SampleStats::from_slice(&e);
        let bound = initial * (1.0 + slack) + 3.0 * st.stderr;
        if initial > 0.0 {
            max_ratio = max_ratio.max(st.mean / initial);
        }
        rows.push(EnergyRow { t: paths[0].samples[k].t, mean: st.mean, stderr: st.stderr, bound, ok: st.mean <= bound });
    }
    let passes = rows.iter().all(|r| r.ok);
    EnergyBudget { initial, slack, rows, passes, max_ratio }
}

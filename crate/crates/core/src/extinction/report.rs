use std::io::Write;

use crate::error::{invalid, Result};
use crate::extinction::sobolev::{dimension_ok, CmEstimate};
use crate::monotone::MonotoneGraph;
use crate::scalar::{Real, SampleStats};
use crate::solver::{Ensemble, SimulationPath};

/// Constants entering the extinction-probability bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExtinctionSetup {
    pub m: f64,
    pub rho: f64,
    /// `C₂ = |div b|∞²` from the admissibility report.
    pub c2: f64,
    /// `K_m = C₂(1−m)/2`.
    pub k_m: f64,
    /// Safety-factored Sobolev constant used in the bound.
    pub c_m: f64,
    pub c_m_raw: f64,
    pub dimension_ok: bool,
    pub extinction_eps: f64,
}

pub const DEFAULT_EPS_FACTOR: f64 = 1e-8;

impl ExtinctionSetup {
    /// `extinction_eps` defaults to `1e-8 · ‖x0‖₋₁`.
    pub fn new(m: f64, rho: f64, c2: f64, c_m: &CmEstimate, dimension: usize, x0_hminus1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&m) {
            return Err(invalid("m", format!("{m} must lie in [0, 1)")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid("rho", format!("{rho} must be positive")));
        }
        if !(c2 >= 0.0) || !c2.is_finite() {
            return Err(invalid("c2", format!("{c2} must be >= 0")));
        }
        Ok(Self {
            m,
            rho,
            c2,
            k_m: c2 * (1.0 - m) / 2.0,
            c_m: c_m.value,
            c_m_raw: c_m.raw,
            dimension_ok: dimension_ok(dimension, m),
            extinction_eps: DEFAULT_EPS_FACTOR * x0_hminus1,
        })
    }

    /// Exponent and coefficient of a fast-diffusion (`0 < m < 1`) or sign
    /// (`m = 0`) graph.
    pub fn graph_parameters<T: Real>(graph: &MonotoneGraph<T>) -> Result<(f64, f64)> {
        match *graph {
            MonotoneGraph::FastDiffusion { rho, m } => Ok((m.as_f64(), rho.as_f64())),
            MonotoneGraph::Sign { rho } => Ok((0.0, rho.as_f64())),
            _ => Err(invalid("psi.kind", "extinction statistics need a fast-diffusion or sign graph")),
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.extinction_eps = eps;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }
}

/// `P(τ > t) ≤ K_m‖x‖₋₁^{1−m} / (ρ C_m (1−m)(1 − e^{−K_m t}))`, clamped to
/// `[0, 1]`. For `K_m → 0` the factor `K_m / (1 − e^{−K_m t})` tends to `1/t`.
pub fn theoretical_bound(x0_hminus1: f64, setup: &ExtinctionSetup, t: f64) -> f64 {
    if x0_hminus1 <= 0.0 {
        return 0.0;
    }
    let denom = setup.rho * setup.c_m * (1.0 - setup.m);
    let kt = setup.k_m * t;
    let rate = if kt < 1e-300 { 1.0 / t } else { setup.k_m / -(-kt).exp_m1() };
    (rate * x0_hminus1.powf(1.0 - setup.m) / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SurvivalPoint {
    pub t: f64,
    pub survival: f64,
    pub stderr: f64,
}

/// Fraction of paths with `τ > t` and its binomial standard error.
pub fn survival_from_times(times: &[Option<f64>], grid: &[f64]) -> Vec<SurvivalPoint> {
    let n = times.len().max(1) as f64;
    grid.iter()
        .map(|&t| {
            let alive = times.iter().filter(|tau| tau.is_none_or(|tau| tau > t)).count() as f64;
            let p = alive / n;
            SurvivalPoint { t, survival: p, stderr: (p * (1.0 - p) / n).sqrt() }
        })
        .collect()
}

pub fn survival_curve<T>(ensemble: &Ensemble<T>, grid: &[f64]) -> Vec<SurvivalPoint> {
    survival_from_times(&ensemble.extinction_times(), grid)
}

/// First recorded instant with `‖X‖₋₁ ≤ eps`, from the norm series. Equals
/// the path's own extinction time when `eps` is the threshold it ran with.
pub fn first_passage_time<T>(path: &SimulationPath<T>, eps: f64) -> Option<f64> {
    path.samples.iter().find(|s| s.hminus1 <= eps).map(|s| s.t)
}

pub fn first_passage_times<T>(ensemble: &Ensemble<T>, eps: f64) -> Vec<Option<f64>> {
    ensemble.paths.iter().map(|p| first_passage_time(p, eps)).collect()
}

/// Index of the last recorded instant not after `t`.
fn sample_index<T>(path: &SimulationPath<T>, t: f64) -> usize {
    let tol = 1e-9 * t.abs().max(1.0);
    path.samples.iter().rposition(|s| s.t <= t + tol).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SupermartingalePoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SupermartingaleReport {
    pub points: Vec<SupermartingalePoint>,
    /// `M̂(t_{k+1}) ≤ M̂(t_k) + 2(stderr_k + stderr_{k+1})` at every pair.
    pub passes: bool,
    pub worst_increase: f64,
}

/// Ensemble mean of `(e^{−C₂t/2} ‖X(t)‖₋₁)^{1−m}` on `grid`.
pub fn supermartingale_check<T>(ensemble: &Ensemble<T>, m: f64, c2: f64, grid: &[f64]) -> SupermartingaleReport {
    let points: Vec<SupermartingalePoint> = grid
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = ensemble
                .paths
                .iter()
                .map(|p| {
                    let s = &p.samples[sample_index(p, t)];
                    ((-c2 * s.t / 2.0).exp() * s.hminus1).powf(1.0 - m)
                })
                .collect();
            let st = SampleStats::from_slice(&xs);
            SupermartingalePoint { t, mean: st.mean, stderr: st.stderr }
        })
        .collect();
    let mut passes = true;
    let mut worst_increase = f64::NEG_INFINITY;
    for w in points.windows(2) {
        let allowance = 2.0 * (w[0].stderr + w[1].stderr);
        worst_increase = worst_increase.max(w[1].mean - w[0].mean - allowance);
        passes &= w[1].mean <= w[0].mean + allowance;
    }
    SupermartingaleReport { points, passes, worst_increase }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundVerdict {
    pub passes: bool,
    /// The bound is `≥ 1` at every grid point, so the check says nothing.
    pub uninformative: bool,
    pub extinction_observed: bool,
    /// Fraction of paths extinct by the last grid point.
    pub extinct_fraction: f64,
    /// Largest `survival − bound − 3·stderr` over points with `bound < 1`.
    pub worst_margin: f64,
}

/// `P̂(τ > t) ≤ bound(t) + 3·stderr(t)` wherever `bound(t) < 1`.
pub fn verify_extinction_bound(survival: &[SurvivalPoint], setup: &ExtinctionSetup, x0_hminus1: f64) -> BoundVerdict {
    let mut passes = true;
    let mut informative = false;
    let mut worst_margin = f64::NEG_INFINITY;
    for p in survival {
        let bound = theoretical_bound(x0_hminus1, setup, p.t);
        if bound < 1.0 {
            informative = true;
            let margin = p.survival - bound - 3.0 * p.stderr;
            worst_margin = worst_margin.max(margin);
            passes &= margin <= 0.0;
        }
    }
    let last = survival.last().map_or(1.0, |p| p.survival);
    BoundVerdict {
        passes,
        uninformative: !informative,
        extinction_observed: last < 1.0,
        extinct_fraction: 1.0 - last,
        worst_margin,
    }
}

/// `e^{K_m(t−s)} ‖X(s)‖₋₁^{−m−1} |X(s)|_{m+1}^{m+1}` at the recorded `s ≤ t`
/// of one path, skipping instants where the state is zero.
pub fn lemma_integrand<T>(path: &SimulationPath<T>, setup: &ExtinctionSetup, t: f64) -> Vec<(f64, f64)> {
    let p = 1.0 + setup.m;
    path.samples
        .iter()
        .filter(|s| s.t <= t && s.hminus1 > 0.0)
        .map(|s| (s.t, (setup.k_m * (t - s.t)).exp() * s.hminus1.powf(-p) * s.l1pm.powf(p)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub t: f64,
    pub survival: f64,
    pub stderr: f64,
    pub bound: f64,
    pub supermartingale: f64,
    pub sm_stderr: f64,
}

/// Verdict recomputed with a different extinction threshold.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThresholdVerdict {
    /// Threshold as a multiple of `‖x0‖₋₁`.
    pub eps_factor: f64,
    pub verdict: BoundVerdict,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExtinctionReport {
    pub setup: ExtinctionSetup,
    pub x0_hminus1: f64,
    pub n_paths: usize,
    pub rows: Vec<ReportRow>,
    pub bound: BoundVerdict,
    pub supermartingale: SupermartingaleReport,
    pub sensitivity: Vec<ThresholdVerdict>,
    /// The bound verdict is the same for every threshold in `sensitivity`.
    pub sensitivity_stable: bool,
}

pub const REPORT_HEADER: [&str; 6] = ["t", "survival", "stderr", "bound", "supermartingale", "sm_stderr"];

impl ExtinctionReport {
    /// Survival uses first passage below `setup.extinction_eps` and each of
    /// `eps_factors · ‖x0‖₋₁`, read off the recorded series. Exact when the
    /// run recorded every step and pinned at a threshold no larger than
    /// any of these.
    pub fn build<T>(
        ensemble: &Ensemble<T>,
        setup: &ExtinctionSetup,
        x0_hminus1: f64,
        grid: &[f64],
        eps_factors: &[f64],
    ) -> Self {
        let survival = survival_from_times(&first_passage_times(ensemble, setup.extinction_eps), grid);
        let bound = verify_extinction_bound(&survival, setup, x0_hminus1);
        let supermartingale = supermartingale_check(ensemble, setup.m, setup.c2, grid);
        let rows = survival
            .iter()
            .zip(&supermartingale.points)
            .map(|(s, m)| ReportRow {
                t: s.t,
                survival: s.survival,
                stderr: s.stderr,
                bound: theoretical_bound(x0_hminus1, setup, s.t),
                supermartingale: m.mean,
                sm_stderr: m.stderr,
            })
            .collect();
        let sensitivity: Vec<ThresholdVerdict> = eps_factors
            .iter()
            .map(|&f| {
                let times = first_passage_times(ensemble, f * x0_hminus1);
                let curve = survival_from_times(&times, grid);
                ThresholdVerdict { eps_factor: f, verdict: verify_extinction_bound(&curve, setup, x0_hminus1) }
            })
            .collect();
        let sensitivity_stable = sensitivity.iter().all(|v| v.verdict.passes == bound.passes);
        Self {
            setup: *setup,
            x0_hminus1,
            n_paths: ensemble.n_paths(),
            rows,
            bound,
            supermartingale,
            sensitivity,
            sensitivity_stable,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            let row = [r.t, r.survival, r.stderr, r.bound, r.supermartingale, r.sm_stderr];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` evenly spaced instants in `(0, t_end]`.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

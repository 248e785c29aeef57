//! Run orchestration: one function per experiment kind, all artifacts
//! written into the output directory at the end.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spm_core::extinction::{dimension_condition, estimate_cm, uniform_grid, CmEstimate, ExtinctionReport, ExtinctionSetup};
use spm_core::noise::{check_admissibility, AdmissibilityReport};
use spm_core::sandpile::{run_soc, write_histogram_csv};
use spm_core::solver::{energy_budget, monte_carlo, simulate_path, write_series_csv, yosida_continuation};
use spm_core::{GridOperators, MonotoneGraph, SpdeModel, VectorFieldSet};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Derived constants recorded in the manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Constants {
    pub gamma: Option<f64>,
    pub ctilde: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub k_m: Option<f64>,
    pub c_m: Option<f64>,
    pub c_m_raw: Option<f64>,
    pub mu1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub library_version: &'static str,
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    pub admissibility: Option<AdmissibilityReport>,
    pub constants: Constants,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: Value,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<fs::File>, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(fs::File::create(&path).map_err(|e| CliError::io(&path, e))?))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(BufWriter<fs::File>) -> spm_core::Result<()>) -> Result<(), CliError> {
        let f = self.file(name)?;
        write(f).map_err(|e| CliError::io(self.dir.join(name), e))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&path, e))?;
        text.push('\n');
        self.files.push(name.to_string());
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

struct SpdeSetup {
    ops: GridOperators<f64>,
    fields: VectorFieldSet<f64>,
    graph: MonotoneGraph<f64>,
    nu: f64,
    report: AdmissibilityReport,
}

impl SpdeSetup {
    fn build(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let spec = cfg.grid_spec()?;
        let graph = cfg.graph()?;
        let fields = cfg.fields(spec)?;
        let nu = cfg.nu()?;
        let ops = GridOperators::new(spec)?;
        let report = admissibility_gate(nu, &fields, &ops)?;
        Ok(Self { ops, fields, graph, nu, report })
    }

    fn model(&self) -> Result<SpdeModel<'_, f64>, CliError> {
        Ok(SpdeModel::new(&self.ops, &self.fields, self.graph, self.nu)?)
    }

    fn constants(&self) -> Constants {
        Constants {
            gamma: Some(self.report.gamma),
            ctilde: Some(self.report.ctilde_estimate),
            c1: Some(self.report.c1),
            c2: Some(self.report.c2),
            mu1: Some(self.ops.mu1()),
            ..Constants::default()
        }
    }
}

/// Admissibility is a hard gate for every SPDE run.
fn admissibility_gate(nu: f64, fields: &VectorFieldSet<f64>, ops: &GridOperators<f64>) -> Result<AdmissibilityReport, CliError> {
    let report = check_admissibility(nu, fields, ops)?;
    if !report.passes {
        return Err(CliError::NotAdmissible {
            message: format!("C̃γ(b) + |b|∞² = {} exceeds 2ν = {}", report.lhs, 2.0 * nu),
            report: Some(Box::new(report)),
        });
    }
    Ok(report)
}

/// Runs a parsed config; `raw` is the exact file content (hashed into the
/// manifest).
pub fn run(cfg: &ExperimentConfig, raw: &str, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let mut art = Artifacts::new(out_dir)?;
    let mut constants = Constants::default();
    let mut admissibility = None;
    let mut seed = None;

    let summary = match cfg.experiment {
        ExperimentKind::HeatCheck => heat_check(cfg, &mut art, &mut constants)?,
        ExperimentKind::FastDiffusion | ExperimentKind::SocSpde => {
            let (s, report, sd) = extinction_run(cfg, &mut art, &mut constants)?;
            admissibility = Some(report);
            seed = Some(sd);
            s
        }
        ExperimentKind::YosidaContinuation => {
            let setup = SpdeSetup::build(cfg)?;
            constants = setup.constants();
            admissibility = Some(setup.report.clone());
            let model = setup.model()?;
            let x0 = cfg.initial_state(&setup.ops)?;
            let mc = cfg.monte_carlo()?;
            seed = Some(mc.seed);
            let report = yosida_continuation(&model, &x0, &cfg.solver_config()?, &cfg.lambdas()?, mc.n_paths, mc.seed)?;
            art.csv("cauchy.csv", |f| {
                let mut w = csv_writer(f, &["k", "lambda_k", "lambda_next", "distance", "stderr", "ratio"])?;
                for k in 0..report.distances.len() {
                    w.write_record(
                        [k as f64, report.lambdas[k], report.lambdas[k + 1], report.distances[k], report.stderr[k], report.ratios[k]]
                            .iter()
                            .map(|v| v.to_string()),
                    )?;
                }
                Ok(w.flush()?)
            })?;
            art.json("cauchy.json", &report)?;
            json!({ "strictly_decreasing": report.strictly_decreasing, "max_ratio": report.max_ratio })
        }
        ExperimentKind::Admissibility => {
            let spec = cfg.grid_spec()?;
            let fields = cfg.fields(spec)?;
            let nu = cfg.nu()?;
            let ops = GridOperators::new(spec)?;
            let report = check_admissibility(nu, &fields, &ops)?;
            constants = Constants {
                gamma: Some(report.gamma),
                ctilde: Some(report.ctilde_estimate),
                c1: Some(report.c1),
                c2: Some(report.c2),
                mu1: Some(ops.mu1()),
                ..Constants::default()
            };
            art.json("admissibility.json", &report)?;
            admissibility = Some(report.clone());
            if !report.passes {
                write_manifest(&mut art, raw, cfg, seed, admissibility, constants, start)?;
                return Err(CliError::NotAdmissible {
                    message: format!("C̃γ(b) + |b|∞² = {} exceeds 2ν = {}", report.lhs, 2.0 * nu),
                    report: Some(Box::new(report)),
                });
            }
            json!({ "passes": true, "lhs": report.lhs, "bound": 2.0 * nu })
        }
        ExperimentKind::Sandpile => {
            let sp = cfg.sandpile()?;
            seed = Some(sp.seed);
            let stats = run_soc(sp.side, sp.x_c, sp.n_drives, sp.seed)?;
            art.csv("avalanche_sizes.csv", |f| write_histogram_csv(f, &stats.size_histogram))?;
            art.csv("avalanche_durations.csv", |f| write_histogram_csv(f, &stats.duration_histogram))?;
            art.json("sandpile.json", &stats)?;
            json!({
                "max_size": stats.max_size,
                "conservation_exact": stats.audit.exact,
                "always_stable": stats.always_stable,
            })
        }
    };
    art.json("summary.json", &summary)?;
    let manifest = write_manifest(&mut art, raw, cfg, seed, admissibility, constants, start)?;
    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), manifest, summary })
}

fn write_manifest(
    art: &mut Artifacts,
    raw: &str,
    cfg: &ExperimentConfig,
    seed: Option<u64>,
    admissibility: Option<AdmissibilityReport>,
    constants: Constants,
    start: Instant,
) -> Result<RunManifest, CliError> {
    let manifest = RunManifest {
        config_sha256: config_hash(raw),
        library_version: LIBRARY_VERSION,
        experiment: cfg.experiment,
        seed,
        admissibility,
        constants,
        outputs: art.files.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    art.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn csv_writer<W: std::io::Write>(w: W, header: &[&str]) -> spm_core::Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(header)?;
    Ok(w)
}

fn heat_check(cfg: &ExperimentConfig, art: &mut Artifacts, constants: &mut Constants) -> Result<Value, CliError> {
    if cfg.noise.as_ref().is_some_and(|n| n.n > 0) {
        return Err(CliError::config("noise.N", "heat_check runs without noise"));
    }
    if let Some(psi) = &cfg.psi {
        if !matches!(psi, crate::config::PsiConfig::Linear { slope } if *slope == 0.0) {
            return Err(CliError::config("psi", "heat_check needs psi absent or linear with slope 0"));
        }
    }
    let spec = cfg.grid_spec()?;
    let nu = cfg.nu()?;
    let ops = GridOperators::new(spec)?;
    let fields = VectorFieldSet::zero(spec);
    let model = SpdeModel::new(&ops, &fields, MonotoneGraph::linear(0.0)?, nu)?;
    let solver = cfg.solver_config()?;
    let x0 = cfg.initial_state(&ops)?;
    let path = simulate_path(&model, &x0, &solver, 0, 0)?;
    art.csv("series.csv", |f| write_series_csv(f, &path.samples))?;
    *constants = Constants { mu1: Some(ops.mu1()), ..Constants::default() };

    let last = path.samples.last().expect("at least the initial sample");
    let ratio = last.l2 / path.samples[0].l2;
    let expected = (-ops.mu1() * nu * last.t).exp();
    let rel = (ratio / expected - 1.0).abs();
    Ok(json!({
        "t": last.t,
        "ratio": ratio,
        "expected": expected,
        "relative_error": rel,
        "passes": rel <= 0.02,
    }))
}

fn extinction_run(
    cfg: &ExperimentConfig,
    art: &mut Artifacts,
    constants: &mut Constants,
) -> Result<(Value, AdmissibilityReport, u64), CliError> {
    let setup = SpdeSetup::build(cfg)?;
    let (m, rho) = match (cfg.experiment, setup.graph) {
        (ExperimentKind::FastDiffusion, MonotoneGraph::FastDiffusion { rho, m }) => (m, rho),
        (ExperimentKind::SocSpde, MonotoneGraph::Sign { rho }) => (0.0, rho),
        (ExperimentKind::FastDiffusion, _) => return Err(CliError::config("psi.kind", "fast_diffusion needs psi.kind = fast_diffusion")),
        _ => return Err(CliError::config("psi.kind", "soc_spde needs psi.kind = sign")),
    };
    let spec = setup.ops.spec();
    dimension_condition(spec.dimension(), m).map_err(|e| CliError::config("grid.dimension", e.to_string()))?;
    let model = setup.model()?;
    let mc = cfg.monte_carlo()?;
    let x0 = cfg.initial_state(&setup.ops)?;
    let x0n = setup.ops.h_minus1_norm(&x0)?;
    let ext = &cfg.extinction;
    if !(ext.eps_factor > 0.0) || ext.sensitivity.iter().any(|f| !(*f > 0.0)) {
        return Err(CliError::config("extinction", "thresholds must be positive"));
    }
    if ext.checkpoints < 2 {
        return Err(CliError::config("extinction.checkpoints", "must be >= 2"));
    }
    let cm: CmEstimate = estimate_cm(&setup.ops, m, ext.cm_seed)?;
    let ext_setup = ExtinctionSetup::new(m, rho, setup.report.c2, &cm, spec.dimension(), x0n)?.with_eps(ext.eps_factor * x0n);

    // pin at the smallest threshold so the larger ones can be read off the series
    let run_factor = ext.sensitivity.iter().copied().fold(ext.eps_factor, f64::min);
    let solver = cfg.solver_config()?.with_extinction_eps(run_factor * x0n);
    let ensemble = monte_carlo(&model, &x0, &solver, mc.n_paths, mc.seed)?;

    art.csv("series_mean.csv", |f| ensemble.series.write_mean_csv(f))?;
    art.csv("series_stderr.csv", |f| ensemble.series.write_stderr_csv(f))?;
    if mc.write_paths {
        for p in &ensemble.paths {
            art.csv(&format!("paths/path_{:05}.csv", p.path_index), |f| write_series_csv(f, &p.samples))?;
        }
    }
    let energy = energy_budget(&ensemble, setup.nu, 0.05);
    art.csv("energy.csv", |f| {
        let mut w = csv_writer(f, &["t", "mean", "stderr", "bound"])?;
        for r in &energy.rows {
            w.write_record([r.t, r.mean, r.stderr, r.bound].iter().map(|v| v.to_string()))?;
        }
        Ok(w.flush()?)
    })?;
    let grid = uniform_grid(solver.n_steps() as f64 * solver.dt, ext.checkpoints);
    let report = ExtinctionReport::build(&ensemble, &ext_setup, x0n, &grid, &ext.sensitivity);
    art.csv("extinction.csv", |f| report.write_csv(f))?;
    art.json("extinction.json", &report)?;

    *constants = Constants {
        k_m: Some(ext_setup.k_m),
        c_m: Some(ext_setup.c_m),
        c_m_raw: Some(ext_setup.c_m_raw),
        ..setup.constants()
    };
    let summary = json!({
        "n_paths": ensemble.n_paths(),
        "failed_paths": ensemble.failed,
        "energy_passes": energy.passes,
        "energy_max_ratio": energy.max_ratio,
        "bound": report.bound,
        "supermartingale_passes": report.supermartingale.passes,
        "sensitivity_stable": report.sensitivity_stable,
    });
    Ok((summary, setup.report, mc.seed))
}

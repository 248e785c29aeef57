//! Experiment configuration (one JSON file per run).

use serde::Deserialize;
use spm_core::{GridField, GridOperators, GridSpec, MonotoneGraph, Polynomial, SolverConfig, VectorFieldSet};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    HeatCheck,
    FastDiffusion,
    SocSpde,
    Sandpile,
    Admissibility,
    YosidaContinuation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: Option<GridConfig>,
    pub psi: Option<PsiConfig>,
    pub noise: Option<NoiseConfig>,
    pub nu: Option<f64>,
    pub solver: Option<SolverSection>,
    pub monte_carlo: Option<MonteCarloConfig>,
    #[serde(default)]
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub extinction: ExtinctionSection,
    pub continuation: Option<ContinuationSection>,
    pub sandpile: Option<SandpileSection>,
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: usize,
    pub cells_per_axis: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PsiConfig {
    FastDiffusion { rho: f64, m: f64 },
    Sign { rho: f64 },
    Linear { slope: f64 },
    PowerLaw { rho: f64, m: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(rename = "N")]
    pub n: usize,
    /// `fields[i][k]` is the k-th component of b_i.
    #[serde(default)]
    pub fields: Vec<Vec<FieldComponent>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldComponent {
    pub poly: PolyCoefficients,
}

/// Ascending coefficients in ξ₁, or `c[p][q]` multiplying `ξ₁^p ξ₂^q`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PolyCoefficients {
    Univariate(Vec<f64>),
    Bivariate(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub lambda: f64,
    pub newton_tol: Option<f64>,
    pub newton_max_iters: Option<usize>,
    pub record_every: Option<usize>,
    pub freeze_jacobian_after: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Also write one series CSV per path.
    #[serde(default)]
    pub write_paths: bool,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `amplitude · Π sin(k_a π ξ_a)`; modes default to 1 on every axis.
    #[default]
    Sine,
    SineMode { modes: Vec<usize>, amplitude: f64 },
    Zero,
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtinctionSection {
    /// Extinction threshold as a multiple of `‖x0‖₋₁`.
    pub eps_factor: f64,
    pub checkpoints: usize,
    pub sensitivity: Vec<f64>,
    /// Seed of the Sobolev-constant search.
    pub cm_seed: u64,
}

impl Default for ExtinctionSection {
    fn default() -> Self {
        Self { eps_factor: 1e-8, checkpoints: 20, sensitivity: vec![1e-6, 1e-8, 1e-10], cm_seed: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandpileSection {
    pub side: usize,
    #[serde(default = "default_critical")]
    pub x_c: i64,
    pub n_drives: usize,
    pub seed: u64,
}

fn default_critical() -> i64 {
    spm_core::sandpile::DEFAULT_CRITICAL
}

/// Parses a config, naming the offending key on failure.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<root>".to_string() } else { key };
        CliError::config(key, e.inner().to_string())
    })
}

fn require<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::config(key, "missing required key"))
}

fn keyed<T>(key: &str, r: spm_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::config(key, e.to_string()))
}

impl ExperimentConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = require(&self.grid, "grid")?;
        keyed("grid", GridSpec::new(g.dimension, g.cells_per_axis))
    }

    pub fn nu(&self) -> Result<f64, CliError> {
        let nu = *require(&self.nu, "nu")?;
        if !nu.is_finite() || nu < 0.0 {
            return Err(CliError::config("nu", format!("{nu} must be finite and >= 0")));
        }
        Ok(nu)
    }

    pub fn graph(&self) -> Result<MonotoneGraph<f64>, CliError> {
        let psi = require(&self.psi, "psi")?;
        let g = match *psi {
            PsiConfig::FastDiffusion { rho, m } => MonotoneGraph::fast_diffusion(rho, m),
            PsiConfig::Sign { rho } => MonotoneGraph::sign(rho),
            PsiConfig::Linear { slope } => MonotoneGraph::linear(slope),
            PsiConfig::PowerLaw { rho, m } => MonotoneGraph::power_law(rho, m),
        };
        keyed("psi", g)
    }

    /// Noise fields; an absent `noise` section means N = 0.
    pub fn fields(&self, spec: GridSpec) -> Result<VectorFieldSet<f64>, CliError> {
        let Some(noise) = &self.noise else {
            return Ok(VectorFieldSet::zero(spec));
        };
        if noise.fields.len() != noise.n {
            return Err(CliError::config(
                "noise.fields",
                format!("{} fields given but noise.N = {}", noise.fields.len(), noise.n),
            ));
        }
        let d = spec.dimension();
        let mut polys = Vec::with_capacity(noise.n);
        for (i, field) in noise.fields.iter().enumerate() {
            if field.len() != d {
                return Err(CliError::config(
                    format!("noise.fields[{i}]"),
                    format!("{} components for dimension {d}", field.len()),
                ));
            }
            let mut comps = Vec::with_capacity(d);
            for (k, c) in field.iter().enumerate() {
                let key = format!("noise.fields[{i}][{k}].poly");
                let p = match &c.poly {
                    PolyCoefficients::Univariate(cs) => Polynomial::univariate(cs.clone()),
                    PolyCoefficients::Bivariate(cs) => {
                        if d == 1 && cs.iter().any(|row| row.len() > 1) {
                            return Err(CliError::config(key, "ξ₂ terms are not allowed in one dimension"));
                        }
                        Polynomial::bivariate(cs.clone())
                    }
                };
                if !p.is_finite() {
                    return Err(CliError::config(key, "coefficients must be finite"));
                }
                comps.push(p);
            }
            polys.push(comps);
        }
        keyed("noise.fields", VectorFieldSet::from_polynomials(spec, &polys))
    }

    pub fn solver_config(&self) -> Result<SolverConfig<f64>, CliError> {
        let s = require(&self.solver, "solver")?;
        let mut cfg = keyed("solver", SolverConfig::new(s.dt, s.t_end, s.lambda))?;
        if let Some(t) = s.newton_tol {
            cfg.newton_tol = t;
        }
        if let Some(n) = s.newton_max_iters {
            cfg.newton_max_iters = n;
        }
        if let Some(r) = s.record_every {
            cfg.record_every = r;
        }
        cfg.freeze_jacobian_after = s.freeze_jacobian_after;
        keyed("solver", cfg.validate())?;
        Ok(cfg)
    }

    pub fn monte_carlo(&self) -> Result<MonteCarloConfig, CliError> {
        let mc = *require(&self.monte_carlo, "monte_carlo")?;
        if mc.n_paths == 0 {
            return Err(CliError::config("monte_carlo.n_paths", "must be >= 1"));
        }
        Ok(mc)
    }

    pub fn initial_state(&self, ops: &GridOperators<f64>) -> Result<GridField<f64>, CliError> {
        let spec = ops.spec();
        match &self.initial_condition {
            InitialCondition::Sine => Ok(ops.eigenmode(&vec![1; spec.dimension()])),
            InitialCondition::SineMode { modes, amplitude } => {
                let n = spec.cells_per_axis();
                if modes.len() != spec.dimension() || modes.iter().any(|k| *k < 1 || *k > n) {
                    return Err(CliError::config("initial_condition.modes", format!("need {} modes in 1..={n}", spec.dimension())));
                }
                Ok(ops.eigenmode(modes).scaled(*amplitude))
            }
            InitialCondition::Zero => Ok(GridField::zeros(spec)),
            InitialCondition::Values { values } => {
                keyed("initial_condition.values", GridField::from_values(spec, values.clone()))
            }
        }
    }

    pub fn sandpile(&self) -> Result<SandpileSection, CliError> {
        Ok(*require(&self.sandpile, "sandpile")?)
    }

    pub fn lambdas(&self) -> Result<Vec<f64>, CliError> {
        Ok(require(&self.continuation, "continuation")?.lambdas.clone())
    }
}

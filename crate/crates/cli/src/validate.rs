//! Machine checks of a config without running it.

use serde::Serialize;
use spm_core::extinction::{dimension_condition, estimate_cm};
use spm_core::noise::check_admissibility;
use spm_core::{GridOperators, MonotoneGraph};

use crate::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub ok: bool,
    pub checks: Vec<Check>,
}

impl Diagnostics {
    fn push(&mut self, name: &'static str, result: Result<String, String>) -> bool {
        let ok = result.is_ok();
        self.ok &= ok;
        let message = result.unwrap_or_else(|e| e);
        self.checks.push(Check { name, ok, message });
        ok
    }
}

fn needs_spde(kind: ExperimentKind) -> bool {
    !matches!(kind, ExperimentKind::Sandpile)
}

/// Runs every check that applies to the experiment kind; later checks that
/// depend on a failed one are skipped.
pub fn validate(cfg: &ExperimentConfig) -> Diagnostics {
    let mut d = Diagnostics { ok: true, checks: Vec::new() };
    if cfg.experiment == ExperimentKind::Sandpile {
        d.push(
            "sandpile",
            cfg.sandpile().map_err(|e| e.to_string()).and_then(|s| {
                if s.side < 2 || s.n_drives == 0 || s.x_c < 1 {
                    Err("need side >= 2, n_drives >= 1, x_c >= 1".into())
                } else {
                    Ok(format!("{0}x{0} lattice, X_c = {1}, {2} drives", s.side, s.x_c, s.n_drives))
                }
            }),
        );
        return d;
    }
    let spec = cfg.grid_spec();
    let spec_ok = d.push("grid", spec.as_ref().map(|s| format!("{s:?}")).map_err(|e| e.to_string()));

    let uses_graph = !matches!(cfg.experiment, ExperimentKind::Admissibility | ExperimentKind::HeatCheck) || cfg.psi.is_some();
    let graph = if uses_graph {
        let g = cfg.graph();
        d.push("psi", g.as_ref().map(|g| format!("{g:?}")).map_err(|e| e.to_string()));
        g.ok()
    } else {
        None
    };

    let nu = cfg.nu();
    d.push(
        "nu",
        match &nu {
            Ok(v) if *v > 0.0 => Ok(format!("nu = {v}")),
            Ok(v) => Err(format!("nu = {v} must be > 0")),
            Err(e) => Err(e.to_string()),
        },
    );

    if matches!(cfg.experiment, ExperimentKind::FastDiffusion | ExperimentKind::SocSpde) {
        let m = match graph {
            Some(MonotoneGraph::FastDiffusion { m, .. }) => Some(m),
            Some(MonotoneGraph::Sign { .. }) => Some(0.0),
            _ => None,
        };
        if let (Some(m), Ok(spec)) = (m, &spec) {
            d.push(
                "dimension_condition",
                dimension_condition(spec.dimension(), m)
                    .map(|_| format!("1 <= d = {} < 2(1+m)/(1-m) = {}", spec.dimension(), bound_text(m)))
                    .map_err(|e| e.to_string()),
            );
        } else {
            d.push("dimension_condition", Err("needs a fast_diffusion (m in (0,1)) or sign graph".into()));
        }
    }

    if needs_spde(cfg.experiment) && cfg.experiment != ExperimentKind::Admissibility {
        d.push("solver", cfg.solver_config().map(|c| format!("{} steps", c.n_steps())).map_err(|e| e.to_string()));
    }
    if matches!(
        cfg.experiment,
        ExperimentKind::FastDiffusion | ExperimentKind::SocSpde | ExperimentKind::YosidaContinuation
    ) {
        d.push("monte_carlo", cfg.monte_carlo().map(|m| format!("{} paths, seed {}", m.n_paths, m.seed)).map_err(|e| e.to_string()));
    }

    if !spec_ok {
        return d;
    }
    let spec = spec.expect("checked");
    let fields = cfg.fields(spec);
    let fields_ok = d.push("noise", fields.as_ref().map(|f| format!("N = {}", f.n_components())).map_err(|e| e.to_string()));
    let Ok(ops) = GridOperators::<f64>::new(spec) else {
        d.push("operators", Err("Laplacian factorization failed".into()));
        return d;
    };
    if let (true, Ok(nu)) = (fields_ok, nu) {
        let fields = fields.expect("checked");
        d.push(
            "admissibility",
            match check_admissibility(nu, &fields, &ops) {
                Ok(r) if r.passes => Ok(format!(
                    "gamma = {}, Ctilde = {}, lhs = {} <= 2 nu = {}",
                    r.gamma, r.ctilde_estimate, r.lhs, 2.0 * nu
                )),
                Ok(r) => Err(format!("lhs = {} exceeds 2 nu = {}", r.lhs, 2.0 * nu)),
                Err(e) => Err(e.to_string()),
            },
        );
    }
    d.push("mu1", Ok(format!("mu1 = {}", ops.mu1())));
    if let Some(m) = match graph {
        Some(MonotoneGraph::FastDiffusion { m, .. }) => Some(m),
        Some(MonotoneGraph::Sign { .. }) => Some(0.0),
        _ => None,
    } {
        if matches!(cfg.experiment, ExperimentKind::FastDiffusion | ExperimentKind::SocSpde) && d.ok {
            d.push(
                "sobolev_constant",
                estimate_cm(&ops, m, cfg.extinction.cm_seed)
                    .map(|c| format!("C_m = {} (raw {})", c.value, c.raw))
                    .map_err(|e| e.to_string()),
            );
        }
    }
    d
}

fn bound_text(m: f64) -> String {
    if m >= 1.0 {
        "inf".into()
    } else {
        format!("{}", 2.0 * (1.0 + m) / (1.0 - m))
    }
}

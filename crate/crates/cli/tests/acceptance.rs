//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spm_core::noise::{check_admissibility, estimate_ctilde};
use spm_core::sandpile::SandpileLattice;
use spm_core::{GridField, GridOperators, GridSpec, MonotoneGraph, Polynomial, TensorField, VectorFieldSet};

type Check = Result<(bool, String), String>;

struct Ctx {
    work: tempfile::TempDir,
    /// (config, output directory) of every run that criterion 12 repeats.
    runs: Vec<(PathBuf, PathBuf)>,
}

impl Ctx {
    fn run(&mut self, name: &str) -> Result<Value, String> {
        let config = config_path(name);
        let out = self.work.path().join("first").join(name.trim_end_matches(".json"));
        let outcome = spm_cli::run_file(&config, Some(&out)).map_err(|e| format!("{name}: {}", e.to_json()))?;
        self.runs.push((config, out));
        Ok(outcome.summary)
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn random_graph(rng: &mut ChaCha8Rng) -> MonotoneGraph<f64> {
    let rho = rng.random_range(0.1..5.0);
    match rng.random_range(0..4) {
        0 => MonotoneGraph::fast_diffusion(rho, rng.random_range(0.05..0.95)).unwrap(),
        1 => MonotoneGraph::sign(rho).unwrap(),
        2 => MonotoneGraph::linear(rho).unwrap(),
        _ => MonotoneGraph::power_law(rho, rng.random_range(1.0..3.0)).unwrap(),
    }
}

const SAMPLES: usize = 10_000;

fn sample(rng: &mut ChaCha8Rng) -> (MonotoneGraph<f64>, f64, f64) {
    let g = random_graph(rng);
    let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
    (g, lambda, rng.random_range(-100.0..100.0))
}

fn resolvent_identity(_: &mut Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..SAMPLES {
        let (g, lambda, r) = sample(&mut rng);
        let j = g.resolvent(lambda, r).map_err(|e| e.to_string())?;
        let ok = match g {
            MonotoneGraph::Sign { rho } if j == 0.0 => r.abs() <= lambda * rho + 1e-10,
            _ => {
                let err = (j + lambda * g.minimal_section(j) - r).abs();
                worst = worst.max(err);
                err <= 1e-10
            }
        };
        violations += usize::from(!ok);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((violations == 0 && secs < 1.0, format!("{SAMPLES} samples, {violations} violations, max residual {worst:.2e}, {secs:.3}s")))
}

fn yosida_properties(_: &mut Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut expansive, mut lipschitz, mut growth) = (0, 0, 0);
    for _ in 0..SAMPLES {
        let (g, lambda, r) = sample(&mut rng);
        let s = rng.random_range(-100.0..100.0);
        let e = |x: Result<f64, spm_core::Error>| x.map_err(|e| e.to_string());
        let (jr, js) = (e(g.resolvent(lambda, r))?, e(g.resolvent(lambda, s))?);
        if (jr - js).abs() > (r - s).abs() * (1.0 + 1e-12) + 1e-12 {
            expansive += 1;
        }
        let (pr, ps) = (e(g.yosida(lambda, r))?, e(g.yosida(lambda, s))?);
        if (pr - ps).abs() > (r - s).abs() / lambda * (1.0 + 1e-9) + 1e-9 {
            lipschitz += 1;
        }
        let bound = g.growth_constant() * (1.0 + r.abs().powf(g.growth_exponent()));
        if pr.abs() > bound * (1.0 + 1e-12) {
            growth += 1;
        }
    }
    let total = expansive + lipschitz + growth;
    Ok((
        total == 0,
        format!("{SAMPLES} samples: {expansive} non-expansiveness, {lipschitz} Lipschitz, {growth} growth violations"),
    ))
}

fn random_field(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridField<f64> {
    GridField::from_values(spec, (0..spec.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn discrete_operators(_: &mut Ctx) -> Check {
    let e = |x: spm_core::Error| x.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut poisson: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    for spec in [GridSpec::new(1, 33).map_err(e)?, GridSpec::new(2, 9).map_err(e)?] {
        let ops = GridOperators::new(spec).map_err(e)?;
        let a = TensorField::from_fn(spec, |x: &[f64], k, j| match (k, j) {
            (0, 0) => 1.0 + x[0],
            (1, 1) => 2.0 - x[1] * x[0],
            _ => 0.3 * x[0] * x[1],
        })
        .map_err(e)?;
        for _ in 0..100 {
            let u = random_field(spec, &mut rng);
            let z = ops.poisson_solve(&ops.laplacian_apply(&u).map_err(e)?).map_err(e)?;
            for (a, b) in z.values().iter().zip(u.values()) {
                poisson = poisson.max((a + b).abs());
            }
            let v = random_field(spec, &mut rng);
            let lhs = ops.inner_l2(&ops.divergence_form_apply(&a, &u).map_err(e)?, &v);
            let rhs = ops.inner_l2(&u, &ops.divergence_form_apply(&a, &v).map_err(e)?);
            adjoint = adjoint.max((lhs - rhs).abs());
        }
    }

    let spec = GridSpec::new(1, 15).map_err(e)?;
    let ops = GridOperators::<f64>::new(spec).map_err(e)?;
    let n = spec.node_count();
    let band = ops.neg_laplacian_matrix();
    let mut eig: Vec<f64> = DMatrix::from_fn(n, n, |i, j| band.get(i, j)).symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let spectral = eig.iter().zip(ops.spectrum()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // Step 1: |⟨div(A∇u), u⟩₋₁| ≤ C̃γ|u|₂²; Step 2: Σ‖b_i·∇u‖₋₁² ≤ |b|∞²|u|₂² + |div b|∞²‖u‖₋₁²
    let spec = GridSpec::new(1, 40).map_err(e)?;
    let ops = GridOperators::new(spec).map_err(e)?;
    let fields = VectorFieldSet::from_polynomials(spec, &[vec![Polynomial::univariate(vec![0.0, 0.7, -0.7])]]).map_err(e)?;
    let ct = estimate_ctilde(&ops, &fields).map_err(e)?.value;
    let norms = fields.sup_norms();
    let (mut step1, mut step2) = (0usize, 0usize);
    for _ in 0..1000 {
        let u = random_field(spec, &mut rng);
        let l2 = ops.l2_norm(&u);
        let div = ops.divergence_form_apply(fields.tensor(), &u).map_err(e)?;
        if ops.inner_h_minus1(&div, &u).map_err(e)?.abs() > ct * fields.gamma() * l2 * l2 * (1.0 + 1e-6) {
            step1 += 1;
        }
        let v = fields.directional_derivative(&ops, 0, &u).map_err(e)?;
        let lhs = ops.h_minus1_norm(&v).map_err(e)?.powi(2);
        let rhs = norms.b.powi(2) * l2 * l2 + norms.div_b.powi(2) * ops.h_minus1_norm(&u).map_err(e)?.powi(2);
        if lhs > rhs * (1.0 + 1e-8) {
            step2 += 1;
        }
    }
    let pass = poisson <= 1e-10 && adjoint <= 1e-10 && spectral <= 1e-10 && step1 == 0 && step2 == 0;
    Ok((
        pass,
        format!(
            "poisson {poisson:.1e}, adjoint {adjoint:.1e}, spectrum {spectral:.1e}, step-1 violations {step1}/1000, step-2 violations {step2}/1000"
        ),
    ))
}

fn heat_oracle(ctx: &mut Ctx) -> Check {
    let start = Instant::now();
    let s = ctx.run("heat_check.json")?;
    let secs = start.elapsed().as_secs_f64();
    let pass = s["passes"] == true && secs < 5.0;
    Ok((pass, format!("ratio {} vs exp(-mu1 t) {}, relative error {:.2e}, {secs:.2}s", s["ratio"], s["expected"], s["relative_error"].as_f64().unwrap_or(f64::NAN))))
}

fn energy_estimate(ctx: &mut Ctx) -> Check {
    let start = Instant::now();
    let s = ctx.run("energy.json")?;
    let secs = start.elapsed().as_secs_f64();
    let pass = s["energy_passes"] == true && secs < 120.0;
    Ok((pass, format!("256 paths, max mean energy / |x0|^2 {:.4}, {secs:.1}s", s["energy_max_ratio"].as_f64().unwrap_or(f64::NAN))))
}

fn lambda_cauchy(ctx: &mut Ctx) -> Check {
    let start = Instant::now();
    let s = ctx.run("yosida_continuation.json")?;
    let secs = start.elapsed().as_secs_f64();
    let report: Value = read_json(&ctx.runs.last().unwrap().1.join("cauchy.json"))?;
    let d: Vec<String> = report["distances"].as_array().into_iter().flatten().map(|v| format!("{:.2e}", v.as_f64().unwrap_or(f64::NAN))).collect();
    let pass = s["strictly_decreasing"] == true && secs < 300.0;
    Ok((pass, format!("D_k = [{}], {secs:.1}s", d.join(", "))))
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn summary_of(ctx: &Ctx, config: &str) -> Result<Value, String> {
    let (_, out) = ctx.runs.iter().find(|(c, _)| c.ends_with(config)).ok_or(format!("{config} has not run"))?;
    read_json(&out.join("summary.json"))
}

fn supermartingale(ctx: &mut Ctx) -> Check {
    let s = summary_of(ctx, "energy.json")?;
    let report = read_json(&ctx.runs.iter().find(|(c, _)| c.ends_with("energy.json")).unwrap().1.join("extinction.json"))?;
    let worst = report["supermartingale"]["worst_increase"].as_f64().unwrap_or(f64::NAN);
    Ok((s["supermartingale_passes"] == true, format!("20 checkpoints, worst (increase - 2 stderr) {worst:.3e}")))
}

fn bound_verdict(s: &Value, secs: f64) -> (bool, String) {
    let b = &s["bound"];
    let frac = b["extinct_fraction"].as_f64().unwrap_or(0.0);
    let pass = b["passes"] == true && b["uninformative"] == false && frac >= 0.5 && s["sensitivity_stable"] == true && secs < 300.0;
    (
        pass,
        format!(
            "worst margin {:.3}, extinct fraction {frac:.3}, threshold verdict stable over 1e-6/1e-8/1e-10: {}, {secs:.1}s",
            b["worst_margin"].as_f64().unwrap_or(f64::NAN),
            s["sensitivity_stable"]
        ),
    )
}

fn extinction_bound(ctx: &mut Ctx) -> Check {
    let start = Instant::now();
    let s = ctx.run("fast_diffusion.json")?;
    Ok(bound_verdict(&s, start.elapsed().as_secs_f64()))
}

fn soc_spde(ctx: &mut Ctx) -> Check {
    let start = Instant::now();
    let s = ctx.run("soc_spde.json")?;
    let (bound_ok, detail) = bound_verdict(&s, start.elapsed().as_secs_f64());
    let sm_ok = s["supermartingale_passes"] == true;

    let out = ctx.work.path().join("rejected");
    let rejected = spm_cli::run_file(&config_path("soc_spde_2d_rejected.json"), Some(&out));
    let gate = match &rejected {
        Err(e) => {
            let j = e.to_json();
            e.exit_code() == 2 && j.to_string().contains("imposes d = 1") && j.to_string().contains("grid.dimension")
        }
        Ok(_) => false,
    };
    Ok((bound_ok && sm_ok && gate, format!("{detail}; supermartingale {sm_ok}; d = 2 rejected: {gate}")))
}

fn dense_z_equivalence(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut mismatches = 0;
    for side in 2..=8usize {
        for _ in 0..200 {
            let n = side * side;
            let heights: Vec<i64> = (0..n).map(|_| rng.random_range(0..8)).collect();
            let mut lat = SandpileLattice::from_heights(side, heights.clone(), 4).map_err(|e| e.to_string())?;
            lat.apply_toppling_matrix();
            let unstable: Vec<i64> = heights.iter().map(|&h| i64::from(h >= 4)).collect();
            let expected: Vec<i64> = (0..n)
                .map(|i| {
                    let z_row: i64 = (0..n)
                        .map(|j| {
                            let d = (i / side).abs_diff(j / side) + (i % side).abs_diff(j % side);
                            let z = if i == j { 4 } else if d == 1 { -1 } else { 0 };
                            z * unstable[j]
                        })
                        .sum();
                    heights[i] - z_row
                })
                .collect();
            mismatches += usize::from(lat.heights() != expected.as_slice());
        }
    }
    Ok(mismatches)
}

fn sandpile(ctx: &mut Ctx) -> Check {
    let e = |x: spm_core::Error| x.to_string();
    let mut centre = vec![0; 9];
    centre[4] = 4;
    let mut lat = SandpileLattice::from_heights(3, centre, 4).map_err(e)?;
    lat.apply_toppling_matrix();
    let three = lat.heights() == [0, 1, 0, 1, 0, 1, 0, 1, 0];
    let mut lat = SandpileLattice::from_heights(2, vec![4; 4], 4).map_err(e)?;
    lat.apply_toppling_matrix();
    let two = lat.heights() == [2, 2, 2, 2] && lat.grains_lost() == 8;
    let mismatches = dense_z_equivalence(&mut ChaCha8Rng::seed_from_u64(10))?;

    let start = Instant::now();
    let s = ctx.run("sandpile.json")?;
    let secs = start.elapsed().as_secs_f64();
    let max = s["max_size"].as_u64().unwrap_or(0);
    let pass = three && two && mismatches == 0 && s["conservation_exact"] == true && s["always_stable"] == true && max >= 64 && secs < 30.0;
    Ok((
        pass,
        format!(
            "3x3 {three}, 2x2 {two}, dense-Z mismatches {mismatches}/1400, conservation {}, always stable {}, max avalanche {max}, {secs:.1}s",
            s["conservation_exact"], s["always_stable"]
        ),
    ))
}

fn admissibility(_: &mut Ctx) -> Check {
    let e = |x: spm_core::Error| x.to_string();
    let spec = GridSpec::new(1, 63).map_err(e)?;
    let ops = GridOperators::new(spec).map_err(e)?;
    let mut mismatches = 0;
    let mut unit = f64::NAN;
    for k in 0..=40 {
        let c = 0.05 * k as f64;
        let fields = VectorFieldSet::from_polynomials(spec, &[vec![Polynomial::constant(c)]]).map_err(e)?;
        let report = check_admissibility(1.0, &fields, &ops).map_err(e)?;
        let ct = report.ctilde_estimate;
        mismatches += usize::from(report.passes != (ct * c * c + c * c <= 2.0));
        if k == 20 {
            unit = estimate_ctilde(&ops, &fields).map_err(e)?.value;
        }
    }
    Ok((
        mismatches == 0 && (unit - 1.0).abs() <= 1e-6,
        format!("41 constants in [0, 2], {mismatches} verdict mismatches, C~ for identity tensor {unit:.9}"),
    ))
}

fn determinism(ctx: &mut Ctx) -> Check {
    let bin = env!("CARGO_BIN_EXE_spm");
    let mut compared = 0;
    let mut differing = Vec::new();
    for (config, first) in &ctx.runs {
        if config.ends_with("heat_check.json") {
            continue;
        }
        let name = first.file_name().unwrap();
        let second = ctx.work.path().join("second").join(name);
        // a different worker count must not change any byte
        let status = Command::new(bin)
            .args(["--threads", "2", "run"])
            .arg(config)
            .arg("--out")
            .arg(&second)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("rerun of {} failed: {}", config.display(), String::from_utf8_lossy(&status.stderr)));
        }
        let manifest = read_json(&first.join("manifest.json"))?;
        for file in manifest["outputs"].as_array().into_iter().flatten().filter_map(Value::as_str).filter(|f| f.ends_with(".csv")) {
            let a = std::fs::read(first.join(file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(second.join(file)).map_err(|e| e.to_string())?;
            compared += 1;
            if a != b {
                differing.push(format!("{}/{file}", name.to_string_lossy()));
            }
        }
    }
    Ok((
        compared > 0 && differing.is_empty(),
        format!("{compared} CSV files compared across reruns with 2 threads, differing: {differing:?}"),
    ))
}

fn main() {
    let criteria: [(&str, fn(&mut Ctx) -> Check); 12] = [
        ("resolvent identity", resolvent_identity),
        ("Yosida properties", yosida_properties),
        ("discrete operators", discrete_operators),
        ("heat-equation oracle", heat_oracle),
        ("energy estimate", energy_estimate),
        ("lambda-Cauchy", lambda_cauchy),
        ("supermartingale", supermartingale),
        ("extinction bound", extinction_bound),
        ("SOC SPDE", soc_spde),
        ("sandpile", sandpile),
        ("admissibility", admissibility),
        ("determinism", determinism),
    ];
    let mut ctx = Ctx { work: tempfile::tempdir().expect("temporary directory"), runs: Vec::new() };
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check(&mut ctx).unwrap_or_else(|err| (false, format!("error: {err}")));
        failures += usize::from(!pass);
        println!("criterion {}: {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

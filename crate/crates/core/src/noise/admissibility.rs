use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridField, GridOperators};
use crate::noise::fields::VectorFieldSet;
use crate::noise::rng::{stream, StreamPurpose};
use crate::scalar::Real;

const POWER_ITERATIONS: usize = 100;
const POWER_RTOL: f64 = 1e-8;

/// Mesh-level estimate of the elliptic constant C̃ in
/// `|(−Δ)⁻¹ div(A∇u)|₂ ≤ C̃ γ |u|₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtildeEstimate {
    /// Largest singular value divided by γ (0 when γ = 0).
    pub value: f64,
    /// Largest singular value of `u ↦ (−Δ_h)⁻¹ div(A∇u)`.
    pub singular_value: f64,
    pub iterations: usize,
    /// False when the power iteration stopped on the iteration cap.
    pub converged: bool,
}

/// Power iteration on `TᵀT` with `T = (−Δ_h)⁻¹ div(A∇·)`.
pub fn estimate_ctilde<T: Real>(ops: &GridOperators<T>, fields: &VectorFieldSet<T>) -> Result<CtildeEstimate> {
    let gamma = fields.gamma();
    if gamma == 0.0 {
        return Ok(CtildeEstimate { value: 0.0, singular_value: 0.0, iterations: 0, converged: true });
    }
    let spec = ops.spec();
    let div_form = fields.tensor().assemble_divergence_form();
    let apply_t = |u: &[T]| {
        let mut tmp = vec![T::zero(); u.len()];
        div_form.matvec(u, &mut tmp);
        ops.poisson_unchecked(&tmp).into_values()
    };
    let apply_tt = |v: &[T]| {
        let z = ops.poisson_unchecked(v);
        let mut out = vec![T::zero(); v.len()];
        div_form.matvec(z.values(), &mut out);
        out
    };
    let norm = |v: &[T]| v.iter().map(|x| *x * *x).sum::<T>().sqrt();

    let mut rng = stream(0, StreamPurpose::OperatorNorm, 0, 0);
    let mut u: Vec<T> = (0..spec.node_count())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z)
        })
        .collect();
    let n0 = norm(&u);
    u.iter_mut().for_each(|x| *x = *x / n0);

    let mut sigma = T::zero();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=POWER_ITERATIONS {
        iterations = it;
        let tu = apply_t(&u);
        let next_sigma = norm(&tu);
        let w = apply_tt(&tu);
        let wn = norm(&w);
        let change = (next_sigma - sigma).abs();
        sigma = next_sigma;
        if wn == T::zero() {
            converged = true;
            break;
        }
        u = w.into_iter().map(|x| x / wn).collect();
        if it > 1 && change <= T::lit(POWER_RTOL) * sigma {
            converged = true;
            break;
        }
    }
    let s = sigma.as_f64();
    Ok(CtildeEstimate { value: s / gamma, singular_value: s, iterations, converged })
}

/// Verdict of `C̃γ(b) + |b|∞² ≤ 2ν` with the derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub gamma: f64,
    pub ctilde_estimate: f64,
    pub ctilde_converged: bool,
    pub b_sup_sq: f64,
    pub nu: f64,
    pub lhs: f64,
    pub passes: bool,
    /// `ν − (C̃γ + |b|∞²)/2`.
    pub c1: f64,
    /// `|(div b_j)_j|∞²`.
    pub c2: f64,
    /// C̃ is estimated on the grid and depends on the mesh.
    pub mesh_dependent: bool,
}

pub fn check_admissibility<T: Real>(
    nu: T,
    fields: &VectorFieldSet<T>,
    ops: &GridOperators<T>,
) -> Result<AdmissibilityReport> {
    let nu_f = nu.as_f64();
    if !nu_f.is_finite() || nu_f < 0.0 {
        return Err(invalid("nu", format!("{nu_f} must be finite and >= 0")));
    }
    if nu_f == 0.0 && !fields.is_zero() {
        return Err(Error::DegenerateViscosity { nu: nu_f });
    }
    let gamma = fields.gamma();
    let ct = estimate_ctilde(ops, fields)?;
    let b_sup_sq = fields.sup_norms().b.powi(2);
    let lhs = ct.value * gamma + b_sup_sq;
    Ok(AdmissibilityReport {
        gamma,
        ctilde_estimate: ct.value,
        ctilde_converged: ct.converged,
        b_sup_sq,
        nu: nu_f,
        lhs,
        passes: lhs <= 2.0 * nu_f,
        c1: nu_f - lhs / 2.0,
        c2: fields.sup_norms().div_b.powi(2),
        mesh_dependent: true,
    })
}

/// `|(−Δ_h)⁻¹ div(A∇u)|₂` for a single field (used by the operator-bound checks).
pub fn elliptic_image_norm<T: Real>(ops: &GridOperators<T>, fields: &VectorFieldSet<T>, u: &GridField<T>) -> Result<T> {
    let div = ops.divergence_form_apply(fields.tensor(), u)?;
    let z = ops.poisson_solve(&div)?;
    Ok(ops.l2_norm(&z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::noise::fields::Polynomial;

    fn constant_fields(n: usize, c: f64) -> (GridOperators<f64>, VectorFieldSet<f64>) {
        let spec = GridSpec::new(1, n).unwrap();
        let ops = GridOperators::new(spec).unwrap();
        let f = VectorFieldSet::from_polynomials(spec, &[vec![Polynomial::constant(c)]]).unwrap();
        (ops, f)
    }

    #[test]
    fn zero_noise_is_admissible_with_zero_lhs() {
        let spec = GridSpec::new(1, 10).unwrap();
        let ops = GridOperators::new(spec).unwrap();
        let r = check_admissibility(1.0, &VectorFieldSet::zero(spec), &ops).unwrap();
        assert!(r.passes);
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.c1, 1.0);
    }

    #[test]
    fn unit_constant_field_gives_unit_ctilde() {
        let (ops, f) = constant_fields(63, 1.0);
        let ct = estimate_ctilde(&ops, &f).unwrap();
        assert!((ct.value - 1.0).abs() < 1e-6);
        assert!(ct.converged);
    }

    #[test]
    fn degenerate_viscosity_rejected() {
        let (ops, f) = constant_fields(8, 0.5);
        assert!(matches!(check_admissibility(0.0, &f, &ops), Err(Error::DegenerateViscosity { .. })));
        assert!(check_admissibility(-1.0, &f, &ops).is_err());
    }

    #[test]
    fn small_viscosity_fails_for_parabolic_field() {
        let spec = GridSpec::new(1, 63).unwrap();
        let ops = GridOperators::new(spec).unwrap();
        let f = VectorFieldSet::from_polynomials(spec, &[vec![Polynomial::univariate(vec![0.0, 1.0, -1.0])]]).unwrap();
        let r = check_admissibility(0.01, &f, &ops).unwrap();
        assert!(!r.passes);
        assert!(r.lhs > 0.02);
        assert!(r.c1 < 0.0);
    }
}

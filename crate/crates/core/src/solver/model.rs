use crate::error::{Error, Result};
use crate::grid::band::BandMatrix;
use crate::grid::{GridField, GridOperators};
use crate::monotone::{MonotoneGraph, YosidaParams};
use crate::noise::{check_admissibility, AdmissibilityReport, VectorFieldSet};
use crate::scalar::Real;
use crate::solver::config::SolverConfig;

/// Result of one accepted time step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub state: GridField<T>,
    pub newton_iterations: usize,
    /// H⁻¹ norm of the implicit-equation residual at acceptance.
    pub residual: T,
}

/// The discretized Itô equation
///
/// ```text
/// dX = (ν Δ_h X + Δ_h ψ_λ(X) + ½ div(A ∇X)) dt + Σ_i (b_i·∇_h X) dW_i
/// ```
///
/// with the linear drift operators assembled once. Construction fails
/// unless the noise passes the admissibility test.
#[derive(Debug, Clone)]
pub struct SpdeModel<'a, T> {
    ops: &'a GridOperators<T>,
    fields: &'a VectorFieldSet<T>,
    graph: MonotoneGraph<T>,
    nu: T,
    admissibility: AdmissibilityReport,
    // ν Δ_h + ½ div(A ∇·)
    linear_drift: BandMatrix<T>,
    laplacian: BandMatrix<T>,
}

impl<'a, T: Real> SpdeModel<'a, T> {
    pub fn new(ops: &'a GridOperators<T>, fields: &'a VectorFieldSet<T>, graph: MonotoneGraph<T>, nu: T) -> Result<Self> {
        if fields.spec() != ops.spec() {
            return Err(Error::DimensionMismatch { expected: ops.spec().node_count(), found: fields.spec().node_count() });
        }
        let admissibility = check_admissibility(nu, fields, ops)?;
        if !admissibility.passes {
            return Err(Error::NotAdmissible { lhs: admissibility.lhs, bound: 2.0 * admissibility.nu });
        }
        let neg_lap = ops.neg_laplacian_matrix();
        let mut laplacian = BandMatrix::zeros(neg_lap.size(), neg_lap.half_width());
        laplacian.axpy(-T::one(), neg_lap);
        let mut linear_drift = fields.tensor().assemble_divergence_form();
        let mut scaled = BandMatrix::zeros(neg_lap.size(), neg_lap.half_width());
        scaled.axpy(T::lit(0.5), &linear_drift);
        scaled.axpy(nu, &laplacian);
        linear_drift = scaled;
        Ok(Self { ops, fields, graph, nu, admissibility, linear_drift, laplacian })
    }

    pub fn ops(&self) -> &'a GridOperators<T> {
        self.ops
    }

    pub fn fields(&self) -> &'a VectorFieldSet<T> {
        self.fields
    }

    pub fn graph(&self) -> MonotoneGraph<T> {
        self.graph
    }

    pub fn nu(&self) -> T {
        self.nu
    }

    pub fn admissibility(&self) -> &AdmissibilityReport {
        &self.admissibility
    }

    /// Drift `ν Δ_h u + Δ_h ψ_λ(u) + ½ div(A ∇u)` evaluated explicitly.
    pub fn drift(&self, u: &GridField<T>, lambda: T) -> Result<GridField<T>> {
        let params = YosidaParams::new(lambda)?;
        if u.spec() != self.ops.spec() {
            return Err(Error::DimensionMismatch { expected: self.ops.spec().node_count(), found: u.len() });
        }
        Ok(self.drift_and_slopes(u.values(), &params)?.0)
    }

    fn drift_and_slopes(&self, y: &[T], params: &YosidaParams<T>) -> Result<(GridField<T>, Vec<T>)> {
        let mut psi = Vec::with_capacity(y.len());
        let mut slopes = Vec::with_capacity(y.len());
        for &v in y {
            let (p, s) = self.graph.yosida_with_derivative(params, v)?;
            psi.push(p);
            slopes.push(s);
        }
        let mut lin = vec![T::zero(); y.len()];
        self.linear_drift.matvec(y, &mut lin);
        let lap_psi = self.ops.laplacian_unchecked(&psi);
        let vals = lin.iter().zip(lap_psi.values()).map(|(a, b)| *a + *b).collect();
        Ok((GridField::from_raw(self.ops.spec(), vals), slopes))
    }

    /// Residual `Y − dt·drift(Y) − rhs` of the implicit equation, measured
    /// in the H⁻¹ norm, as an independent check of an accepted step.
    pub fn implicit_residual(&self, y: &GridField<T>, rhs: &GridField<T>, dt: T, lambda: T) -> Result<T> {
        let drift = self.drift(y, lambda)?;
        let r = y.axpy(-dt, &drift).sub(rhs);
        self.ops.h_minus1_norm(&r)
    }

    /// Right-hand side `X + Σ_i (b_i·∇_h X) dW_i` of the implicit step.
    pub fn explicit_part(&self, state: &GridField<T>, dw: &[T]) -> Result<GridField<T>> {
        if dw.len() != self.fields.n_components() {
            return Err(Error::DimensionMismatch { expected: self.fields.n_components(), found: dw.len() });
        }
        if self.fields.n_components() == 0 || dw.iter().all(|w| *w == T::zero()) {
            return Ok(state.clone());
        }
        let grad = self.ops.gradient(state)?;
        let inc = self.fields.noise_increment_from_gradient(&grad, dw);
        Ok(state.axpy(T::one(), &inc))
    }

    /// One semi-implicit Euler–Maruyama step: backward Euler in the drift,
    /// explicit in the noise, solved by damped Newton.
    ///
    /// On failure returns [`Error::StepFailure`] carrying the residual trace
    /// (with `step` set to 0; callers fill in the step index).
    pub fn step(&self, state: &GridField<T>, dw: &[T], dt: T, cfg: &SolverConfig<T>) -> Result<StepOutcome<T>> {
        let params = YosidaParams::new(cfg.lambda)?;
        if state.spec() != self.ops.spec() {
            return Err(Error::DimensionMismatch { expected: self.ops.spec().node_count(), found: state.len() });
        }
        if !state.is_finite() {
            return Err(Error::NonFinite { index: state.values().iter().position(|v| !v.is_finite()).unwrap_or(0) });
        }
        let rhs = self.explicit_part(state, dw)?;
        let scale = self.ops.h_minus1_unchecked(rhs.values());
        let tol = cfg.newton_tol * scale.min(T::one());

        let residual_of = |y: &[T]| -> Result<(Vec<T>, Vec<T>, T)> {
            let (drift, slopes) = self.drift_and_slopes(y, &params)?;
            let r: Vec<T> = y
                .iter()
                .zip(drift.values())
                .zip(rhs.values())
                .map(|((y, f), b)| *y - dt * *f - *b)
                .collect();
            let norm = self.ops.h_minus1_unchecked(&r);
            Ok((r, slopes, norm))
        };

        let mut y = state.values().to_vec();
        let (mut r, mut slopes, mut norm) = residual_of(&y)?;
        let mut trace = vec![norm.as_f64()];
        let mut lu = None;
        let n = y.len();

        for iter in 1..=cfg.newton_max_iters {
            let frozen = matches!(cfg.freeze_jacobian_after, Some(k) if iter > k);
            if lu.is_none() || !frozen {
                let mut jac = BandMatrix::identity(n, self.linear_drift.half_width());
                jac.axpy(-dt, &self.linear_drift);
                let mut lap_slopes = self.laplacian.clone();
                lap_slopes.scale_columns(&slopes);
                jac.axpy(-dt, &lap_slopes);
                lu = Some(jac.factor(false)?);
            }
            let mut delta: Vec<T> = r.iter().map(|v| -*v).collect();
            lu.as_ref().expect("jacobian factored").solve_in_place(&mut delta);

            // backtracking on the residual norm; keep the best trial
            let mut t = T::one();
            let mut best: Option<(Vec<T>, Vec<T>, Vec<T>, T)> = None;
            for _ in 0..12 {
                let trial: Vec<T> = y.iter().zip(&delta).map(|(a, d)| *a + t * *d).collect();
                let (tr, ts, tn) = residual_of(&trial)?;
                let improved = tn <= (T::one() - T::lit(1e-4) * t) * norm;
                if best.as_ref().is_none_or(|b| tn < b.3) {
                    best = Some((trial, tr, ts, tn));
                }
                if improved || !tn.is_finite() && t < T::lit(1e-3) {
                    break;
                }
                t = t / T::lit(2.0);
            }
            let (ny, nr, ns, nn) = best.expect("at least one trial");
            y = ny;
            r = nr;
            slopes = ns;
            norm = nn;
            trace.push(norm.as_f64());
            if !norm.is_finite() {
                break;
            }
            if norm <= tol {
                return Ok(StepOutcome {
                    state: GridField::from_raw(self.ops.spec(), y),
                    newton_iterations: iter,
                    residual: norm,
                });
            }
        }
        Err(Error::StepFailure { step: 0, residuals: trace })
    }
}

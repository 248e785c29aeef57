use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Time stepping parameters for the Yosida-regularized equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub dt: T,
    pub t_end: T,
    /// Yosida parameter λ > 0.
    pub lambda: T,
    /// Newton acceptance threshold on the H⁻¹ norm of the residual.
    pub newton_tol: T,
    pub newton_max_iters: usize,
    /// Record norms every this many steps (and always at the final step).
    pub record_every: usize,
    /// Extinction is declared once ‖X(t)‖₋₁ ≤ extinction_eps.
    pub extinction_eps: T,
    /// Reuse the Newton Jacobian from this iteration on (performance flag).
    pub freeze_jacobian_after: Option<usize>,
    /// Keep the state at every recorded instant.
    pub keep_snapshots: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(dt: T, t_end: T, lambda: T) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            lambda,
            newton_tol: T::lit(1e-10),
            newton_max_iters: 50,
            record_every: 1,
            extinction_eps: T::zero(),
            freeze_jacobian_after: None,
            keep_snapshots: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(invalid("t_end", format!("{} must be finite and >= dt", self.t_end)));
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(invalid("lambda", format!("{} must be positive", self.lambda)));
        }
        if !(self.newton_tol >= T::zero()) {
            return Err(invalid("newton_tol", "must be >= 0"));
        }
        if self.newton_max_iters == 0 {
            return Err(invalid("newton_max_iters", "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be >= 1"));
        }
        if !(self.extinction_eps >= T::zero()) {
            return Err(invalid("extinction_eps", "must be >= 0"));
        }
        Ok(())
    }

    /// ⌈t_end / dt⌉, ignoring rounding noise in the quotient.
    pub fn n_steps(&self) -> usize {
        let q = (self.t_end / self.dt).as_f64();
        (q - 1e-9).ceil().max(1.0) as usize
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_keep_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    pub fn with_extinction_eps(mut self, eps: T) -> Self {
        self.extinction_eps = eps;
        self
    }
}

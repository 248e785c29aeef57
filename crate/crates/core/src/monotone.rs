//! Maximal monotone graphs ψ on the real line and their resolvent / Yosida
//! calculus.
//!
//! The multivalued graph is only ever touched through `J_λ = (I + λψ)⁻¹`,
//! which is single valued for every λ > 0; no selection of ψ(0) for the sign
//! graph is needed.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Nonlinearity of the porous-media operator `Δψ(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneGraph<T> {
    /// ψ(r) = ρ|r|^{m−1} r with m ∈ (0, 1).
    FastDiffusion { rho: T, m: T },
    /// ψ(r) = ρ sign(r), multivalued at 0.
    Sign { rho: T },
    /// ψ(r) = slope · r.
    Linear { slope: T },
    /// ψ(r) = ρ|r|^{m−1} r with m ≥ 1 (slow diffusion).
    PowerLaw { rho: T, m: T },
}

/// Parameters of the scalar resolvent solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaParams<T> {
    pub lambda: T,
    /// Relative width at which the bisection bracket is accepted.
    pub scalar_solver_tol: T,
    pub max_bisection_iters: usize,
}

impl<T: Real> YosidaParams<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(invalid("lambda", format!("{lambda} must be a positive finite number")));
        }
        Ok(Self { lambda, scalar_solver_tol: T::lit(1e-14), max_bisection_iters: 200 })
    }
}

impl<T: Real> MonotoneGraph<T> {
    pub fn fast_diffusion(rho: T, m: T) -> Result<Self> {
        check_positive("rho", rho)?;
        if !(m > T::zero() && m < T::one()) {
            return Err(invalid("m", format!("{m} not in (0, 1)")));
        }
        Ok(Self::FastDiffusion { rho, m })
    }

    pub fn sign(rho: T) -> Result<Self> {
        check_positive("rho", rho)?;
        Ok(Self::Sign { rho })
    }

    pub fn linear(slope: T) -> Result<Self> {
        if !(slope >= T::zero()) || !slope.is_finite() {
            return Err(invalid("slope", format!("{slope} must be finite and >= 0")));
        }
        Ok(Self::Linear { slope })
    }

    pub fn power_law(rho: T, m: T) -> Result<Self> {
        check_positive("rho", rho)?;
        if !(m >= T::one()) || !m.is_finite() {
            return Err(invalid("m", format!("{m} must be >= 1")));
        }
        Ok(Self::PowerLaw { rho, m })
    }

    /// Growth exponent m in `sup|ψ(r)| ≤ C(1 + |r|^m)`.
    pub fn growth_exponent(&self) -> T {
        match *self {
            Self::FastDiffusion { m, .. } | Self::PowerLaw { m, .. } => m,
            Self::Sign { .. } => T::zero(),
            Self::Linear { .. } => T::one(),
        }
    }

    /// Growth constant C.
    pub fn growth_constant(&self) -> T {
        match *self {
            Self::FastDiffusion { rho, .. } | Self::Sign { rho } | Self::PowerLaw { rho, .. } => rho,
            Self::Linear { slope } => slope,
        }
    }

    /// Minimal-norm section ψ°(r); zero at the origin for every variant.
    pub fn minimal_section(&self, r: T) -> T {
        if r == T::zero() {
            return T::zero();
        }
        match *self {
            Self::FastDiffusion { rho, m } | Self::PowerLaw { rho, m } => rho * r.abs().powf(m - T::one()) * r,
            Self::Sign { rho } => rho * r.signum(),
            Self::Linear { slope } => slope * r,
        }
    }

    /// Largest |θ| over θ ∈ ψ(r).
    pub fn sup_abs(&self, r: T) -> T {
        match *self {
            Self::Sign { rho } => rho,
            _ => self.minimal_section(r).abs(),
        }
    }

    /// `J_λ(r)`: the unique y with `y + λψ(y) ∋ r`.
    pub fn resolvent(&self, lambda: T, r: T) -> Result<T> {
        self.resolvent_with(&YosidaParams::new(lambda)?, r)
    }

    pub fn resolvent_with(&self, params: &YosidaParams<T>, r: T) -> Result<T> {
        let lambda = params.lambda;
        if r == T::zero() {
            return Ok(T::zero());
        }
        match *self {
            Self::Linear { slope } => Ok(r / (T::one() + lambda * slope)),
            Self::Sign { rho } => Ok(r.signum() * (r.abs() - lambda * rho).max(T::zero())),
            Self::FastDiffusion { rho, m } | Self::PowerLaw { rho, m } => {
                let y = power_resolvent(lambda * rho, m, r.abs(), params)?;
                Ok(r.signum() * y)
            }
        }
    }

    /// `ψ_λ(r) = (r − J_λ(r)) / λ`.
    pub fn yosida(&self, lambda: T, r: T) -> Result<T> {
        let params = YosidaParams::new(lambda)?;
        let j = self.resolvent_with(&params, r)?;
        Ok(self.yosida_from_resolvent(lambda, r, j))
    }

    fn yosida_from_resolvent(&self, lambda: T, r: T, j: T) -> T {
        match *self {
            // exact range [−ρ, ρ] instead of the rounded (r − J)/λ
            Self::Sign { rho } => {
                if r.abs() <= lambda * rho {
                    (r / lambda).max(-rho).min(rho)
                } else {
                    rho * r.signum()
                }
            }
            _ => (r - j) / lambda,
        }
    }

    /// Derivative of `ψ_λ` in r, clamped to `[0, 1/λ]`.
    pub fn yosida_derivative(&self, lambda: T, r: T) -> Result<T> {
        Ok(self.yosida_with_derivative(&YosidaParams::new(lambda)?, r)?.1)
    }

    /// `(ψ_λ(r), ψ_λ'(r))` sharing one resolvent evaluation.
    ///
    /// Power-type graphs use the implicit-function derivative of the
    /// resolvent, `J' = 1 / (1 + λρ m J^{m−1})`; the sign graph is piecewise
    /// linear and falls back to a central difference exactly at its kinks.
    pub fn yosida_with_derivative(&self, params: &YosidaParams<T>, r: T) -> Result<(T, T)> {
        let lambda = params.lambda;
        let inv = T::one() / lambda;
        let j = self.resolvent_with(params, r)?;
        let value = self.yosida_from_resolvent(lambda, r, j);
        let deriv = match *self {
            Self::Linear { slope } => slope / (T::one() + lambda * slope),
            Self::Sign { rho } => {
                let edge = lambda * rho;
                if r.abs() < edge {
                    inv
                } else if r.abs() > edge {
                    T::zero()
                } else {
                    self.central_difference(params, r)?
                }
            }
            Self::FastDiffusion { rho, m } | Self::PowerLaw { rho, m } => {
                let y = j.abs();
                if y > T::zero() {
                    let q = lambda * rho * m * y.powf(m - T::one());
                    if q.is_finite() {
                        q / (lambda * (T::one() + q))
                    } else {
                        inv
                    }
                } else if m < T::one() {
                    inv
                } else if m == T::one() {
                    rho / (T::one() + lambda * rho)
                } else {
                    T::zero()
                }
            }
        };
        Ok((value, deriv.max(T::zero()).min(inv)))
    }

    fn central_difference(&self, params: &YosidaParams<T>, r: T) -> Result<T> {
        let step = T::lit(1e-6) * T::one().max(r.abs());
        let hi = self.resolvent_with(params, r + step)?;
        let lo = self.resolvent_with(params, r - step)?;
        let up = self.yosida_from_resolvent(params.lambda, r + step, hi);
        let down = self.yosida_from_resolvent(params.lambda, r - step, lo);
        Ok((up - down) / (T::lit(2.0) * step))
    }

    /// Pointwise check of `|ψ_λ(r)| ≤ C(1 + |r|^m)` over a grid of (λ, r).
    pub fn growth_check(&self, lambdas: &[T], rs: &[T]) -> Result<GrowthReport> {
        if lambdas.is_empty() || rs.is_empty() {
            return Err(invalid("grid", "growth check needs nonempty lambda and r grids"));
        }
        let m = self.growth_exponent();
        let c = self.growth_constant();
        let mut max_ratio = 0.0f64;
        let mut violations = Vec::new();
        let mut rows = Vec::with_capacity(lambdas.len() * rs.len());
        for &lambda in lambdas {
            for &r in rs {
                let psi = self.yosida(lambda, r)?;
                let ratio = psi.abs() / (T::one() + r.abs().powf(m));
                let ratio_f = ratio.as_f64();
                max_ratio = max_ratio.max(ratio_f);
                if ratio > c * (T::one() + T::lit(1e-12)) {
                    violations.push((lambda.as_f64(), r.as_f64(), ratio_f));
                }
                rows.push(GrowthRow { lambda: lambda.as_f64(), r: r.as_f64(), psi: psi.as_f64(), ratio: ratio_f });
            }
        }
        Ok(GrowthReport { constant: c.as_f64(), exponent: m.as_f64(), max_ratio, passes: violations.is_empty(), violations, rows })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub lambda: f64,
    pub r: f64,
    pub psi: f64,
    pub ratio: f64,
}

/// Outcome of [`MonotoneGraph::growth_check`].
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub constant: f64,
    pub exponent: f64,
    /// max |ψ_λ(r)| / (1 + |r|^m) over the grid.
    pub max_ratio: f64,
    pub passes: bool,
    /// (λ, r, ratio) triples exceeding the constant.
    pub violations: Vec<(f64, f64, f64)>,
    pub rows: Vec<GrowthRow>,
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(invalid(name, format!("{v} must be positive and finite")));
    }
    Ok(())
}

/// Solves `y + a y^m = r` for y ≥ 0, given a = λρ > 0 and r > 0.
fn power_resolvent<T: Real>(a: T, m: T, r: T, params: &YosidaParams<T>) -> Result<T> {
    if m == T::one() {
        return Ok(r / (T::one() + a));
    }
    if m == T::lit(0.5) {
        // quadratic in s = √y, written without cancellation
        let s = T::lit(2.0) * r / (a + (a * a + T::lit(4.0) * r).sqrt());
        return Ok(s * s);
    }
    let g = |y: T| y + a * y.powf(m);
    let inv_m = T::one() / m;
    // one of the two terms carries at least half of r
    let mut lo = (r / T::lit(2.0)).min((r / (T::lit(2.0) * a)).powf(inv_m));
    let mut hi = r.min((r / a).powf(inv_m));
    if !(lo > T::zero()) {
        lo = T::zero();
    }
    if g(hi) <= r {
        return Ok(hi);
    }
    if lo > T::zero() && g(lo) >= r {
        return Ok(lo);
    }
    for _ in 0..params.max_bisection_iters {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if hi - lo <= params.scalar_solver_tol * hi || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = g(mid);
        if v == r {
            return Ok(mid);
        } else if v < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::ResolventNonConvergence { iterations: params.max_bisection_iters, r: r.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graphs() -> Vec<MonotoneGraph<f64>> {
        vec![
            MonotoneGraph::<f64>::fast_diffusion(1.0, 0.5).unwrap(),
            MonotoneGraph::<f64>::fast_diffusion(2.0, 0.3).unwrap(),
            MonotoneGraph::<f64>::sign(1.0).unwrap(),
            MonotoneGraph::<f64>::linear(1.0).unwrap(),
            MonotoneGraph::<f64>::power_law(1.0, 2.0).unwrap(),
        ]
    }

    #[test]
    fn resolvent_of_zero_is_zero() {
        for g in graphs() {
            assert_eq!(g.resolvent(0.7, 0.0).unwrap(), 0.0);
            assert_eq!(g.yosida(0.7, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn fast_diffusion_hand_value() {
        let g = MonotoneGraph::<f64>::fast_diffusion(1.0, 0.5).unwrap();
        assert!((g.resolvent(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.yosida(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.resolvent(1.0, -2.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_branch_hand_value() {
        // y = 1: 1 + 1 * 1^{0.3} = 2
        let g = MonotoneGraph::<f64>::fast_diffusion(1.0, 0.3).unwrap();
        assert!((g.resolvent(1.0, 2.0).unwrap() - 1.0).abs() < 1e-13);
        // y = 8: 8 + 0.5 * 8^{1/3} = 9
        let g = MonotoneGraph::<f64>::fast_diffusion(0.5, 1.0 / 3.0).unwrap();
        assert!((g.resolvent(1.0, 9.0).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sign_soft_threshold() {
        let g = MonotoneGraph::<f64>::sign(1.0).unwrap();
        assert_eq!(g.resolvent(0.5, 0.3).unwrap(), 0.0);
        assert_eq!(g.resolvent(0.5, 2.0).unwrap(), 1.5);
        assert_eq!(g.resolvent(0.5, -2.0).unwrap(), -1.5);
        assert!((g.yosida(0.5, 0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(g.yosida(0.5, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn linear_yosida_and_derivative() {
        let g = MonotoneGraph::<f64>::linear(1.0).unwrap();
        for (lambda, r) in [(0.1, 3.0), (2.0, -1.5), (1.0, 0.25)] {
            assert!((g.yosida(lambda, r).unwrap() - r / (1.0 + lambda)).abs() < 1e-14);
            assert!((g.yosida_derivative(lambda, r).unwrap() - 1.0 / (1.0 + lambda)).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_derivative_flat_outside_threshold() {
        let g = MonotoneGraph::<f64>::sign(1.0).unwrap();
        assert_eq!(g.yosida_derivative(0.5, 2.0).unwrap(), 0.0);
        assert_eq!(g.yosida_derivative(0.5, 0.1).unwrap(), 2.0);
        let kink = g.yosida_derivative(0.5, 0.5).unwrap();
        assert!((0.0..=2.0).contains(&kink));
    }

    #[test]
    fn fast_diffusion_derivative_matches_finite_difference() {
        let g = MonotoneGraph::<f64>::fast_diffusion(1.3, 0.4).unwrap();
        for (lambda, r) in [(0.1, 0.5), (1.0, 3.0), (0.01, -2.0)] {
            let d = g.yosida_derivative(lambda, r).unwrap();
            let e = 1e-6;
            let fd = (g.yosida(lambda, r + e).unwrap() - g.yosida(lambda, r - e).unwrap()) / (2.0 * e);
            assert!((d - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{d} vs {fd}");
        }
        assert_eq!(g.yosida_derivative(0.25, 0.0).unwrap(), 4.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MonotoneGraph::<f64>::fast_diffusion(1.0, 1.0).is_err());
        assert!(MonotoneGraph::<f64>::fast_diffusion(-1.0, 0.5).is_err());
        assert!(MonotoneGraph::<f64>::sign(0.0).is_err());
        assert!(MonotoneGraph::<f64>::power_law(1.0, 0.5).is_err());
        assert!(MonotoneGraph::<f64>::linear(1.0).unwrap().resolvent(0.0, 1.0).is_err());
    }

    #[test]
    fn growth_check_examples() {
        let rs: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
        let fd = MonotoneGraph::<f64>::fast_diffusion(1.0, 0.5).unwrap();
        let report = fd.growth_check(&[1.0, 0.1, 0.01], &rs).unwrap();
        assert!(report.passes);
        assert!(report.max_ratio <= 1.0);

        let sign = MonotoneGraph::<f64>::sign(2.0).unwrap();
        let report = sign.growth_check(&[1.0, 0.1, 0.01], &rs).unwrap();
        assert!(report.passes);
        assert!(report.rows.iter().all(|row| row.psi.abs() <= 2.0));

        let zero_row = fd.growth_check(&[1.0, 0.1, 0.01], &[0.0]).unwrap();
        assert!(zero_row.rows.iter().all(|row| row.psi == 0.0 && row.ratio == 0.0));
        assert!(fd.growth_check(&[], &rs).is_err());
    }

    #[test]
    fn yosida_converges_to_section() {
        let g = MonotoneGraph::<f64>::fast_diffusion(1.0, 0.5).unwrap();
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&l| (g.yosida(l, 1.0).unwrap() - 1.0).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[3] < 1e-3);
    }
}

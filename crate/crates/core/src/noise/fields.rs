use crate::error::{invalid, Error, Result};
use crate::grid::{GridField, GridOperators, GridSpec, TensorField};
use crate::scalar::Real;

/// Polynomial in up to two variables, `Σ c[p][q] ξ₁^p ξ₂^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coefficients: Vec<Vec<T>>,
}

impl<T: Real> Polynomial<T> {
    /// Ascending coefficients in ξ₁.
    pub fn univariate(coefficients: Vec<T>) -> Self {
        Self { coefficients: coefficients.into_iter().map(|c| vec![c]).collect() }
    }

    /// `c[p][q]` multiplies ξ₁^p ξ₂^q.
    pub fn bivariate(coefficients: Vec<Vec<T>>) -> Self {
        Self { coefficients }
    }

    pub fn constant(c: T) -> Self {
        Self::univariate(vec![c])
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().flatten().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: &[T]) -> T {
        let x1 = x[0];
        let x2 = x.get(1).copied().unwrap_or(T::zero());
        // Horner in ξ₁ over Horner-in-ξ₂ rows
        self.coefficients.iter().rev().fold(T::zero(), |acc, row| {
            let inner = row.iter().rev().fold(T::zero(), |a, c| a * x2 + *c);
            acc * x1 + inner
        })
    }
}

/// Sup norms of the noise coefficients over the stored nodal samples.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SupNorms {
    /// `|A_kj|∞`, row-major d x d.
    pub a: Vec<f64>,
    /// `|D_k A_kj|∞`, row-major d x d.
    pub da: Vec<f64>,
    /// `|b|∞ = max_ξ (Σ_{i,k} b_ik²)^{1/2}`.
    pub b: f64,
    /// `|(div b_j)_j|∞ = max_ξ (Σ_j (div b_j)²)^{1/2}`.
    pub div_b: f64,
}

/// Gradient-noise vector fields `b_1, …, b_N` sampled on the closed grid
/// together with the derived tensor `A = bᵀb` and its derivatives.
#[derive(Debug, Clone)]
pub struct VectorFieldSet<T> {
    spec: GridSpec,
    // components[i][k][closed node]
    components: Vec<Vec<Vec<T>>>,
    tensor: TensorField<T>,
    // derivative[k][j][closed node] = ∂_k A_kj
    tensor_derivative: Vec<Vec<Vec<T>>>,
    // divergence[i][closed node]
    divergence: Vec<Vec<T>>,
    sup_norms: SupNorms,
}

impl<T: Real> VectorFieldSet<T> {
    /// Samples `b_ik(ξ) = f(i, k, ξ)` for `i < n_components`, `k < d`.
    pub fn build(spec: GridSpec, n_components: usize, f: impl Fn(usize, usize, &[T]) -> T) -> Result<Self> {
        let d = spec.dimension();
        let closed = spec.closed_node_count();
        let mut components = vec![vec![Vec::with_capacity(closed); d]; n_components];
        for c in 0..closed {
            let p = spec.closed_point::<T>(c);
            for (i, comp) in components.iter_mut().enumerate() {
                for (k, axis) in comp.iter_mut().enumerate() {
                    let v = f(i, k, &p[..d]);
                    if !v.is_finite() {
                        return Err(Error::NonFinite { index: c });
                    }
                    axis.push(v);
                }
            }
        }
        Self::from_samples(spec, components)
    }

    /// Builds from polynomial components `polys[i][k]`.
    pub fn from_polynomials(spec: GridSpec, polys: &[Vec<Polynomial<T>>]) -> Result<Self> {
        let d = spec.dimension();
        for (i, row) in polys.iter().enumerate() {
            if row.len() != d {
                return Err(invalid("noise.fields", format!("field {i} has {} components, expected {d}", row.len())));
            }
            if row.iter().any(|p| !p.is_finite()) {
                return Err(invalid("noise.fields", format!("field {i} has non-finite coefficients")));
            }
        }
        Self::build(spec, polys.len(), |i, k, x| polys[i][k].eval(x))
    }

    /// No noise (N = 0).
    pub fn zero(spec: GridSpec) -> Self {
        Self::from_samples(spec, Vec::new()).expect("empty field set is valid")
    }

    fn from_samples(spec: GridSpec, components: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let d = spec.dimension();
        let closed = spec.closed_node_count();
        let mut a_values = Vec::with_capacity(closed * d * d);
        for c in 0..closed {
            for k in 0..d {
                for j in 0..d {
                    a_values.push(components.iter().map(|b| b[k][c] * b[j][c]).fold(T::zero(), |s, v| s + v));
                }
            }
        }
        let tensor = TensorField::from_values(spec, a_values)?;

        let tensor_derivative: Vec<Vec<Vec<T>>> = (0..d)
            .map(|k| {
                (0..d)
                    .map(|j| {
                        let samples: Vec<T> = (0..closed).map(|c| tensor.at(c, k, j)).collect();
                        closed_derivative(spec, &samples, k)
                    })
                    .collect()
            })
            .collect();

        let divergence: Vec<Vec<T>> = components
            .iter()
            .map(|b| {
                let mut div = vec![T::zero(); closed];
                for (k, axis) in b.iter().enumerate() {
                    for (acc, v) in div.iter_mut().zip(closed_derivative(spec, axis, k)) {
                        *acc = *acc + v;
                    }
                }
                div
            })
            .collect();

        let sup = |xs: &[T]| xs.iter().fold(T::zero(), |m, v| m.max(v.abs())).as_f64();
        let a = (0..d * d).map(|kj| tensor.sup_entry(kj / d, kj % d).as_f64()).collect();
        let da = (0..d * d).map(|kj| sup(&tensor_derivative[kj / d][kj % d])).collect();
        let b = (0..closed)
            .map(|c| components.iter().flatten().map(|axis| axis[c] * axis[c]).fold(T::zero(), |s, v| s + v))
            .fold(T::zero(), T::max)
            .sqrt()
            .as_f64();
        let div_b = (0..closed)
            .map(|c| divergence.iter().map(|dv| dv[c] * dv[c]).fold(T::zero(), |s, v| s + v))
            .fold(T::zero(), T::max)
            .sqrt()
            .as_f64();

        Ok(Self { spec, components, tensor, tensor_derivative, divergence, sup_norms: SupNorms { a, da, b, div_b } })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Number of Brownian components N.
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().flatten().all(|v| *v == T::zero())
    }

    pub fn tensor(&self) -> &TensorField<T> {
        &self.tensor
    }

    /// `b_ik` at a closed-grid node.
    pub fn component(&self, i: usize, k: usize, closed: usize) -> T {
        self.components[i][k][closed]
    }

    /// `∂_k A_kj` at a closed-grid node.
    pub fn tensor_derivative(&self, k: usize, j: usize, closed: usize) -> T {
        self.tensor_derivative[k][j][closed]
    }

    /// `div b_i` at a closed-grid node.
    pub fn divergence(&self, i: usize, closed: usize) -> T {
        self.divergence[i][closed]
    }

    pub fn sup_norms(&self) -> &SupNorms {
        &self.sup_norms
    }

    /// `γ(b) = max_{k,j} (|A_kj|∞ + |D_k A_kj|∞)`.
    pub fn gamma(&self) -> f64 {
        self.sup_norms.a.iter().zip(&self.sup_norms.da).map(|(a, da)| a + da).fold(0.0, f64::max)
    }

    /// `½ div(A ∇u)`, the Itô correction of the Stratonovich noise.
    pub fn stratonovich_correction(&self, ops: &GridOperators<T>, u: &GridField<T>) -> Result<GridField<T>> {
        Ok(ops.divergence_form_apply(&self.tensor, u)?.scaled(T::lit(0.5)))
    }

    /// `b_i · ∇_h u` at interior nodes (centred differences).
    pub fn directional_derivative(&self, ops: &GridOperators<T>, i: usize, u: &GridField<T>) -> Result<GridField<T>> {
        let grad = ops.gradient(u)?;
        Ok(self.directional_from_gradient(i, &grad))
    }

    pub(crate) fn directional_from_gradient(&self, i: usize, grad: &[GridField<T>]) -> GridField<T> {
        let spec = self.spec;
        let vals = (0..spec.node_count())
            .map(|node| {
                let c = spec.closed_index(node);
                grad.iter().enumerate().fold(T::zero(), |s, (k, g)| s + self.components[i][k][c] * g.values()[node])
            })
            .collect();
        GridField::from_raw(spec, vals)
    }

    /// `Σ_i (b_i · ∇_h u) dW_i`.
    pub fn noise_increment(&self, ops: &GridOperators<T>, u: &GridField<T>, dw: &[T]) -> Result<GridField<T>> {
        if dw.len() != self.n_components() {
            return Err(Error::DimensionMismatch { expected: self.n_components(), found: dw.len() });
        }
        let grad = ops.gradient(u)?;
        Ok(self.noise_increment_from_gradient(&grad, dw))
    }

    pub(crate) fn noise_increment_from_gradient(&self, grad: &[GridField<T>], dw: &[T]) -> GridField<T> {
        let spec = self.spec;
        let mut out = vec![T::zero(); spec.node_count()];
        for (i, &w) in dw.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (node, o) in out.iter_mut().enumerate() {
                let c = spec.closed_index(node);
                let bg = grad.iter().enumerate().fold(T::zero(), |s, (k, g)| s + self.components[i][k][c] * g.values()[node]);
                *o = *o + bg * w;
            }
        }
        GridField::from_raw(spec, out)
    }
}

/// Derivative along `axis` of closed-grid samples: centred in the interior,
/// one-sided second order on the boundary.
fn closed_derivative<T: Real>(spec: GridSpec, samples: &[T], axis: usize) -> Vec<T> {
    let m = spec.closed_per_axis();
    let h = spec.spacing::<T>();
    let two_h = T::lit(2.0) * h;
    let stride = if axis == 0 { 1 } else { m };
    (0..samples.len())
        .map(|c| {
            let pos = if axis == 0 { c % m } else { c / m };
            let f = |off: isize| samples[(c as isize + off * stride as isize) as usize];
            if pos == 0 {
                (-T::lit(3.0) * f(0) + T::lit(4.0) * f(1) - f(2)) / two_h
            } else if pos == m - 1 {
                (T::lit(3.0) * f(0) - T::lit(4.0) * f(-1) + f(-2)) / two_h
            } else {
                (f(1) - f(-1)) / two_h
            }
        })
        .collect()
}

use crate::error::{invalid, Error, Result};
use crate::grid::band::{BandLu, BandMatrix};
use crate::grid::field::{GridField, GridSpec};
use crate::grid::tensor::{band_half_width, TensorField};
use crate::scalar::{CompensatedSum, Real};

/// Finite-difference operators on a fixed grid.
///
/// Holds the factorization of `-Δ_h` (computed once) and the analytic
/// per-axis eigenvalues `μ_k = (2/h²)(1 − cos(kπh))`. Immutable after
/// construction, so it can be shared between concurrent path simulations.
#[derive(Debug, Clone)]
pub struct GridOperators<T> {
    spec: GridSpec,
    neg_laplacian: BandMatrix<T>,
    poisson: BandLu<T>,
    axis_eigenvalues: Vec<T>,
}

impl<T: Real> GridOperators<T> {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let neg_laplacian = assemble_neg_laplacian(spec);
        let poisson = neg_laplacian.clone().factor(true)?;
        let n = spec.cells_per_axis();
        let h = spec.spacing::<T>();
        let axis_eigenvalues = (1..=n)
            .map(|k| T::lit(2.0) / (h * h) * (T::one() - (T::of_usize(k) * T::PI() * h).cos()))
            .collect();
        Ok(Self { spec, neg_laplacian, poisson, axis_eigenvalues })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    fn check(&self, u: &GridField<T>) -> Result<()> {
        if u.spec() != self.spec {
            return Err(Error::DimensionMismatch { expected: self.spec.node_count(), found: u.len() });
        }
        Ok(())
    }

    /// Δ_h u with zero ghost values outside the domain.
    pub fn laplacian_apply(&self, u: &GridField<T>) -> Result<GridField<T>> {
        self.check(u)?;
        Ok(self.laplacian_unchecked(u.values()))
    }

    // Terms are accumulated in column order starting from zero, like the
    // band product, so the result equals div(I∇u) bit for bit.
    pub(crate) fn laplacian_unchecked(&self, u: &[T]) -> GridField<T> {
        let spec = self.spec;
        let n = spec.cells_per_axis();
        let inv_h = spec.inverse_spacing::<T>();
        let off = inv_h * inv_h;
        let diag = -T::of_usize(2 * spec.dimension()) * off;
        let mut out = vec![T::zero(); u.len()];
        if spec.dimension() == 1 {
            for i in 0..n {
                let mut acc = T::zero();
                if i > 0 {
                    acc = acc + off * u[i - 1];
                }
                acc = acc + diag * u[i];
                if i + 1 < n {
                    acc = acc + off * u[i + 1];
                }
                out[i] = acc;
            }
        } else {
            for j in 0..n {
                for i in 0..n {
                    let k = i + n * j;
                    let mut acc = T::zero();
                    if j > 0 {
                        acc = acc + off * u[k - n];
                    }
                    if i > 0 {
                        acc = acc + off * u[k - 1];
                    }
                    acc = acc + diag * u[k];
                    if i + 1 < n {
                        acc = acc + off * u[k + 1];
                    }
                    if j + 1 < n {
                        acc = acc + off * u[k + n];
                    }
                    out[k] = acc;
                }
            }
        }
        GridField::from_raw(spec, out)
    }

    /// Solves `-Δ_h z = f`.
    pub fn poisson_solve(&self, f: &GridField<T>) -> Result<GridField<T>> {
        self.check(f)?;
        Ok(self.poisson_unchecked(f.values()))
    }

    pub(crate) fn poisson_unchecked(&self, f: &[T]) -> GridField<T> {
        let mut z = f.to_vec();
        self.poisson.solve_in_place(&mut z);
        GridField::from_raw(self.spec, z)
    }

    /// h^d Σ u_i v_i.
    pub fn inner_l2(&self, u: &GridField<T>, v: &GridField<T>) -> T {
        self.spec.cell_volume::<T>() * u.dot(v)
    }

    pub fn l2_norm(&self, u: &GridField<T>) -> T {
        self.inner_l2(u, u).sqrt()
    }

    /// (h^d Σ |u_i|^p)^{1/p}, p ≥ 1.
    pub fn lp_norm(&self, u: &GridField<T>, p: T) -> Result<T> {
        if !(p >= T::one()) || !p.is_finite() {
            return Err(invalid("p", format!("{p} is not a finite exponent >= 1")));
        }
        Ok(self.lp_norm_pow(u.values(), p).powf(T::one() / p))
    }

    /// h^d Σ |u_i|^p for any p > 0 (no root taken).
    pub fn lp_norm_pow(&self, u: &[T], p: T) -> T {
        let s: CompensatedSum<T> = u.iter().map(|v| v.abs().powf(p)).collect();
        self.spec.cell_volume::<T>() * s.value()
    }

    /// ⟨u, v⟩₋₁ = h^d Σ u_i ((−Δ_h)⁻¹ v)_i.
    pub fn inner_h_minus1(&self, u: &GridField<T>, v: &GridField<T>) -> Result<T> {
        self.check(u)?;
        let z = self.poisson_solve(v)?;
        Ok(self.spec.cell_volume::<T>() * u.dot(&z))
    }

    pub fn h_minus1_norm(&self, u: &GridField<T>) -> Result<T> {
        self.check(u)?;
        Ok(self.h_minus1_unchecked(u.values()))
    }

    pub(crate) fn h_minus1_unchecked(&self, u: &[T]) -> T {
        let z = self.poisson_unchecked(u);
        let s: CompensatedSum<T> = u.iter().zip(z.values()).map(|(a, b)| *a * *b).collect();
        (self.spec.cell_volume::<T>() * s.value()).max(T::zero()).sqrt()
    }

    /// Centred differences `(u_{i+1} − u_{i−1}) / 2h` per axis, zero ghosts.
    pub fn gradient(&self, u: &GridField<T>) -> Result<Vec<GridField<T>>> {
        self.check(u)?;
        Ok(self.gradient_unchecked(u.values()))
    }

    pub(crate) fn gradient_unchecked(&self, u: &[T]) -> Vec<GridField<T>> {
        let spec = self.spec;
        let n = spec.cells_per_axis();
        let inv_2h = spec.inverse_spacing::<T>() / T::lit(2.0);
        (0..spec.dimension())
            .map(|axis| {
                let stride = if axis == 0 { 1 } else { n };
                let vals = (0..u.len())
                    .map(|k| {
                        let c = spec.axes_of(k)[axis];
                        let lo = if c > 0 { u[k - stride] } else { T::zero() };
                        let hi = if c + 1 < n { u[k + stride] } else { T::zero() };
                        (hi - lo) * inv_2h
                    })
                    .collect();
                GridField::from_raw(spec, vals)
            })
            .collect()
    }

    /// Forward differences on every face along each axis, boundary faces
    /// included (n + 1 faces per grid line).
    pub fn forward_differences(&self, u: &GridField<T>) -> Result<Vec<Vec<T>>> {
        self.check(u)?;
        let spec = self.spec;
        let n = spec.cells_per_axis();
        let inv_h = spec.inverse_spacing::<T>();
        let lines = if spec.dimension() == 1 { 1 } else { n };
        let v = u.values();
        Ok((0..spec.dimension())
            .map(|axis| {
                let (stride, line_stride) = if axis == 0 { (1, n) } else { (n, 1) };
                let mut out = Vec::with_capacity(lines * (n + 1));
                for line in 0..lines {
                    let base = line * line_stride;
                    for f in 0..=n {
                        let lo = if f > 0 { v[base + (f - 1) * stride] } else { T::zero() };
                        let hi = if f < n { v[base + f * stride] } else { T::zero() };
                        out.push((hi - lo) * inv_h);
                    }
                }
                out
            })
            .collect())
    }

    /// Discrete H¹₀ seminorm from forward differences.
    pub fn h1_seminorm(&self, u: &GridField<T>) -> Result<T> {
        let faces = self.forward_differences(u)?;
        let s: CompensatedSum<T> = faces.iter().flatten().map(|g| *g * *g).collect();
        Ok((self.spec.cell_volume::<T>() * s.value()).sqrt())
    }

    /// Conservative discretization of div(A ∇u).
    pub fn divergence_form_apply(&self, a: &TensorField<T>, u: &GridField<T>) -> Result<GridField<T>> {
        self.check(u)?;
        if a.spec() != self.spec {
            return Err(Error::DimensionMismatch {
                expected: self.spec.closed_node_count(),
                found: a.spec().closed_node_count(),
            });
        }
        let mat = a.assemble_divergence_form();
        let mut out = vec![T::zero(); u.len()];
        mat.matvec(u.values(), &mut out);
        Ok(GridField::from_raw(self.spec, out))
    }

    /// `-Δ_h` as a band matrix (half width as in [`band_half_width`]).
    pub fn neg_laplacian_matrix(&self) -> &BandMatrix<T> {
        &self.neg_laplacian
    }

    /// `μ_k = (2/h²)(1 − cos(kπh))`, k = 1..=n.
    pub fn axis_eigenvalue(&self, k: usize) -> T {
        self.axis_eigenvalues[k - 1]
    }

    /// Smallest eigenvalue of `-Δ_h` (d μ₁ in the tensor-product case).
    pub fn mu1(&self) -> T {
        T::of_usize(self.spec.dimension()) * self.axis_eigenvalues[0]
    }

    /// Eigenvalues of `-Δ_h` for mode indices (k₁, …, k_d).
    pub fn eigenvalue(&self, modes: &[usize]) -> T {
        modes.iter().map(|&k| self.axis_eigenvalue(k)).sum()
    }

    /// Unnormalized eigenvector `Π sin(k_a π ξ_a)` of `-Δ_h`.
    pub fn eigenmode(&self, modes: &[usize]) -> GridField<T> {
        let d = self.spec.dimension();
        GridField::from_fn(self.spec, |x| {
            (0..d).map(|a| (T::of_usize(modes[a]) * T::PI() * x[a]).sin()).fold(T::one(), |p, v| p * v)
        })
    }

    /// All eigenvalues of `-Δ_h`, sorted ascending.
    pub fn spectrum(&self) -> Vec<T> {
        let n = self.spec.cells_per_axis();
        let mut out: Vec<T> = if self.spec.dimension() == 1 {
            self.axis_eigenvalues.clone()
        } else {
            (1..=n).flat_map(|k| (1..=n).map(move |l| (k, l))).map(|(k, l)| self.eigenvalue(&[k, l])).collect()
        };
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        out
    }
}

fn assemble_neg_laplacian<T: Real>(spec: GridSpec) -> BandMatrix<T> {
    let lap = TensorField::<T>::identity(spec).assemble_divergence_form();
    let mut neg = BandMatrix::zeros(spec.node_count(), band_half_width(spec));
    neg.axpy(-T::one(), &lap);
    neg
}

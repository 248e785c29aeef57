use crate::error::{Error, Result};
use crate::grid::band::BandMatrix;
use crate::grid::field::GridSpec;
use crate::scalar::Real;

/// Symmetric d x d coefficient field sampled on the closed grid (boundary
/// nodes included), as needed for face averages next to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField<T> {
    spec: GridSpec,
    // closed node major, then row-major d x d
    values: Vec<T>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl<T: Real> TensorField<T> {
    /// Samples `f(ξ, k, j)` at every closed-grid node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[T], usize, usize) -> T) -> Result<Self> {
        let d = spec.dimension();
        let mut values = Vec::with_capacity(spec.closed_node_count() * d * d);
        for c in 0..spec.closed_node_count() {
            let p = spec.closed_point::<T>(c);
            for k in 0..d {
                for j in 0..d {
                    values.push(f(&p[..d], k, j));
                }
            }
        }
        Self::from_values(spec, values)
    }

    pub fn from_values(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        let d = spec.dimension();
        let expected = spec.closed_node_count() * d * d;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let tol = T::lit(SYMMETRY_TOL);
        for node in 0..spec.closed_node_count() {
            let a = &values[node * d * d..(node + 1) * d * d];
            for k in 0..d {
                for j in k + 1..d {
                    let defect = (a[k * d + j] - a[j * d + k]).abs();
                    let scale = T::one().max(a[k * d + j].abs());
                    if defect > tol * scale {
                        return Err(Error::NonSymmetricTensor { node, defect: defect.as_f64() });
                    }
                }
            }
        }
        Ok(Self { spec, values })
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self::constant_diagonal(spec, T::one())
    }

    pub fn constant_diagonal(spec: GridSpec, c: T) -> Self {
        Self::from_fn(spec, |_, k, j| if k == j { c } else { T::zero() }).expect("diagonal tensor is symmetric")
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant_diagonal(spec, T::zero())
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Entry (k, j) at a closed-grid node.
    #[inline]
    pub fn at(&self, closed: usize, k: usize, j: usize) -> T {
        let d = self.spec.dimension();
        self.values[closed * d * d + k * d + j]
    }

    /// Maximum of |A_kj| over stored nodes.
    pub fn sup_entry(&self, k: usize, j: usize) -> T {
        (0..self.spec.closed_node_count()).fold(T::zero(), |m, c| m.max(self.at(c, k, j).abs()))
    }

    /// Smallest eigenvalue over all nodes (PSD check).
    pub fn min_eigenvalue(&self) -> T {
        let d = self.spec.dimension();
        (0..self.spec.closed_node_count())
            .map(|c| {
                if d == 1 {
                    self.at(c, 0, 0)
                } else {
                    let (a, b, e) = (self.at(c, 0, 0), self.at(c, 0, 1), self.at(c, 1, 1));
                    let mean = (a + e) / T::lit(2.0);
                    let rad = (((a - e) / T::lit(2.0)).powi(2) + b * b).sqrt();
                    mean - rad
                }
            })
            .fold(T::infinity(), T::min)
    }

    /// Assembles the conservative flux discretization of `div(A ∇ ·)`.
    ///
    /// Diagonal entries of A act on axis-aligned faces with face-averaged
    /// coefficients; off-diagonal entries act through cell-centred gradients
    /// on each grid cell. Both pieces are written as `-Gᵀ W G`, so the
    /// assembled matrix is symmetric.
    pub fn assemble_divergence_form(&self) -> BandMatrix<T> {
        let spec = self.spec;
        let d = spec.dimension();
        let m = spec.closed_per_axis();
        let inv_h = spec.inverse_spacing::<T>();
        let half = T::lit(0.5);
        let mut mat = BandMatrix::zeros(spec.node_count(), band_half_width(spec));

        for axis in 0..d {
            let stride = if axis == 0 { 1 } else { m };
            for c0 in 0..spec.closed_node_count() {
                let coord = if axis == 0 { c0 % m } else { c0 / m };
                if coord + 1 >= m {
                    continue;
                }
                let c1 = c0 + stride;
                let w = half * (self.at(c0, axis, axis) + self.at(c1, axis, axis)) * inv_h * inv_h;
                let r0 = spec.interior_of_closed(c0);
                let r1 = spec.interior_of_closed(c1);
                let taps = [(r0, -T::one()), (r1, T::one())];
                add_outer(&mut mat, &taps, &taps, -w);
            }
        }

        if d == 2 {
            let g = inv_h / T::lit(2.0);
            for q in 0..m - 1 {
                for p in 0..m - 1 {
                    let corners = [p + m * q, p + 1 + m * q, p + m * (q + 1), p + 1 + m * (q + 1)];
                    let a = corners.iter().map(|&c| self.at(c, 0, 1)).fold(T::zero(), |s, v| s + v)
                        / T::lit(4.0);
                    if a == T::zero() {
                        continue;
                    }
                    let r = corners.map(|c| spec.interior_of_closed(c));
                    let gx = [(r[0], -g), (r[1], g), (r[2], -g), (r[3], g)];
                    let gy = [(r[0], -g), (r[1], -g), (r[2], g), (r[3], g)];
                    // h^d cell weight cancels against the h^d of the weighted inner product
                    add_outer(&mut mat, &gx, &gy, -a);
                    add_outer(&mut mat, &gy, &gx, -a);
                }
            }
        }
        mat
    }
}

/// Half bandwidth shared by every operator assembled on `spec`.
pub fn band_half_width(spec: GridSpec) -> usize {
    if spec.dimension() == 1 {
        1
    } else {
        spec.cells_per_axis() + 1
    }
}

fn add_outer<T: Real>(mat: &mut BandMatrix<T>, rows: &[(Option<usize>, T)], cols: &[(Option<usize>, T)], coef: T) {
    for &(ri, rv) in rows {
        let Some(ri) = ri else { continue };
        for &(ci, cv) in cols {
            let Some(ci) = ci else { continue };
            mat.add(ri, ci, coef * rv * cv);
        }
    }
}

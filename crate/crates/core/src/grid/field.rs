use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Uniform grid on the unit interval or unit square with homogeneous
/// Dirichlet boundary. Only the `n^d` interior nodes are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    cells_per_axis: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, cells_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(invalid("dimension", format!("{dimension} not in {{1, 2}}")));
        }
        if cells_per_axis < 4 {
            return Err(invalid("cells_per_axis", format!("{cells_per_axis} < 4")));
        }
        Ok(Self { dimension, cells_per_axis })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Interior nodes per axis, `n`.
    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn node_count(&self) -> usize {
        self.cells_per_axis.pow(self.dimension as u32)
    }

    /// Nodes per axis including the two boundary nodes.
    pub fn closed_per_axis(&self) -> usize {
        self.cells_per_axis + 2
    }

    pub fn closed_node_count(&self) -> usize {
        self.closed_per_axis().pow(self.dimension as u32)
    }

    /// h = 1 / (n + 1).
    pub fn spacing<T: Real>(&self) -> T {
        T::one() / T::of_usize(self.cells_per_axis + 1)
    }

    /// 1 / h = n + 1, exact in floating point.
    pub fn inverse_spacing<T: Real>(&self) -> T {
        T::of_usize(self.cells_per_axis + 1)
    }

    /// Quadrature weight h^d.
    pub fn cell_volume<T: Real>(&self) -> T {
        self.spacing::<T>().powi(self.dimension as i32)
    }

    /// Per-axis interior indices of a node.
    #[inline]
    pub fn axes_of(&self, node: usize) -> [usize; 2] {
        let n = self.cells_per_axis;
        if self.dimension == 1 {
            [node, 0]
        } else {
            [node % n, node / n]
        }
    }

    /// Closed-grid index of an interior node.
    #[inline]
    pub fn closed_index(&self, node: usize) -> usize {
        let [i, j] = self.axes_of(node);
        if self.dimension == 1 {
            i + 1
        } else {
            (i + 1) + self.closed_per_axis() * (j + 1)
        }
    }

    /// Interior index of a closed-grid node, `None` on the boundary.
    #[inline]
    pub fn interior_of_closed(&self, closed: usize) -> Option<usize> {
        let m = self.closed_per_axis();
        let n = self.cells_per_axis;
        let inside = |c: usize| (1..=n).contains(&c);
        if self.dimension == 1 {
            inside(closed).then(|| closed - 1)
        } else {
            let (p, q) = (closed % m, closed / m);
            (inside(p) && inside(q)).then(|| (p - 1) + n * (q - 1))
        }
    }

    /// Coordinates of an interior node; unused trailing axes are zero.
    pub fn point<T: Real>(&self, node: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let [i, j] = self.axes_of(node);
        let y = if self.dimension == 2 { T::of_usize(j + 1) * h } else { T::zero() };
        [T::of_usize(i + 1) * h, y]
    }

    /// Coordinates of a closed-grid node.
    pub fn closed_point<T: Real>(&self, closed: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let m = self.closed_per_axis();
        if self.dimension == 1 {
            [T::of_usize(closed) * h, T::zero()]
        } else {
            [T::of_usize(closed % m) * h, T::of_usize(closed / m) * h]
        }
    }
}

/// Nodal values on the interior nodes of a grid, ordered lexicographically
/// with the first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    spec: GridSpec,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![T::zero(); spec.node_count()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.node_count() {
            return Err(Error::DimensionMismatch { expected: spec.node_count(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { spec, values })
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[T]) -> T) -> Self {
        let d = spec.dimension();
        let values = (0..spec.node_count()).map(|k| f(&spec.point::<T>(k)[..d])).collect();
        Self { spec, values }
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), spec.node_count());
        Self { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Unweighted Euclidean dot product.
    pub fn dot(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).sum()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| *v * c).collect() }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a + alpha * *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn set_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }
}

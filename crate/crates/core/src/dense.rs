//! Dense order-`d` tensors and order-3 arrays.
//!
//! Everything is stored column-major: the first index varies fastest. With
//! this layout every unfolding is a pure reshape of the value buffer.

use nalgebra::DMatrix;

use crate::error::{Result, TtError};
use crate::Scalar;

/// Largest dense tensor the library will materialize unless told otherwise.
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

/// An order-3 array of shape `(left, mid, right)`, column-major.
///
/// Tensor-train cores are `Tensor3`s of shape `(r_{k-1}, n_k, r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T: Scalar> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(left: usize, mid: usize, right: usize) -> Self {
        Tensor3 { dims: [left, mid, right], data: vec![T::zero(); left * mid * right] }
    }

    pub fn from_vec(left: usize, mid: usize, right: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != left * mid * right {
            return Err(TtError::ShapeMismatch(format!(
                "{} values for a {left}x{mid}x{right} array",
                data.len()
            )));
        }
        Ok(Tensor3 { dims: [left, mid, right], data })
    }

    pub fn from_fn(left: usize, mid: usize, right: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(left * mid * right);
        for c in 0..right {
            for b in 0..mid {
                for a in 0..left {
                    data.push(f(a, b, c));
                }
            }
        }
        Tensor3 { dims: [left, mid, right], data }
    }

    /// Reinterpret a `(left*mid) x right` matrix.
    pub fn from_right_unfolding(m: &DMatrix<T>, left: usize, mid: usize) -> Self {
        assert_eq!(m.nrows(), left * mid, "right unfolding row count");
        Tensor3 { dims: [left, mid, m.ncols()], data: m.as_slice().to_vec() }
    }

    /// Reinterpret a `left x (mid*right)` matrix.
    pub fn from_left_unfolding(m: &DMatrix<T>, mid: usize, right: usize) -> Self {
        assert_eq!(m.ncols(), mid * right, "left unfolding column count");
        Tensor3 { dims: [m.nrows(), mid, right], data: m.as_slice().to_vec() }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.dims[0]
    }

    #[inline]
    pub fn mid(&self) -> usize {
        self.dims[1]
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.dims[2]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> T {
        self.data[a + self.dims[0] * (b + self.dims[1] * c)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: T) {
        let [l, m, _] = self.dims;
        self.data[a + l * (b + m * c)] = v;
    }

    /// `(left*mid) x right`.
    pub fn right_unfolding(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.dims[0] * self.dims[1], self.dims[2], &self.data)
    }

    /// `left x (mid*right)`.
    pub fn left_unfolding(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.dims[0], self.dims[1] * self.dims[2], &self.data)
    }

    /// The `left x right` matrix at middle index `b`.
    pub fn slice(&self, b: usize) -> DMatrix<T> {
        DMatrix::from_fn(self.dims[0], self.dims[2], |a, c| self.get(a, b, c))
    }

    pub fn norm_squared(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc + *v * *v)
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dims, other.dims);
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    pub fn scale(&mut self, s: T) {
        for v in self.data.iter_mut() {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.dims, other.dims, "axpy shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * *b;
        }
    }

    /// `M · self`, contracting `M`'s columns with the left index.
    pub fn mul_left(&self, m: &DMatrix<T>) -> Self {
        let out = m * self.left_unfolding();
        Self::from_left_unfolding(&out, self.dims[1], self.dims[2])
    }

    /// `self · M`, contracting the right index with `M`'s rows.
    pub fn mul_right(&self, m: &DMatrix<T>) -> Self {
        let out = self.right_unfolding() * m;
        Self::from_right_unfolding(&out, self.dims[0], self.dims[1])
    }
}

/// Contract the last index of `a` with the first index of `b`, merging the
/// middle indices (the first middle index varies fastest).
pub fn contract<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
    if a.right() != b.left() {
        return Err(TtError::ShapeMismatch(format!(
            "cannot contract right dimension {} with left dimension {}",
            a.right(),
            b.left()
        )));
    }
    let prod = a.right_unfolding() * b.left_unfolding();
    Ok(Tensor3 { dims: [a.left(), a.mid() * b.mid(), b.right()], data: prod.as_slice().to_vec() })
}

/// A dense real tensor of order `d >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(TtError::ShapeMismatch(format!(
                "{} values for shape {:?} ({} entries)",
                data.len(),
                shape,
                n
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![T::zero(); n])
    }

    /// Fill by evaluating `f` at every multi-index in storage order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        linear_index(&self.shape, idx)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.shape, other.shape, "dot shape");
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "add shape");
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + s * *b).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|v| *v * s).collect() }
    }

    /// The `(n_1...n_k) x (n_{k+1}...n_d)` unfolding, `1 <= k <= d-1`.
    pub fn unfold(&self, k: usize) -> Result<DMatrix<T>> {
        let d = self.order();
        if k == 0 || k >= d {
            return Err(TtError::OutOfRange(format!("unfolding split {k} outside 1..{}", d - 1)));
        }
        let rows: usize = self.shape[..k].iter().product();
        Ok(DMatrix::from_column_slice(rows, self.len() / rows, &self.data))
    }

    /// The order-3 reshape `(n_1..n_i) x (n_{i+1}..n_j) x (n_{j+1}..n_d)`,
    /// `0 <= i <= j <= d`. Empty groups become singleton dimensions.
    pub fn unfold3(&self, i: usize, j: usize) -> Result<Tensor3<T>> {
        let d = self.order();
        if i > j || j > d {
            return Err(TtError::OutOfRange(format!("unfold3 needs 0 <= i <= j <= {d}, got ({i}, {j})")));
        }
        let a: usize = self.shape[..i].iter().product();
        let b: usize = self.shape[i..j].iter().product();
        let c: usize = self.shape[j..].iter().product();
        Tensor3::from_vec(a, b, c, self.data.clone())
    }

    /// Inverse of [`DenseTensor::unfold3`] and friends: reinterpret a buffer under `shape`.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.len() < 2 {
        return Err(TtError::InvalidArgument(format!("tensor order must be at least 2, got {}", shape.len())));
    }
    if shape.iter().any(|&n| n == 0) {
        return Err(TtError::InvalidArgument(format!("zero-sized mode in shape {shape:?}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn linear_index(shape: &[usize], idx: &[usize]) -> usize {
    let mut lin = 0;
    let mut stride = 1;
    for (i, n) in idx.iter().zip(shape) {
        lin += i * stride;
        stride *= n;
    }
    lin
}

pub(crate) fn multi_index(shape: &[usize], mut lin: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|n| {
            let i = lin % n;
            lin /= n;
            i
        })
        .collect()
}

/// Advance a column-major multi-index by one.
#[inline]
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for (i, n) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < *n {
            return;
        }
        *i = 0;
    }
}

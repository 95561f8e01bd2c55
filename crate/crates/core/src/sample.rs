use std::collections::HashSet;

use crate::dense::{linear_index, multi_index, DenseTensor};
use crate::error::{Result, TtError};
use crate::tt::TtTensor;
use crate::Scalar;

/// Known entries of a tensor: distinct multi-indices with their values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T: Scalar> {
    shape: Vec<usize>,
    /// `d` entries per sample, back to back.
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(shape: Vec<usize>, indices: Vec<Vec<usize>>, values: Vec<T>) -> Result<Self> {
        let d = shape.len();
        if indices.iter().any(|i| i.len() != d) {
            return Err(TtError::ShapeMismatch(format!("every index needs {d} entries")));
        }
        Self::from_flat(shape, indices.concat(), values)
    }

    pub fn from_flat(shape: Vec<usize>, indices: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let d = shape.len();
        if d < 2 || shape.iter().any(|&n| n == 0) {
            return Err(TtError::InvalidArgument(format!("bad shape {shape:?}")));
        }
        if indices.len() != d * values.len() {
            return Err(TtError::ShapeMismatch(format!(
                "{} index entries for {} values of order {d}",
                indices.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(values.len());
        for idx in indices.chunks_exact(d) {
            for (k, (&i, &n)) in idx.iter().zip(&shape).enumerate() {
                if i >= n {
                    return Err(TtError::OutOfRange(format!("index {i} in mode {k} of size {n}")));
                }
            }
            if !seen.insert(linear_index(&shape, idx)) {
                return Err(TtError::InvalidArgument(format!("duplicate sample {idx:?}")));
            }
        }
        Ok(SampleSet { shape, indices, values })
    }

    /// Samples of `a` at the given linear (column-major) positions.
    pub fn from_dense(a: &DenseTensor<T>, positions: &[usize]) -> Result<Self> {
        let shape = a.shape().to_vec();
        let mut indices = Vec::with_capacity(positions.len() * shape.len());
        let mut values = Vec::with_capacity(positions.len());
        for &p in positions {
            if p >= a.len() {
                return Err(TtError::OutOfRange(format!("position {p} of {}", a.len())));
            }
            indices.extend(multi_index(&shape, p));
            values.push(a.values()[p]);
        }
        Self::from_flat(shape, indices, values)
    }

    /// Samples of `x` at the given linear positions, without densifying.
    pub fn from_tt(x: &TtTensor<T>, positions: &[usize]) -> Result<Self> {
        let shape = x.shape();
        let total = x.num_entries();
        let mut indices = Vec::with_capacity(positions.len() * shape.len());
        for &p in positions {
            if p >= total {
                return Err(TtError::OutOfRange(format!("position {p} of {total}")));
            }
            indices.extend(multi_index(&shape, p));
        }
        let values = x.gather_flat(&indices)?;
        Self::from_flat(shape, indices, values)
    }

    /// Every entry of `a`.
    pub fn full(a: &DenseTensor<T>) -> Self {
        let positions: Vec<usize> = (0..a.len()).collect();
        Self::from_dense(a, &positions).expect("positions are in range and distinct")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, s: usize) -> &[usize] {
        let d = self.shape.len();
        &self.indices[s * d..(s + 1) * d]
    }

    pub fn flat_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn indices(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.chunks_exact(self.shape.len())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Same positions, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(TtError::ShapeMismatch(format!("{} values for {} samples", values.len(), self.len())));
        }
        Ok(SampleSet { shape: self.shape.clone(), indices: self.indices.clone(), values })
    }

    /// `|set| / prod(n_k)`.
    pub fn ratio(&self) -> f64 {
        let total: f64 = self.shape.iter().map(|&n| n as f64).product();
        self.len() as f64 / total
    }

    pub fn norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
    }

    /// Values of `x` at the sampled positions.
    pub fn gather(&self, x: &TtTensor<T>) -> Result<Vec<T>> {
        if x.shape() != self.shape {
            return Err(TtError::ShapeMismatch(format!("{:?} vs {:?}", x.shape(), self.shape)));
        }
        x.gather_flat(&self.indices)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let mine: HashSet<usize> = self.indices().map(|i| linear_index(&self.shape, i)).collect();
        other.indices().all(|i| !mine.contains(&linear_index(&other.shape, i)))
    }

    /// Scatter into a dense tensor that is zero off the set.
    pub fn to_dense(&self) -> Result<DenseTensor<T>> {
        let mut out = DenseTensor::zeros(self.shape.clone())?;
        for (idx, v) in self.indices().zip(&self.values) {
            let p = linear_index(&self.shape, idx);
            out.values_mut()[p] = *v;
        }
        Ok(out)
    }
}

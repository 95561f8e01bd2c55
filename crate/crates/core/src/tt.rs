//! The tensor-train representation.
//!
//! A tensor of shape `(n_1, ..., n_d)` is stored as `d` cores of shape
//! `(r_{k-1}, n_k, r_k)` with `r_0 = r_d = 1`. Core and bond indices are
//! 0-based: bond `k` sits between cores `k` and `k + 1`, so `ranks()[k]`
//! is the rank of the unfolding that splits after `k + 1` modes.
//!
//! A train is *`p`-orthogonal* when the right unfolding of every core left of
//! `p` has orthonormal columns and the left unfolding of every core right of
//! `p` has orthonormal rows.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{DenseTensor, Tensor3, DEFAULT_DENSE_CAP};
use crate::error::{Result, TtError};
use crate::linalg::{lq_positive, qr_positive, sorted_svd, SingularSpectrum};
use crate::Scalar;

/// Which orthogonal form, if any, a train is known to be in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ortho {
    None,
    /// Orthogonal around this core (0-based).
    Center(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TtTensor<T: Scalar> {
    cores: Vec<Tensor3<T>>,
    ortho: Ortho,
}

/// `Q_k` and `R_k` relating the center cores of the `k`-orthogonal forms to the
/// orthonormal factors: `Ẋ_kᴿ = X'_kᴿ Q_k` and `Ẋ_kᴸ = R_k X''_kᴸ`.
#[derive(Clone, Debug)]
pub struct OrthoFactors<T: Scalar> {
    /// `Q_k` for cores `0..d-1`, each `r_k x r_k`.
    pub q: Vec<DMatrix<T>>,
    /// `R_k` for cores `1..d`, each `r_{k-1} x r_{k-1}` (entry `0` belongs to core 1).
    pub r: Vec<DMatrix<T>>,
}

impl<T: Scalar> TtTensor<T> {
    pub fn new(cores: Vec<Tensor3<T>>) -> Result<Self> {
        if cores.len() < 2 {
            return Err(TtError::InvalidArgument(format!("a train needs at least 2 cores, got {}", cores.len())));
        }
        if cores[0].left() != 1 || cores[cores.len() - 1].right() != 1 {
            return Err(TtError::ShapeMismatch("boundary ranks must be 1".into()));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].right() != pair[1].left() {
                return Err(TtError::ShapeMismatch(format!(
                    "core {k} right rank {} does not match core {} left rank {}",
                    pair[0].right(),
                    k + 1,
                    pair[1].left()
                )));
            }
        }
        if cores.iter().any(|c| c.mid() == 0 || c.left() == 0 || c.right() == 0) {
            return Err(TtError::ShapeMismatch("cores must be non-empty".into()));
        }
        Ok(TtTensor { cores, ortho: Ortho::None })
    }

    pub(crate) fn from_parts(cores: Vec<Tensor3<T>>, ortho: Ortho) -> Self {
        debug_assert!(Self::new(cores.clone()).is_ok());
        TtTensor { cores, ortho }
    }

    /// The zero tensor with all ranks 1.
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(shape.iter().map(|&n| Tensor3::zeros(1, n, 1)).collect())
    }

    /// Cores with i.i.d. standard normal entries.
    pub fn random_normal<R: Rng + ?Sized>(shape: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        check_rank_len(shape, ranks)?;
        if ranks.iter().any(|&r| r == 0) {
            return Err(TtError::InvalidArgument("ranks must be positive".into()));
        }
        let d = shape.len();
        let cores = (0..d)
            .map(|k| {
                let l = if k == 0 { 1 } else { ranks[k - 1] };
                let r = if k == d - 1 { 1 } else { ranks[k] };
                Tensor3::from_fn(l, shape[k], r, |_, _, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    T::of(z)
                })
            })
            .collect();
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.mid()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.right()).collect()
    }

    pub fn cores(&self) -> &[Tensor3<T>] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Tensor3<T> {
        &self.cores[k]
    }

    pub fn into_cores(self) -> Vec<Tensor3<T>> {
        self.cores
    }

    pub fn ortho(&self) -> Ortho {
        self.ortho
    }

    pub fn num_entries(&self) -> usize {
        self.cores.iter().map(|c| c.mid()).product()
    }

    /// Number of stored parameters.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.as_slice().len()).sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut cores = self.cores.clone();
        cores[0].scale(s);
        let ortho = if s >= T::zero() { self.ortho } else { Ortho::None };
        // Scaling the first core keeps left-orthogonal cores intact only if it is the center.
        let ortho = match ortho {
            Ortho::Center(0) => Ortho::Center(0),
            _ => Ortho::None,
        };
        TtTensor { cores, ortho }
    }

    /// Densify with the default size cap.
    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        self.reconstruct_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn reconstruct_with_cap(&self, cap: usize) -> Result<DenseTensor<T>> {
        let shape = self.shape();
        let total = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).unwrap_or(usize::MAX);
        if total > cap {
            return Err(TtError::DenseBudget { requested: total, cap });
        }
        // acc is (n_1...n_k) x r_k, column-major.
        let mut acc = self.cores[0].right_unfolding();
        for core in &self.cores[1..] {
            let rows = acc.nrows();
            let prod = &acc * core.left_unfolding();
            acc = DMatrix::from_column_slice(rows * core.mid(), core.right(), prod.as_slice());
        }
        DenseTensor::new(shape, acc.as_slice().to_vec())
    }

    /// Evaluate a single entry.
    pub fn entry(&self, idx: &[usize]) -> T {
        let mut buf = EvalBuffer::new(self);
        buf.eval(self, idx)
    }

    /// Evaluate the entries at `indices`, a flat buffer of `d`-tuples.
    pub fn gather_flat(&self, indices: &[usize]) -> Result<Vec<T>> {
        let d = self.order();
        if indices.len() % d != 0 {
            return Err(TtError::ShapeMismatch(format!("{} index values is not a multiple of {d}", indices.len())));
        }
        let shape = self.shape();
        let mut buf = EvalBuffer::new(self);
        indices
            .chunks_exact(d)
            .map(|idx| {
                check_index(&shape, idx)?;
                Ok(buf.eval(self, idx))
            })
            .collect()
    }

    /// Evaluate the entries at a list of multi-indices.
    pub fn gather(&self, indices: &[Vec<usize>]) -> Result<Vec<T>> {
        let shape = self.shape();
        let mut buf = EvalBuffer::new(self);
        indices
            .iter()
            .map(|idx| {
                if idx.len() != shape.len() {
                    return Err(TtError::ShapeMismatch(format!("index {idx:?} for order {}", shape.len())));
                }
                check_index(&shape, idx)?;
                Ok(buf.eval(self, idx))
            })
            .collect()
    }

    /// `<self, other>` by sequential core contraction.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.shape() != other.shape() {
            return Err(TtError::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let mut m = DMatrix::from_element(1, 1, T::one());
        for (x, y) in self.cores.iter().zip(&other.cores) {
            let t = &m * y.left_unfolding();
            let t = DMatrix::from_column_slice(x.left() * x.mid(), y.right(), t.as_slice());
            m = x.right_unfolding().transpose() * t;
        }
        Ok(m[(0, 0)])
    }

    pub fn norm(&self) -> T {
        match self.ortho {
            Ortho::Center(k) => self.cores[k].norm_squared().sqrt(),
            Ortho::None => self.inner(self).expect("same shape").max(T::zero()).sqrt(),
        }
    }

    /// `self + t * other` by block stacking; ranks add.
    pub fn axpy(&self, t: T, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(TtError::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let d = self.order();
        let cores = (0..d)
            .map(|k| {
                let (x, y) = (&self.cores[k], &other.cores[k]);
                let n = x.mid();
                let first = k == 0;
                let last = k == d - 1;
                let l = if first { 1 } else { x.left() + y.left() };
                let r = if last { 1 } else { x.right() + y.right() };
                let ys = if first { t } else { T::one() };
                let mut c = Tensor3::zeros(l, n, r);
                for j in 0..n {
                    for b in 0..x.right() {
                        for a in 0..x.left() {
                            c.set(a, j, b, x.get(a, j, b));
                        }
                    }
                    let (ao, bo) = (if first { 0 } else { x.left() }, if last { 0 } else { x.right() });
                    for b in 0..y.right() {
                        for a in 0..y.left() {
                            c.set(ao + a, j, bo + b, ys * y.get(a, j, b));
                        }
                    }
                }
                c
            })
            .collect();
        Self::new(cores)
    }

    /// Bring the train into `pos`-orthogonal form by unpivoted QR sweeps.
    ///
    /// The triangular factors have non-negative diagonals. A bond whose rank
    /// exceeds the size of a core unfolding shrinks to that size.
    pub fn orthogonalize(&self, pos: usize) -> Result<Self> {
        let d = self.order();
        if pos >= d {
            return Err(TtError::OutOfRange(format!("orthogonality center {pos} for order {d}")));
        }
        let mut cores = self.cores.clone();
        for k in 0..pos {
            let (q, r) = qr_positive(&cores[k].right_unfolding());
            let (l, n) = (cores[k].left(), cores[k].mid());
            cores[k] = Tensor3::from_right_unfolding(&q, l, n);
            cores[k + 1] = cores[k + 1].mul_left(&r);
        }
        for k in (pos + 1..d).rev() {
            let (lmat, q) = lq_positive(&cores[k].left_unfolding());
            let (n, r) = (cores[k].mid(), cores[k].right());
            cores[k] = Tensor3::from_left_unfolding(&q, n, r);
            cores[k - 1] = cores[k - 1].mul_right(&lmat);
        }
        Ok(TtTensor { cores, ortho: Ortho::Center(pos) })
    }

    /// Reuse the current form when it already has the requested center.
    pub fn orthogonal_at(&self, pos: usize) -> Result<Self> {
        if self.ortho == Ortho::Center(pos) {
            Ok(self.clone())
        } else {
            self.orthogonalize(pos)
        }
    }

    pub fn ortho_factors(&self) -> Result<OrthoFactors<T>> {
        let d = self.order();
        let left = self.orthogonalize(d - 1)?;
        let right = self.orthogonalize(0)?;
        let centers: Vec<Tensor3<T>> =
            (0..d).map(|k| self.orthogonalize(k).map(|t| t.cores[k].clone())).collect::<Result<_>>()?;
        let q = (0..d - 1)
            .map(|k| left.cores[k].right_unfolding().transpose() * centers[k].right_unfolding())
            .collect();
        let r = (1..d)
            .map(|k| centers[k].left_unfolding() * right.cores[k].left_unfolding().transpose())
            .collect();
        Ok(OrthoFactors { q, r })
    }

    /// Check the orthogonality conditions of a `pos`-orthogonal train.
    pub fn is_orthogonal_at(&self, pos: usize, tol: T) -> bool {
        self.cores.iter().enumerate().all(|(k, c)| {
            if k < pos {
                let m = c.right_unfolding();
                let g = m.transpose() * &m;
                (g - DMatrix::identity(c.right(), c.right())).amax() <= tol
            } else if k > pos {
                let m = c.left_unfolding();
                let g = &m * m.transpose();
                (g - DMatrix::identity(c.left(), c.left())).amax() <= tol
            } else {
                true
            }
        })
    }

    /// Left-to-right truncated-SVD sweep (TT-rounding) to at most `target`
    /// ranks. Targets above the current ranks leave that bond untouched. The
    /// result is orthogonal around the last core.
    pub fn round(&self, target: &[usize]) -> Result<Self> {
        self.round_with(Some(target), None)
    }

    /// Rounding with an optional rank cap per bond and an optional relative
    /// tolerance: a bond keeps the fewest singular values whose discarded tail
    /// is at most `tol` times the norm of the swept matrix.
    pub fn round_with(&self, target: Option<&[usize]>, tol: Option<T>) -> Result<Self> {
        let d = self.order();
        if let Some(t) = target {
            check_rank_len(&self.shape(), t)?;
        }
        let mut cores = self.orthogonal_at(0)?.cores;
        for k in 0..d - 1 {
            let m = cores[k].right_unfolding();
            let (u, s, v) = sorted_svd(&m);
            let spec = SingularSpectrum::new(s.clone());
            let cap = target.map_or(usize::MAX, |t| t[k]).max(1);
            let keep = choose_rank(&spec, cap, tol, false);
            let u = u.columns(0, keep).into_owned();
            let mut svt = v.columns(0, keep).transpose();
            for (i, sv) in s.iter().take(keep).enumerate() {
                svt.row_mut(i).scale_mut(*sv);
            }
            let (l, n) = (cores[k].left(), cores[k].mid());
            cores[k] = Tensor3::from_right_unfolding(&u, l, n);
            cores[k + 1] = cores[k + 1].mul_left(&svt);
        }
        Ok(TtTensor { cores, ortho: Ortho::Center(d - 1) })
    }

    /// TT-SVD: successive truncated SVDs of the unfoldings of `a`.
    ///
    /// `caps = None` keeps every numerically non-zero singular value, so the
    /// decomposition is exact and the ranks are the numerical unfolding
    /// ranks. With both `caps` and `tol`, each bond keeps the smaller of the
    /// two choices. The zero tensor yields all ranks 1 with zero cores.
    pub fn tt_svd(a: &DenseTensor<T>, caps: Option<&[usize]>, tol: Option<T>) -> Result<Self> {
        let shape = a.shape().to_vec();
        let d = shape.len();
        if let Some(c) = caps {
            check_rank_len(&shape, c)?;
            if c.iter().any(|&r| r == 0) {
                return Err(TtError::InvalidArgument("rank caps must be positive".into()));
            }
        }
        if a.values().iter().all(|v| *v == T::zero()) {
            return Self::zeros(&shape);
        }
        let mut cores = Vec::with_capacity(d);
        let mut rest = DMatrix::from_column_slice(shape[0], a.len() / shape[0], a.values());
        let mut left = 1;
        for k in 0..d - 1 {
            let rows = left * shape[k];
            let m = DMatrix::from_column_slice(rows, rest.len() / rows, rest.as_slice());
            let (u, s, v) = sorted_svd(&m);
            let spec = SingularSpectrum::new(s.clone());
            let cap = caps.map_or(usize::MAX, |c| c[k]);
            let keep = choose_rank(&spec, cap, tol, true);
            cores.push(Tensor3::from_right_unfolding(&u.columns(0, keep).into_owned(), left, shape[k]));
            let mut svt = v.columns(0, keep).transpose();
            for (i, sv) in s.iter().take(keep).enumerate() {
                svt.row_mut(i).scale_mut(*sv);
            }
            rest = svt;
            left = keep;
        }
        cores.push(Tensor3::from_vec(left, shape[d - 1], 1, rest.as_slice().to_vec())?);
        Ok(TtTensor { cores, ortho: Ortho::Center(d - 1) })
    }

    /// Replace one core, keeping the chain valid.
    pub fn with_core(&self, k: usize, core: Tensor3<T>) -> Result<Self> {
        let mut cores = self.cores.clone();
        cores[k] = core;
        Self::new(cores)
    }
}

/// Rank to keep on one bond given its spectrum.
///
/// `drop_zeros` additionally removes singular values at round-off level.
pub(crate) fn choose_rank<T: Scalar>(spec: &SingularSpectrum<T>, cap: usize, tol: Option<T>, drop_zeros: bool) -> usize {
    let full = spec.len();
    let mut keep = cap.min(full);
    if drop_zeros {
        let dim_scale = T::of_usize(full.max(1));
        let numerical = spec.numerical_rank(T::EPS * dim_scale * T::of(100.0));
        keep = keep.min(numerical);
    }
    if let Some(tol) = tol {
        let bound = tol * spec.frobenius();
        let mut s = 0;
        while s < full && spec.tail_norm(s) > bound {
            s += 1;
        }
        keep = keep.min(s);
    }
    keep.max(1)
}

fn check_rank_len(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if shape.len() < 2 {
        return Err(TtError::InvalidArgument("order must be at least 2".into()));
    }
    if ranks.len() + 1 != shape.len() {
        return Err(TtError::ShapeMismatch(format!("{} ranks for order {}", ranks.len(), shape.len())));
    }
    Ok(())
}

fn check_index(shape: &[usize], idx: &[usize]) -> Result<()> {
    for (k, (&i, &n)) in idx.iter().zip(shape).enumerate() {
        if i >= n {
            return Err(TtError::OutOfRange(format!("index {i} in mode {k} of size {n}")));
        }
    }
    Ok(())
}

/// Scratch space for evaluating single entries without allocation.
pub(crate) struct EvalBuffer<T: Scalar> {
    cur: Vec<T>,
    next: Vec<T>,
}

impl<T: Scalar> EvalBuffer<T> {
    pub(crate) fn new(x: &TtTensor<T>) -> Self {
        let rmax = x.cores.iter().map(|c| c.right().max(c.left())).max().unwrap_or(1);
        EvalBuffer { cur: vec![T::zero(); rmax], next: vec![T::zero(); rmax] }
    }

    #[inline]
    pub(crate) fn eval(&mut self, x: &TtTensor<T>, idx: &[usize]) -> T {
        self.cur[0] = T::one();
        let mut len = 1;
        for (core, &j) in x.cores.iter().zip(idx) {
            let (l, n, r) = (core.left(), core.mid(), core.right());
            let data = core.as_slice();
            for b in 0..r {
                let base = l * (j + n * b);
                let col = &data[base..base + l];
                let mut s = T::zero();
                for a in 0..len {
                    s += self.cur[a] * col[a];
                }
                self.next[b] = s;
            }
            std::mem::swap(&mut self.cur, &mut self.next);
            len = r;
        }
        self.cur[0]
    }
}

/// Left interface rows of `cores[..k]` at one multi-index: `v ← v · core[idx]`.
#[inline]
pub(crate) fn step_left<T: Scalar>(v: &[T], core: &Tensor3<T>, j: usize, out: &mut [T]) {
    let (l, n, r) = (core.left(), core.mid(), core.right());
    let data = core.as_slice();
    for b in 0..r {
        let base = l * (j + n * b);
        let col = &data[base..base + l];
        let mut s = T::zero();
        for a in 0..l {
            s += v[a] * col[a];
        }
        out[b] = s;
    }
}

/// Right interface columns: `w ← core[idx] · w`.
#[inline]
pub(crate) fn step_right<T: Scalar>(w: &[T], core: &Tensor3<T>, j: usize, out: &mut [T]) {
    let (l, n, r) = (core.left(), core.mid(), core.right());
    let data = core.as_slice();
    for o in out.iter_mut().take(l) {
        *o = T::zero();
    }
    for b in 0..r {
        let base = l * (j + n * b);
        let col = &data[base..base + l];
        let wb = w[b];
        for a in 0..l {
            out[a] += col[a] * wb;
        }
    }
}

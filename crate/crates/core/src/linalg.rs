//! Dense matrix kernels shared by the tensor-train code: sorted SVDs,
//! sign-normalized QR/LQ and orthogonal-complement projections.

use nalgebra::DMatrix;

use crate::Scalar;

/// Singular values sorted non-increasingly.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SingularSpectrum<T: Scalar>(Vec<T>);

impl<T: Scalar> SingularSpectrum<T> {
    /// Sorts the input non-increasingly; negative entries (round-off) are clamped to zero.
    pub fn new(mut values: Vec<T>) -> Self {
        for v in values.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        SingularSpectrum(values)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sigma_j` with 1-based `j`; zero past the end.
    pub fn sigma(&self, j: usize) -> T {
        if j == 0 {
            return T::zero();
        }
        self.0.get(j - 1).copied().unwrap_or_else(T::zero)
    }

    /// Number of strictly positive values.
    pub fn rank(&self) -> usize {
        self.0.iter().take_while(|v| **v > T::zero()).count()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    /// `(sigma_j - sigma_{j+1}) / sigma_j` for 1-based `j`; `None` when `sigma_j = 0`.
    pub fn relative_gap(&self, j: usize) -> Option<T> {
        let s = self.sigma(j);
        if s > T::zero() {
            Some((s - self.sigma(j + 1)) / s)
        } else {
            None
        }
    }

    /// Number of values above `rel_tol * sigma_1`.
    pub fn numerical_rank(&self, rel_tol: T) -> usize {
        let top = self.sigma(1);
        if top <= T::zero() {
            return 0;
        }
        self.0.iter().filter(|v| **v > rel_tol * top).count()
    }

    /// `sqrt(sum_{j > s} sigma_j^2)`.
    pub fn tail_norm(&self, s: usize) -> T {
        self.0.iter().skip(s).fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
    }

    pub fn frobenius(&self) -> T {
        self.tail_norm(0)
    }

    pub fn truncate(&self, s: usize) -> Self {
        SingularSpectrum(self.0.iter().take(s).copied().collect())
    }
}

/// Rank-`s` truncated SVD `U diag(S) Vᵀ`.
#[derive(Clone, Debug)]
pub struct TruncatedSvd<T: Scalar> {
    /// `m x s`, orthonormal columns.
    pub u: DMatrix<T>,
    /// Kept singular values.
    pub s: Vec<T>,
    /// `n x s`, orthonormal columns.
    pub v: DMatrix<T>,
    /// The complete spectrum of the input.
    pub spectrum: SingularSpectrum<T>,
    /// Set when the requested rank exceeded `min(m, n)` and was clamped.
    pub clamped: bool,
}

impl<T: Scalar> TruncatedSvd<T> {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `diag(S) Vᵀ`, an `s x n` matrix.
    pub fn s_vt(&self) -> DMatrix<T> {
        let mut m = self.v.transpose();
        for (i, sv) in self.s.iter().enumerate() {
            m.row_mut(i).scale_mut(*sv);
        }
        m
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.u * self.s_vt()
    }
}

fn to_faer<T: Scalar>(m: &DMatrix<T>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].as_f64())
}

/// Full thin SVD with singular values sorted non-increasingly.
///
/// Computed in double precision by `faer`, whose bidiagonal SVD stays
/// accurate on exactly rank-deficient input.
pub fn sorted_svd<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0));
    }
    let svd = to_faer(m).thin_svd().expect("SVD converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let us = DMatrix::from_fn(rows, k, |i, j| T::of(u[(i, order[j])]));
    let vs = DMatrix::from_fn(cols, k, |i, j| T::of(v[(i, order[j])]));
    let ss = order.iter().map(|&j| T::of(s[j].max(0.0))).collect();
    (us, ss, vs)
}

/// Singular values only, sorted.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> SingularSpectrum<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return SingularSpectrum::default();
    }
    let sv = to_faer(m).singular_values().expect("SVD converges");
    SingularSpectrum::new(sv.into_iter().map(T::of).collect())
}

/// Best rank-`s` approximation factors. `s` larger than `min(m, n)` is clamped and flagged.
pub fn truncated_svd<T: Scalar>(m: &DMatrix<T>, s: usize) -> TruncatedSvd<T> {
    let (u, sv, v) = sorted_svd(m);
    let full = sv.len();
    let keep = s.min(full);
    TruncatedSvd {
        u: u.columns(0, keep).into_owned(),
        s: sv[..keep].to_vec(),
        v: v.columns(0, keep).into_owned(),
        spectrum: SingularSpectrum(sv),
        clamped: s > full,
    }
}

/// Thin QR with the diagonal of `R` made non-negative.
///
/// For `m < n` the factor `Q` is `m x m` and `R` is `m x n`.
pub fn qr_positive<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        if r[(k, k)] < T::zero() {
            r.row_mut(k).neg_mut();
            q.column_mut(k).neg_mut();
        }
    }
    (q, r)
}

/// `M = L Q` with `Q` having orthonormal rows and `diag(L) >= 0`.
pub fn lq_positive<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let (q, r) = qr_positive(&m.transpose());
    (r.transpose(), q.transpose())
}

/// `(I - U Uᵀ) M` for `U` with orthonormal columns.
pub fn complement_left<T: Scalar>(u: &DMatrix<T>, m: &DMatrix<T>) -> DMatrix<T> {
    m - u * (u.transpose() * m)
}

/// `M (I - Vᵀ V)` for `V` with orthonormal rows.
pub fn complement_right<T: Scalar>(m: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
    m - (m * v.transpose()) * v
}

pub fn frobenius_inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

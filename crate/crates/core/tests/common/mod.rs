//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tt_rram::{DenseTensor, TtTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense_normal(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor<f64> {
    DenseTensor::from_fn(shape.to_vec(), |_| StandardNormal.sample(rng)).unwrap()
}

pub fn matrix_normal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn rel_err(a: &DenseTensor<f64>, b: &DenseTensor<f64>) -> f64 {
    a.add_scaled(-1.0, b).norm() / b.norm().max(1e-300)
}

/// Entry of a train by explicit summation over all bond indices.
pub fn brute_entry(x: &TtTensor<f64>, idx: &[usize]) -> f64 {
    let mut v = vec![1.0];
    for (k, core) in x.cores().iter().enumerate() {
        let mut next = vec![0.0; core.right()];
        for (b, slot) in next.iter_mut().enumerate() {
            for (a, va) in v.iter().enumerate() {
                *slot += va * core.get(a, idx[k], b);
            }
        }
        v = next;
    }
    v[0]
}

/// Full tensor by summation, independent of the library's contraction.
pub fn brute_dense(x: &TtTensor<f64>) -> DenseTensor<f64> {
    DenseTensor::from_fn(x.shape(), |i| brute_entry(x, i)).unwrap()
}

pub fn dot(a: &DenseTensor<f64>, b: &DenseTensor<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(p, q)| p * q).sum()
}

/// Orthonormal basis of the column space by column-pivoted QR, cut where
/// `|R_jj| ≤ tol · |R_00|`.
pub fn col_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let qr = m.clone().col_piv_qr();
    let (q, r) = (qr.q(), qr.r());
    let top = r[(0, 0)].abs();
    let k = (0..r.nrows().min(r.ncols())).take_while(|&j| r[(j, j)].abs() > tol * top).count();
    q.columns(0, k).into_owned()
}

/// Spanning set of the tangent space at `x`: every unit variation of every
/// core, contracted with the unmodified other cores of `x`.
pub fn tangent_spanning_set(x: &TtTensor<f64>) -> DMatrix<f64> {
    let total: usize = x.shape().iter().product();
    let mut cols = Vec::new();
    for k in 0..x.order() {
        let c = x.core(k);
        for a in 0..c.left() {
            for j in 0..c.mid() {
                for b in 0..c.right() {
                    let mut e = tt_rram::Tensor3::zeros(c.left(), c.mid(), c.right());
                    e.set(a, j, b, 1.0);
                    let v = x.with_core(k, e).unwrap();
                    cols.push(brute_dense(&v).into_values());
                }
            }
        }
    }
    DMatrix::from_fn(total, cols.len(), |r, c| cols[c][r])
}

/// Orthogonal projection of `y` onto the tangent space, by least squares
/// over the spanning set.
pub fn tangent_projection_oracle(x: &TtTensor<f64>, y: &DenseTensor<f64>) -> DenseTensor<f64> {
    let q = col_basis(&tangent_spanning_set(x), 1e-10);
    let v = DMatrix::from_column_slice(y.len(), 1, y.values());
    let p = &q * (q.transpose() * v);
    DenseTensor::new(y.shape().to_vec(), p.as_slice().to_vec()).unwrap()
}

/// Projector onto the column space of the unfolding after `k` modes
/// (`k = 0` gives the 1 x 1 identity).
fn left_projector(a: &DenseTensor<f64>, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::identity(1, 1);
    }
    let q = col_basis(&a.unfold(k).unwrap(), 1e-10);
    &q * q.transpose()
}

/// Projector onto the row space of the unfolding after `k` modes
/// (`k = d` gives the 1 x 1 identity).
fn right_projector(a: &DenseTensor<f64>, k: usize) -> DMatrix<f64> {
    if k == a.order() {
        return DMatrix::identity(1, 1);
    }
    let q = col_basis(&a.unfold(k).unwrap().transpose(), 1e-10);
    &q * q.transpose()
}

fn apply_left(p: &DMatrix<f64>, y: &DenseTensor<f64>) -> DenseTensor<f64> {
    let m = DMatrix::from_column_slice(p.ncols(), y.len() / p.ncols(), y.values());
    DenseTensor::new(y.shape().to_vec(), (p * m).as_slice().to_vec()).unwrap()
}

fn apply_right(y: &DenseTensor<f64>, p: &DMatrix<f64>) -> DenseTensor<f64> {
    let m = DMatrix::from_column_slice(y.len() / p.nrows(), p.nrows(), y.values());
    DenseTensor::new(y.shape().to_vec(), (m * p).as_slice().to_vec()).unwrap()
}

/// The bond-`i` subcone component of `y` at `x` as a full tensor:
/// `(P_{<i} − P_{≤i}) Y (P_{>i+1} − P_{≥i+1})` with projectors taken from
/// dense SVDs of the unfoldings of `x` (0-based bond `i`).
pub fn subcone_oracle(x: &TtTensor<f64>, y: &DenseTensor<f64>, i: usize) -> DenseTensor<f64> {
    let a = brute_dense(x);
    let pl_outer = left_projector(&a, i);
    let pl_inner = left_projector(&a, i + 1);
    let pr_outer = right_projector(&a, i + 2);
    let pr_inner = right_projector(&a, i + 1);
    let n_i = y.shape()[i];
    // Lift P_{<i} to the first i+1 modes.
    let lifted = kron_identity_right(&pl_outer, n_i);
    let left = &lifted - &pl_inner;
    let n_next = y.shape()[i + 1];
    let lifted_r = kron_identity_left(&pr_outer, n_next);
    let right = &lifted_r - &pr_inner;
    apply_right(&apply_left(&left, y), &right)
}

/// `P ⊗ I_n` acting on column-major index `a + rows(P)·j`.
fn kron_identity_right(p: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let m = p.nrows();
    DMatrix::from_fn(m * n, m * n, |r, c| if r / m == c / m { p[(r % m, c % m)] } else { 0.0 })
}

/// `I_n ⊗ P` acting on column-major index `j + n·b`.
fn kron_identity_left(p: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let m = p.nrows();
    DMatrix::from_fn(m * n, m * n, |r, c| if r % n == c % n { p[(r / n, c / n)] } else { 0.0 })
}

/// Descending singular values.
pub fn svals(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Random matrix with orthonormal columns.
pub fn stiefel(n: usize, s: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    matrix_normal(n, s, rng).qr().q()
}

/// Random `rows x cols` matrix of exact rank `r`.
pub fn low_rank_matrix(rows: usize, cols: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    matrix_normal(rows, r, rng) * matrix_normal(r, cols, rng)
}

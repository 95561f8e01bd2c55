//! Tangent spaces of the fixed-rank TT manifold and tangent-cone directions.
//!
//! A [`TangentFrame`] caches the orthonormal factors of a base point `X`:
//! left-orthogonal cores `X'_k` (from the `(d-1)`-orthogonal form),
//! right-orthogonal cores `X''_k` (from the `0`-orthogonal form) and the center
//! core `Ẋ_k` of every `k`-orthogonal form. A tangent vector is
//!
//! ```text
//! ξ = Σ_k X'_0 ··· X'_{k-1} · W_k · X''_{k+1} ··· X''_{d-1}
//! ```
//!
//! with the gauge `g`: `W_kᴿ ⊥ X'_kᴿ` for `k < g` and `W_kᴸ ⊥ X''_kᴸ` for
//! `k > g`. Under any gauge the `d` terms are mutually orthogonal.
//!
//! A [`ConeDirection`] at bond `i` is `X'_{<i} · U · V · X''_{>i+1}` with
//! `U ⊥ X'_i` and `V ⊥ X''_{i+1}`. It lies in the normal space of the
//! manifold and raises rank `i` when added to `X`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dense::{DenseTensor, Tensor3};
use crate::error::{Result, TtError};
use crate::linalg::{complement_left, complement_right, truncated_svd, SingularSpectrum, TruncatedSvd};
use crate::sample::SampleSet;
use crate::tt::{step_left, step_right, Ortho, TtTensor};
use crate::Scalar;

/// The tensor a projection acts on.
#[derive(Clone, Copy, Debug)]
pub enum Ambient<'a, T: Scalar> {
    Dense(&'a DenseTensor<T>),
    /// Zero off the sample positions.
    Sparse(&'a SampleSet<T>),
    Tt(&'a TtTensor<T>),
}

impl<T: Scalar> Ambient<'_, T> {
    fn shape(&self) -> Vec<usize> {
        match self {
            Ambient::Dense(a) => a.shape().to_vec(),
            Ambient::Sparse(s) => s.shape().to_vec(),
            Ambient::Tt(x) => x.shape(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TangentFrame<T: Scalar> {
    left: Vec<Tensor3<T>>,
    right: Vec<Tensor3<T>>,
    centers: Vec<Tensor3<T>>,
    ranks: Vec<usize>,
}

impl<T: Scalar> TangentFrame<T> {
    /// Orthogonalize `x` both ways. Bonds wider than a neighboring core
    /// unfolding are shrunk until the two sweeps agree.
    pub fn new(x: &TtTensor<T>) -> Result<Arc<Self>> {
        let d = x.order();
        let mut lx = x.orthogonal_at(d - 1)?;
        let rx = loop {
            let rx = lx.orthogonalize(0)?;
            if rx.ranks() == lx.ranks() {
                break rx;
            }
            lx = rx.orthogonalize(d - 1)?;
        };
        let mut frame = TangentFrame {
            ranks: lx.ranks(),
            left: lx.cores().to_vec(),
            right: rx.cores().to_vec(),
            centers: Vec::new(),
        };
        frame.centers = frame.project_tt_blocks(&lx)?;
        Ok(Arc::new(frame))
    }

    pub fn order(&self) -> usize {
        self.left.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.left.iter().map(|c| c.mid()).collect()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// `X'_k`; for `k = d-1` the center of the `(d-1)`-orthogonal form.
    pub fn left_core(&self, k: usize) -> &Tensor3<T> {
        &self.left[k]
    }

    /// `X''_k`; for `k = 0` the center of the `0`-orthogonal form.
    pub fn right_core(&self, k: usize) -> &Tensor3<T> {
        &self.right[k]
    }

    /// `Ẋ_k`, the center of the `k`-orthogonal form built from this frame.
    pub fn center(&self, k: usize) -> &Tensor3<T> {
        &self.centers[k]
    }

    /// The base point in `k`-orthogonal form.
    pub fn point_at(&self, k: usize) -> TtTensor<T> {
        let cores = (0..self.order())
            .map(|j| match j.cmp(&k) {
                std::cmp::Ordering::Less => self.left[j].clone(),
                std::cmp::Ordering::Equal => self.centers[j].clone(),
                std::cmp::Ordering::Greater => self.right[j].clone(),
            })
            .collect();
        TtTensor::from_parts(cores, Ortho::Center(k))
    }

    pub fn point(&self) -> TtTensor<T> {
        self.point_at(self.order() - 1)
    }

    fn check_shape(&self, y: &Ambient<'_, T>) -> Result<()> {
        let shape = y.shape();
        if shape != self.shape() {
            return Err(TtError::ShapeMismatch(format!("{shape:?} vs base point {:?}", self.shape())));
        }
        Ok(())
    }

    /// `Z_k = X'_{<k}ᵀ · Y · X''_{>k}ᵀ` for every core `k`.
    fn blocks(&self, y: &Ambient<'_, T>) -> Result<Vec<Tensor3<T>>> {
        self.check_shape(y)?;
        match y {
            Ambient::Dense(a) => Ok(self.project_dense_blocks(a)),
            Ambient::Sparse(s) => Ok(self.project_sparse_blocks(s)),
            Ambient::Tt(x) => self.project_tt_blocks(x),
        }
    }

    /// `(A_k, B_k)` with `A_k = X'_{<k}ᵀ Y_{<k}` and `B_k = Y_{>k} X''_{>k}ᵀ`.
    fn tt_interfaces(&self, y: &TtTensor<T>) -> (Vec<DMatrix<T>>, Vec<DMatrix<T>>) {
        let d = self.order();
        let mut a = Vec::with_capacity(d);
        a.push(DMatrix::from_element(1, 1, T::one()));
        for k in 0..d - 1 {
            let (xk, yk) = (&self.left[k], y.core(k));
            let t = &a[k] * yk.left_unfolding();
            let t = DMatrix::from_column_slice(xk.left() * xk.mid(), yk.right(), t.as_slice());
            a.push(xk.right_unfolding().transpose() * t);
        }
        let mut b = vec![DMatrix::from_element(1, 1, T::one()); d];
        for k in (1..d).rev() {
            let t = y.core(k).mul_right(&b[k]).left_unfolding();
            b[k - 1] = t * self.right[k].left_unfolding().transpose();
        }
        (a, b)
    }

    fn project_tt_blocks(&self, y: &TtTensor<T>) -> Result<Vec<Tensor3<T>>> {
        let (a, b) = self.tt_interfaces(y);
        Ok((0..self.order()).map(|k| y.core(k).mul_left(&a[k]).mul_right(&b[k])).collect())
    }

    /// `L_k = X'_{<k}` as an `(n_0 ··· n_{k-1}) x r_{k-1}` matrix.
    fn left_matrices(&self, upto: usize) -> Vec<DMatrix<T>> {
        let mut out = Vec::with_capacity(upto + 1);
        out.push(DMatrix::from_element(1, 1, T::one()));
        for k in 0..upto {
            let core = &self.left[k];
            let prod = &out[k] * core.left_unfolding();
            let rows = out[k].nrows() * core.mid();
            out.push(DMatrix::from_column_slice(rows, core.right(), prod.as_slice()));
        }
        out
    }

    /// `R_k = Y · X''_{>k}ᵀ` as an `(n_0 ··· n_k) x r_k` matrix.
    fn right_contractions(&self, a: &DenseTensor<T>) -> Vec<DMatrix<T>> {
        let d = self.order();
        let mut out = vec![DMatrix::zeros(0, 0); d];
        out[d - 1] = DMatrix::from_column_slice(a.len(), 1, a.values());
        for k in (1..d).rev() {
            let core = &self.right[k];
            let rows = out[k].nrows() / core.mid();
            let m = DMatrix::from_column_slice(rows, core.mid() * core.right(), out[k].as_slice());
            out[k - 1] = m * core.left_unfolding().transpose();
        }
        out
    }

    fn project_dense_blocks(&self, a: &DenseTensor<T>) -> Vec<Tensor3<T>> {
        let d = self.order();
        let lefts = self.left_matrices(d - 1);
        let rights = self.right_contractions(a);
        (0..d)
            .map(|k| {
                let (n, r) = (self.left[k].mid(), self.left[k].right());
                let l = &lefts[k];
                let m = DMatrix::from_column_slice(l.nrows(), n * r, rights[k].as_slice());
                Tensor3::from_left_unfolding(&(l.transpose() * m), n, r)
            })
            .collect()
    }

    /// Per-sample accumulation: each sample adds `y_s · L_k(s) ⊗ R_k(s)` to
    /// slice `i_k` of `Z_k`, with the interface vectors built on the fly.
    fn project_sparse_blocks(&self, s: &SampleSet<T>) -> Vec<Tensor3<T>> {
        let d = self.order();
        let mut z: Vec<Tensor3<T>> =
            self.left.iter().map(|c| Tensor3::zeros(c.left(), c.mid(), c.right())).collect();
        let rmax = self.ranks.iter().copied().max().unwrap_or(1).max(1);
        // rights[k] holds R_k(s) (length r_k), rights[d-1] = [1].
        let mut rights = vec![T::zero(); d * rmax];
        let mut lcur = vec![T::zero(); rmax];
        let mut lnext = vec![T::zero(); rmax];
        for (idx, &y) in s.indices().zip(s.values()) {
            if y == T::zero() {
                continue;
            }
            rights[(d - 1) * rmax] = T::one();
            for k in (1..d).rev() {
                let (done, todo) = rights.split_at_mut(k * rmax);
                step_right(&todo[..rmax], &self.right[k], idx[k], &mut done[(k - 1) * rmax..k * rmax]);
            }
            lcur[0] = y;
            for k in 0..d {
                let core = &mut z[k];
                let (l, n, r) = (core.left(), core.mid(), core.right());
                let rk = &rights[k * rmax..k * rmax + r];
                let data = core.as_mut_slice();
                for b in 0..r {
                    let base = l * (idx[k] + n * b);
                    let rb = rk[b];
                    for a in 0..l {
                        data[base + a] += lcur[a] * rb;
                    }
                }
                if k + 1 < d {
                    step_left(&lcur[..l], &self.left[k], idx[k], &mut lnext);
                    std::mem::swap(&mut lcur, &mut lnext);
                }
            }
        }
        z
    }

    /// The middle matrix of bond `i` before the complement projections:
    /// `X'_{<i}ᵀ · Y · X''_{>i+1}ᵀ` as `(r_{i-1} n_i) x (n_{i+1} r_{i+1})`.
    fn pair_block(&self, y: &Ambient<'_, T>, i: usize) -> Result<DMatrix<T>> {
        self.check_shape(y)?;
        let (ci, cj) = (&self.left[i], &self.right[i + 1]);
        let rows = ci.left() * ci.mid();
        let cols = cj.mid() * cj.right();
        match y {
            Ambient::Dense(a) => {
                let lefts = self.left_matrices(i);
                let rights = self.right_contractions(a);
                let l = &lefts[i];
                let m = DMatrix::from_column_slice(l.nrows(), rights[i + 1].len() / l.nrows(), rights[i + 1].as_slice());
                let t = l.transpose() * m;
                Ok(DMatrix::from_column_slice(rows, cols, t.as_slice()))
            }
            Ambient::Tt(x) => {
                let (a, b) = self.tt_interfaces(x);
                let p = x.core(i).mul_left(&a[i]);
                let q = x.core(i + 1).mul_right(&b[i + 1]);
                let t = p.right_unfolding() * q.left_unfolding();
                Ok(DMatrix::from_column_slice(rows, cols, t.as_slice()))
            }
            Ambient::Sparse(s) => {
                let d = self.order();
                let rmax = self.ranks.iter().copied().max().unwrap_or(1).max(1);
                let mut m = DMatrix::zeros(rows, cols);
                let (mut lcur, mut lnext) = (vec![T::zero(); rmax], vec![T::zero(); rmax]);
                let (mut rcur, mut rnext) = (vec![T::zero(); rmax], vec![T::zero(); rmax]);
                let (li, ni) = (ci.left(), ci.mid());
                let (nj, rj) = (cj.mid(), cj.right());
                for (idx, &y) in s.indices().zip(s.values()) {
                    if y == T::zero() {
                        continue;
                    }
                    lcur[0] = y;
                    for k in 0..i {
                        step_left(&lcur[..self.left[k].left()], &self.left[k], idx[k], &mut lnext);
                        std::mem::swap(&mut lcur, &mut lnext);
                    }
                    rcur[0] = T::one();
                    for k in (i + 2..d).rev() {
                        step_right(&rcur, &self.right[k], idx[k], &mut rnext);
                        std::mem::swap(&mut rcur, &mut rnext);
                    }
                    let row0 = li * idx[i];
                    for b in 0..rj {
                        let col = idx[i + 1] + nj * b;
                        let rb = rcur[b];
                        for a in 0..li {
                            m[(row0 + a, col)] += lcur[a] * rb;
                        }
                    }
                }
                debug_assert_eq!(rows, li * ni);
                Ok(m)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TangentVector<T: Scalar> {
    frame: Arc<TangentFrame<T>>,
    w: Vec<Tensor3<T>>,
    gauge: usize,
}

impl<T: Scalar> TangentVector<T> {
    pub fn new(frame: Arc<TangentFrame<T>>, w: Vec<Tensor3<T>>, gauge: usize) -> Result<Self> {
        let d = frame.order();
        if gauge >= d {
            return Err(TtError::OutOfRange(format!("gauge {gauge} for order {d}")));
        }
        if w.len() != d || w.iter().zip(&frame.left).any(|(a, b)| a.dims() != b.dims()) {
            return Err(TtError::ShapeMismatch("parameter blocks must match the base point cores".into()));
        }
        Ok(TangentVector { frame, w, gauge })
    }

    pub fn zeros(frame: Arc<TangentFrame<T>>, gauge: usize) -> Result<Self> {
        let w = frame.left.iter().map(|c| Tensor3::zeros(c.left(), c.mid(), c.right())).collect();
        Self::new(frame, w, gauge)
    }

    pub fn frame(&self) -> &Arc<TangentFrame<T>> {
        &self.frame
    }

    pub fn blocks(&self) -> &[Tensor3<T>] {
        &self.w
    }

    pub fn gauge(&self) -> usize {
        self.gauge
    }

    /// Move the gauge one core at a time; the represented tensor is unchanged.
    pub fn with_gauge(&self, target: usize) -> Result<Self> {
        let d = self.frame.order();
        if target >= d {
            return Err(TtError::OutOfRange(format!("gauge {target} for order {d}")));
        }
        let mut w = self.w.clone();
        let mut g = self.gauge;
        while g > target {
            let xr = self.frame.right[g].left_unfolding();
            let mut wl = w[g].left_unfolding();
            let dm = &wl * xr.transpose();
            wl -= &dm * &xr;
            w[g] = Tensor3::from_left_unfolding(&wl, w[g].mid(), w[g].right());
            w[g - 1].axpy(T::one(), &self.frame.left[g - 1].mul_right(&dm));
            g -= 1;
        }
        while g < target {
            let xl = self.frame.left[g].right_unfolding();
            let mut wr = w[g].right_unfolding();
            let c = xl.transpose() * &wr;
            wr -= &xl * &c;
            w[g] = Tensor3::from_right_unfolding(&wr, w[g].left(), w[g].mid());
            w[g + 1].axpy(T::one(), &self.frame.right[g + 1].mul_left(&c));
            g += 1;
        }
        Ok(TangentVector { frame: self.frame.clone(), w, gauge: target })
    }

    /// Largest entry of `X'_kᴿᵀ W_kᴿ` (`k < g`) and `W_kᴸ X''_kᴸᵀ` (`k > g`).
    pub fn gauge_violation(&self) -> T {
        let mut worst = T::zero();
        for (k, w) in self.w.iter().enumerate() {
            let v = if k < self.gauge {
                (self.frame.left[k].right_unfolding().transpose() * w.right_unfolding()).amax()
            } else if k > self.gauge {
                (w.left_unfolding() * self.frame.right[k].left_unfolding().transpose()).amax()
            } else {
                T::zero()
            };
            worst = worst.max(v);
        }
        worst
    }

    fn same_frame(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.frame, &other.frame) {
            Ok(())
        } else {
            Err(TtError::InvalidArgument("tangent vectors live at different base points".into()))
        }
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.same_frame(other)?;
        let o = if other.gauge == self.gauge { other.clone() } else { other.with_gauge(self.gauge)? };
        Ok(self.w.iter().zip(&o.w).fold(T::zero(), |acc, (a, b)| acc + a.dot(b)))
    }

    pub fn norm(&self) -> T {
        self.w.iter().fold(T::zero(), |acc, a| acc + a.norm_squared()).sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        TangentVector { frame: self.frame.clone(), w: self.w.iter().map(|a| a.scaled(s)).collect(), gauge: self.gauge }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.same_frame(other)?;
        let o = if other.gauge == self.gauge { other.clone() } else { other.with_gauge(self.gauge)? };
        let mut w = self.w.clone();
        for (a, b) in w.iter_mut().zip(&o.w) {
            a.axpy(s, b);
        }
        Ok(TangentVector { frame: self.frame.clone(), w, gauge: self.gauge })
    }

    pub fn to_tt(&self) -> TtTensor<T> {
        tangent_to_tt(self)
    }
}

/// Orthogonal projection of `y` onto the tangent space at the frame's base
/// point, returned in gauge `gauge`.
pub fn project_tangent<T: Scalar>(frame: &Arc<TangentFrame<T>>, y: Ambient<'_, T>, gauge: usize) -> Result<TangentVector<T>> {
    let d = frame.order();
    if gauge >= d {
        return Err(TtError::OutOfRange(format!("gauge {gauge} for order {d}")));
    }
    let mut w = frame.blocks(&y)?;
    for (k, wk) in w.iter_mut().enumerate().take(d - 1) {
        let xl = frame.left[k].right_unfolding();
        let p = complement_left(&xl, &wk.right_unfolding());
        *wk = Tensor3::from_right_unfolding(&p, wk.left(), wk.mid());
    }
    let v = TangentVector { frame: frame.clone(), w, gauge: d - 1 };
    if gauge == d - 1 {
        Ok(v)
    } else {
        v.with_gauge(gauge)
    }
}

/// The tangent vector as an explicit train of ranks at most `2r`.
pub fn tangent_to_tt<T: Scalar>(xi: &TangentVector<T>) -> TtTensor<T> {
    let f = &xi.frame;
    let d = f.order();
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let (xl, xr, w) = (&f.left[k], &f.right[k], &xi.w[k]);
        let (l, n, r) = (w.left(), w.mid(), w.right());
        let core = if k == 0 {
            // [W_0, X'_0]
            Tensor3::from_fn(1, n, 2 * r, |_, j, b| if b < r { w.get(0, j, b) } else { xl.get(0, j, b - r) })
        } else if k == d - 1 {
            // [X''_{d-1}; W_{d-1}]
            Tensor3::from_fn(2 * l, n, 1, |a, j, _| if a < l { xr.get(a, j, 0) } else { w.get(a - l, j, 0) })
        } else {
            // [[X''_k, 0], [W_k, X'_k]]
            Tensor3::from_fn(2 * l, n, 2 * r, |a, j, b| match (a < l, b < r) {
                (true, true) => xr.get(a, j, b),
                (true, false) => T::zero(),
                (false, true) => w.get(a - l, j, b),
                (false, false) => xl.get(a - l, j, b - r),
            })
        };
        cores.push(core);
    }
    TtTensor::from_parts(cores, Ortho::None)
}

/// `R_t(x, ξ)`: TT-rounding of `x + tξ` back to the ranks of `x`.
pub fn retract_fixed_rank<T: Scalar>(xi: &TangentVector<T>, t: T) -> Result<TtTensor<T>> {
    let f = &xi.frame;
    let d = f.order();
    let v = xi.with_gauge(d - 1)?;
    let mut w: Vec<Tensor3<T>> = v.w.iter().map(|a| a.scaled(t)).collect();
    w[d - 1].axpy(T::one(), &f.left[d - 1]);
    let shifted = TangentVector { frame: f.clone(), w, gauge: d - 1 };
    tangent_to_tt(&shifted).round(f.ranks())
}

/// `P_i(X, Y)`: the bond-`i` block of `Y` with the column space of `X'_iᴿ`
/// and the row space of `X''_{i+1}ᴸ` projected out.
pub fn subcone_matrix<T: Scalar>(frame: &TangentFrame<T>, y: Ambient<'_, T>, i: usize) -> Result<DMatrix<T>> {
    let d = frame.order();
    if i + 1 >= d {
        return Err(TtError::OutOfRange(format!("bond {i} for order {d}")));
    }
    let m = frame.pair_block(&y, i)?;
    let m = complement_left(&frame.left[i].right_unfolding(), &m);
    Ok(complement_right(&m, &frame.right[i + 1].left_unfolding()))
}

/// A rank-raising direction `X'_{<i} · U · V · X''_{>i+1}` at bond `i`.
#[derive(Clone, Debug)]
pub struct ConeDirection<T: Scalar> {
    frame: Arc<TangentFrame<T>>,
    mode: usize,
    u: Tensor3<T>,
    v: Tensor3<T>,
    clamped: bool,
    spectrum: SingularSpectrum<T>,
}

impl<T: Scalar> ConeDirection<T> {
    /// Build from a truncated SVD of `P_i`: `U` from the left singular
    /// vectors and `Vᴸ = S Vᵀ`.
    pub fn from_svd(frame: Arc<TangentFrame<T>>, mode: usize, svd: &TruncatedSvd<T>) -> Result<Self> {
        let d = frame.order();
        if mode + 1 >= d {
            return Err(TtError::OutOfRange(format!("bond {mode} for order {d}")));
        }
        let (ci, cj) = (&frame.left[mode], &frame.right[mode + 1]);
        if svd.u.nrows() != ci.left() * ci.mid() || svd.v.nrows() != cj.mid() * cj.right() {
            return Err(TtError::ShapeMismatch("SVD factors do not match the bond".into()));
        }
        let u = Tensor3::from_right_unfolding(&svd.u, ci.left(), ci.mid());
        let v = Tensor3::from_left_unfolding(&svd.s_vt(), cj.mid(), cj.right());
        Ok(ConeDirection { frame, mode, u, v, clamped: svd.clamped, spectrum: svd.spectrum.clone() })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    /// The rank increment `s`.
    pub fn increment(&self) -> usize {
        self.u.right()
    }

    pub fn u(&self) -> &Tensor3<T> {
        &self.u
    }

    pub fn v(&self) -> &Tensor3<T> {
        &self.v
    }

    pub fn frame(&self) -> &Arc<TangentFrame<T>> {
        &self.frame
    }

    /// Set when the requested increment exceeded the size of `P_i`.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// Full spectrum of `P_i`.
    pub fn spectrum(&self) -> &SingularSpectrum<T> {
        &self.spectrum
    }

    /// `‖U V‖`, which equals the norm of the represented tensor.
    pub fn norm(&self) -> T {
        self.v.norm_squared().sqrt()
    }

    /// Largest entry of `Uᴿᵀ X'_iᴿ` and `Vᴸ X''_{i+1}ᴸᵀ`.
    pub fn orthogonality_violation(&self) -> T {
        let a = (self.u.right_unfolding().transpose() * self.frame.left[self.mode].right_unfolding()).amax();
        let b = (self.v.left_unfolding() * self.frame.right[self.mode + 1].left_unfolding().transpose()).amax();
        a.max(b)
    }

    /// The represented tensor as a train.
    pub fn to_tt(&self) -> TtTensor<T> {
        let f = &self.frame;
        let i = self.mode;
        let cores = (0..f.order())
            .map(|k| {
                if k < i {
                    f.left[k].clone()
                } else if k == i {
                    self.u.clone()
                } else if k == i + 1 {
                    self.v.clone()
                } else {
                    f.right[k].clone()
                }
            })
            .collect();
        TtTensor::from_parts(cores, Ortho::Center(i + 1))
    }
}

/// Best rank-`s` subcone direction: truncated SVD of [`subcone_matrix`].
pub fn project_subcone<T: Scalar>(
    frame: &Arc<TangentFrame<T>>,
    y: Ambient<'_, T>,
    i: usize,
    s: usize,
) -> Result<ConeDirection<T>> {
    if s == 0 {
        return Err(TtError::InvalidArgument("rank increment must be at least 1".into()));
    }
    let p = subcone_matrix(frame, y, i)?;
    ConeDirection::from_svd(frame.clone(), i, &truncated_svd(&p, s))
}

/// `X + t · dir` with bond `i` widened to `r_i + s`: cores `[X'_i U]` and
/// `[Ẋ_{i+1}; tV]`.
pub fn retract_increase<T: Scalar>(x: &TtTensor<T>, t: T, dir: &ConeDirection<T>) -> Result<TtTensor<T>> {
    let f = &dir.frame;
    if x.shape() != f.shape() || x.ranks() != f.ranks() {
        return Err(TtError::ShapeMismatch("direction was built at a different base point".into()));
    }
    let i = dir.mode;
    let (xl, u) = (&f.left[i], &dir.u);
    let (l, n, r, s) = (xl.left(), xl.mid(), xl.right(), u.right());
    let wide = Tensor3::from_fn(l, n, r + s, |a, j, b| if b < r { xl.get(a, j, b) } else { u.get(a, j, b - r) });
    let (c, v) = (&f.centers[i + 1], &dir.v);
    let tall = Tensor3::from_fn(r + s, c.mid(), c.right(), |a, j, b| if a < r { c.get(a, j, b) } else { t * v.get(a - r, j, b) });
    let cores = (0..f.order())
        .map(|k| {
            if k < i {
                f.left[k].clone()
            } else if k == i {
                wide.clone()
            } else if k == i + 1 {
                tall.clone()
            } else {
                f.right[k].clone()
            }
        })
        .collect();
    Ok(TtTensor::from_parts(cores, Ortho::Center(i + 1)))
}

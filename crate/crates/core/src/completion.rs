//! The completion objective `f_Ω(X) = ½‖X_Ω − A_Ω‖²` and a fixed-rank
//! Riemannian conjugate-gradient solver for it.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Result, TtError};
use crate::sample::SampleSet;
use crate::tangent::{project_tangent, retract_fixed_rank, Ambient, TangentFrame, TangentVector};
use crate::tt::TtTensor;
use crate::Scalar;

/// `½ Σ_{s ∈ Ω} (x_s − a_s)²`.
pub fn objective<T: Scalar>(x: &TtTensor<T>, omega: &SampleSet<T>) -> Result<T> {
    let vals = omega.gather(x)?;
    Ok(half_sq_dist(&vals, omega.values()))
}

fn half_sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q)) * T::of(0.5)
}

/// `f(new) − f(old)` from the new values and the old residual, formed as
/// `½ Σ (r' − r)(r' + r)` so that small decreases survive cancellation.
fn cost_change<T: Scalar>(vals: &[T], target: &[T], resid: &[T]) -> T {
    let sum = vals.iter().zip(target).zip(resid).fold(T::zero(), |acc, ((v, a), r)| {
        let rn = *v - *a;
        acc + (rn - *r) * (rn + *r)
    });
    sum * T::of(0.5)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + *p * *q)
}

/// `X_Ω − A_Ω` on the positions of `omega`: the Euclidean gradient of `f_Ω`.
pub fn residual<T: Scalar>(x: &TtTensor<T>, omega: &SampleSet<T>) -> Result<SampleSet<T>> {
    let vals = omega.gather(x)?;
    let r = vals.iter().zip(omega.values()).map(|(p, q)| *p - *q).collect();
    omega.with_values(r)
}

/// Minimizer `t = −⟨resid, Ŷ_Ω⟩ / ‖Ŷ_Ω‖²` of the quadratic `t ↦ f_Ω(X + tŶ)`.
pub fn exact_step<T: Scalar>(dir_samples: &[T], resid: &[T]) -> Result<T> {
    if dir_samples.len() != resid.len() {
        return Err(TtError::ShapeMismatch(format!("{} vs {} samples", dir_samples.len(), resid.len())));
    }
    let nn = dot(dir_samples, dir_samples);
    if nn <= T::zero() {
        return Err(TtError::DegenerateDirection);
    }
    Ok(-dot(resid, dir_samples) / nn)
}

/// Projection of the residual onto the tangent space at `x`.
pub fn riemannian_gradient<T: Scalar>(x: &TtTensor<T>, omega: &SampleSet<T>) -> Result<TangentVector<T>> {
    let frame = TangentFrame::new(x)?;
    let r = residual(&frame.point(), omega)?;
    project_tangent(&frame, Ambient::Sparse(&r), frame.order() - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgConfig<T: Scalar> {
    pub j_max: usize,
    /// Stop once the Riemannian gradient norm drops below this.
    pub eps_grad: T,
    /// Stop once `√(2 f_Ω) / ‖A_Ω‖` drops below this.
    pub eps_rel: T,
    /// Stop once the relative change of `√(2 f_Ω)` drops below this.
    pub eps_stagnation: T,
}

impl<T: Scalar> Default for CgConfig<T> {
    fn default() -> Self {
        CgConfig { j_max: 15, eps_grad: T::of(1e-8), eps_rel: T::of(1e-8), eps_stagnation: T::of(1e-8) }
    }
}

impl<T: Scalar> CgConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.eps_grad <= T::zero() || self.eps_rel <= T::zero() || self.eps_stagnation <= T::zero() {
            return Err(TtError::InvalidArgument("CG tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgStop {
    MaxIter,
    Gradient,
    Residual,
    Stagnation,
    /// Neither the search direction nor the negative gradient changes the samples.
    Degenerate,
}

impl CgStop {
    /// Stopped at a point where more iterations would not help.
    pub fn converged(self) -> bool {
        !matches!(self, CgStop::MaxIter)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgRecord {
    pub iter: usize,
    /// `f_Ω / ‖A_Ω‖²`.
    pub f_omega_rel: f64,
    pub grad_norm: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgTrace {
    pub records: Vec<CgRecord>,
    pub stop: CgStop,
}

impl CgTrace {
    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,f_omega_rel,grad_norm,wall_ms\n");
        for r in &self.records {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", r.iter, r.f_omega_rel, r.grad_norm, r.wall_ms));
        }
        out
    }

    /// Parse the records written by [`CgTrace::to_csv`]; the stop reason is not stored.
    pub fn records_from_csv(text: &str) -> Result<Vec<CgRecord>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "iter,f_omega_rel,grad_norm,wall_ms" => {}
            other => return Err(TtError::Parse(format!("unexpected trace header {other:?}"))),
        }
        lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 4 {
                    return Err(TtError::Parse(format!("bad trace row {l:?}")));
                }
                let p = |s: &str| s.trim().parse::<f64>().map_err(|_| TtError::Parse(format!("bad number {s:?}")));
                Ok(CgRecord {
                    iter: f[0].trim().parse().map_err(|_| TtError::Parse(format!("bad iteration {:?}", f[0])))?,
                    f_omega_rel: p(f[1])?,
                    grad_norm: p(f[2])?,
                    wall_ms: p(f[3])?,
                })
            })
            .collect()
    }
}

/// The solver state at its final iterate.
#[derive(Clone, Debug)]
pub struct CgState<T: Scalar> {
    pub x: TtTensor<T>,
    pub frame: Arc<TangentFrame<T>>,
    pub grad: TangentVector<T>,
    pub dir: TangentVector<T>,
    /// Residual `X_Ω − A_Ω` at `x`.
    pub resid: SampleSet<T>,
    pub f_val: T,
    pub grad_norm: T,
    pub iter: usize,
}

impl<T: Scalar> CgState<T> {
    fn at(x: &TtTensor<T>, omega: &SampleSet<T>) -> Result<Self> {
        let frame = TangentFrame::new(x)?;
        let x = frame.point();
        let resid = residual(&x, omega)?;
        let f_val = half_sq_dist(resid.values(), &vec![T::zero(); resid.len()]);
        let grad = project_tangent(&frame, Ambient::Sparse(&resid), frame.order() - 1)?;
        let grad_norm = grad.norm();
        let dir = grad.scaled(-T::one());
        Ok(CgState { x, frame, grad, dir, resid, f_val, grad_norm, iter: 0 })
    }
}

/// Riemannian CG at fixed rank. Returns the final iterate and the trace.
pub fn cg_solve<T: Scalar>(x0: &TtTensor<T>, omega: &SampleSet<T>, cfg: &CgConfig<T>) -> Result<(TtTensor<T>, CgTrace)> {
    let (state, trace) = cg_run(x0, omega, cfg)?;
    Ok((state.x, trace))
}

/// Riemannian CG returning the full final state.
///
/// Directions use the Polak–Ribière+ rule with the previous direction
/// carried over by projection onto the new tangent space. The step is the
/// exact minimizer along the tangent direction, halved until the retracted
/// point satisfies an Armijo condition, so `f_Ω` never increases. Whenever
/// the direction is not a descent direction it is reset to the negative
/// gradient.
pub fn cg_run<T: Scalar>(x0: &TtTensor<T>, omega: &SampleSet<T>, cfg: &CgConfig<T>) -> Result<(CgState<T>, CgTrace)> {
    cfg.validate()?;
    if x0.shape() != omega.shape() {
        return Err(TtError::ShapeMismatch(format!("{:?} vs {:?}", x0.shape(), omega.shape())));
    }
    let start = Instant::now();
    let a2 = omega.norm() * omega.norm();
    let a_norm = omega.norm();
    let rel = |f: T| if a2 > T::zero() { (f / a2).as_f64() } else { f.as_f64() };
    let mut st = CgState::at(x0, omega)?;
    let mut records = vec![CgRecord {
        iter: 0,
        f_omega_rel: rel(st.f_val),
        grad_norm: st.grad_norm.as_f64(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }];
    let two = T::of(2.0);
    let small_residual = |f: T| a_norm > T::zero() && (two * f).sqrt() / a_norm < cfg.eps_rel || f == T::zero();

    let mut stop = CgStop::MaxIter;
    while st.iter < cfg.j_max {
        if small_residual(st.f_val) {
            stop = CgStop::Residual;
            break;
        }
        if st.grad_norm < cfg.eps_grad {
            stop = CgStop::Gradient;
            break;
        }
        let Some((x_new, change)) = line_search(&mut st, omega)? else {
            stop = CgStop::Degenerate;
            break;
        };
        let prev = (two * st.f_val).sqrt();
        let drop = -two * change;
        let mut next = CgState::at(&x_new, omega)?;
        // PR+ with transported previous gradient and direction.
        let old_dir = project_tangent(&next.frame, Ambient::Tt(&st.dir.to_tt()), next.frame.order() - 1)?;
        let old_grad = project_tangent(&next.frame, Ambient::Tt(&st.grad.to_tt()), next.frame.order() - 1)?;
        let g2 = st.grad_norm * st.grad_norm;
        let beta = if g2 > T::zero() {
            let y = next.grad.axpy(-T::one(), &old_grad)?;
            (next.grad.inner(&y)? / g2).max(T::zero())
        } else {
            T::zero()
        };
        next.dir = next.grad.scaled(-T::one()).axpy(beta, &old_dir)?;
        next.iter = st.iter + 1;
        st = next;
        records.push(CgRecord {
            iter: st.iter,
            f_omega_rel: rel(st.f_val),
            grad_norm: st.grad_norm.as_f64(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        // (prev − cur) / cur, with prev − cur formed from the accurate drop in 2f.
        let cur = (two * st.f_val).sqrt();
        if cur > T::zero() && (drop / (cur * (prev + cur))).abs() < cfg.eps_stagnation {
            stop = CgStop::Stagnation;
            break;
        }
    }
    Ok((st, CgTrace { records, stop }))
}

/// Step along `st.dir` (reset to the negative gradient when needed).
/// Returns the new point and the change in `f_Ω`, or `None` when no
/// direction decreases `f_Ω`.
fn line_search<T: Scalar>(st: &mut CgState<T>, omega: &SampleSet<T>) -> Result<Option<(TtTensor<T>, T)>> {
    let armijo = T::of(1e-4);
    for attempt in 0..2 {
        let steepest = attempt == 1;
        if steepest {
            st.dir = st.grad.scaled(-T::one());
        }
        let slope = st.grad.inner(&st.dir)?;
        if slope >= T::zero() {
            if steepest {
                return Ok(None);
            }
            continue;
        }
        let dvals = omega.gather(&st.dir.to_tt())?;
        let mut t = match exact_step(&dvals, st.resid.values()) {
            Ok(t) if t > T::zero() => t,
            Ok(_) | Err(TtError::DegenerateDirection) => {
                if steepest {
                    return Ok(None);
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        for _ in 0..30 {
            let x_new = retract_fixed_rank(&st.dir, t)?;
            let change = cost_change(&omega.gather(&x_new)?, omega.values(), st.resid.values());
            if change <= armijo * t * slope {
                return Ok(Some((x_new, change)));
            }
            t *= T::of(0.5);
        }
        if steepest {
            return Ok(None);
        }
    }
    Ok(None)
}

/// `f_Ω / ‖A_Ω‖²`, the relative cost reported in traces.
pub fn relative_cost<T: Scalar>(f: T, set: &SampleSet<T>) -> f64 {
    let a2 = set.norm() * set.norm();
    if a2 > T::zero() {
        (f / a2).as_f64()
    } else {
        f.as_f64()
    }
}

/// `√(2 f_Ω) / ‖A_Ω‖`, the relative residual used by the stopping tests.
pub fn relative_residual<T: Scalar>(f: T, set: &SampleSet<T>) -> f64 {
    let a = set.norm();
    let r = (T::of(2.0) * f).sqrt();
    if a > T::zero() {
        (r / a).as_f64()
    } else {
        r.as_f64()
    }
}

//! Rank adaptivity: rank estimation from tangent-cone projections, rank
//! increase along subcone directions, rank decrease by TT-rounding and the
//! outer rank-adaptive driver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::completion::{cg_run, exact_step, objective, relative_cost, relative_residual, residual, CgConfig, CgStop, CgTrace};
use crate::dense::Tensor3;
use crate::error::{Result, TtError};
use crate::linalg::{qr_positive, singular_values, truncated_svd, SingularSpectrum};
use crate::sample::SampleSet;
use crate::tangent::{retract_increase, subcone_matrix, Ambient, ConeDirection, TangentFrame};
use crate::tt::TtTensor;
use crate::Scalar;

/// Largest relative gap `(σ_j − σ_{j+1}) / σ_j` over `j ≤ s`; ties go to the
/// smallest `j`. Zero for a zero spectrum.
///
/// When `s` reaches the numerical rank, the last gap is 1 by convention and
/// would always win, so the search stops one short of the rank.
pub fn estimated_rank<T: Scalar>(spec: &SingularSpectrum<T>, s: usize) -> usize {
    let rank = spec.numerical_rank(T::of(1e3) * T::EPS);
    let top = if s < rank { s } else { rank.saturating_sub(1).max(rank.min(1)) };
    let mut best = (0, -T::one());
    for j in 1..=top {
        let gap = spec.relative_gap(j).unwrap_or_else(T::zero);
        if gap > best.1 {
            best = (j, gap);
        }
    }
    best.0
}

/// [`estimated_rank`] of a subcone spectrum, with spectra below roundoff
/// relative to `scale` (typically `‖A_Ω‖`) treated as zero.
pub fn estimated_rank_scaled<T: Scalar>(spec: &SingularSpectrum<T>, s: usize, scale: T) -> usize {
    if spec.sigma(1) <= T::of(1e-2) * T::EPS.sqrt() * scale {
        0
    } else {
        estimated_rank(spec, s)
    }
}

/// Smallest `j` whose relative gap is at least `delta`; zero for a zero spectrum.
pub fn delta_rank_matrix<T: Scalar>(spec: &SingularSpectrum<T>, delta: T) -> usize {
    let rank = spec.rank();
    (1..=rank).find(|&j| spec.relative_gap(j).is_some_and(|g| g >= delta)).unwrap_or(rank)
}

/// Singular values of every unfolding, from one left-to-right QR sweep.
///
/// The center core's right unfolding shares its singular values with the
/// unfolding of the full tensor at that bond.
pub fn tt_spectra<T: Scalar>(x: &TtTensor<T>) -> Result<Vec<SingularSpectrum<T>>> {
    let d = x.order();
    let y = x.orthogonal_at(0)?;
    let mut carry = y.core(0).clone();
    let mut out = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        let m = carry.right_unfolding();
        out.push(singular_values(&m));
        let (_, r) = qr_positive(&m);
        carry = y.core(k + 1).mul_left(&r);
    }
    Ok(out)
}

/// Δ-rank of every unfolding.
pub fn delta_rank_tt<T: Scalar>(x: &TtTensor<T>, delta: T) -> Result<Vec<usize>> {
    Ok(tt_spectra(x)?.iter().map(|s| delta_rank_matrix(s, delta).max(1)).collect())
}

/// TT-rounding to at most `target`.
pub fn tt_round<T: Scalar>(a: &TtTensor<T>, target: &[usize]) -> Result<TtTensor<T>> {
    a.round(target)
}

/// `√(Π_{k≥1} r_k / Π_{k≥1} r'_k)`, skipping the first bond.
pub fn angle_lower_bound(r: &[usize], r_prime: &[usize]) -> Result<f64> {
    if r.len() != r_prime.len() {
        return Err(TtError::ShapeMismatch(format!("{} vs {} ranks", r.len(), r_prime.len())));
    }
    if r.iter().zip(r_prime).any(|(a, b)| *a == 0 || a > b) {
        return Err(TtError::InvalidArgument("need 0 < r <= r' elementwise".into()));
    }
    let num: f64 = r.iter().skip(1).map(|&v| v as f64).product();
    let den: f64 = r_prime.iter().skip(1).map(|&v| v as f64).product();
    Ok((num / den).sqrt())
}

/// `(f_now − f_prev) / f_prev`, zero when `f_prev = 0`.
pub fn overfit_ratio<T: Scalar>(f_now: T, f_prev: T) -> T {
    if f_prev > T::zero() {
        (f_now - f_prev) / f_prev
    } else {
        T::zero()
    }
}

/// Widen bond `i` by one: `[X_i, ε u]` and `[X_{i+1}; v]` with standard normal
/// `u`, `v`.
pub fn baseline_random_increase<T: Scalar, R: Rng + ?Sized>(
    x: &TtTensor<T>,
    i: usize,
    eps: T,
    rng: &mut R,
) -> Result<TtTensor<T>> {
    let d = x.order();
    if i + 1 >= d {
        return Err(TtError::OutOfRange(format!("bond {i} for order {d}")));
    }
    let mut normal = || T::of(StandardNormal.sample(rng));
    let (a, b) = (x.core(i), x.core(i + 1));
    let r = a.right();
    let wide = Tensor3::from_fn(a.left(), a.mid(), r + 1, |p, j, q| if q < r { a.get(p, j, q) } else { T::zero() });
    let tall = Tensor3::from_fn(r + 1, b.mid(), b.right(), |p, j, q| if p < r { b.get(p, j, q) } else { T::zero() });
    let (mut wide, mut tall) = (wide, tall);
    for j in 0..a.mid() {
        for p in 0..a.left() {
            wide.set(p, j, r, eps * normal());
        }
    }
    for q in 0..b.right() {
        for j in 0..b.mid() {
            tall.set(r, j, q, normal());
        }
    }
    let mut cores = x.cores().to_vec();
    cores[i] = wide;
    cores[i + 1] = tall;
    TtTensor::new(cores)
}

/// Largest admissible rank at bond `i` for neighboring ranks of `x`.
fn bond_limit(x: &TtTensor<impl Scalar>, i: usize) -> usize {
    let a = x.core(i);
    let b = x.core(i + 1);
    (a.left() * a.mid()).min(b.mid() * b.right())
}

/// Cap that broadcasts a single value to every bond.
fn cap(list: &[usize], i: usize) -> usize {
    match list {
        [] => usize::MAX,
        [v] => *v,
        _ => list.get(i).copied().unwrap_or(0),
    }
}

/// Result of [`estimate_tt_rank`].
#[derive(Clone, Debug)]
pub struct RankEstimate<T: Scalar> {
    /// `k_i = r_i + s_i`.
    pub ranks: Vec<usize>,
    /// Spectra of the subcone matrices `P_i(X*, ∇f_Ω(X*))`.
    pub spectra: Vec<SingularSpectrum<T>>,
    pub x: TtTensor<T>,
    pub trace: CgTrace,
}

/// Run CG from `x0`, then add the estimated rank of every subcone matrix at
/// the result to the current ranks.
pub fn estimate_tt_rank<T: Scalar>(
    omega: &SampleSet<T>,
    x0: &TtTensor<T>,
    s_caps: &[usize],
    cg: &CgConfig<T>,
) -> Result<RankEstimate<T>> {
    let (state, trace) = cg_run(x0, omega, cg)?;
    let x = state.x;
    let frame = state.frame;
    let r = x.ranks();
    let mut ranks = Vec::with_capacity(r.len());
    let mut spectra = Vec::with_capacity(r.len());
    for (i, &ri) in r.iter().enumerate() {
        let p = subcone_matrix(&frame, Ambient::Sparse(&state.resid), i)?;
        let spec = singular_values(&p);
        let room = bond_limit(&x, i).saturating_sub(ri);
        ranks.push(ri + estimated_rank_scaled(&spec, cap(s_caps, i).min(room), omega.norm()));
        spectra.push(spec);
    }
    Ok(RankEstimate { ranks, spectra, x, trace })
}

/// Result of [`increase_rank`].
#[derive(Clone, Debug)]
pub struct IncreaseOutcome<T: Scalar> {
    pub x: TtTensor<T>,
    /// Estimated increment per bond; `None` where the caps left no room.
    pub estimates: Vec<Option<usize>>,
    pub accepted: Vec<bool>,
}

/// One pass over the bonds. At bond `i` the increment `s_i` is the
/// estimated rank of `P_i(X, −∇f_Ω)`, the step is exact and the widened
/// point is kept only if it lowers both `f_Ω` and `f_Γ` by more than `eps`.
/// An empty `gamma` imposes no test-set condition.
pub fn increase_rank<T: Scalar>(
    x: &TtTensor<T>,
    omega: &SampleSet<T>,
    gamma: &SampleSet<T>,
    r_max: &[usize],
    s_max: &[usize],
    eps: T,
) -> Result<IncreaseOutcome<T>> {
    let d = x.order();
    let mut x = x.clone();
    let mut estimates = vec![None; d - 1];
    let mut accepted = vec![false; d - 1];
    for i in 0..d - 1 {
        let ri = x.ranks()[i];
        let room = cap(r_max, i).saturating_sub(ri).min(cap(s_max, i)).min(bond_limit(&x, i).saturating_sub(ri));
        if room == 0 {
            continue;
        }
        let frame = TangentFrame::new(&x)?;
        let base = frame.point();
        let resid = residual(&base, omega)?;
        let neg: Vec<T> = resid.values().iter().map(|v| -*v).collect();
        let target = resid.with_values(neg)?;
        let p = subcone_matrix(&frame, Ambient::Sparse(&target), i)?;
        let mut svd = truncated_svd(&p, room);
        let s = estimated_rank_scaled(&svd.spectrum, room, omega.norm());
        estimates[i] = Some(s);
        if s == 0 {
            continue;
        }
        svd.u = svd.u.columns(0, s).into_owned();
        svd.v = svd.v.columns(0, s).into_owned();
        svd.s.truncate(s);
        let dir = ConeDirection::from_svd(frame.clone(), i, &svd)?;
        let dvals = omega.gather(&dir.to_tt())?;
        let t = match exact_step(&dvals, resid.values()) {
            Ok(t) => t,
            Err(TtError::DegenerateDirection) => continue,
            Err(e) => return Err(e),
        };
        let x_new = retract_increase(&base, t, &dir)?;
        let f_old = resid.values().iter().fold(T::zero(), |acc, v| acc + *v * *v) * T::of(0.5);
        let better_omega = f_old - objective(&x_new, omega)? > eps;
        let better_gamma = gamma.is_empty() || objective(&base, gamma)? - objective(&x_new, gamma)? > eps;
        if better_omega && better_gamma {
            x = x_new;
            accepted[i] = true;
        }
    }
    Ok(IncreaseOutcome { x, estimates, accepted })
}

/// Parameters of the rank-adaptive driver.
#[derive(Clone, Debug, PartialEq)]
pub struct RramConfig<T: Scalar> {
    /// Stop once `√(2 f_Ω) / ‖A_Ω‖` drops below this.
    pub eps_omega: T,
    /// Inner gradient-norm tolerance.
    pub eps_grad: T,
    /// Overfitting threshold on the relative increase of `f_Γ`.
    pub eps_gamma: T,
    pub delta: T,
    pub j_max: usize,
    pub k_max: usize,
    /// Rank caps per bond; a single entry applies to every bond.
    pub r_max: Vec<usize>,
    /// Increment caps per bond; a single entry applies to every bond.
    pub s_max: Vec<usize>,
    /// Sufficient decrease required to accept a rank increase.
    pub eps_decrease: T,
    pub eps_stagnation: T,
    pub seed: u64,
}

impl<T: Scalar> Default for RramConfig<T> {
    fn default() -> Self {
        RramConfig {
            eps_omega: T::of(1e-8),
            eps_grad: T::of(1e-8),
            eps_gamma: T::one(),
            delta: T::of(0.8),
            j_max: 15,
            k_max: 15,
            r_max: vec![10],
            s_max: vec![8],
            eps_decrease: T::of(1e-10),
            eps_stagnation: T::of(1e-8),
            seed: 1,
        }
    }
}

impl<T: Scalar> RramConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !unit(self.eps_omega) || !unit(self.eps_grad) {
            return Err(TtError::InvalidArgument("eps_omega and eps_grad must lie in (0, 1)".into()));
        }
        if self.eps_gamma < T::zero() || self.eps_decrease < T::zero() || self.eps_stagnation <= T::zero() {
            return Err(TtError::InvalidArgument("eps_gamma, eps_decrease must be >= 0".into()));
        }
        if self.delta < T::zero() || self.delta >= T::one() {
            return Err(TtError::InvalidArgument("delta must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn cg(&self) -> CgConfig<T> {
        CgConfig { j_max: self.j_max, eps_grad: self.eps_grad, eps_rel: self.eps_omega, eps_stagnation: self.eps_stagnation }
    }

    /// Parse `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| TtError::Parse(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| TtError::Parse(format!("line {}: {e}", no + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<N: FromStr>(v: &str) -> Result<N> {
            v.parse().map_err(|_| TtError::Parse(format!("bad value {v:?}")))
        }
        fn list(v: &str) -> Result<Vec<usize>> {
            v.split(',').map(|t| num(t.trim())).collect()
        }
        match key {
            "eps_omega" => self.eps_omega = num(value)?,
            "eps_grad" => self.eps_grad = num(value)?,
            "eps_gamma" => self.eps_gamma = num(value)?,
            "delta" => self.delta = num(value)?,
            "j_max" => self.j_max = num(value)?,
            "k_max" => self.k_max = num(value)?,
            "r_max" => self.r_max = list(value)?,
            "s_max" => self.s_max = list(value)?,
            "eps_decrease" => self.eps_decrease = num(value)?,
            "eps_stagnation" => self.eps_stagnation = num(value)?,
            "seed" => self.seed = num(value)?,
            _ => return Err(TtError::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "eps_omega = {:e}\neps_grad = {:e}\neps_gamma = {:e}\ndelta = {}\nj_max = {}\nk_max = {}\nr_max = {}\ns_max = {}\neps_decrease = {:e}\neps_stagnation = {:e}\nseed = {}\n",
            self.eps_omega,
            self.eps_grad,
            self.eps_gamma,
            self.delta,
            self.j_max,
            self.k_max,
            join(&self.r_max),
            join(&self.s_max),
            self.eps_decrease,
            self.eps_stagnation,
            self.seed
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterAction {
    Cg,
    Increase,
    Decrease,
    StopOverfit,
    StopConverged,
    StopBudget,
}

impl OuterAction {
    pub fn as_str(self) -> &'static str {
        match self {
            OuterAction::Cg => "cg",
            OuterAction::Increase => "increase",
            OuterAction::Decrease => "decrease",
            OuterAction::StopOverfit => "stop-overfit",
            OuterAction::StopConverged => "stop-converged",
            OuterAction::StopBudget => "stop-budget",
        }
    }

    pub fn is_stop(self) -> bool {
        matches!(self, OuterAction::StopOverfit | OuterAction::StopConverged | OuterAction::StopBudget)
    }
}

impl fmt::Display for OuterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OuterAction {
    type Err = TtError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cg" => OuterAction::Cg,
            "increase" => OuterAction::Increase,
            "decrease" => OuterAction::Decrease,
            "stop-overfit" => OuterAction::StopOverfit,
            "stop-converged" => OuterAction::StopConverged,
            "stop-budget" => OuterAction::StopBudget,
            _ => return Err(TtError::Parse(format!("unknown action {s:?}"))),
        })
    }
}

/// One row of the outer trace. `ranks` are the ranks after the action.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    pub action: OuterAction,
    pub ranks: Vec<usize>,
    /// `f_Ω / ‖A_Ω‖²`.
    pub f_omega_rel: f64,
    /// `f_Γ / ‖A_Γ‖²`.
    pub f_gamma_rel: f64,
    pub inner_iters_cum: usize,
    pub wall_ms: f64,
}

/// Relative cost after every inner iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct CostPoint {
    pub inner_iters_cum: usize,
    pub f_omega_rel: f64,
    pub wall_ms: f64,
}

const TRACE_HEADER: &str = "outer,action,ranks,f_omega_rel,f_gamma_rel,inner_iters_cum,wall_ms";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RramTrace {
    pub records: Vec<OuterRecord>,
    /// Estimated increments per bond at every rank-increase step.
    pub estimates: Vec<Vec<Option<usize>>>,
    pub costs: Vec<CostPoint>,
}

impl RramTrace {
    pub fn final_action(&self) -> Option<OuterAction> {
        self.records.last().map(|r| r.action)
    }

    pub fn inner_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.inner_iters_cum)
    }

    /// First cumulative inner-iteration count with relative cost at or below `level`.
    pub fn iterations_to_reach(&self, level: f64) -> Option<usize> {
        self.costs.iter().find(|c| c.f_omega_rel <= level).map(|c| c.inner_iters_cum)
    }

    /// Outer iteration at whose end the iterate first holds the given ranks.
    pub fn first_outer_with_ranks(&self, ranks: &[usize]) -> Option<usize> {
        self.records.iter().find(|r| r.ranks == ranks).map(|r| r.outer)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{TRACE_HEADER}\n");
        for r in &self.records {
            let ranks: Vec<String> = r.ranks.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{},{:e}\n",
                r.outer,
                r.action,
                ranks.join(" "),
                r.f_omega_rel,
                r.f_gamma_rel,
                r.inner_iters_cum,
                r.wall_ms
            ));
        }
        out
    }

    pub fn records_from_csv(text: &str) -> Result<Vec<OuterRecord>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == TRACE_HEADER => {}
            other => return Err(TtError::Parse(format!("unexpected trace header {other:?}"))),
        }
        lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').map(str::trim).collect();
                if f.len() != 7 {
                    return Err(TtError::Parse(format!("bad trace row {l:?}")));
                }
                let int = |s: &str| s.parse::<usize>().map_err(|_| TtError::Parse(format!("bad integer {s:?}")));
                let real = |s: &str| s.parse::<f64>().map_err(|_| TtError::Parse(format!("bad number {s:?}")));
                Ok(OuterRecord {
                    outer: int(f[0])?,
                    action: f[1].parse()?,
                    ranks: f[2].split_whitespace().map(int).collect::<Result<_>>()?,
                    f_omega_rel: real(f[3])?,
                    f_gamma_rel: real(f[4])?,
                    inner_iters_cum: int(f[5])?,
                    wall_ms: real(f[6])?,
                })
            })
            .collect()
    }

    /// `inner_iters_cum,f_omega_rel,wall_ms` per inner iteration.
    pub fn costs_csv(&self) -> String {
        let mut out = String::from("inner_iters_cum,f_omega_rel,wall_ms\n");
        for c in &self.costs {
            out.push_str(&format!("{},{:e},{:e}\n", c.inner_iters_cum, c.f_omega_rel, c.wall_ms));
        }
        out
    }

    /// `increase,bond,estimate` per rank-increase step; `-` where no estimate was made.
    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("increase,bond,estimate\n");
        for (k, row) in self.estimates.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                let v = e.map_or("-".to_string(), |s| s.to_string());
                out.push_str(&format!("{},{},{}\n", k + 1, i + 1, v));
            }
        }
        out
    }
}

/// Bookkeeping shared by the two outer drivers.
struct Recorder<'a, T: Scalar> {
    omega: &'a SampleSet<T>,
    gamma: &'a SampleSet<T>,
    start: Instant,
    trace: RramTrace,
    inner: usize,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    fn new(omega: &'a SampleSet<T>, gamma: &'a SampleSet<T>) -> Self {
        Recorder { omega, gamma, start: Instant::now(), trace: RramTrace::default(), inner: 0 }
    }

    fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    fn f_gamma(&self, x: &TtTensor<T>) -> Result<T> {
        if self.gamma.is_empty() {
            Ok(T::zero())
        } else {
            objective(x, self.gamma)
        }
    }

    fn push(&mut self, outer: usize, action: OuterAction, x: &TtTensor<T>, f_omega: T, f_gamma: T) {
        let rec = OuterRecord {
            outer,
            action,
            ranks: x.ranks(),
            f_omega_rel: relative_cost(f_omega, self.omega),
            f_gamma_rel: if self.gamma.is_empty() { 0.0 } else { relative_cost(f_gamma, self.gamma) },
            inner_iters_cum: self.inner,
            wall_ms: self.ms(),
        };
        self.trace.records.push(rec);
    }

    fn absorb(&mut self, cg: &CgTrace) {
        if self.trace.costs.is_empty() {
            if let Some(first) = cg.records.first() {
                self.trace.costs.push(CostPoint { inner_iters_cum: 0, f_omega_rel: first.f_omega_rel, wall_ms: self.ms() });
            }
        }
        for r in cg.records.iter().skip(1) {
            self.trace.costs.push(CostPoint {
                inner_iters_cum: self.inner + r.iter,
                f_omega_rel: r.f_omega_rel,
                wall_ms: self.ms(),
            });
        }
        self.inner += cg.iterations();
    }
}

/// The rank-adaptive completion driver.
///
/// Each outer iteration runs fixed-rank CG, then stops on overfitting
/// (rolling back to the previous iterate) or on a small relative residual.
/// Otherwise it tries TT-rounding to the Δ-ranks of the iterate, kept if
/// it lowers `f_Ω` or `f_Γ`, and else widens the ranks along subcone
/// directions. It also stops when the widening changes nothing after CG
/// had converged, since later iterations would repeat the same step.
pub fn rram<T: Scalar>(
    omega: &SampleSet<T>,
    gamma: &SampleSet<T>,
    x0: &TtTensor<T>,
    cfg: &RramConfig<T>,
) -> Result<(TtTensor<T>, RramTrace)> {
    cfg.validate()?;
    if !omega.is_disjoint(gamma) {
        return Err(TtError::InvalidArgument("training and test sets overlap".into()));
    }
    let mut rec = Recorder::new(omega, gamma);
    let cg = cfg.cg();
    let mut x_new = x0.clone();
    let mut prev = (x0.clone(), rec.f_gamma(x0)?);
    let mut last = x0.clone();
    for k in 1..=cfg.k_max {
        let (state, ctrace) = cg_run(&x_new, omega, &cg)?;
        rec.absorb(&ctrace);
        let xk = state.x;
        let (f_omega, f_gamma) = (state.f_val, rec.f_gamma(&xk)?);
        rec.push(k, OuterAction::Cg, &xk, f_omega, f_gamma);

        if !gamma.is_empty() && overfit_ratio(f_gamma, prev.1) > cfg.eps_gamma {
            let f_prev = objective(&prev.0, omega)?;
            rec.push(k, OuterAction::StopOverfit, &prev.0, f_prev, prev.1);
            return Ok((prev.0, rec.trace));
        }
        if relative_residual(f_omega, omega) < cfg.eps_omega.as_f64() {
            rec.push(k, OuterAction::StopConverged, &xk, f_omega, f_gamma);
            return Ok((xk, rec.trace));
        }
        if k < cfg.k_max {
            let r = xk.ranks();
            let r_delta = delta_rank_tt(&xk, cfg.delta)?;
            if r_delta.iter().sum::<usize>() < r.iter().sum::<usize>() {
                let x_delta = xk.round(&r_delta)?;
                let (fo, fg) = (objective(&x_delta, omega)?, rec.f_gamma(&x_delta)?);
                if fo < f_omega || (!gamma.is_empty() && fg < f_gamma) {
                    rec.push(k, OuterAction::Decrease, &x_delta, fo, fg);
                    x_new = x_delta;
                    prev = (xk.clone(), f_gamma);
                    last = xk;
                    continue;
                }
            }
            let out = increase_rank(&xk, omega, gamma, &cfg.r_max, &cfg.s_max, cfg.eps_decrease)?;
            rec.trace.estimates.push(out.estimates.clone());
            let (fo, fg) = (objective(&out.x, omega)?, rec.f_gamma(&out.x)?);
            rec.push(k, OuterAction::Increase, &out.x, fo, fg);
            if !out.accepted.iter().any(|a| *a) && ctrace.stop.converged() && ctrace.stop != CgStop::MaxIter {
                rec.push(k, OuterAction::StopConverged, &xk, f_omega, f_gamma);
                return Ok((xk, rec.trace));
            }
            x_new = out.x;
        }
        prev = (xk.clone(), f_gamma);
        last = xk;
    }
    let (fo, fg) = (objective(&last, omega)?, rec.f_gamma(&last)?);
    rec.push(cfg.k_max, OuterAction::StopBudget, &last, fo, fg);
    Ok((last, rec.trace))
}

/// Baseline: after every CG phase widen one bond by one with a tiny random
/// term, cycling through the bonds, until every bond reaches `r_max` or the
/// relative residual drops below `eps_omega`.
pub fn run_baseline<T: Scalar, R: Rng + ?Sized>(
    omega: &SampleSet<T>,
    gamma: &SampleSet<T>,
    x0: &TtTensor<T>,
    cfg: &RramConfig<T>,
    eps: T,
    rng: &mut R,
) -> Result<(TtTensor<T>, RramTrace)> {
    cfg.validate()?;
    let d = x0.order();
    let mut rec = Recorder::new(omega, gamma);
    let cg = cfg.cg();
    let mut x = x0.clone();
    let mut next_bond = 0;
    let mut outer = 0;
    loop {
        outer += 1;
        let (state, ctrace) = cg_run(&x, omega, &cg)?;
        rec.absorb(&ctrace);
        x = state.x;
        let (f_omega, f_gamma) = (state.f_val, rec.f_gamma(&x)?);
        rec.push(outer, OuterAction::Cg, &x, f_omega, f_gamma);
        if relative_residual(f_omega, omega) < cfg.eps_omega.as_f64() {
            rec.push(outer, OuterAction::StopConverged, &x, f_omega, f_gamma);
            return Ok((x, rec.trace));
        }
        let ranks = x.ranks();
        let bond = (0..d - 1)
            .map(|o| (next_bond + o) % (d - 1))
            .find(|&i| ranks[i] < cap(&cfg.r_max, i) && ranks[i] < bond_limit(&x, i));
        let Some(i) = bond else {
            rec.push(outer, OuterAction::StopBudget, &x, f_omega, f_gamma);
            return Ok((x, rec.trace));
        };
        x = baseline_random_increase(&x, i, eps, rng)?;
        next_bond = (i + 1) % (d - 1);
        rec.push(outer, OuterAction::Increase, &x, objective(&x, omega)?, rec.f_gamma(&x)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(v: &[f64]) -> SingularSpectrum<f64> {
        SingularSpectrum::new(v.to_vec())
    }

    #[test]
    fn estimated_rank_cases() {
        assert_eq!(estimated_rank(&spec(&[0.0, 0.0]), 3), 0);
        assert_eq!(estimated_rank(&spec(&[5.0, 4.9, 4.8, 1e-3]), 3), 3);
        assert_eq!(estimated_rank(&spec(&[1.0]), 5), 1);
        // Equal gaps: the smaller index wins.
        assert_eq!(estimated_rank(&spec(&[4.0, 2.0, 1.0]), 2), 1);
        // A cap at or above the rank ignores the artificial last gap.
        assert_eq!(estimated_rank(&spec(&[3.0, 2.9, 1.0]), 5), 2);
        assert_eq!(estimated_rank(&spec(&[3.0, 1.0, 0.9]), 3), 1);
    }

    #[test]
    fn delta_rank_cases() {
        let s = spec(&[10.0, 1.0, 0.9]);
        assert_eq!(delta_rank_matrix(&s, 0.8), 1);
        assert_eq!(delta_rank_matrix(&s, 0.0), 1);
        assert_eq!(delta_rank_matrix(&s, 1.0), 3);
        assert_eq!(delta_rank_matrix(&spec(&[0.0]), 0.5), 0);
    }

    #[test]
    fn angle_bound_cases() {
        assert!((angle_lower_bound(&[2, 2, 2], &[4, 4, 4]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(angle_lower_bound(&[3, 3], &[3, 3]).unwrap(), 1.0);
        assert_eq!(angle_lower_bound(&[2, 4], &[3, 4]).unwrap(), 1.0);
        assert!(angle_lower_bound(&[5, 1], &[4, 4]).is_err());
    }

    #[test]
    fn overfit_ratio_cases() {
        assert_eq!(overfit_ratio(2.0, 2.0), 0.0);
        assert_eq!(overfit_ratio(4.0, 2.0), 1.0);
        assert!(overfit_ratio(1.0, 2.0) < 0.0);
        assert_eq!(overfit_ratio(1.0, 0.0), 0.0);
    }

    #[test]
    fn random_increase_with_zero_scale_pads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = TtTensor::<f64>::random_normal(&[3, 4, 3], &[2, 2], &mut rng).unwrap();
        let y = baseline_random_increase(&x, 1, 0.0, &mut rng).unwrap();
        assert_eq!(y.ranks(), vec![2, 3]);
        let (dx, dy) = (x.reconstruct().unwrap(), y.reconstruct().unwrap());
        assert!(dx.add_scaled(-1.0, &dy).norm() <= 1e-14 * dx.norm());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RramConfig::<f64> { r_max: vec![5, 6, 7], eps_omega: 1e-3, seed: 42, ..RramConfig::default() };
        assert_eq!(RramConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert!(RramConfig::<f64>::parse("delta = 1.5").is_err());
        assert!(RramConfig::<f64>::parse("bogus = 1").is_err());
        let p = RramConfig::<f64>::parse("# comment\nj_max = 3 # inline\n").unwrap();
        assert_eq!(p.j_max, 3);
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = RramTrace {
            records: vec![
                OuterRecord {
                    outer: 1,
                    action: OuterAction::Cg,
                    ranks: vec![1, 2, 3],
                    f_omega_rel: 0.123456789,
                    f_gamma_rel: 1.0 / 7.0,
                    inner_iters_cum: 15,
                    wall_ms: 12.5,
                },
                OuterRecord {
                    outer: 1,
                    action: OuterAction::StopConverged,
                    ranks: vec![4, 4, 4],
                    f_omega_rel: 1e-20,
                    f_gamma_rel: 3e-19,
                    inner_iters_cum: 15,
                    wall_ms: 13.0,
                },
            ],
            ..RramTrace::default()
        };
        assert_eq!(RramTrace::records_from_csv(&trace.to_csv()).unwrap(), trace.records);
    }
}

//! Test-data generators, sampling, and the experiment runners behind the
//! command-line tool.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::adaptive::{
    angle_lower_bound, estimate_tt_rank, rram, run_baseline, RankEstimate, RramConfig, RramTrace,
};
use crate::completion::{riemannian_gradient, CgConfig};
use crate::dense::{DenseTensor, DEFAULT_DENSE_CAP};
use crate::error::{Result, TtError};
use crate::io;
use crate::linalg::{singular_values, SingularSpectrum};
use crate::sample::SampleSet;
use crate::tt::TtTensor;
use crate::Scalar;

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Truth = 0,
    Noise = 1,
    Sampling = 2,
    Start = 3,
    Baseline = 4,
    Trials = 5,
}

/// ChaCha8 seeded with `seed`, on the stream reserved for `purpose`.
pub fn rng_for(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

fn check_feasible(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.iter().any(|&n| n < 2) {
        return Err(TtError::InvalidArgument(format!("need at least two modes of size >= 2, got {dims:?}")));
    }
    if ranks.len() + 1 != dims.len() {
        return Err(TtError::ShapeMismatch(format!("{} ranks for order {}", ranks.len(), dims.len())));
    }
    for (i, &r) in ranks.iter().enumerate() {
        let left: usize = dims[..=i].iter().product();
        let right: usize = dims[i + 1..].iter().product();
        if r == 0 || r > left.min(right) {
            return Err(TtError::InvalidArgument(format!("rank {r} at bond {} is infeasible", i + 1)));
        }
    }
    Ok(())
}

/// Product of standard-normal cores with ranks `r_prime`.
pub fn gen_synthetic_tt<T: Scalar>(dims: &[usize], r_prime: &[usize], seed: u64) -> Result<TtTensor<T>> {
    check_feasible(dims, r_prime)?;
    TtTensor::random_normal(dims, r_prime, &mut rng_for(seed, Stream::Truth))
}

/// [`gen_synthetic_tt`] and its full tensor.
pub fn gen_synthetic<T: Scalar>(dims: &[usize], r_prime: &[usize], seed: u64) -> Result<(DenseTensor<T>, TtTensor<T>)> {
    let x = gen_synthetic_tt(dims, r_prime, seed)?;
    Ok((x.reconstruct()?, x))
}

fn normal<T: Scalar>(rng: &mut impl Rng) -> T {
    T::of(StandardNormal.sample(rng))
}

/// `A + η Z` with `Z` standard normal.
pub fn add_noise<T: Scalar>(a: &DenseTensor<T>, eta: T, seed: u64) -> Result<DenseTensor<T>> {
    if eta < T::zero() {
        return Err(TtError::InvalidArgument("noise level must be non-negative".into()));
    }
    if eta == T::zero() {
        return Ok(a.clone());
    }
    let mut rng = rng_for(seed, Stream::Noise);
    let values = a.values().iter().map(|v| *v + eta * normal::<T>(&mut rng)).collect();
    DenseTensor::new(a.shape().to_vec(), values)
}

/// Noise on the sampled values only, for tensors too large to form.
pub fn add_noise_samples<T: Scalar>(s: &SampleSet<T>, eta: T, rng: &mut impl Rng) -> Result<SampleSet<T>> {
    let values = s.values().iter().map(|v| *v + eta * normal::<T>(rng)).collect();
    s.with_values(values)
}

/// `exp(−‖x‖₂)` on the uniform grid `x_k = i_k / (n − 1)` of `[0, 1]^d`.
pub fn gen_exponential<T: Scalar>(n: usize, d: usize) -> Result<DenseTensor<T>> {
    if n < 2 || d < 2 {
        return Err(TtError::InvalidArgument("need n >= 2 and d >= 2".into()));
    }
    let h = 1.0 / (n - 1) as f64;
    DenseTensor::from_fn(vec![n; d], |i| {
        let r2: f64 = i.iter().map(|&k| (k as f64 * h).powi(2)).sum();
        T::of((-r2.sqrt()).exp())
    })
}

/// Disjoint random linear positions: `round(ρ·total)` for the training set
/// and `round(γ·|Ω|)` for the test set.
pub fn sample_positions(total: usize, rho: f64, gamma_fraction: f64, rng: &mut impl Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(rho > 0.0 && rho <= 1.0) || gamma_fraction < 0.0 {
        return Err(TtError::InvalidArgument(format!("bad ratios rho={rho}, gamma={gamma_fraction}")));
    }
    let m = (rho * total as f64).round() as usize;
    let g = (gamma_fraction * m as f64).round() as usize;
    if m == 0 || m + g > total {
        return Err(TtError::InvalidArgument(format!("cannot draw {m} + {g} of {total} entries")));
    }
    let mut all = index::sample(rng, total, m + g).into_vec();
    let gamma = all.split_off(m);
    Ok((all, gamma))
}

/// Training and test samples of `a`.
pub fn sample_split<T: Scalar>(
    a: &DenseTensor<T>,
    rho: f64,
    gamma_fraction: f64,
    seed: u64,
) -> Result<(SampleSet<T>, SampleSet<T>)> {
    let (om, ga) = sample_positions(a.len(), rho, gamma_fraction, &mut rng_for(seed, Stream::Sampling))?;
    Ok((SampleSet::from_dense(a, &om)?, SampleSet::from_dense(a, &ga)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Synthetic,
    SyntheticNoise,
    Exponential,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Synthetic => "synthetic",
            ExperimentKind::SyntheticNoise => "synthetic-noise",
            ExperimentKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = TtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(ExperimentKind::Synthetic),
            "synthetic-noise" => Ok(ExperimentKind::SyntheticNoise),
            "exponential" => Ok(ExperimentKind::Exponential),
            _ => Err(TtError::Parse(format!("unknown experiment kind {s:?}"))),
        }
    }
}

/// Data and sampling parameters of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub dims: Vec<usize>,
    /// Ranks of the generated tensor; ignored for `exponential`.
    pub r_prime: Vec<usize>,
    /// Ranks of the random starting point.
    pub r0: Vec<usize>,
    pub rho_omega: f64,
    pub gamma_fraction: f64,
    pub eta: f64,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Random low-rank data with a rank-one start.
    pub fn synthetic(dims: Vec<usize>, r_prime: Vec<usize>, rho_omega: f64, seed: u64) -> Self {
        let r0 = vec![1; dims.len() - 1];
        ExperimentSpec { kind: ExperimentKind::Synthetic, dims, r_prime, r0, rho_omega, gamma_fraction: 0.25, eta: 0.0, seed }
    }

    pub fn with_noise(mut self, eta: f64) -> Self {
        self.kind = ExperimentKind::SyntheticNoise;
        self.eta = eta;
        self
    }

    /// The exponential-function tensor with `n` points per mode.
    pub fn exponential(n: usize, d: usize, rho_omega: f64, seed: u64) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Exponential,
            dims: vec![n; d],
            r_prime: Vec::new(),
            r0: vec![1; d - 1],
            rho_omega,
            gamma_fraction: 0.25,
            eta: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 || self.dims.iter().any(|&n| n < 2) {
            return Err(TtError::InvalidArgument(format!("bad dims {:?}", self.dims)));
        }
        if !(self.rho_omega > 0.0 && self.rho_omega <= 1.0) {
            return Err(TtError::InvalidArgument("rho_omega must lie in (0, 1]".into()));
        }
        if self.gamma_fraction < 0.0 || self.rho_omega * (1.0 + self.gamma_fraction) > 1.0 {
            return Err(TtError::InvalidArgument("not enough entries for the test set".into()));
        }
        if self.eta < 0.0 {
            return Err(TtError::InvalidArgument("eta must be non-negative".into()));
        }
        check_feasible(&self.dims, &self.r0)?;
        match self.kind {
            ExperimentKind::Exponential => {
                if self.dims.iter().any(|&n| n != self.dims[0]) {
                    return Err(TtError::InvalidArgument("exponential data needs equal dims".into()));
                }
                Ok(())
            }
            _ => check_feasible(&self.dims, &self.r_prime),
        }
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "kind = {}\ndims = {}\nr_prime = {}\nr0 = {}\nrho_omega = {}\ngamma_fraction = {}\neta = {}\ndata_seed = {}\n",
            self.kind,
            join(&self.dims),
            join(&self.r_prime),
            join(&self.r0),
            self.rho_omega,
            self.gamma_fraction,
            self.eta,
            self.seed
        )
    }
}

/// A completion problem: samples plus, where it fits in memory, the full data.
#[derive(Clone, Debug)]
pub struct Problem<T: Scalar> {
    pub omega: SampleSet<T>,
    pub gamma: SampleSet<T>,
    pub dense: Option<DenseTensor<T>>,
    /// Generating tensor train of synthetic data.
    pub truth: Option<TtTensor<T>>,
    pub x0: TtTensor<T>,
}

/// Generate, perturb and sample the data described by `spec`. Data larger
/// than the dense budget is sampled straight from its tensor train, with
/// noise added to the sampled values only.
pub fn build_problem<T: Scalar>(spec: &ExperimentSpec) -> Result<Problem<T>> {
    spec.validate()?;
    let total: usize = spec.dims.iter().product();
    let eta = T::of(spec.eta);
    let (dense, truth) = match spec.kind {
        ExperimentKind::Exponential => (Some(gen_exponential(spec.dims[0], spec.dims.len())?), None),
        _ => {
            let tt = gen_synthetic_tt::<T>(&spec.dims, &spec.r_prime, spec.seed)?;
            let dense = if total <= DEFAULT_DENSE_CAP {
                Some(add_noise(&tt.reconstruct()?, eta, spec.seed)?)
            } else {
                None
            };
            (dense, Some(tt))
        }
    };
    let mut rng = rng_for(spec.seed, Stream::Sampling);
    let (om, ga) = sample_positions(total, spec.rho_omega, spec.gamma_fraction, &mut rng)?;
    let (omega, gamma) = match (&dense, &truth) {
        (Some(a), _) => (SampleSet::from_dense(a, &om)?, SampleSet::from_dense(a, &ga)?),
        (None, Some(x)) => {
            let mut noise = rng_for(spec.seed, Stream::Noise);
            let omega = add_noise_samples(&SampleSet::from_tt(x, &om)?, eta, &mut noise)?;
            let gamma = add_noise_samples(&SampleSet::from_tt(x, &ga)?, eta, &mut noise)?;
            (omega, gamma)
        }
        (None, None) => unreachable!("every kind produces data"),
    };
    let x0 = TtTensor::random_normal(&spec.dims, &spec.r0, &mut rng_for(spec.seed, Stream::Start))?;
    Ok(Problem { omega, gamma, dense, truth, x0 })
}

/// Output of [`run_rank_estimation`].
#[derive(Clone, Debug)]
pub struct RankReport<T: Scalar> {
    pub estimate: RankEstimate<T>,
    /// Riemannian gradient norm at the CG result.
    pub grad_norm: T,
    /// Spectra of the unfoldings of the zero-filled samples.
    pub sampled: Vec<SingularSpectrum<T>>,
    /// Spectra of the unfoldings of the full data.
    pub full: Vec<SingularSpectrum<T>>,
}

pub const REPORT_HEADER: &str = "mode,j,sigma_p,gap_p,sigma_a_omega,gap_a_omega,sigma_a";

impl<T: Scalar> RankReport<T> {
    pub fn ranks(&self) -> &[usize] {
        &self.estimate.ranks
    }

    /// The leading `top` singular values and relative gaps per bond.
    pub fn to_csv(&self, top: usize) -> String {
        let cell = |s: Option<&SingularSpectrum<T>>, j: usize, gap: bool| -> String {
            match s {
                Some(s) if gap => s.relative_gap(j).map_or(String::new(), |g| format!("{:e}", g.as_f64())),
                Some(s) if j <= s.len() => format!("{:e}", s.sigma(j).as_f64()),
                _ => String::new(),
            }
        };
        let mut out = format!("{REPORT_HEADER}\n");
        for (i, p) in self.estimate.spectra.iter().enumerate() {
            let (so, sa) = (self.sampled.get(i), self.full.get(i));
            for j in 1..=top {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    i + 1,
                    j,
                    cell(Some(p), j, false),
                    cell(Some(p), j, true),
                    cell(so, j, false),
                    cell(so, j, true),
                    cell(sa, j, false)
                ));
            }
        }
        out
    }
}

fn unfolding_spectra<T: Scalar>(a: &DenseTensor<T>) -> Result<Vec<SingularSpectrum<T>>> {
    (1..a.order()).map(|k| Ok(singular_values(&a.unfold(k)?))).collect()
}

/// Rank estimation from `cg_iters` CG iterations at the starting ranks.
/// With `with_unfoldings`, also the unfolding spectra of the sampled and
/// the full data for comparison.
pub fn run_rank_estimation<T: Scalar>(
    spec: &ExperimentSpec,
    cg_iters: usize,
    s_caps: &[usize],
    with_unfoldings: bool,
) -> Result<RankReport<T>> {
    let prob = build_problem::<T>(spec)?;
    let cg = CgConfig { j_max: cg_iters, eps_grad: T::of(1e-13), eps_rel: T::of(1e-13), eps_stagnation: T::of(1e-15) };
    let estimate = estimate_tt_rank(&prob.omega, &prob.x0, s_caps, &cg)?;
    let grad_norm = riemannian_gradient(&estimate.x, &prob.omega)?.norm();
    let (sampled, full) = match (&prob.dense, with_unfoldings) {
        (Some(a), true) => (unfolding_spectra(&prob.omega.to_dense()?)?, unfolding_spectra(a)?),
        _ => (Vec::new(), Vec::new()),
    };
    Ok(RankReport { estimate, grad_norm, sampled, full })
}

/// One rounding trial.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleTrial {
    /// `⟨X̃/‖X̃‖, A/‖A‖⟩`.
    pub value: f64,
    pub omega: f64,
    /// `|⟨X̃, A⟩ − ‖X̃‖²| / ‖A‖²`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleReport {
    pub trials: Vec<AngleTrial>,
}

impl AngleReport {
    fn sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.trials.iter().map(|t| t.value).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min(&self) -> f64 {
        self.sorted().first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.sorted().last().copied().unwrap_or(f64::NAN)
    }

    pub fn median(&self) -> f64 {
        let v = self.sorted();
        match v.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => v[n / 2],
            n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,value,omega,residual\n");
        for (k, t) in self.trials.iter().enumerate() {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", k + 1, t.value, t.omega, t.residual));
        }
        out.push_str(&format!("# min {:e} median {:e} max {:e}\n", self.min(), self.median(), self.max()));
        out
    }
}

/// Round `trials` random tensors of rank `r_prime` to rank `r` and compare
/// the alignment with the lower bound.
pub fn run_angle_experiment(trials: usize, dims: &[usize], r_prime: &[usize], r: &[usize], seed: u64) -> Result<AngleReport> {
    check_feasible(dims, r_prime)?;
    let omega = angle_lower_bound(r, r_prime)?;
    let mut rng = rng_for(seed, Stream::Trials);
    let trials = (0..trials)
        .map(|_| {
            let a = TtTensor::<f64>::random_normal(dims, r_prime, &mut rng)?;
            let x = a.round(r)?;
            let (xa, xx, aa) = (x.inner(&a)?, x.inner(&x)?, a.inner(&a)?);
            Ok(AngleTrial { value: xa / (xx.sqrt() * aa.sqrt()), omega, residual: (xa - xx).abs() / aa })
        })
        .collect::<Result<_>>()?;
    Ok(AngleReport { trials })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rram,
    Baseline,
}

impl FromStr for Method {
    type Err = TtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rram" => Ok(Method::Rram),
            "baseline" => Ok(Method::Baseline),
            _ => Err(TtError::Parse(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rram => "rram",
            Method::Baseline => "baseline",
        })
    }
}

/// Scale of the random term added by the baseline.
pub const BASELINE_EPS: f64 = 1e-8;

/// Solve the completion problem of `prob` with the chosen method.
pub fn run_completion<T: Scalar>(
    prob: &Problem<T>,
    cfg: &RramConfig<T>,
    method: Method,
) -> Result<(TtTensor<T>, RramTrace)> {
    match method {
        Method::Rram => rram(&prob.omega, &prob.gamma, &prob.x0, cfg),
        Method::Baseline => {
            let mut rng = rng_for(cfg.seed, Stream::Baseline);
            run_baseline(&prob.omega, &prob.gamma, &prob.x0, cfg, T::of(BASELINE_EPS), &mut rng)
        }
    }
}

/// Write `trace.csv`, `costs.csv`, `estimates.csv`, `result.tt` and
/// `manifest.txt` into `dir`.
pub fn write_completion_artifacts<T: Scalar>(
    dir: &Path,
    x: &TtTensor<T>,
    trace: &RramTrace,
    manifest: &str,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.csv"), trace.to_csv())?;
    fs::write(dir.join("costs.csv"), trace.costs_csv())?;
    fs::write(dir.join("estimates.csv"), trace.estimates_csv())?;
    fs::write(dir.join("manifest.txt"), manifest)?;
    io::save_tt(x, dir.join("result.tt"))
}

//! Experiment driver: data generation, rank estimation, the rounding angle
//! experiment, rank-adaptive completion and TT-rounding of stored trains.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tt_rram::experiments::{
    build_problem, run_angle_experiment, run_completion, run_rank_estimation, write_completion_artifacts,
    ExperimentKind, ExperimentSpec, Method, Stream,
};
use tt_rram::{delta_rank_tt, io, RramConfig, SampleSet, TtError, TtTensor};

type Result<T> = std::result::Result<T, TtError>;

#[derive(Parser, Debug)]
#[command(name = "tt-rram", version, about = "Rank-adaptive tensor-train completion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate data and write the training and test samples.
    Synth {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run CG at the starting ranks and estimate the ranks of the data.
    EstimateRank {
        #[command(flatten)]
        data: DataArgs,
        /// CG iterations before estimating.
        #[arg(long, default_value_t = 15)]
        cg_iters: usize,
        /// Cap on the estimated increment per bond (one value or one per bond).
        #[arg(long, value_delimiter = ',', default_value = "7")]
        s_cap: Vec<usize>,
        /// Rows of the singular-value table per bond.
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Round random trains and compare their alignment with the lower bound.
    Angle {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,10,10,10")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,4,4")]
        r_prime: Vec<usize>,
        /// Target ranks of the rounding.
        #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
        r: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rank-adaptive completion, from generated data or from sample files.
    Complete {
        #[command(flatten)]
        data: DataArgs,
        /// Training samples; replaces the generated data.
        #[arg(long)]
        omega: Option<PathBuf>,
        /// Test samples used with `--omega`.
        #[arg(long, requires = "omega")]
        gamma: Option<PathBuf>,
        /// Key-value solver configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "rram")]
        method: Method,
        #[command(flatten)]
        out: OutArgs,
    },
    /// TT-round a stored train to fixed ranks or to its Δ-ranks.
    Round {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', conflicts_with = "delta", required_unless_present = "delta")]
        ranks: Option<Vec<usize>>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[arg(long, default_value = "synthetic")]
    kind: ExperimentKind,
    #[arg(long, value_delimiter = ',', default_value = "20,20,20,20")]
    dims: Vec<usize>,
    /// Ranks of the generated tensor.
    #[arg(long, value_delimiter = ',', default_value = "4,4,4")]
    r_prime: Vec<usize>,
    /// Ranks of the random starting point; rank one by default.
    #[arg(long, value_delimiter = ',')]
    r0: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.1)]
    rho_omega: f64,
    /// Size of the test set relative to the training set.
    #[arg(long, default_value_t = 0.25)]
    gamma_fraction: f64,
    /// Standard deviation of the additive noise.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl DataArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match self.kind {
            ExperimentKind::Exponential => {
                let n = self.dims[0];
                ExperimentSpec::exponential(n, self.dims.len(), self.rho_omega, self.seed)
            }
            _ => ExperimentSpec::synthetic(self.dims.clone(), self.r_prime.clone(), self.rho_omega, self.seed),
        };
        spec.dims = self.dims.clone();
        spec.gamma_fraction = self.gamma_fraction;
        if let Some(r0) = &self.r0 {
            spec.r0 = r0.clone();
        }
        if self.eta > 0.0 {
            if spec.kind == ExperimentKind::Exponential {
                return Err(TtError::InvalidArgument("noise applies to synthetic data only".into()));
            }
            spec = spec.with_noise(self.eta);
        } else if self.kind == ExperimentKind::SyntheticNoise {
            return Err(TtError::InvalidArgument("synthetic-noise needs --eta > 0".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn synth(data: &DataArgs, out: &OutArgs) -> Result<()> {
    let spec = data.spec()?;
    let prob = build_problem::<f64>(&spec)?;
    prepare(&out.out_dir)?;
    io::save_samples(&prob.omega, out.out_dir.join("omega.csv"))?;
    io::save_samples(&prob.gamma, out.out_dir.join("gamma.csv"))?;
    io::save_tt(&prob.x0, out.out_dir.join("x0.tt"))?;
    if let Some(truth) = &prob.truth {
        io::save_tt(truth, out.out_dir.join("truth.tt"))?;
    }
    fs::write(out.out_dir.join("manifest.txt"), spec.to_text())?;
    println!("wrote {} training and {} test samples to {}", prob.omega.len(), prob.gamma.len(), out.out_dir.display());
    Ok(())
}

fn estimate_rank(data: &DataArgs, cg_iters: usize, s_cap: &[usize], top: usize, out: &OutArgs) -> Result<()> {
    let spec = data.spec()?;
    let report = run_rank_estimation::<f64>(&spec, cg_iters, s_cap, true)?;
    prepare(&out.out_dir)?;
    fs::write(out.out_dir.join("report.csv"), report.to_csv(top))?;
    fs::write(out.out_dir.join("cg_trace.csv"), report.estimate.trace.to_csv())?;
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let manifest = format!("{}cg_iters = {cg_iters}\ns_cap = {}\nestimate = {}\n", spec.to_text(), join(s_cap), join(report.ranks()));
    fs::write(out.out_dir.join("manifest.txt"), manifest)?;
    println!("estimated ranks {:?} (gradient norm {:.3e})", report.ranks(), report.grad_norm);
    Ok(())
}

fn angle(trials: usize, dims: &[usize], r_prime: &[usize], r: &[usize], seed: u64, out: &OutArgs) -> Result<()> {
    let report = run_angle_experiment(trials, dims, r_prime, r, seed)?;
    prepare(&out.out_dir)?;
    fs::write(out.out_dir.join("angle.csv"), report.to_csv())?;
    let bound = report.trials.first().map_or(f64::NAN, |t| t.omega);
    println!(
        "min {:.4} median {:.4} max {:.4} bound {:.4}",
        report.min(),
        report.median(),
        report.max(),
        bound
    );
    Ok(())
}

fn load_config(path: Option<&Path>, seed: u64) -> Result<RramConfig<f64>> {
    let text = path.map(fs::read_to_string).transpose()?.unwrap_or_default();
    let mut cfg = RramConfig::parse(&text)?;
    // A seed in the file wins over the flag.
    if !text.lines().any(|l| l.trim_start().starts_with("seed")) {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn complete(
    data: &DataArgs,
    omega: Option<&Path>,
    gamma: Option<&Path>,
    config: Option<&Path>,
    method: Method,
    out: &OutArgs,
) -> Result<()> {
    let cfg = load_config(config, data.seed)?;
    let (prob, header) = match omega {
        Some(path) => {
            let om: SampleSet<f64> = io::load_samples(path)?;
            let ga = match gamma {
                Some(g) => io::load_samples(g)?,
                None => SampleSet::new(om.shape().to_vec(), Vec::new(), Vec::new())?,
            };
            let r0 = data.r0.clone().unwrap_or_else(|| vec![1; om.order() - 1]);
            let mut rng = tt_rram::experiments::rng_for(data.seed, Stream::Start);
            let x0 = TtTensor::random_normal(om.shape(), &r0, &mut rng)?;
            let header = format!("omega = {}\ngamma = {}\n", path.display(), gamma.map_or("-".into(), |g| g.display().to_string()));
            (tt_rram::experiments::Problem { omega: om, gamma: ga, dense: None, truth: None, x0 }, header)
        }
        None => {
            let spec = data.spec()?;
            (build_problem::<f64>(&spec)?, spec.to_text())
        }
    };
    let (x, trace) = run_completion(&prob, &cfg, method)?;
    let manifest = format!("{header}method = {method}\n{}", cfg.to_text());
    write_completion_artifacts(&out.out_dir, &x, &trace, &manifest)?;
    let last = trace.records.last().expect("every run records a stop");
    println!(
        "{}: ranks {:?}, relative cost {:.3e}, test cost {:.3e}, {} inner iterations",
        last.action,
        x.ranks(),
        last.f_omega_rel,
        last.f_gamma_rel,
        last.inner_iters_cum
    );
    Ok(())
}

fn round(input: &Path, ranks: Option<&[usize]>, delta: Option<f64>, output: &Path) -> Result<()> {
    let x: TtTensor<f64> = io::load_tt(input)?;
    let target = match (ranks, delta) {
        (Some(r), _) => r.to_vec(),
        (None, Some(d)) => delta_rank_tt(&x, d)?,
        (None, None) => unreachable!("clap requires one of --ranks and --delta"),
    };
    let y = x.round(&target)?;
    io::save_tt(&y, output)?;
    println!("ranks {:?} -> {:?}", x.ranks(), y.ranks());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { data, out } => synth(&data, &out),
        Command::EstimateRank { data, cg_iters, s_cap, top, out } => estimate_rank(&data, cg_iters, &s_cap, top, &out),
        Command::Angle { trials, dims, r_prime, r, seed, out } => angle(trials, &dims, &r_prime, &r, seed, &out),
        Command::Complete { data, omega, gamma, config, method, out } => {
            complete(&data, omega.as_deref(), gamma.as_deref(), config.as_deref(), method, &out)
        }
        Command::Round { input, ranks, delta, output } => round(&input, ranks.as_deref(), delta, &output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

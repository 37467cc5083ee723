mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use declab::dec::{dec_dual_lp, dec_lp, igw, posterior_sampling_certificate};
use declab::e2d::{run_experiment, RegretTrace, TraceSummary};
use declab::families::{
    family_dual_value, family_lower_bound, make_family, verify_family, FamilyReport, FamilySpec, VerifyOptions,
};
use declab::mdp::{pcigw, Policy, TabularMdp};
use declab::{DivergenceKind, ModelClass};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{emit, json_bytes, trace_csv, write_atomic};

#[derive(Parser)]
#[command(name = "declab", version, about = "Decision-estimation coefficients, E2D runs and hard-instance families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a DEC value and its witness for a model class file.
    Dec {
        #[arg(long)]
        class: PathBuf,
        /// Index of the reference model within the class.
        #[arg(long = "ref")]
        reference: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value = "hellinger")]
        divergence: DivergenceKind,
        #[arg(long, value_enum, default_value_t = DecMethod::Lp)]
        method: DecMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one E2D experiment and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inverse-gap-weighted policy cover of a tabular MDP file.
    Pcigw {
        #[arg(long)]
        mdp: PathBuf,
        /// Defaults to gamma / (21 H^2) when only --gamma is given.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Mix kernels and the initial law with uniform at this weight first.
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a hard-instance family and report its lower bound.
    Family(FamilyArgs),
    /// Run independent seeds of one experiment in parallel (DECLAB_THREADS caps workers).
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DecMethod {
    Lp,
    Dual,
    Igw,
    Posterior,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Mab,
    Linear,
    Lipschitz,
    Relu,
    GapMab,
    GapLinear,
    Tree,
    LinearQstar,
}

#[derive(clap::Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    kind: FamilyKind,
    /// Number of actions.
    #[arg(long = "A")]
    actions: Option<usize>,
    /// Number of states (tree).
    #[arg(long = "S")]
    states: Option<usize>,
    /// Horizon (tree, linear_qstar).
    #[arg(long = "H")]
    horizon: Option<usize>,
    /// Dimension (linear, relu, gap_linear, linear_qstar).
    #[arg(long = "d")]
    dim: Option<usize>,
    /// Gap or bump height of the construction.
    #[arg(long)]
    delta: f64,
    /// Grid resolution on [0,1] for the lipschitz family.
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// Number of near-orthogonal vectors (linear_qstar).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Check the family conditions numerically.
    #[arg(long)]
    verify: bool,
    /// Random policies checked for MDP families.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn need(v: Option<usize>, flag: &str, kind: &str) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::schema("invalid_params", format!("--{flag} is required for --kind {kind}")))
}

impl FamilyArgs {
    fn spec(&self) -> Result<FamilySpec, CliError> {
        let gap = self.delta;
        Ok(match self.kind {
            FamilyKind::Mab => FamilySpec::Mab { actions: need(self.actions, "A", "mab")?, gap },
            FamilyKind::GapMab => FamilySpec::GapMab { actions: need(self.actions, "A", "gap-mab")?, gap },
            FamilyKind::Linear => {
                FamilySpec::Linear { dim: need(self.dim, "d", "linear")?, gap, decisions: None, seed: self.seed }
            }
            FamilyKind::Relu => FamilySpec::Relu { dim: need(self.dim, "d", "relu")?, eps: gap, decisions: None, seed: self.seed },
            FamilyKind::GapLinear => FamilySpec::GapLinear { dim: need(self.dim, "d", "gap-linear")?, gap },
            FamilyKind::Lipschitz => {
                if self.grid < 2 {
                    return Err(CliError::schema("invalid_params", "--grid must be at least 2"));
                }
                let points = (0..self.grid).map(|i| vec![i as f64 / (self.grid - 1) as f64]).collect();
                FamilySpec::Lipschitz { points, eps: gap }
            }
            FamilyKind::Tree => FamilySpec::Tree {
                states: need(self.states, "S", "tree")?,
                actions: need(self.actions, "A", "tree")?,
                horizon: need(self.horizon, "H", "tree")?,
                gap,
            },
            FamilyKind::LinearQstar => FamilySpec::LinearQStar {
                dim: need(self.dim, "d", "linear-qstar")?,
                horizon: need(self.horizon, "H", "linear-qstar")?,
                gap,
                m: self.m,
                seed: self.seed,
            },
        })
    }
}

#[derive(Serialize)]
struct DecOutput {
    value: f64,
    /// Decision distribution, or the prior for the dual method.
    p: Vec<f64>,
    method: String,
    gamma: f64,
    divergence: DivergenceKind,
}

#[derive(Serialize)]
struct PcigwOutput {
    lambda: f64,
    eta: f64,
    policies: Vec<Policy>,
    weights: Vec<f64>,
    gaps: Vec<f64>,
    greedy: usize,
}

#[derive(Serialize)]
struct FamilyOutput {
    kind: String,
    n: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    gamma: f64,
    lower_bound: f64,
    dual_lp_value: Option<f64>,
    passes: Option<bool>,
    report: Option<FamilyReport>,
}

#[derive(Serialize)]
struct BenchOutput {
    runs: usize,
    threads: usize,
    mean_cum_regret: f64,
    stderr_cum_regret: f64,
    mean_est_h: f64,
    mean_bound_rhs: f64,
    summaries: Vec<TraceSummary>,
}

fn cmd_dec(
    class_path: &Path,
    reference: usize,
    gamma: f64,
    divergence: DivergenceKind,
    method: DecMethod,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let class: ModelClass = config::read_json(class_path)?;
    if reference >= class.len() {
        return Err(CliError::schema(
            "index_out_of_range",
            format!("reference {reference} out of range for {} models", class.len()),
        ));
    }
    let refm = class.model(reference).clone();
    let (value, p, method_name) = match method {
        DecMethod::Lp => {
            let c = dec_lp(&class, &refm, gamma, divergence)?;
            (c.value, c.witness, "LP")
        }
        DecMethod::Dual => {
            let w = dec_dual_lp(&class, &refm, gamma, divergence)?;
            (w.value, w.prior, "DualLP")
        }
        DecMethod::Igw => {
            let c = igw(refm.means(), gamma)?;
            (c.value, c.witness, "IGW")
        }
        DecMethod::Posterior => {
            let prior = vec![1.0 / class.len() as f64; class.len()];
            let c = posterior_sampling_certificate(&class, &prior, &refm, gamma, divergence)?;
            (c.value, c.witness, "PosteriorSampling")
        }
    };
    emit(&DecOutput { value, p, method: method_name.into(), gamma, divergence }, out)
}

fn write_run(dir: &Path, trace: &RegretTrace, name: &str) -> Result<(), CliError> {
    write_atomic(&dir.join(name), &trace_csv(&trace.records))
}

fn cmd_run(config: &Path, out: &Path) -> Result<(), CliError> {
    let run = config::load_run(config)?;
    let trace = run_experiment(&run.class, run.truth, &run.experiment)?;
    write_run(out, &trace, "trace.csv")?;
    write_atomic(&out.join("summary.json"), &json_bytes(&trace.summary))?;
    emit(&trace.summary, None)
}

fn cmd_pcigw(
    path: &Path,
    eta: Option<f64>,
    gamma: Option<f64>,
    floor: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let m: TabularMdp = config::read_json(path)?;
    let h = m.horizon() as f64;
    let eta = match (eta, gamma) {
        (Some(e), _) => e,
        (None, Some(g)) => g / (21.0 * h * h),
        (None, None) => return Err(CliError::schema("invalid_params", "one of --eta or --gamma is required")),
    };
    let cover = pcigw(&m, eta, floor)?;
    emit(
        &PcigwOutput {
            lambda: cover.lambda,
            eta: cover.eta,
            policies: cover.policies,
            weights: cover.weights,
            gaps: cover.gaps,
            greedy: cover.greedy,
        },
        out,
    )
}

fn cmd_family(args: &FamilyArgs) -> Result<(), CliError> {
    if !(args.gamma >= 0.0 && args.gamma.is_finite()) {
        return Err(CliError::schema("invalid_params", "--gamma must be nonnegative"));
    }
    let spec = args.spec()?;
    let f = make_family(&spec)?;
    let report = if args.verify {
        Some(verify_family(&f, &VerifyOptions { sampled_policies: args.samples, seed: args.seed, ..Default::default() })?)
    } else {
        None
    };
    let dual_lp_value = if args.gamma > 0.0 { family_dual_value(&f, args.gamma)? } else { None };
    emit(
        &FamilyOutput {
            kind: spec.kind_name().into(),
            n: f.size(),
            alpha: f.alpha,
            beta: f.beta,
            delta: f.delta,
            gamma: args.gamma,
            lower_bound: family_lower_bound(&f, args.gamma),
            dual_lp_value,
            passes: report.as_ref().map(|r| r.passes),
            report,
        },
        args.out.as_deref(),
    )
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("DECLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::schema("invalid_params", format!("DECLAB_THREADS must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_bench(config: &Path, out: &Path) -> Result<(), CliError> {
    let bench = config::load_bench(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::schema("threads", e.to_string()))?;
    let run = &bench.run;
    let traces: Vec<RegretTrace> = pool.install(|| {
        (0..bench.runs)
            .into_par_iter()
            .map(|i| {
                let mut cfg = run.experiment.clone();
                cfg.run = run.experiment.run + i as u64;
                run_experiment(&run.class, run.truth, &cfg)
            })
            .collect::<declab::Result<Vec<_>>>()
    })?;
    if bench.write_traces {
        for (i, t) in traces.iter().enumerate() {
            write_run(out, t, &format!("trace_run{i}.csv"))?;
        }
    }
    let n = traces.len() as f64;
    let regrets: Vec<f64> = traces.iter().map(|t| t.summary.cum_regret).collect();
    let mean = regrets.iter().sum::<f64>() / n;
    let var = if traces.len() > 1 { regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let output = BenchOutput {
        runs: traces.len(),
        threads: pool.current_num_threads(),
        mean_cum_regret: mean,
        stderr_cum_regret: (var / n).sqrt(),
        mean_est_h: traces.iter().map(|t| t.summary.est_h).sum::<f64>() / n,
        mean_bound_rhs: traces.iter().map(|t| t.summary.bound_rhs).sum::<f64>() / n,
        summaries: traces.into_iter().map(|t| t.summary).collect(),
    };
    write_atomic(&out.join("bench.json"), &json_bytes(&output))?;
    emit(&output, None)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Dec { class, reference, gamma, divergence, method, out } => {
            cmd_dec(&class, reference, gamma, divergence, method, out.as_deref())
        }
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Pcigw { mdp, eta, gamma, floor, out } => cmd_pcigw(&mdp, eta, gamma, floor, out.as_deref()),
        Command::Family(args) => cmd_family(&args),
        Command::Bench { config, out } => cmd_bench(&config, &out),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let err = CliError::schema("usage", e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}

//! `aftgl`: fit, select, summarize and simulate Bayesian log-normal AFT
//! models with group lasso shrinkage.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aftgl::data::load_dataset;
use aftgl::gradcheck::{run_gradcheck, GradcheckConfig, GRADCHECK_TOL};
use aftgl::pipeline::{fit_to_dir, read_profiles, select_dir, simulate_to_dir, summarize_dir};
use aftgl::sim::BenchConfig;
use clap::{Args, Parser, Subcommand};

use config::{resolve, Overrides};

const FORMATS: &str = "\
File formats:
  data CSV      header c0,cL,cU followed by covariate columns. Columns listed in
                the group file are penalized covariates; every other column must
                start with `z` and is an unpenalized confounder. An empty cU or
                `inf` marks a right-censored row; cL = cU is an exact event time.
  group CSV     header column,group; one row per penalized covariate.
  chain_<k>.csv one row per retained draw: covariate-scale coefficients, z columns,
                mu, sigma2, tau2_<group>, lambda2.
  summary.csv   parameter,kind,median,mean,sd,q025,q975,snc
  manifest.json resolved configuration, seeds, acceptance rates, PSRF/ESS table.
  candidates.csv  kappa range, support size, refit log-likelihood, criterion.
  final_model.json  selected covariates, estimates and SNC values.
  scenario spec key = value lines: n, p, q, scenario (1-4), reps, seed, blocks,
                block_size, beta_star, gamma, event_rate_low, event_rate_high,
                entry_max, visit_interval, iters, chains, burn_frac, thin,
                mcem_interval, grid, workers, models, v2.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.";

#[derive(Parser)]
#[command(name = "aftgl", version, about = "Bayesian log-normal AFT regression with group lasso priors", after_long_help = FORMATS)]
struct Cli {
    /// Base random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for chains and replications (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// TOML configuration file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the MCMC sampler and write draws, summary and manifest
    Fit(FitArgs),
    /// SNC-BIC variable selection on a fit directory
    Select(SelectArgs),
    /// Run a simulation study from a scenario spec
    Simulate(SimulateArgs),
    /// Acceleration factors, quantile table and convergence diagnostics
    Summarize(SummarizeArgs),
    /// Finite-difference check of the HMC gradients
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Iterations per chain
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_frac: Option<f64>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    mcem_interval: Option<usize>,
    /// Prior variance of the unpenalized coefficients
    #[arg(long)]
    v2: Option<f64>,
    /// `group` or `ordinary` (every covariate in its own group)
    #[arg(long)]
    prior: Option<String>,
}

#[derive(Args)]
struct SelectArgs {
    /// Directory written by `fit`
    #[arg(long)]
    dir: PathBuf,
    /// Number of SNC thresholds
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the first replication's dataset without fitting
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    dir: PathBuf,
    /// CSV of covariate profiles (header: covariate names, optional `profile`)
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    states: usize,
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] aftgl::Error),
    #[error("config file {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("gradient check failed: max relative error {worst:.3e} exceeds {tol:e}")]
    GradientMismatch { worst: f64, tol: f64 },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use aftgl::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::GradientMismatch { .. } => 1,
            CliError::Core(e) => match e {
                E::Io { .. }
                | E::Schema { .. }
                | E::InvalidData(_)
                | E::InvalidParameter(_)
                | E::Dimension { .. }
                | E::RankDeficient { .. }
                | E::EmptyInterval { .. } => 2,
                E::ChainAbort { .. } | E::NoConvergence { .. } | E::Other(_) => 1,
            },
        }
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(aftgl::Error::Io { path: path.to_path_buf(), source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found") }.into())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = Overrides { seed: cli.seed, workers: cli.workers, ..Default::default() };
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::Fit(a) => {
            require_file(&a.data)?;
            require_file(&a.groups)?;
            let o = Overrides {
                iters: a.iters,
                chains: a.chains,
                burn_frac: a.burn_frac,
                thin: a.thin,
                mcem_interval: a.mcem_interval,
                v2: a.v2,
                prior_kind: a.prior,
                ..base
            };
            let rc = resolve(cfg_path, &o)?;
            let d = load_dataset::<f64>(&a.data, &a.groups)?;
            let run = fit_to_dir(&d, &a.out, &rc.prior, &rc.sampler, rc.prior_kind)?;
            println!(
                "fit: {} chains x {} draws written to {} (max PSRF {}, {:.1}s)",
                run.chains.len(),
                run.chains.first().map_or(0, |c| c.n_draws()),
                a.out.display(),
                run.convergence.max_psrf().map_or("NA".into(), |v| format!("{v:.3}")),
                run.seconds
            );
        }
        Command::Select(a) => {
            let rc = resolve(cfg_path, &Overrides { grid: a.grid, ..base })?;
            let sel = select_dir(&a.dir, rc.grid)?;
            println!(
                "select: {} candidates, chose {} covariate(s): {}",
                sel.candidates.len(),
                sel.selected.len(),
                if sel.selected_names.is_empty() { "(none)".into() } else { sel.selected_names.join(", ") }
            );
        }
        Command::Simulate(a) => {
            let text = std::fs::read_to_string(&a.spec)
                .map_err(|e| aftgl::Error::Io { path: a.spec.clone(), source: e })?;
            let mut bench = BenchConfig::parse(&text)?;
            if let Some(s) = cli.seed {
                bench.spec.seed = s;
            }
            if let Some(w) = cli.workers {
                bench.workers = w;
            }
            match simulate_to_dir(&bench, &a.out, a.dry_run)? {
                None => println!("simulate: dataset written to {}", a.out.display()),
                Some(res) => {
                    for row in &res.aggregate {
                        println!(
                            "{:>8}: l2 {:.2} ({:.2})  TPR {:.1}  FPR {:.1}  selected {:.1}  [{} ok, {} failed]",
                            row.model.name(),
                            row.l2_error.mean,
                            row.l2_error.sd,
                            row.tpr.mean,
                            row.fpr.mean,
                            row.n_selected.mean,
                            row.n_ok,
                            row.n_failed
                        );
                    }
                }
            }
        }
        Command::Summarize(a) => {
            let profiles = match &a.profiles {
                Some(p) => read_profiles(p)?,
                None => Vec::new(),
            };
            let out = summarize_dir(&a.dir, &profiles)?;
            println!(
                "summarize: {} coefficient(s), {} profile(s) written to {}",
                out.estimates.coef.len(),
                out.quantiles.len(),
                a.dir.display()
            );
        }
        Command::Gradcheck(a) => {
            let rc = resolve(cfg_path, &base)?;
            let report = run_gradcheck(&GradcheckConfig { states: a.states, seed: rc.sampler.seed, flip_sign: a.inject_sign_flip })?;
            println!(
                "gradcheck: {} states, max relative error beta {:.3e}, gamma {:.3e}",
                report.states, report.max_rel_error_beta, report.max_rel_error_gamma
            );
            if !report.passed {
                return Err(CliError::GradientMismatch {
                    worst: report.max_rel_error_beta.max(report.max_rel_error_gamma),
                    tol: GRADCHECK_TOL,
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

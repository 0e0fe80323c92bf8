//! `hankel`: batch front end for the sigma-function toolkit.
//!
//! Exit codes: 0 success, 2 bad input or violated precondition, 3 a
//! numerical check outside tolerance.

mod report;
mod run;
mod spec;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hankel_core::form::WitnessKind;
use hankel_core::galerkin::{TrialKind, DEFAULT_EPS, MAX_ROUNDS};
use hankel_core::sigma::DEFAULT_INERTIA_TOL;

use report::{csv_err, csv_writer, write_sections_csv, Clock, Report};
use run::{CertificateArgs, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hankel_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hankel", version, about = "Negative spectra of quasi-Carleman Hankel operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Kernel spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Finite-section sizes, increasing.
    #[arg(long, global = true, value_delimiter = ',', default_value = "16,32,64,128")]
    sizes: Vec<usize>,
    /// Tolerance for residual checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Relative threshold below which eigenvalues count as zero.
    #[arg(long, global = true, default_value_t = DEFAULT_INERTIA_TOL)]
    inertia_tol: f64,
    /// Seed for the random test-function draws.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Tabulate σ(λ): density on a log grid, singular parts symbolically.
    Sigma {
        #[arg(long, default_value_t = 1e-3)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1e3)]
        lambda_max: f64,
        #[arg(long, default_value_t = 257)]
        points: usize,
    },
    /// Closed-form N₋ and N₊.
    Predict,
    /// Numerical checks of the identity, the sections, the Mellin factorization, or spectral witnesses.
    Verify {
        #[arg(value_enum)]
        mode: VerifyMode,
        /// Random test functions per residual check.
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = WitnessArg::Zero)]
        witness: WitnessArg,
        /// Number of indicators `1_(n, n+1)` for the zero witness.
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Scales `l` of `1_(l^-2, l^-1)` for the unboundedness witness.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        ls: Vec<f64>,
    },
    /// Variational lower bound on N₋ from a trial span.
    Certificate {
        /// Required negative directions (default: the predicted N₋).
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Auto)]
        kind: KindArg,
        #[arg(long, default_value_t = MAX_ROUNDS)]
        rounds: usize,
    },
    /// Run a batch of cases from a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VerifyMode {
    Identity,
    Galerkin,
    Factorization,
    Witness,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WitnessArg {
    Zero,
    Unbounded,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Auto,
    Gaussian,
    Window,
    Interpolation,
}

fn spec_path(cli: &Cli) -> Result<&Path, CliError> {
    cli.spec.as_deref().ok_or_else(|| CliError::Validation("--spec is required for this command".into()))
}

fn mkdir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let settings = Settings { sizes: cli.sizes.clone(), tol: cli.tol, inertia_tol: cli.inertia_tol, seed: cli.seed };
    if let Cmd::Sweep { config, samples } = &cli.cmd {
        return sweep::sweep(config, &cli.out, &settings, *samples);
    }
    let node = spec::read_spec(spec_path(cli)?)?.kernel;
    mkdir(&cli.out)?;
    let clock = Clock::start();
    let (name, result) = match &cli.cmd {
        Cmd::Sigma { lambda_min, lambda_max, points } => {
            let rows = run::sigma_rows(&node, *lambda_min, *lambda_max, *points)?;
            let path = cli.out.join("sigma.csv");
            let mut w = csv_writer(&path)?;
            for r in &rows {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            println!("{}: {} rows", path.display(), rows.len());
            return Ok(0);
        }
        Cmd::Predict => ("predict", run::predict(&node, &settings)),
        Cmd::Verify { mode, samples, witness, count, ls } => match mode {
            VerifyMode::Identity => ("verify-identity", run::identity(&node, &settings, *samples)),
            VerifyMode::Factorization => ("verify-factorization", run::factorization(&node, &settings, *samples)),
            VerifyMode::Galerkin => ("verify-galerkin", run::galerkin(&node, &settings)),
            VerifyMode::Witness => {
                let kind = match witness {
                    WitnessArg::Zero => WitnessKind::ZeroInSpectrum { count: *count },
                    WitnessArg::Unbounded => WitnessKind::Unbounded { ls: ls.clone() },
                };
                ("verify-witness", run::witness(&node, &settings, kind))
            }
        },
        Cmd::Certificate { target, eps, kind, rounds } => {
            let kind = match kind {
                KindArg::Auto => None,
                KindArg::Gaussian => Some(TrialKind::GaussianFamily),
                KindArg::Window => Some(TrialKind::PolynomialWindow),
                KindArg::Interpolation => Some(TrialKind::Interpolation),
            };
            let args = CertificateArgs { target: *target, eps: *eps, kind, rounds: *rounds };
            ("certificate", run::certificate(&node, &settings, &args))
        }
        Cmd::Sweep { .. } => unreachable!(),
    };
    let mut report = match result {
        Ok(r) => r,
        // numerical failures still leave a report behind
        Err(e) if e.exit_code() == 3 => Report::failed(&name.replace('-', " "), cli.seed, node, &e),
        Err(e) => return Err(e),
    };
    report.timing = clock.timing();
    let path = cli.out.join(format!("{name}.json"));
    report.write(&path)?;
    if let Some(sec) = &report.sections {
        write_sections_csv(&cli.out.join("sections.csv"), &sec.study)?;
    }
    println!("{}: {:?}", path.display(), report.status);
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HS_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockdiag::commands::{self, Amplitude, DiracParams, Options, Outcome, EXIT_INPUT};
use blockdiag::dirac::Profile;
use blockdiag::fixtures::random_case;
use blockdiag::io::{PairFile, ProblemFile};
use blockdiag::{Complex64, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Block diagonalization of 2x2 block matrices by invariant graph subspaces.
#[derive(Parser, Debug)]
#[command(name = "blockdiag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Relative tolerance for pass/fail decisions.
    #[arg(long, env = "BLOCKDIAG_DEFAULT_TOL", default_value_t = blockdiag::DEFAULT_TOL, global = true)]
    tol: f64,

    /// Spectral split point; overrides the value stored in the input.
    #[arg(long, allow_hyphen_values = true, global = true)]
    mu: Option<f64>,

    /// Spectral parameter as `re,im`; repeatable.
    #[arg(long = "lambda", value_parser = parse_complex, allow_hyphen_values = true, global = true)]
    lambdas: Vec<Complex64>,

    /// Seed for sampled resolvent points and random problems.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write columnar data files into this directory.
    #[arg(long, global = true)]
    emit_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// Problem JSON file.
    input: PathBuf,

    /// Angular pair JSON file to verify instead of the computed one.
    #[arg(long)]
    pair: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify an angular pair and every identity it implies.
    Check {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Block diagonalize by (I - Y) and (I + Y).
    Diagonalize {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Block triangularize by the graph of X0.
    Triangularize {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the Riccati equation for X0 by Newton's method.
    RiccatiSolve {
        /// Problem JSON file.
        input: PathBuf,
        /// Pair file whose X0 is the initial iterate.
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the subordinated-spectra pipeline.
    Subordinated {
        /// Problem JSON file.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Neumann-series certificates at the given --lambda values.
    Neumann {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the relative bound of V with respect to A.
    Relbound {
        /// Problem JSON file.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Two-dimensional Dirac operator with a scalar impurity.
    Dirac {
        /// Grid points per axis.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Box side length.
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        length: f64,
        /// Absolute impurity amplitude.
        #[arg(long, conflicts_with = "amplitude_kmin", allow_hyphen_values = true)]
        amplitude: Option<f64>,
        /// Impurity amplitude in units of the smallest grid momentum.
        #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
        amplitude_kmin: f64,
        #[arg(long, value_enum, default_value_t = ProfileArg::Disk)]
        profile: ProfileArg,
        /// Impurity radius; defaults to length/8.
        #[arg(long)]
        radius: Option<f64>,
        /// Impurity center as `x,y`; defaults to the box center.
        #[arg(long, value_parser = parse_pair)]
        center: Option<(f64, f64)>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a random Hermitian problem with subordinated diagonal spectra.
    Random {
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        n1: usize,
        /// Spectral gap between the diagonal blocks.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Operator norm of the coupling.
        #[arg(long, default_value_t = 0.5)]
        coupling: f64,
        /// Dimension of a kernel planted at 0 (requires --gap 0).
        #[arg(long, default_value_t = 0)]
        kernel_dim: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Disk,
    Gaussian,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = parse_pair(s)?;
    Ok(Complex64::new(re, im))
}

fn read_problem(path: &Path) -> Result<ProblemFile> {
    ProblemFile::parse(&fs::read_to_string(path)?)
}

fn read_pair(path: Option<&PathBuf>) -> Result<Option<PairFile>> {
    path.map(|p| PairFile::parse(&fs::read_to_string(p)?)).transpose()
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so readers never observe a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => print_stdout(contents),
    }
}

/// Prints a line to stdout; a closed pipe is not an error.
fn print_stdout(contents: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{contents}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn options(c: &Common) -> Result<Options> {
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(Error::Contract(format!("tolerance must be positive, got {}", c.tol)));
    }
    Ok(Options { tol: c.tol, mu: c.mu, lambdas: c.lambdas.clone(), seed: c.seed, emit_data: c.emit_data.is_some() })
}

fn finish(outcome: Outcome, common: &Common) -> Result<i32> {
    if let Some(dir) = &common.emit_data {
        fs::create_dir_all(dir)?;
        for f in &outcome.data {
            write_atomic(&dir.join(&f.name), &f.contents)?;
        }
    }
    emit(common.out.as_deref(), &outcome.report.to_json())?;
    Ok(outcome.report.exit_code)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check { problem, common } => {
            let (file, pair) = (read_problem(&problem.input)?, read_pair(problem.pair.as_ref())?);
            finish(commands::check(&file, pair.as_ref(), &options(&common)?)?, &common)
        }
        Command::Diagonalize { problem, common } => {
            let (file, pair) = (read_problem(&problem.input)?, read_pair(problem.pair.as_ref())?);
            finish(commands::diagonalize(&file, pair.as_ref(), &options(&common)?)?, &common)
        }
        Command::Triangularize { problem, common } => {
            let (file, pair) = (read_problem(&problem.input)?, read_pair(problem.pair.as_ref())?);
            finish(commands::triangularize(&file, pair.as_ref(), &options(&common)?)?, &common)
        }
        Command::RiccatiSolve { input, init, common } => {
            let (file, init) = (read_problem(&input)?, read_pair(init.as_ref())?);
            finish(commands::riccati_solve(&file, init.as_ref(), &options(&common)?)?, &common)
        }
        Command::Subordinated { input, common } => {
            finish(commands::subordinated(&read_problem(&input)?, &options(&common)?)?, &common)
        }
        Command::Neumann { problem, common } => {
            let (file, pair) = (read_problem(&problem.input)?, read_pair(problem.pair.as_ref())?);
            finish(commands::neumann(&file, pair.as_ref(), &options(&common)?)?, &common)
        }
        Command::Relbound { input, common } => {
            finish(commands::relbound(&read_problem(&input)?, &options(&common)?)?, &common)
        }
        Command::Dirac { n, length, amplitude, amplitude_kmin, profile, radius, center, common } => {
            let params = DiracParams {
                n,
                length,
                amplitude: amplitude.map_or(Amplitude::KMin(amplitude_kmin), Amplitude::Absolute),
                profile: match profile {
                    ProfileArg::Disk => Profile::Disk,
                    ProfileArg::Gaussian => Profile::Gaussian,
                },
                radius,
                center,
            };
            finish(commands::dirac(&params, &options(&common)?)?, &common)
        }
        Command::Random { n0, n1, gap, coupling, kernel_dim, common } => {
            let file = random_case(n0, n1, gap, coupling, common.seed, kernel_dim)?;
            emit(common.out.as_deref(), &file.to_json())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let err = Error::Parse(text.trim().trim_start_matches("error: ").to_string());
            let _ = print_stdout(&commands::error_json(&err));
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let _ = print_stdout(&commands::error_json(&e));
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}

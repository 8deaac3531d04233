//! `decode-sim`: Monte Carlo logical error rate experiments for CSS codes.
//!
//! Exit codes: 0 on success, 1 for invalid configuration, 2 for I/O errors.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qldpc::code::{self, CodeError, CssCode};
use qldpc::sim::{self, SimError};

use config::{RankHistArgs, RunArgs};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        SimError::from(e).into()
    }
}

#[derive(Debug, Parser)]
#[command(name = "decode-sim", version, about = "Logical error rate simulations for qLDPC decoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep depolarizing probabilities and record logical error rates
    Run {
        /// JSON file with the same keys as the flags; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Histogram of split-check reliability ranks over failing decodes
    RankHist {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: RankHistArgs,
    },
    /// Tabulate every CSV result in a directory
    Report {
        dir: PathBuf,
    },
    /// Print code parameters and check-matrix statistics
    Info {
        #[arg(long)]
        code: String,
    },
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(t) => Ok(sim::with_threads(t, f)?),
        None => Ok(f()),
    }
}

fn load(reference: &str) -> Result<CssCode, CliError> {
    Ok(code::load_code_ref(reference)?)
}

fn run(config: Option<PathBuf>, cli: RunArgs) -> Result<(), CliError> {
    let mut args = match &config {
        Some(path) => {
            let mut a: RunArgs = config::read_config(path, config::RUN_KEYS)?;
            config::rebase_code(&mut a.code, &base_dir(path));
            config::rebase_out(&mut a.out, &base_dir(path));
            a
        }
        None => RunArgs::default(),
    };
    args.overlay(&cli);
    let spec = args.build()?;
    let code = load(&spec.code)?;
    let result = in_pool(args.threads, || sim::run_experiment_on(&code, &spec))??;
    match &args.out {
        Some(dir) => {
            let csv = result.write(dir)?;
            print!("{}", sim::ler_table(&result.csv_rows()));
            eprintln!("wrote {}", csv.display());
        }
        None => print!("{}", result.to_csv()),
    }
    Ok(())
}

fn rank_hist(config: Option<PathBuf>, cli: RankHistArgs) -> Result<(), CliError> {
    let mut args = match &config {
        Some(path) => {
            let mut a: RankHistArgs = config::read_config(path, config::RANK_HIST_KEYS)?;
            config::rebase_code(&mut a.code, &base_dir(path));
            config::rebase_out(&mut a.out, &base_dir(path));
            a
        }
        None => RankHistArgs::default(),
    };
    args.overlay(&cli);
    let reference = args.code.clone().ok_or_else(|| CliError::Config("--code is required".into()))?;
    let p = args.p.ok_or_else(|| CliError::Config("--p is required".into()))?;
    let trials = args.trials.ok_or_else(|| CliError::Config("--trials is required".into()))?;
    let decoder = args.decoder.build()?;
    let code = load(&reference)?;
    let seed = args.seed.unwrap_or(0);
    let hist = in_pool(args.threads, || sim::rank_histogram_experiment(&code, p, &decoder, trials, seed))??;
    let json = serde_json::to_string_pretty(&hist).expect("histogram serializes") + "\n";
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{}_rankhist_p{p}.json", hist.code.replace(['/', '#', ' '], "_")));
            std::fs::write(&path, &json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{json}"),
    }
    println!(
        "{} failing of {} trials; mass below rank 40: {:.3}",
        hist.failing_trials,
        hist.total_trials,
        hist.mass_below(40)
    );
    for (i, count) in hist.bins.iter().enumerate().filter(|(_, c)| **c > 0) {
        println!("{:>5}-{:<5} {count}", i * hist.bin_width, (i + 1) * hist.bin_width - 1);
    }
    Ok(())
}

fn info(reference: &str) -> Result<(), CliError> {
    let code = load(reference)?;
    let report = code::code_report(&code);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run { config, args } => run(config, args),
        Command::RankHist { config, args } => rank_hist(config, args),
        Command::Report { dir } => sim::report_dir(&dir).map(|t| print!("{t}")).map_err(CliError::from),
        Command::Info { code } => info(&code),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("decode-sim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

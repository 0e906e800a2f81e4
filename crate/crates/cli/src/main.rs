use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
#[path = "../../core/tests/acceptance/criteria.rs"]
mod criteria;

#[derive(Parser, Debug)]
#[command(
    name = "qhel",
    version,
    about = "Helicity diagnostics for periodic and tube magnetic fields"
)]
pub struct Cli {
    /// key=value file; explicit flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Construct a field and write its snapshot
    Field(FieldArgs),
    /// Trace field lines and dump trajectories
    Trace(TraceArgs),
    /// Compute the invariant report and check the inequality chain
    Invariants(InvariantArgs),
    /// Evolve under the resistive α-effect induction equation
    Evolve(EvolveArgs),
    /// Shell spectra and slope fits
    Spectra(SpectraArgs),
    /// Run the acceptance battery
    Check,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum FieldKind {
    Abc,
    Wave,
    Powerlaw,
    Tube,
    TwoTubes,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum ProfileArg {
    Bump,
    Uniform,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct FieldArgs {
    pub kind: FieldKind,
    /// ABC amplitudes A B C
    #[arg(num_args = 0..=3)]
    pub amplitudes: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    #[arg(long, default_value_t = 1)]
    pub k: i32,
    #[arg(long, default_value_t = 5.0 / 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_plus: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma_minus: f64,
    #[arg(long, default_value_t = 16)]
    pub kmax: i32,
    /// Major radius
    #[arg(long = "R", default_value_t = 1.0)]
    pub major_radius: f64,
    /// Minor radius
    #[arg(long = "a", default_value_t = 0.25)]
    pub minor_radius: f64,
    #[arg(long, default_value_t = 3)]
    pub kappa: i32,
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
    /// Flux of the second tube
    #[arg(long, default_value_t = 1.0)]
    pub phi2: f64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Bump)]
    pub profile: ProfileArg,
    /// Grid size for tube snapshots
    #[arg(long = "N", default_value_t = 128)]
    pub n: usize,
    /// File name inside the output directory
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub seeds: usize,
    #[arg(long = "T", default_value_t = 100.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-11)]
    pub atol: f64,
}

#[derive(Args, Debug)]
pub struct InvariantArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub seeds: usize,
    /// Time ladder for the line averages
    #[arg(long = "T", value_delimiter = ',', default_value = "250,500,1000")]
    pub ladder: Vec<f64>,
    /// Seed pairs for the pairwise quantities of tube fields
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Pair cutoff distance (default: grid spacing)
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Steps between recorded snapshots
    #[arg(long, default_value_t = 10)]
    pub snapshot_every: usize,
    /// Spectral snapshot of a frozen velocity
    #[arg(long)]
    pub velocity: Option<PathBuf>,
    /// Truncation |k_i| ≤ kmax when advecting
    #[arg(long)]
    pub kmax: Option<i32>,
}

#[derive(Args, Debug)]
pub struct SpectraArgs {
    pub snapshot: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "energy_sq,helicity_sq,delta2"
    )]
    pub quantities: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub fit_min: usize,
    /// Upper fit shell (default: half the largest wave number)
    #[arg(long)]
    pub fit_max: Option<usize>,
    /// Also write two-column `k value` files
    #[arg(long)]
    pub gnuplot: bool,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad parameters or unreadable input (exit 2).
    Usage(String),
    /// An inequality or acceptance check failed (exit 1).
    Check(String),
}

impl From<qhel::Error> for Failure {
    fn from(e: qhel::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Resolved configuration, sorted; thread count and verbosity do not affect outputs.
fn resolved(matches: &ArgMatches) -> Vec<(String, String)> {
    let cmd = Cli::command();
    let mut args: Vec<String> = cmd
        .get_arguments()
        .map(|a| a.get_id().to_string())
        .collect();
    for sub in cmd.get_subcommands() {
        args.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
    }
    let mut out = Vec::new();
    let mut collect = |m: &ArgMatches| {
        for id in m.ids() {
            let id = id.as_str();
            if !args.iter().any(|a| a == id)
                || ["config", "out_dir", "threads", "verbose"].contains(&id)
            {
                continue;
            }
            if let Ok(Some(raw)) = m.try_get_raw(id) {
                let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                out.push((id.to_string(), vals.join(",")));
            }
        }
    };
    collect(matches);
    let command = matches.subcommand().map(|(name, sub)| {
        collect(sub);
        name.to_string()
    });
    if let Some(name) = command {
        out.push(("command".into(), name));
    }
    out.sort();
    out.dedup();
    out
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let args = match config::merge(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let matches = match Cli::command()
        .args_override_self(true)
        .try_get_matches_from(args)
    {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("thread pool: {e}");
        }
    }
    let result = std::fs::create_dir_all(&cli.out_dir)
        .map_err(Failure::from)
        .and_then(|_| commands::write_manifest(&cli.out_dir, &resolved(&matches)))
        .and_then(|_| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
    }
}

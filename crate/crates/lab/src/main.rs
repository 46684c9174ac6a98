use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conic_ma_lab::config::ExperimentConfig;
use conic_ma_lab::{report, run, Command, THREADS_ENV};

#[derive(Parser)]
#[command(name = "conic-ma-lab", version, about = "Conic Kahler metrics on P^1")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continuity path at the smallest delta.
    Solve(RunArgs),
    /// All deltas, metric analysis and convergence study.
    Sweep(RunArgs),
    /// All deltas with energies and fitted constants.
    Energies(RunArgs),
    /// All deltas with geodesic lengths and shortcut tests.
    Geodesics(RunArgs),
    /// Everything, plus verify.json. Exits 3 if an enabled check fails.
    Verify(RunArgs),
    /// Markdown summary of one artifact directory, or a diff of two.
    Report {
        dirs: Vec<PathBuf>,
        /// Read the output directory from this config when no directory is given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory to read when no positional directory is given.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be a positive integer"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(command: Command, args: RunArgs) -> u8 {
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };
    match run(command, cfg, args.out.as_deref()) {
        Ok(outcome) => {
            if let Some(v) = &outcome.verify {
                for c in v.checks.iter().filter(|c| !c.passed) {
                    let tag = if c.enabled {
                        "FAIL"
                    } else {
                        "fail (informational)"
                    };
                    eprintln!("{tag} {}: value {:e}, bound {:e}", c.name, c.value, c.bound);
                }
                eprintln!("{} checks passed, {} failed", v.passed, v.failed);
            }
            eprintln!("artifacts in {}", outcome.out_dir.display());
            outcome.exit_code() as u8
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = threads() {
        eprintln!("config error: {e}");
        return ExitCode::from(1);
    }
    let code = match cli.command {
        Cmd::Solve(a) => execute(Command::Solve, a),
        Cmd::Sweep(a) => execute(Command::Sweep, a),
        Cmd::Energies(a) => execute(Command::Energies, a),
        Cmd::Geodesics(a) => execute(Command::Geodesics, a),
        Cmd::Verify(a) => execute(Command::Verify, a),
        Cmd::Report { dirs, config, out } => {
            let dirs = if !dirs.is_empty() {
                dirs
            } else if let Some(o) = out {
                vec![o]
            } else if let Some(c) = config {
                match ExperimentConfig::load(&c) {
                    Ok(cfg) => vec![conic_ma_lab::resolve_out(&cfg, None)],
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                eprintln!("report needs a directory, --out or --config");
                return ExitCode::from(1);
            };
            let refs: Vec<&std::path::Path> = dirs.iter().map(PathBuf::as_path).collect();
            match report::report(&refs) {
                Ok(text) => {
                    print!("{text}");
                    0
                }
                Err(e) => {
                    eprintln!("{e}");
                    1
                }
            }
        }
    };
    ExitCode::from(code)
}

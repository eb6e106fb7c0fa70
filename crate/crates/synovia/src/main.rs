//! Command-line front end. Exit codes: 0 all enabled checks pass, 1 a check
//! failed, 2 usage or configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use synovia::harness::{self, Config, StudyKind};
use synovia::Error;

#[derive(Parser)]
#[command(name = "synovia", version, about = "Spectral Galerkin solver for concentration-coupled power-law flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configuration as a single simulation.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the study the configuration selects.
    Study {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the property suite with default settings.
    Suite {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the canonical configuration with all defaults.
    DumpDefaults,
}

#[derive(clap::Args)]
struct Overrides {
    /// Override the random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress per-check output.
    #[arg(long)]
    quiet: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut Config) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.quiet {
            cfg.quiet = true;
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::UnknownKey { .. }
        | Error::RangeError { .. }
        | Error::InvalidScenario(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn execute(cfg: &Config) -> ExitCode {
    match harness::run_study(cfg) {
        Ok(report) if report.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn load(path: &Path) -> Result<Config, ExitCode> {
    harness::parse_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code_for(&e))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            cfg.study = StudyKind::SingleRun;
            overrides.apply(&mut cfg);
            execute(&cfg)
        }
        Command::Study { config, overrides } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            overrides.apply(&mut cfg);
            execute(&cfg)
        }
        Command::Suite { overrides } => {
            let mut cfg = Config::default();
            cfg.study = StudyKind::PropertySuite;
            cfg.basis_n = 32;
            cfg.basis_m = 32;
            overrides.apply(&mut cfg);
            execute(&cfg)
        }
        Command::DumpDefaults => {
            print!("{}", Config::default().dump());
            ExitCode::SUCCESS
        }
    }
}

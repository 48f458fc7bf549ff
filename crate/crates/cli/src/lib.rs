//! `hiring-sim` command line: run configured experiments or named presets.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use hiring_sim::engine::default_workers;
use hiring_sim::io::{emit_results, load_config, run_experiment, run_preset};
use hiring_sim::{preset, PolicyKind, SimError, SubsidyRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hiring-sim", version, about = "Monte Carlo simulator for hiring markets with social learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one policy on a JSON market config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `policy`.
        #[arg(long)]
        policy: Option<PolicyKind>,
        /// Overrides the config's `subsidy`.
        #[arg(long)]
        subsidy: Option<SubsidyRule>,
        #[arg(long, default_value_t = 4000)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: HIRING_SIM_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a named experiment preset.
    Preset {
        #[arg(long)]
        name: String,
        /// Replications per cell (default: the preset's own).
        #[arg(long)]
        runs: Option<usize>,
        /// Multiplies the run count, e.g. 0.25 for a quick pass.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and print it with all defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &SimError) -> i32 {
    match e {
        SimError::Config(_) | SimError::UnknownPreset(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn execute(cmd: Command) -> Result<(), SimError> {
    match cmd {
        Command::Simulate { config, policy, subsidy, runs, out, workers } => {
            let mut cfg = load_config(&config)?;
            if policy.is_some() {
                cfg.policy = policy;
                cfg.subsidy = None;
            }
            if subsidy.is_some() {
                cfg.subsidy = subsidy;
            }
            if runs == 0 {
                return Err(hiring_sim::ConfigError::Invalid { field: "runs".into(), message: "must be at least 1".into() }.into());
            }
            let bundle = run_experiment(&cfg, runs, workers.unwrap_or_else(default_workers))?;
            for path in emit_results(&bundle, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Preset { name, runs, scale, out, workers } => {
            let mut p = preset(&name)?;
            if let Some(r) = runs {
                p.runs = r;
            }
            if let Some(s) = scale {
                p = p.scaled(s);
            }
            if p.runs == 0 {
                return Err(hiring_sim::ConfigError::Invalid { field: "runs".into(), message: "must be at least 1".into() }.into());
            }
            let bundle = run_preset(&p, p.runs, workers.unwrap_or_else(default_workers))?;
            for path in emit_results(&bundle, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { config } => {
            println!("{}", load_config(&config)?.to_json());
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs it. Returns the exit code:
/// 0 on success, 2 for usage or configuration errors, 1 for runtime faults.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

//! Command-line front end. Exit codes: 0 pass, 1 check failure, 2 usage or
//! config error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::Config;
use super::data::{generate_data, DataSpec};
use super::{calculators, experiments, run_experiment, write_run, HarnessError};

#[derive(Debug, Parser)]
#[command(name = "qem", version, about = "Quotient-aware EM experiments and bound calculators")]
pub struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (for `gen-data`, the CSV path).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a weighted dataset as CSV (stdout unless --out is given).
    GenData,
    /// Run one experiment and write its report.
    Run { experiment: String },
    /// Evaluate a bound calculator and print JSON.
    Bounds { name: String },
    /// List experiments and calculators.
    List,
    /// Run every experiment with its defaults and print a summary.
    VerifyAll,
}

pub const DEFAULT_OUT: &str = "qem-out";

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for kv in &cli.overrides {
        cfg.apply_override(kv)?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, HarnessError> {
    let io = |e| HarnessError::io(Path::new("<stdout>"), e);
    match &cli.command {
        Command::GenData => {
            let mut cfg = load_config(cli)?;
            if let Some(seed) = cli.seed {
                cfg.apply_override(&format!("seed={seed}"))?;
            }
            let (spec, seed) = DataSpec::from_config(&cfg)?;
            let data = generate_data(&spec, seed)?;
            match &cli.out {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
                    }
                    data.write_csv(path)?;
                    writeln!(stdout, "wrote {} rows to {}", data.len(), path.display()).map_err(io)?;
                }
                None => write!(stdout, "{}", data.to_csv_string()).map_err(io)?,
            }
            Ok(0)
        }
        Command::Run { experiment } => {
            let exp = experiments::find(experiment)
                .ok_or_else(|| HarnessError::Usage(format!("unknown experiment `{experiment}`; known: {}", experiments::names().join(", "))))?;
            let run = run_experiment(exp, load_config(cli)?, cli.seed)?;
            let dir = write_run(&run, cli.out.as_deref().unwrap_or(Path::new(DEFAULT_OUT)))?;
            let r = &run.report;
            for c in &r.checks {
                writeln!(stdout, "  [{}] {}", if c.pass { "pass" } else { "FAIL" }, c.name).map_err(io)?;
            }
            if let Some(err) = &r.error {
                writeln!(stdout, "  error: {err}").map_err(io)?;
            }
            writeln!(stdout, "{} {} {} ({:.1}s) -> {}", r.criterion, r.experiment, verdict(r.verdict), r.wall_clock_s, dir.display()).map_err(io)?;
            Ok(if r.verdict { 0 } else { 1 })
        }
        Command::Bounds { name } => {
            let calc = calculators::find(name).ok_or_else(|| {
                let known: Vec<_> = calculators::CALCULATORS.iter().map(|c| c.name).collect();
                HarnessError::Usage(format!("unknown calculator `{name}`; known: {}", known.join(", ")))
            })?;
            let out = calculators::evaluate(calc, &load_config(cli)?)?;
            writeln!(stdout, "{}", super::report::to_json_string(&out)).map_err(io)?;
            Ok(0)
        }
        Command::List => {
            writeln!(stdout, "experiments:").map_err(io)?;
            for e in experiments::EXPERIMENTS {
                writeln!(stdout, "  {:<4} {:<26} {}", e.criterion, e.name, e.summary).map_err(io)?;
            }
            writeln!(stdout, "bounds:").map_err(io)?;
            for c in calculators::CALCULATORS {
                writeln!(stdout, "  {:<22} {}", c.name, c.summary).map_err(io)?;
            }
            Ok(0)
        }
        Command::VerifyAll => {
            if !cli.overrides.is_empty() || cli.config.is_some() {
                return Err(HarnessError::Usage("verify-all runs the defaults; only --seed and --out apply".into()));
            }
            let mut all = true;
            for exp in experiments::EXPERIMENTS {
                let run = run_experiment(exp, Config::default(), cli.seed)?;
                if let Some(out) = &cli.out {
                    write_run(&run, out)?;
                }
                let r = &run.report;
                all &= r.verdict;
                let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                let note = r.error.clone().unwrap_or_else(|| failed.join("; "));
                writeln!(stdout, "{:<4} {:<26} {:<4} {:>7.1}s {}", r.criterion, r.experiment, verdict(r.verdict), r.wall_clock_s, note).map_err(io)?;
            }
            writeln!(stdout, "overall: {}", verdict(all)).map_err(io)?;
            Ok(if all { 0 } else { 1 })
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

//! Command-line driver for the experiment harness.
//!
//! Exit codes: 0 on success, 2 when some trials failed numerically, 1 on
//! usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ura_core::experiments::{self, ExperimentKind, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(
    name = "ura",
    version,
    about = "Unsourced random access: simulation and replica prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the free-entropy curve and its extrema.
    ReplicaCurve(Common),
    /// Count free-entropy maxima over a sweep.
    PhaseDiagram(Common),
    /// Decoder MSE on a single sub-block per trial.
    AmpMseSweep(Common),
    /// Per-user error probability over all sub-blocks.
    E2ePeSweep(Common),
    /// Replica prediction next to simulation.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Record wall-clock time per trial.
    #[arg(long)]
    timing: bool,
}

fn load(kind: ExperimentKind, c: &Common) -> ura_core::Result<ExperimentSpec> {
    let mut text = match &c.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| ura_core::Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    for kv in &c.set {
        text.push('\n');
        text.push_str(kv);
    }
    let mut spec = ExperimentSpec::parse(&text)?;
    if let Some(k) = spec.kind {
        if k != kind {
            return Err(ura_core::Error::Config(format!(
                "config is for `{}` but `{}` was requested",
                k.name(),
                kind.name()
            )));
        }
    }
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    if let Some(o) = &c.out {
        spec.out = Some(o.clone());
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (kind, common) = match &cli.command {
        Command::ReplicaCurve(c) => (ExperimentKind::ReplicaCurve, c),
        Command::PhaseDiagram(c) => (ExperimentKind::PhaseDiagram, c),
        Command::AmpMseSweep(c) => (ExperimentKind::AmpMseSweep, c),
        Command::E2ePeSweep(c) => (ExperimentKind::E2ePeSweep, c),
        Command::Compare(c) => (ExperimentKind::Compare, c),
    };
    let spec = match load(kind, common) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        threads: common.threads,
        timing: common.timing,
    };
    let report = match experiments::run(kind, &spec, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &spec.out {
        Some(p) => std::fs::write(p, &report.csv),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(report.csv.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    if report.failed_trials > 0 {
        eprintln!("warning: {} trial(s) failed", report.failed_trials);
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

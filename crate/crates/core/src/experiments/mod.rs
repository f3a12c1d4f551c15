//! Seeded Monte Carlo sweeps, replica scans and their CSV output.

pub mod config;
pub mod csv;
pub mod sweep;

pub use config::{ExperimentKind, ExperimentSpec};
pub use sweep::{run_e2e_trial, Report, TrialResult};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Fill the `wall_ms` column. Off by default so output is reproducible.
    pub timing: bool,
}

/// Runs one experiment and returns its CSV.
pub fn run(kind: ExperimentKind, spec: &ExperimentSpec, opts: RunOptions) -> Result<Report> {
    let work = || match kind {
        ExperimentKind::ReplicaCurve => sweep::run_replica_curve(spec),
        ExperimentKind::PhaseDiagram => sweep::run_phase_diagram(spec),
        ExperimentKind::AmpMseSweep => sweep::run_sweep(spec, sweep::BlockScope::First, opts.timing),
        ExperimentKind::E2ePeSweep => sweep::run_sweep(spec, sweep::BlockScope::All, opts.timing),
        ExperimentKind::Compare => sweep::run_compare(spec),
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    }
}

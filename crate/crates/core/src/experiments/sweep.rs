//! Monte Carlo trials, sweeps and the prediction-versus-simulation join.

use std::time::Instant;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::config::ExperimentSpec;
use super::csv::{
    fmt_f64, to_csv, CompareRow, TrialLabel, TrialRow, COMPARE_HEADER, CURVE_HEADER, PHASE_HEADER, TRIAL_HEADER,
};
use crate::amp::{map_threshold, AmpConfig, Decoder};
use crate::error::{Error, Result};
use crate::replica::{mmse_from_d, predict_pe, scan_extremes, ExtremumKind, FreeEntropyCurve};
use crate::rng::{Purpose, Streams, TrialStreams};
use crate::system::{
    build_index_matrix, inject_csi_error, mse, sample_channel, sample_messages, transmit_and_despread, Amplitudes,
    SystemConfig,
};

/// Metrics of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub pe: f64,
    /// Soft-estimate MSE averaged over the decoded sub-blocks.
    pub mse: f64,
    /// Largest iteration count over the sub-blocks.
    pub iters: usize,
    /// Every sub-block met the stopping tolerance.
    pub converged: bool,
    /// Final noise estimate averaged over sub-blocks.
    pub sigma2_hat: f64,
    pub user_errors: Vec<bool>,
    pub wall_ms: f64,
}

/// Decodes the first `blocks` sub-blocks of one trial.
pub fn run_blocks(
    system: &SystemConfig,
    amp: &AmpConfig,
    streams: &TrialStreams,
    blocks: usize,
) -> Result<TrialResult> {
    system.validate()?;
    let start = Instant::now();
    let blocks = blocks.min(system.sub_blocks());
    let n = system.sections();
    let rho = system.rho_vec();
    let channel = sample_channel(system, &mut streams.rng(Purpose::Channel));
    let estimate = inject_csi_error(&channel, system.csi_error_var, &mut streams.rng(Purpose::CsiError))?;
    let messages = sample_messages(system, &mut streams.rng(Purpose::Messages));
    let decoder = Decoder::new(amp.clone(), estimate.s.view(), &rho, n)?;

    let mut wrong = vec![false; system.users];
    let (mut mse_sum, mut s2_sum) = (0.0, 0.0);
    let mut iters = 0;
    let mut converged = true;
    for b in 0..blocks {
        let x = build_index_matrix(&messages.column(b).to_vec(), &rho, n)?;
        let rx = transmit_and_despread(
            x.entries(),
            &channel,
            system.sigma2,
            &mut streams.rng(Purpose::Noise(b as u32)),
        )?;
        let out = decoder.run(rx.y.view(), None)?;
        let decided = map_threshold(out.state.x_hat.view(), &rho)?;
        for (w, (d, t)) in wrong.iter_mut().zip(decided.support().iter().zip(x.support())) {
            *w |= d != t;
        }
        mse_sum += mse(out.state.x_hat.view(), x.entries())?;
        s2_sum += out.state.sigma2;
        iters = iters.max(out.iterations);
        converged &= out.converged;
    }
    let nb = blocks.max(1) as f64;
    let pe = if blocks == 0 {
        0.0
    } else {
        wrong.iter().filter(|w| **w).count() as f64 / system.users as f64
    };
    Ok(TrialResult {
        pe,
        mse: mse_sum / nb,
        iters,
        converged,
        sigma2_hat: if blocks == 0 { f64::NAN } else { s2_sum / nb },
        user_errors: wrong,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// One full second-phase experiment over all sub-blocks.
pub fn run_e2e_trial(system: &SystemConfig, amp: &AmpConfig, streams: &TrialStreams) -> Result<TrialResult> {
    run_blocks(system, amp, streams, system.sub_blocks())
}

/// Splits the users binomially into two groups that access independently and
/// merges their results.
pub fn run_two_groups(
    system: &SystemConfig,
    amp: &AmpConfig,
    streams: &TrialStreams,
    blocks: usize,
) -> Result<TrialResult> {
    let start = Instant::now();
    let k = system.users;
    let first = Binomial::new(k as u64, 0.5)
        .map_err(|e| Error::InputDomain(e.to_string()))?
        .sample(&mut streams.rng(Purpose::GroupSplit)) as usize;
    let rho = system.rho_vec();
    let mut parts = Vec::new();
    for (g, range) in [(0u64, 0..first), (1, first..k)] {
        if range.is_empty() {
            continue;
        }
        let mut cfg = system.clone();
        cfg.users = range.len();
        if let Amplitudes::PerUser(_) = system.rho {
            cfg.rho = Amplitudes::PerUser(rho[range.clone()].to_vec());
        }
        parts.push((range.len(), run_blocks(&cfg, amp, &streams.subgroup(g), blocks)?));
    }
    let mut user_errors = Vec::with_capacity(k);
    let (mut mse_w, mut s2) = (0.0, 0.0);
    for (size, r) in &parts {
        user_errors.extend_from_slice(&r.user_errors);
        mse_w += r.mse * *size as f64;
        s2 += r.sigma2_hat;
    }
    Ok(TrialResult {
        pe: user_errors.iter().filter(|w| **w).count() as f64 / k as f64,
        mse: mse_w / k as f64,
        iters: parts.iter().map(|p| p.1.iters).max().unwrap_or(0),
        converged: parts.iter().all(|p| p.1.converged),
        sigma2_hat: s2 / parts.len() as f64,
        user_errors,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn run_trial(spec: &ExperimentSpec, streams: &TrialStreams, blocks: usize) -> Result<TrialResult> {
    if spec.groups == 2 {
        run_two_groups(&spec.system, &spec.amp, streams, blocks)
    } else {
        run_blocks(&spec.system, &spec.amp, streams, blocks)
    }
}

/// Which sub-blocks a sweep decodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockScope {
    /// Only the first sub-block: one compressed-sensing instance per trial.
    First,
    /// Every sub-block, so that `pe` is the per-user error probability.
    All,
}

/// Points of a sweep, each with its trials in index order.
#[derive(Debug)]
pub struct SweepResults {
    pub points: Vec<(String, f64, ExperimentSpec)>,
    pub trials: Vec<Vec<Result<TrialResult>>>,
}

impl SweepResults {
    pub fn failures(&self) -> usize {
        self.trials.iter().flatten().filter(|r| r.is_err()).count()
    }
}

fn resolve_points(spec: &ExperimentSpec) -> Result<Vec<(String, f64, ExperimentSpec)>> {
    spec.points()
        .into_iter()
        .map(|(p, v)| {
            let s = spec.at(&p, v)?;
            Ok((p, v, s))
        })
        .collect()
}

/// Runs every `(point, trial)` pair on the current rayon pool. Each pair has
/// its own streams derived from `(seed, point index, trial index)`, so the
/// results do not depend on scheduling.
pub fn run_trials(spec: &ExperimentSpec, scope: BlockScope) -> Result<SweepResults> {
    let points = resolve_points(spec)?;
    let root = Streams::new(spec.seed);
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let flat: Vec<Result<TrialResult>> = tasks
        .par_iter()
        .map(|&(p, t)| {
            let s = &points[p].2;
            let blocks = match scope {
                BlockScope::First => 1,
                BlockScope::All => s.system.sub_blocks(),
            };
            run_trial(s, &root.trial(p as u64, t as u64), blocks)
        })
        .collect();
    let mut it = flat.into_iter();
    let trials = points.iter().map(|_| it.by_ref().take(spec.trials).collect()).collect();
    Ok(SweepResults { points, trials })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Trial rows followed by one `mean` row per sweep point.
pub fn sweep_rows(results: &SweepResults, timing: bool) -> Vec<TrialRow> {
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for ((param, value, _), trials) in results.points.iter().zip(&results.trials) {
        let ok: Vec<&TrialResult> = trials.iter().filter_map(|r| r.as_ref().ok()).collect();
        for (t, r) in trials.iter().enumerate() {
            rows.push(match r {
                Ok(r) => TrialRow {
                    sweep_param: param.clone(),
                    sweep_value: *value,
                    trial: TrialLabel::Index(t),
                    pe: r.pe,
                    mse: r.mse,
                    iters: r.iters as f64,
                    converged: if r.converged { 1.0 } else { 0.0 },
                    sigma2_hat: r.sigma2_hat,
                    wall_ms: timing.then_some(r.wall_ms),
                },
                Err(_) => TrialRow {
                    sweep_param: param.clone(),
                    sweep_value: *value,
                    trial: TrialLabel::Index(t),
                    pe: f64::NAN,
                    mse: f64::NAN,
                    iters: 0.0,
                    converged: 0.0,
                    sigma2_hat: f64::NAN,
                    wall_ms: None,
                },
            });
        }
        let col = |f: fn(&TrialResult) -> f64| mean_se(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()).0;
        means.push(TrialRow {
            sweep_param: param.clone(),
            sweep_value: *value,
            trial: TrialLabel::Mean,
            pe: col(|r| r.pe),
            mse: col(|r| r.mse),
            iters: col(|r| r.iters as f64),
            converged: col(|r| if r.converged { 1.0 } else { 0.0 }),
            sigma2_hat: col(|r| r.sigma2_hat),
            wall_ms: if timing { Some(col(|r| r.wall_ms)) } else { None },
        });
    }
    rows.extend(means);
    rows
}

/// CSV text and the number of failed trials.
#[derive(Debug, Clone)]
pub struct Report {
    pub csv: String,
    pub failed_trials: usize,
}

pub fn run_sweep(spec: &ExperimentSpec, scope: BlockScope, timing: bool) -> Result<Report> {
    let results = run_trials(spec, scope)?;
    let rows = sweep_rows(&results, timing);
    Ok(Report {
        csv: to_csv(&TRIAL_HEADER, rows.iter().map(TrialRow::to_record)),
        failed_trials: results.failures(),
    })
}

fn scan_point(spec: &ExperimentSpec) -> Result<FreeEntropyCurve> {
    scan_extremes(&spec.replica_config()?)
}

/// Sampled free-entropy curves with their extrema.
pub fn run_replica_curve(spec: &ExperimentSpec) -> Result<Report> {
    let mut rows = Vec::new();
    for (_, value, s) in resolve_points(spec)? {
        let curve = scan_point(&s)?;
        let v = fmt_f64(value);
        for p in &curve.points {
            rows.push(vec![
                v.clone(),
                fmt_f64(p.d),
                fmt_f64(p.phi),
                fmt_f64(p.std_error),
                "grid".into(),
            ]);
        }
        for e in &curve.extrema {
            let role = match e.kind {
                ExtremumKind::LocalMax => "local_max",
                ExtremumKind::LocalMin => "local_min",
            };
            rows.push(vec![
                v.clone(),
                fmt_f64(e.d),
                fmt_f64(e.phi),
                String::new(),
                role.into(),
            ]);
        }
        for (role, d) in [("bayes", curve.bayes_optimal_d), ("amp", curve.amp_d)] {
            let phi = curve.extrema.iter().find(|e| e.d == d).map_or(f64::NAN, |e| e.phi);
            rows.push(vec![v.clone(), fmt_f64(d), fmt_f64(phi), String::new(), role.into()]);
        }
    }
    Ok(Report {
        csv: to_csv(&CURVE_HEADER, rows),
        failed_trials: 0,
    })
}

/// Number and location of free-entropy maxima at each sweep point.
pub fn run_phase_diagram(spec: &ExperimentSpec) -> Result<Report> {
    let mut rows = Vec::new();
    for (_, value, s) in resolve_points(spec)? {
        let curve = scan_point(&s)?;
        let l = s.system.bits_per_block;
        rows.push(vec![
            fmt_f64(value),
            fmt_f64(s.system.alpha()),
            curve.max_count().to_string(),
            fmt_f64(curve.bayes_optimal_d),
            fmt_f64(curve.amp_d),
            fmt_f64(mmse_from_d(curve.bayes_optimal_d, l)?.1),
            fmt_f64(mmse_from_d(curve.amp_d, l)?.1),
        ]);
    }
    Ok(Report {
        csv: to_csv(&PHASE_HEADER, rows),
        failed_trials: 0,
    })
}

/// Replica prediction and decoder simulation at each sweep point.
pub fn compare_rows(spec: &ExperimentSpec) -> Result<(Vec<CompareRow>, usize)> {
    let results = run_trials(spec, BlockScope::All)?;
    let mut rows = Vec::new();
    for ((_, value, s), trials) in results.points.iter().zip(&results.trials) {
        let rcfg = s.replica_config()?;
        let curve = scan_extremes(&rcfg)?;
        let l = s.system.bits_per_block;
        let ok: Vec<&TrialResult> = trials.iter().filter_map(|r| r.as_ref().ok()).collect();
        let (mse_emp, se_mse) = mean_se(&ok.iter().map(|r| r.mse).collect::<Vec<_>>());
        let (pe_emp, se_pe) = mean_se(&ok.iter().map(|r| r.pe).collect::<Vec<_>>());
        rows.push(CompareRow {
            sweep_value: *value,
            phi_bayes_d: curve.bayes_optimal_d,
            phi_amp_d: curve.amp_d,
            mse_bayes: mmse_from_d(curve.bayes_optimal_d, l)?.1,
            mse_amp: mmse_from_d(curve.amp_d, l)?.1,
            pe_pred: predict_pe(curve.amp_d, &rcfg)?.pe,
            mse_emp,
            pe_emp,
            se_mse,
            se_pe,
        });
    }
    Ok((rows, results.failures()))
}

pub fn run_compare(spec: &ExperimentSpec) -> Result<Report> {
    let (rows, failed) = compare_rows(spec)?;
    Ok(Report {
        csv: to_csv(&COMPARE_HEADER, rows.iter().map(CompareRow::to_record)),
        failed_trials: failed,
    })
}

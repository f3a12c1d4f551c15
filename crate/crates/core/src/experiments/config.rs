//! Flat `key = value` experiment files.
//!
//! ```text
//! # decoder MSE against the antenna ratio
//! system.users = 500
//! system.bits_per_block = 2
//! system.sigma2 = 0.01
//! sweep.param = system.alpha
//! sweep.values = 0.06, 0.08, 0.1
//! trials = 50
//! seed = 1
//! ```
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::amp::{AmpConfig, QxInit, VarianceModel};
use crate::error::{Error, Result};
use crate::replica::{default_grid, GaussianConvention, ReplicaConfig};
use crate::system::{Amplitudes, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ReplicaCurve,
    PhaseDiagram,
    AmpMseSweep,
    E2ePeSweep,
    Compare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ReplicaCurve => "replica-curve",
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::AmpMseSweep => "amp-mse-sweep",
            ExperimentKind::E2ePeSweep => "e2e-pe-sweep",
            ExperimentKind::Compare => "compare",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "replica-curve" => ExperimentKind::ReplicaCurve,
            "phase-diagram" => ExperimentKind::PhaseDiagram,
            "amp-mse-sweep" => ExperimentKind::AmpMseSweep,
            "e2e-pe-sweep" => ExperimentKind::E2ePeSweep,
            "compare" => ExperimentKind::Compare,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Replica settings that do not vary with the sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSettings {
    pub d_max: f64,
    pub mc_samples: usize,
    pub convention: GaussianConvention,
}

impl Default for ReplicaSettings {
    fn default() -> Self {
        Self {
            d_max: 1.0,
            mc_samples: 100_000,
            convention: GaussianConvention::ComplexCircular,
        }
    }
}

/// Sweepable parameters.
pub const SWEEP_PARAMS: &[&str] = &[
    "system.users",
    "system.antennas",
    "system.alpha",
    "system.bits_per_block",
    "system.total_bits",
    "system.preamble_len",
    "system.sigma2",
    "system.csi_error_var",
    "system.rho",
    "amp.max_iters",
    "amp.damping",
    "amp.tol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Option<ExperimentKind>,
    pub system: SystemConfig,
    pub amp: AmpConfig,
    pub replica: ReplicaSettings,
    /// `None` runs a single point.
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Number of access groups users are split into (1 or 2).
    pub groups: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: None,
            system: SystemConfig::new(500, 100, 2, 0.01).expect("valid default"),
            amp: AmpConfig::default(),
            replica: ReplicaSettings::default(),
            sweep: None,
            trials: 10,
            seed: 0,
            out: None,
            groups: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{value}` for `{key}` as a flag"))),
    }
}

fn as_count(key: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("`{key}` needs a nonnegative integer, got {v}")))
    }
}

impl ExperimentSpec {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        let mut sweep_param: Option<String> = None;
        let mut sweep_values: Option<Vec<f64>> = None;
        let mut antennas_set = false;
        let mut alpha: Option<f64> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "sweep.param" => sweep_param = Some(value.to_string()),
                "sweep.values" => {
                    sweep_values = Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|v| !v.is_empty())
                            .map(|v| parse(key, v))
                            .collect::<Result<_>>()?,
                    )
                }
                "system.alpha" => alpha = Some(parse(key, value)?),
                _ => {
                    if key == "system.antennas" {
                        antennas_set = true;
                    }
                    spec.set(key, value)?;
                }
            }
        }
        if let Some(a) = alpha {
            if antennas_set {
                return Err(Error::Config(
                    "set either system.alpha or system.antennas, not both".into(),
                ));
            }
            spec.set_numeric("system.alpha", a)?;
        }
        spec.sweep = match (sweep_param, sweep_values) {
            (None, None) => None,
            (Some(param), values) => {
                if !SWEEP_PARAMS.contains(&param.as_str()) {
                    return Err(Error::Config(format!(
                        "sweep.param `{param}` is not sweepable; choose one of {}",
                        SWEEP_PARAMS.join(", ")
                    )));
                }
                Some(Sweep {
                    param,
                    values: values.unwrap_or_default(),
                })
            }
            (None, Some(_)) => return Err(Error::Config("sweep.values given without sweep.param".into())),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets a single key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = Some(value.parse()?),
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "system.groups" => self.groups = parse(key, value)?,
            "system.preamble_bits" => self.system.preamble_bits = parse(key, value)?,
            "amp.sigma2_init" => {
                self.amp.sigma2_init = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "amp.em" => self.amp.em = parse_bool(key, value)?,
            "amp.variance_model" => {
                self.amp.variance_model = match value {
                    "row-covariance" => VarianceModel::RowCovariance,
                    "diagonal" => VarianceModel::Diagonal,
                    _ => return Err(Error::Config(format!("unknown amp.variance_model `{value}`"))),
                }
            }
            "amp.qx_init" => {
                self.amp.qx_init = match value {
                    "amplitude" => QxInit::Amplitude,
                    "prior-variance" => QxInit::PriorVariance,
                    _ => return Err(Error::Config(format!("unknown amp.qx_init `{value}`"))),
                }
            }
            "replica.d_max" => self.replica.d_max = parse(key, value)?,
            "replica.mc_samples" => self.replica.mc_samples = parse(key, value)?,
            "replica.convention" => {
                self.replica.convention = match value {
                    "complex-circular" => GaussianConvention::ComplexCircular,
                    "double-real" => GaussianConvention::DoubleReal,
                    _ => return Err(Error::Config(format!("unknown replica.convention `{value}`"))),
                }
            }
            _ if SWEEP_PARAMS.contains(&key) => self.set_numeric(key, parse(key, value)?)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Sets a sweepable parameter. `system.alpha` sets the antenna count to
    /// the nearest integer of `alpha·K`.
    pub fn set_numeric(&mut self, key: &str, v: f64) -> Result<()> {
        let s = &mut self.system;
        match key {
            "system.users" => {
                s.users = as_count(key, v)?;
                if let Amplitudes::PerUser(_) = s.rho {
                    return Err(Error::Config("cannot change users with per-user amplitudes".into()));
                }
            }
            "system.antennas" => s.antennas = as_count(key, v)?,
            "system.alpha" => {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("system.alpha must be positive, got {v}")));
                }
                s.antennas = ((v * s.users as f64).round() as usize).max(1);
            }
            "system.bits_per_block" => s.bits_per_block = as_count(key, v)?,
            "system.total_bits" => s.total_bits = as_count(key, v)?,
            "system.preamble_len" => s.preamble_len = as_count(key, v)?,
            "system.sigma2" => s.sigma2 = v,
            "system.csi_error_var" => s.csi_error_var = v,
            "system.rho" => s.rho = Amplitudes::Uniform(v),
            "amp.max_iters" => self.amp.max_iters = as_count(key, v)?,
            "amp.damping" => self.amp.damping = v,
            "amp.tol" => self.amp.tol = v,
            _ => return Err(Error::Config(format!("`{key}` is not a numeric parameter"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.system.validate().map_err(wrap)?;
        self.amp.validate().map_err(wrap)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(1..=2).contains(&self.groups) {
            return Err(Error::Config(format!(
                "system.groups must be 1 or 2, got {}",
                self.groups
            )));
        }
        if !(self.replica.d_max > 0.0) {
            return Err(Error::Config("replica.d_max must be positive".into()));
        }
        if self.replica.mc_samples < 1000 {
            return Err(Error::Config("replica.mc_samples must be at least 1000".into()));
        }
        Ok(())
    }

    /// Sweep points as `(parameter, value)` pairs; a spec without a sweep
    /// yields one point labelled `none`.
    pub fn points(&self) -> Vec<(String, f64)> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|&v| (s.param.clone(), v)).collect(),
            None => vec![("none".to_string(), 0.0)],
        }
    }

    /// The spec with the sweep parameter set to `value`, validated.
    pub fn at(&self, param: &str, value: f64) -> Result<ExperimentSpec> {
        let mut s = self.clone();
        if param != "none" {
            s.set_numeric(param, value)?;
        }
        s.validate()?;
        Ok(s)
    }

    /// Replica configuration matching the system at this point.
    pub fn replica_config(&self) -> Result<ReplicaConfig> {
        let cfg = ReplicaConfig {
            alpha: self.system.alpha(),
            sigma2: self.system.sigma2,
            bits_per_block: self.system.bits_per_block,
            sub_blocks: self.system.sub_blocks(),
            d_grid: default_grid(self.replica.d_max),
            mc_samples: self.replica.mc_samples,
            seed: self.seed,
            convention: self.replica.convention,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

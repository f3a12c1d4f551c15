//! Replica-symmetric performance prediction.
//!
//! The free entropy of the equivalent model collapses to a function `Φ(d)` of
//! one scalar, the off-diagonal gap of the row error covariance. Its global
//! maximum gives the Bayes-optimal MSE `(2^L − 1)·d`, its largest-`d` local
//! maximum the MSE reached by message passing. The Gaussian expectation in
//! `Φ` is estimated by Monte Carlo with one sample set shared by every `d`,
//! so the estimated curve is a smooth function of `d`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{mismatch, Error, Result};
use crate::rng::{standard_normal, Purpose, Streams};

/// Coefficient multiplying the Gaussian samples inside the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianConvention {
    /// `√2·z`: the real part of a circular complex Gaussian of unit variance,
    /// scaled to match the complex likelihood. Stationary points of `Φ` are
    /// then fixed points of the scalar-channel MMSE.
    ComplexCircular,
    /// `2·z` with `z` a standard real Gaussian.
    DoubleReal,
}

impl GaussianConvention {
    pub fn coefficient(self) -> f64 {
        match self {
            GaussianConvention::ComplexCircular => std::f64::consts::SQRT_2,
            GaussianConvention::DoubleReal => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaConfig {
    pub alpha: f64,
    pub sigma2: f64,
    pub bits_per_block: usize,
    pub sub_blocks: usize,
    pub d_grid: Vec<f64>,
    pub mc_samples: usize,
    pub seed: u64,
    pub convention: GaussianConvention,
}

/// 40 log-spaced points on `[1e-7, 1e-2]` followed by a uniform grid with
/// step 0.005 up to `d_max`.
pub fn default_grid(d_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..40).map(|i| 10f64.powf(-7.0 + 5.0 * i as f64 / 39.0)).collect();
    let mut d = 0.015;
    while d < d_max - 1e-12 {
        g.push(d);
        d += 0.005;
    }
    if d_max > 0.01 {
        g.push(d_max);
    }
    g
}

impl ReplicaConfig {
    pub fn new(alpha: f64, sigma2: f64, bits_per_block: usize) -> Result<Self> {
        let cfg = Self {
            alpha,
            sigma2,
            bits_per_block,
            sub_blocks: 1,
            d_grid: default_grid(1.0),
            mc_samples: 100_000,
            seed: 0,
            convention: GaussianConvention::ComplexCircular,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InputDomain(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if self.bits_per_block == 0 || self.bits_per_block > 12 {
            return bad(format!(
                "bits_per_block must lie in 1..=12, got {}",
                self.bits_per_block
            ));
        }
        if self.d_grid.is_empty() {
            return bad("d_grid is empty".into());
        }
        if !(self.d_grid[0] > 0.0) || self.d_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("d_grid must be positive and strictly increasing".into());
        }
        if self.mc_samples < 1000 {
            return bad(format!("mc_samples must be at least 1000, got {}", self.mc_samples));
        }
        Ok(())
    }

    pub fn sections(&self) -> usize {
        1 << self.bits_per_block
    }
}

const CHUNK: usize = 4096;

/// Sums `f(i)` over `0..n` in fixed-size chunks, combined in index order, so
/// the result does not depend on the thread count.
fn ordered_sum<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2) = (0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = f(i);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Standard normal samples, `mc_samples × 2^L`, drawn once per configuration.
#[derive(Debug, Clone)]
pub struct GaussianSamples {
    z: Array2<f64>,
}

impl GaussianSamples {
    pub fn new(samples: usize, dim: usize, seed: u64) -> Self {
        let mut rng = Streams::new(seed).rng(Purpose::ReplicaSamples);
        let z = Array2::from_shape_simple_fn((samples, dim), || standard_normal(&mut rng));
        Self { z }
    }

    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.z.view()
    }
}

/// Closed-form part of `Φ(d)`: every term except the Gaussian expectation.
pub fn closed_form_terms(d: f64, alpha: f64, sigma2: f64, bits_per_block: usize) -> f64 {
    let n = (1usize << bits_per_block) as f64;
    let v = sigma2 + d / alpha;
    -(d + n * alpha * sigma2 + 1.0) / v - (n - 1.0) * alpha * v.ln()
}

/// `Φ(d)` evaluated with a fixed sample set.
#[derive(Debug, Clone)]
pub struct FreeEntropy {
    config: ReplicaConfig,
    samples: GaussianSamples,
}

/// One evaluation of `Φ` with the Monte Carlo standard error of the
/// expectation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub d: f64,
    pub phi: f64,
    pub std_error: f64,
}

impl FreeEntropy {
    pub fn new(config: ReplicaConfig) -> Result<Self> {
        config.validate()?;
        let samples = GaussianSamples::new(config.mc_samples, config.sections(), config.seed);
        Ok(Self { config, samples })
    }

    pub fn config(&self) -> &ReplicaConfig {
        &self.config
    }

    pub fn eval(&self, d: f64) -> Result<CurvePoint> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InputDomain(format!("d must be nonnegative, got {d}")));
        }
        let cfg = &self.config;
        let v = cfg.sigma2 + d / cfg.alpha;
        let scale = cfg.convention.coefficient() / v.sqrt();
        let inv_v = 1.0 / v;
        let z = self.samples.view();
        let n = z.nrows();
        let (s, s2) = ordered_sum(n, |i| {
            let row = z.row(i);
            let mut mx = f64::NEG_INFINITY;
            for (j, &zj) in row.iter().enumerate() {
                let a = if j == 0 { inv_v } else { -inv_v } + scale * zj;
                mx = mx.max(a);
            }
            let mut acc = 0.0;
            for (j, &zj) in row.iter().enumerate() {
                let a = if j == 0 { inv_v } else { -inv_v } + scale * zj;
                acc += (a - mx).exp();
            }
            mx + acc.ln()
        });
        let mean = s / n as f64;
        let var = (s2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
        Ok(CurvePoint {
            d,
            phi: closed_form_terms(d, cfg.alpha, cfg.sigma2, cfg.bits_per_block) + mean,
            std_error: (var / n as f64).sqrt(),
        })
    }

    /// MMSE of the equivalent scalar channel at `v = σ² + d/α`, on the same
    /// samples as [`FreeEntropy::eval`].
    pub fn scalar_mmse(&self, d: f64) -> f64 {
        let cfg = &self.config;
        let v = cfg.sigma2 + d / cfg.alpha;
        let scale = cfg.convention.coefficient() / v.sqrt();
        let z = self.samples.view();
        let (s, _) = ordered_sum(z.nrows(), |i| {
            let row = z.row(i);
            // log-ratios of the wrong atoms against the true one
            let mut mx: f64 = 0.0;
            for &zj in row.iter().skip(1) {
                mx = mx.max(-2.0 / v + scale * (zj - row[0]));
            }
            let mut total = (-mx).exp();
            let mut sq = 0.0;
            let mut wrong = 0.0;
            for &zj in row.iter().skip(1) {
                let w = (-2.0 / v + scale * (zj - row[0]) - mx).exp();
                total += w;
                wrong += w;
                sq += w * w;
            }
            // (1 − η₀)² + Σ_{j>0} η_j², with 1 − η₀ summed directly
            (wrong * wrong + sq) / (total * total)
        });
        s / z.nrows() as f64
    }

    /// Iterates `d ← mmse(v(d)) / (2^L − 1)` from `d0`. Stable fixed points of
    /// this map are the local maxima of `Φ`. Returns the last iterate and
    /// whether it converged.
    pub fn fixed_point(&self, d0: f64) -> (f64, bool) {
        let dof = (self.config.sections() - 1) as f64;
        let mut d = d0;
        for _ in 0..FIXED_POINT_ITERS {
            let next = self.scalar_mmse(d) / dof;
            let done = (next - d).abs() <= 1e-9 * d.max(next) || next == d;
            d = next;
            if done {
                return (d, true);
            }
        }
        (d, false)
    }
}

const FIXED_POINT_ITERS: usize = 500;

/// Convenience wrapper drawing a fresh sample set.
pub fn eval_free_entropy(d: f64, config: &ReplicaConfig) -> Result<CurvePoint> {
    if d < 0.0 {
        return Err(Error::InputDomain(format!("d must be nonnegative, got {d}")));
    }
    FreeEntropy::new(config.clone())?.eval(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    LocalMax,
    LocalMin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub d: f64,
    pub phi: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEntropyCurve {
    pub points: Vec<CurvePoint>,
    /// Extrema in increasing `d`.
    pub extrema: Vec<Extremum>,
    /// Location of the global maximum.
    pub bayes_optimal_d: f64,
    /// Location of the local maximum with the largest `d`.
    pub amp_d: f64,
    pub warnings: Vec<String>,
}

impl FreeEntropyCurve {
    pub fn local_maxima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.kind == ExtremumKind::LocalMax)
    }

    pub fn max_count(&self) -> usize {
        self.local_maxima().count()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the extremum of `f` inside `[a, b]`.
fn golden<F: Fn(f64) -> Result<f64>>(mut a: f64, mut b: f64, maximize: bool, f: F) -> Result<(f64, f64)> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let g = |x: f64| f(x).map(|v| sign * v);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    for _ in 0..200 {
        if (b - a) <= 1e-10 * (a.abs() + b.abs()) + 1e-15 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, sign * g(x)?))
}

/// Samples `Φ` on the grid, brackets every sign change of its discrete slope
/// and refines each extremum by golden-section search.
///
/// A maximum at either end of the grid is reported as a local maximum at that
/// end point, with a warning.
pub fn scan_extremes(config: &ReplicaConfig) -> Result<FreeEntropyCurve> {
    let fe = FreeEntropy::new(config.clone())?;
    scan_with(&fe)
}

pub fn scan_with(fe: &FreeEntropy) -> Result<FreeEntropyCurve> {
    let grid = &fe.config().d_grid;
    let points: Vec<CurvePoint> = grid.iter().map(|&d| fe.eval(d)).collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut extrema = Vec::new();
    let n = points.len();
    let phi = |d: f64| fe.eval(d).map(|p| p.phi);

    if n == 1 {
        extrema.push(Extremum {
            d: points[0].d,
            phi: points[0].phi,
            kind: ExtremumKind::LocalMax,
        });
        warnings.push("single grid point; extremum is the grid point itself".into());
    } else {
        if points[0].phi > points[1].phi {
            extrema.push(Extremum {
                d: points[0].d,
                phi: points[0].phi,
                kind: ExtremumKind::LocalMax,
            });
            warnings.push(format!("maximum at the lower grid end d = {:e}", points[0].d));
        }
        for i in 1..n - 1 {
            let (l, c, r) = (points[i - 1].phi, points[i].phi, points[i + 1].phi);
            let kind = if c > l && c >= r {
                ExtremumKind::LocalMax
            } else if c < l && c <= r {
                ExtremumKind::LocalMin
            } else {
                continue;
            };
            let (d, v) = golden(points[i - 1].d, points[i + 1].d, kind == ExtremumKind::LocalMax, phi)?;
            // slope changes smaller than the sampling error are not resolvable
            let resolution = points[i].std_error;
            if (c - l).abs() < 1e-3 * resolution && (c - r).abs() < 1e-3 * resolution {
                warnings.push(format!("extremum near d = {d:e} is below Monte Carlo resolution"));
            }
            extrema.push(Extremum { d, phi: v, kind });
        }
        if points[n - 1].phi > points[n - 2].phi {
            extrema.push(Extremum {
                d: points[n - 1].d,
                phi: points[n - 1].phi,
                kind: ExtremumKind::LocalMax,
            });
            warnings.push(format!("maximum at the upper grid end d = {:e}", points[n - 1].d));
        }
    }

    // The curve is nearly flat around small d, where sampling noise in its
    // slope can create or shift maxima. Each maximum is moved to the fixed
    // point it flows to; maxima sharing a fixed point are merged.
    let mut polished: Vec<Extremum> = Vec::new();
    for e in extrema.iter().filter(|e| e.kind == ExtremumKind::LocalMax) {
        let (d, converged) = fe.fixed_point(e.d);
        if !converged {
            warnings.push(format!("fixed-point iteration from d = {:e} did not converge", e.d));
        }
        if polished.iter().any(|p| (p.d - d).abs() <= 1e-4 * p.d.max(d) + 1e-12) {
            continue;
        }
        polished.push(Extremum {
            d,
            phi: phi(d)?,
            kind: ExtremumKind::LocalMax,
        });
    }
    extrema.retain(|e| e.kind == ExtremumKind::LocalMin);
    extrema.extend(polished);
    extrema.sort_by(|a, b| a.d.total_cmp(&b.d));

    let maxima: Vec<&Extremum> = extrema.iter().filter(|e| e.kind == ExtremumKind::LocalMax).collect();
    let bayes = maxima
        .iter()
        .fold(None::<&Extremum>, |best, e| match best {
            Some(b) if b.phi >= e.phi => Some(b),
            _ => Some(e),
        })
        .expect("a nonempty grid always has a maximum");
    let amp = maxima.last().expect("a nonempty grid always has a maximum");
    Ok(FreeEntropyCurve {
        bayes_optimal_d: bayes.d,
        amp_d: amp.d,
        points,
        extrema,
        warnings,
    })
}

/// Row error covariance `d·I − (d/2^L)·𝟙` and its trace, the MSE per user.
pub fn mmse_from_d(d: f64, bits_per_block: usize) -> Result<(Array2<f64>, f64)> {
    if !(d >= 0.0) {
        return Err(Error::InputDomain(format!("d must be nonnegative, got {d}")));
    }
    let n = 1usize << bits_per_block;
    let off = d / n as f64;
    let e = Array2::from_shape_fn((n, n), |(i, j)| if i == j { d - off } else { -off });
    Ok((e, d * (n - 1) as f64))
}

/// Scalar channel `r = x + noise` equivalent to one row of the matrix problem,
/// with noise covariance `Σ = σ²·I + E/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentChannel {
    pub d_star: f64,
    pub alpha: f64,
    pub sigma2: f64,
    pub sections: usize,
}

impl EquivalentChannel {
    pub fn new(d_star: f64, alpha: f64, sigma2: f64, bits_per_block: usize) -> Result<Self> {
        if !(d_star >= 0.0) || !(alpha > 0.0) || !(sigma2 > 0.0) {
            return Err(Error::InputDomain(format!(
                "need d ≥ 0, alpha > 0, sigma2 > 0 (got {d_star}, {alpha}, {sigma2})"
            )));
        }
        Ok(Self {
            d_star,
            alpha,
            sigma2,
            sections: 1 << bits_per_block,
        })
    }

    /// Eigenvalue of `Σ` on the subspace orthogonal to `𝟙`.
    pub fn v(&self) -> f64 {
        self.sigma2 + self.d_star / self.alpha
    }

    fn structured(&self, on_perp: f64, on_ones: f64) -> Array2<f64> {
        // a·(I − 𝟙/N) + b·𝟙/N
        let n = self.sections as f64;
        Array2::from_shape_fn((self.sections, self.sections), |(i, j)| {
            let proj = if i == j { 1.0 - 1.0 / n } else { -1.0 / n };
            on_perp * proj + on_ones / n
        })
    }

    pub fn sigma(&self) -> Array2<f64> {
        self.structured(self.v(), self.sigma2)
    }

    pub fn sigma_inv(&self) -> Array2<f64> {
        self.structured(1.0 / self.v(), 1.0 / self.sigma2)
    }

    pub fn sigma_sqrt(&self) -> Array2<f64> {
        self.structured(self.v().sqrt(), self.sigma2.sqrt())
    }

    /// Eigenvalues in ascending order: `σ²` once, then `v` with multiplicity
    /// `2^L − 1`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e = vec![self.sigma2];
        e.extend(std::iter::repeat_n(self.v(), self.sections - 1));
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Inverts a symmetric positive definite matrix, or reports that it is not.
fn spd_inverse(sigma: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(mismatch("covariance", (n, n), sigma.dim()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| sigma[[i, j]]);
    let inv = m
        .cholesky()
        .ok_or_else(|| Error::InputDomain("covariance is not positive definite".into()))?
        .inverse();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| inv[(i, j)]))
}

/// Log-weights `−(e_i − r)ᵀ Σ⁻¹ (e_i − r)` of the one-hot atoms.
fn atom_log_weights(r: ArrayView1<f64>, sigma_inv: ArrayView2<f64>) -> Array1<f64> {
    let n = r.len();
    let w = sigma_inv.dot(&r);
    let quad = r.dot(&w);
    Array1::from_shape_fn(n, |i| -(quad - 2.0 * w[i] + sigma_inv[[i, i]]))
}

/// Posterior atom probabilities of the one-hot prior given `r` with noise
/// covariance `Σ`.
pub fn atom_weights(r: ArrayView1<f64>, sigma: ArrayView2<f64>) -> Result<Array1<f64>> {
    if r.len() != sigma.nrows() {
        return Err(mismatch("eta: r vs Sigma", sigma.nrows(), r.len()));
    }
    let inv = spd_inverse(sigma)?;
    Ok(normalize_log_weights(atom_log_weights(r, inv.view())))
}

fn normalize_log_weights(lw: Array1<f64>) -> Array1<f64> {
    let mx = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = lw.mapv(|v| (v - mx).exp());
    let s = w.sum();
    w / s
}

/// Posterior mean of a uniformly chosen one-hot vector observed through
/// Gaussian noise of covariance `Σ`. The mean of a one-hot vector is its
/// vector of atom probabilities.
pub fn eta_denoiser(r: ArrayView1<f64>, sigma: ArrayView2<f64>) -> Result<Array1<f64>> {
    atom_weights(r, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PePrediction {
    /// Per-user error probability over all sub-blocks.
    pub pe: f64,
    /// Error probability of one sub-block.
    pub p_sec: f64,
    pub std_error: f64,
}

/// Per-user error probability after MAP detection on the equivalent channel.
///
/// The true atom is `e₁`; the noise is `(c/2)·Σ^{1/2}·z`, with `c` the
/// coefficient of the configured Gaussian convention, and a section is in
/// error when another atom receives a larger posterior weight.
pub fn predict_pe(d_star: f64, config: &ReplicaConfig) -> Result<PePrediction> {
    config.validate()?;
    if !(d_star >= 0.0) {
        return Err(Error::InputDomain(format!("d must be nonnegative, got {d_star}")));
    }
    if config.sub_blocks == 0 {
        return Ok(PePrediction {
            pe: 0.0,
            p_sec: 0.0,
            std_error: 0.0,
        });
    }
    let ch = EquivalentChannel::new(d_star, config.alpha, config.sigma2, config.bits_per_block)?;
    let n = ch.sections;
    let root = ch.sigma_sqrt() * (0.5 * config.convention.coefficient());
    let inv = ch.sigma_inv();
    let z = GaussianSamples::new(config.mc_samples, n, config.seed ^ 0x5EC7_10E5);
    let zv = z.view();
    let (errs, _) = ordered_sum(zv.nrows(), |i| {
        let mut r = root.dot(&zv.row(i));
        r[0] += 1.0;
        let lw = atom_log_weights(r.view(), inv.view());
        if lw.iter().skip(1).any(|&w| w > lw[0]) {
            1.0
        } else {
            0.0
        }
    });
    let m = zv.nrows() as f64;
    let p_sec = errs / m;
    let se_sec = (p_sec * (1.0 - p_sec) / m).sqrt();
    let j = config.sub_blocks as f64;
    let pe = 1.0 - (1.0 - p_sec).powf(j);
    // delta method
    let std_error = j * (1.0 - p_sec).powf(j - 1.0) * se_sec;
    Ok(PePrediction { pe, p_sec, std_error })
}

/// Phase-transition window read off a sweep of local-maximum counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionWindow {
    /// Last sweep value before the transition.
    pub below: f64,
    /// First sweep value after the transition.
    pub above: f64,
}

/// Onset (`α₁`) and closing (`α₂`) windows of the bistable region in a sweep
/// of increasing `alphas`, given the number of local maxima at each.
pub fn transition_windows(
    alphas: &[f64],
    max_counts: &[usize],
) -> (Option<TransitionWindow>, Option<TransitionWindow>) {
    let mut onset = None;
    let mut close = None;
    for i in 1..alphas.len().min(max_counts.len()) {
        let (a, b) = (max_counts[i - 1] >= 2, max_counts[i] >= 2);
        if !a && b && onset.is_none() {
            onset = Some(TransitionWindow {
                below: alphas[i - 1],
                above: alphas[i],
            });
        }
        if a && !b {
            close = Some(TransitionWindow {
                below: alphas[i - 1],
                above: alphas[i],
            });
        }
    }
    (onset, close)
}

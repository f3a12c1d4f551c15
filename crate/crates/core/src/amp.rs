//! Hybrid approximate message passing for `Y = S·X + Ξ` with one-hot rows.
//!
//! Two variance models are provided. [`VarianceModel::Diagonal`] is the
//! textbook per-entry GAMP recursion with the one-hot constraint coupled
//! through lagged extrinsic LLRs. It ignores the correlation between the
//! `2^L` sections of a row and is unstable on the large instances of interest.
//! [`VarianceModel::RowCovariance`] keeps the full `2^L × 2^L` posterior
//! covariance of each row, averaged over users, which restores the Onsager
//! correction between sections and gives a decoder that tracks the replica
//! prediction. Both cost `O(K·M·2^L)` per iteration for fixed `L`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use num_complex::Complex64;

use crate::error::{mismatch, Error, Result};
use crate::system::{build_index_matrix, IndexMatrix};

/// Smallest value any variance is allowed to take.
pub const VARIANCE_FLOOR: f64 = 1e-300;
/// Lower bound on the noise estimate kept by the EM update.
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceModel {
    /// Per-entry variances and lagged LLR coupling between sections.
    Diagonal,
    /// Shared row covariance across sections with exact per-row posterior.
    RowCovariance,
}

/// Initial posterior variance of `X` for the diagonal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QxInit {
    /// `ε·ρ_k`.
    Amplitude,
    /// `ε(1 − ε)·ρ_k²`, the prior variance of one entry.
    PriorVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Stop once `Σ|Δx̂|² ≤ tol·Σ|x̂|²`.
    pub tol: f64,
    /// Starting noise variance; `None` uses the mean power of `Y`.
    pub sigma2_init: Option<f64>,
    pub em: bool,
    /// Weight of the new iterate in `x̂` and `ŝ`; 1 disables damping.
    pub damping: f64,
    pub variance_model: VarianceModel,
    pub qx_init: QxInit,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-7,
            sigma2_init: None,
            em: true,
            damping: 1.0,
            variance_model: VarianceModel::RowCovariance,
            qx_init: QxInit::Amplitude,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InputDomain(m));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(s) = self.sigma2_init {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma2_init must be positive, got {s}"));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        Ok(())
    }
}

/// Complete iteration state. Arrays indexed by `(m, j)` are `M × 2^L`, those
/// indexed by `(k, j)` are `K × 2^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub x_hat: Array2<f64>,
    pub q_x: Array2<f64>,
    pub p_hat: Array2<Complex64>,
    pub q_p: Array2<f64>,
    pub z_hat: Array2<Complex64>,
    pub q_z: Array2<f64>,
    pub s_hat: Array2<Complex64>,
    pub q_s: Array2<f64>,
    pub r_hat: Array2<Complex64>,
    pub q_r: Array2<f64>,
    pub llr: Array2<f64>,
    pub eps: Array2<f64>,
    /// Posterior probability that entry `(k, j)` is the active one.
    pub probs: Array2<f64>,
    /// User-averaged row covariance, only for [`VarianceModel::RowCovariance`].
    pub row_cov: Option<Array2<f64>>,
    /// Noise variance used by the next iteration.
    pub sigma2: f64,
    pub t: usize,
}

impl AmpState {
    /// True when every variance array is strictly positive and finite.
    pub fn variances_positive(&self) -> bool {
        [&self.q_x, &self.q_p, &self.q_z, &self.q_s, &self.q_r]
            .iter()
            .all(|a| a.iter().all(|&v| v > 0.0 && v.is_finite()))
            && self.sigma2 > 0.0
    }
}

/// Output of [`Decoder::run`].
#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub state: AmpState,
    pub iterations: usize,
    pub converged: bool,
    /// MSE after each iteration, filled only when the truth is supplied.
    pub mse_trace: Vec<f64>,
    pub sigma2_trace: Vec<f64>,
}

fn logistic(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Keeps `ε` strictly inside `(0, 1)` after rounding.
fn open_unit(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Per-entry log-likelihood ratios `(|r̂|² − |r̂ − ρ_k|²) / Qʳ` of the active
/// hypothesis against the zero hypothesis.
pub fn likelihood_scores(r_hat: ArrayView2<Complex64>, q_r: ArrayView2<f64>, rho: &[f64]) -> Result<Array2<f64>> {
    if r_hat.dim() != q_r.dim() {
        return Err(mismatch("likelihood_scores", r_hat.dim(), q_r.dim()));
    }
    if rho.len() != r_hat.nrows() {
        return Err(mismatch("likelihood_scores: rho", r_hat.nrows(), rho.len()));
    }
    let mut sc = Array2::zeros(r_hat.dim());
    for (k, mut row) in sc.outer_iter_mut().enumerate() {
        let r = rho[k];
        Zip::from(&mut row)
            .and(r_hat.row(k))
            .and(q_r.row(k))
            .for_each(|s, &x, &q| *s = (x.norm_sqr() - (x - r).norm_sqr()) / q);
    }
    Ok(sc)
}

/// `llr_j = −log Σ_{i≠j} exp(sc_i)` for one row, computed with max subtraction.
fn row_llr(sc: ArrayView1<f64>, out: &mut [f64]) {
    let n = sc.len();
    if n == 1 {
        out[0] = f64::INFINITY;
        return;
    }
    let (mut top, mut top_i) = (f64::NEG_INFINITY, 0);
    for (i, &v) in sc.iter().enumerate() {
        if v > top {
            top = v;
            top_i = i;
        }
    }
    let total: f64 = sc.iter().map(|&v| (v - top).exp()).sum();
    for (j, o) in out.iter_mut().enumerate() {
        if j == top_i {
            let second = sc
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = sc
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, &v)| (v - second).exp())
                .sum();
            *o = -(second + s.ln());
        } else {
            // the dominant term stays in the sum, so the difference is at least 1
            let rest = total - (sc[j] - top).exp();
            *o = -(top + rest.ln());
        }
    }
}

/// Row-wise extrinsic LLRs from likelihood scores.
pub fn llr_from_scores(scores: ArrayView2<f64>) -> Array2<f64> {
    let mut llr = Array2::zeros(scores.dim());
    for (sc, mut out) in scores.outer_iter().zip(llr.outer_iter_mut()) {
        row_llr(sc, out.as_slice_mut().expect("standard layout"));
    }
    llr
}

/// Extrinsic LLR of each entry being the active one, given the scalar
/// pseudo-observations of the other sections of the same row.
pub fn compute_llr(r_hat: ArrayView2<Complex64>, q_r: ArrayView2<f64>, rho: &[f64]) -> Result<Array2<f64>> {
    Ok(llr_from_scores(likelihood_scores(r_hat, q_r, rho)?.view()))
}

/// `ε = 1 / (1 + e^{−llr})`, kept strictly inside `(0, 1)`.
pub fn eps_from_llr(llr: ArrayView2<f64>) -> Array2<f64> {
    llr.mapv(|l| open_unit(logistic(l)))
}

/// Posterior mean and variance from scores and prior log-odds.
fn posterior(
    scores: ArrayView2<f64>,
    prior_logit: ArrayView2<f64>,
    rho: &[f64],
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let probs = Zip::from(scores).and(prior_logit).map_collect(|&s, &l| logistic(s + l));
    let mut x = probs.clone();
    let mut q = Array2::zeros(probs.dim());
    for (k, (mut xr, mut qr)) in x.outer_iter_mut().zip(q.outer_iter_mut()).enumerate() {
        let r = rho[k];
        Zip::from(&mut xr).and(&mut qr).for_each(|xv, qv| {
            let p = *xv;
            *xv = r * p;
            *qv = (r * r * (p - p * p)).max(VARIANCE_FLOOR);
        });
    }
    (x, q, probs)
}

/// Posterior mean `ρ_k·P̂` and variance `ρ_k²·(P̂ − P̂²)` of each entry under
/// the Bernoulli prior `ε` and the scalar Gaussian channel `(r̂, Qʳ)`.
pub fn denoise(
    r_hat: ArrayView2<Complex64>,
    q_r: ArrayView2<f64>,
    eps: ArrayView2<f64>,
    rho: &[f64],
) -> Result<(Array2<f64>, Array2<f64>)> {
    if eps.dim() != r_hat.dim() {
        return Err(mismatch("denoise: eps", r_hat.dim(), eps.dim()));
    }
    let sc = likelihood_scores(r_hat, q_r, rho)?;
    let logit = eps.mapv(|e| e.ln() - (-e).ln_1p());
    let (x, q, _) = posterior(sc.view(), logit.view(), rho);
    Ok((x, q))
}

/// EM re-estimate `mean(|y − ẑ|² + Qᶻ)` of the noise variance.
pub fn em_noise_update(y: ArrayView2<Complex64>, z_hat: ArrayView2<Complex64>, q_z: ArrayView2<f64>) -> Result<f64> {
    if y.dim() != z_hat.dim() || y.dim() != q_z.dim() {
        return Err(mismatch("em_noise_update", y.dim(), (z_hat.dim(), q_z.dim())));
    }
    let mut acc = 0.0;
    Zip::from(y)
        .and(z_hat)
        .and(q_z)
        .for_each(|&a, &b, &q| acc += (a - b).norm_sqr() + q);
    Ok(acc / y.len() as f64)
}

/// Hard decision: the largest entry of each row becomes `ρ_k`, ties go to the
/// smallest column.
pub fn map_threshold(x_hat: ArrayView2<f64>, rho: &[f64]) -> Result<IndexMatrix> {
    if rho.len() != x_hat.nrows() {
        return Err(mismatch("map_threshold: rho", x_hat.nrows(), rho.len()));
    }
    let support: Vec<usize> = x_hat
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    build_index_matrix(&support, rho, x_hat.ncols())
}

fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|v| Complex64::new(v, 0.0))
}

fn check_finite_c(a: &Array2<Complex64>, iteration: usize, quantity: &'static str) -> Result<()> {
    if a.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { iteration, quantity })
    }
}

fn check_finite(a: &Array2<f64>, iteration: usize, quantity: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { iteration, quantity })
    }
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Decoder bound to one channel matrix and amplitude vector.
#[derive(Debug, Clone)]
pub struct Decoder {
    config: AmpConfig,
    rho: Vec<f64>,
    sections: usize,
    s: Array2<Complex64>,
    s_h: Array2<Complex64>,
    s_abs2: Array2<f64>,
    col_norm2: Array1<f64>,
}

impl Decoder {
    /// `s` is the `M × K` channel matrix, `sections` the codebook size `2^L`.
    pub fn new(config: AmpConfig, s: ArrayView2<Complex64>, rho: &[f64], sections: usize) -> Result<Self> {
        config.validate()?;
        if rho.len() != s.ncols() {
            return Err(mismatch("decoder: rho", s.ncols(), rho.len()));
        }
        if sections < 2 {
            return Err(Error::InputDomain(format!("need at least 2 sections, got {sections}")));
        }
        if s.nrows() == 0 || s.ncols() == 0 {
            return Err(Error::InputDomain("empty channel matrix".into()));
        }
        let s_abs2 = s.mapv(|v| v.norm_sqr());
        let col_norm2 = s_abs2.sum_axis(Axis(0));
        if col_norm2.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InputDomain("channel has a zero column".into()));
        }
        Ok(Self {
            config,
            rho: rho.to_vec(),
            sections,
            s: s.to_owned(),
            s_h: s.t().mapv(|v| v.conj()),
            s_abs2,
            col_norm2,
        })
    }

    pub fn config(&self) -> &AmpConfig {
        &self.config
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    fn check_y(&self, y: ArrayView2<Complex64>) -> Result<()> {
        let want = (self.s.nrows(), self.sections);
        if y.dim() != want {
            return Err(mismatch("decoder: observation", want, y.dim()));
        }
        Ok(())
    }

    /// State before the first iteration: `x̂ = 0`, `ŝ = 0`, `ε = 1/2^L`.
    pub fn init(&self, y: ArrayView2<Complex64>) -> Result<AmpState> {
        self.check_y(y)?;
        let (m, k, n) = (self.s.nrows(), self.s.ncols(), self.sections);
        let e0 = 1.0 / n as f64;
        let q_x = Array2::from_shape_fn((k, n), |(u, _)| {
            let r = self.rho[u];
            match (self.config.variance_model, self.config.qx_init) {
                (VarianceModel::Diagonal, QxInit::Amplitude) => e0 * r,
                _ => e0 * (1.0 - e0) * r * r,
            }
        });
        let sigma2 = match self.config.sigma2_init {
            Some(s) => s,
            None => (y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64).max(SIGMA2_FLOOR),
        };
        let zeros_c = |r, c| Array2::<Complex64>::zeros((r, c));
        Ok(AmpState {
            x_hat: Array2::zeros((k, n)),
            q_x,
            p_hat: zeros_c(m, n),
            q_p: Array2::from_elem((m, n), 1.0),
            z_hat: zeros_c(m, n),
            q_z: Array2::from_elem((m, n), 1.0),
            s_hat: zeros_c(m, n),
            q_s: Array2::from_elem((m, n), 1.0),
            r_hat: zeros_c(k, n),
            q_r: Array2::from_elem((k, n), 1.0),
            llr: Array2::from_elem((k, n), -((n - 1) as f64).ln()),
            eps: Array2::from_elem((k, n), e0),
            probs: Array2::from_elem((k, n), e0),
            row_cov: None,
            sigma2,
            t: 0,
        })
    }

    /// One pass of the message-passing recursion. The noise variance is left
    /// unchanged; see [`Decoder::em_step`].
    pub fn step(&self, state: &mut AmpState, y: ArrayView2<Complex64>) -> Result<()> {
        self.check_y(y)?;
        match self.config.variance_model {
            VarianceModel::Diagonal => self.step_diagonal(state, y),
            VarianceModel::RowCovariance => self.step_row_cov(state, y),
        }?;
        state.t += 1;
        check_finite(&state.x_hat, state.t, "x_hat")?;
        check_finite_c(&state.s_hat, state.t, "s_hat")?;
        Ok(())
    }

    /// Replaces the noise variance by its EM estimate.
    pub fn em_step(&self, state: &mut AmpState, y: ArrayView2<Complex64>) -> Result<()> {
        let s2 = em_noise_update(y, state.z_hat.view(), state.q_z.view())?;
        if !s2.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: state.t,
                quantity: "sigma2",
            });
        }
        state.sigma2 = s2.max(SIGMA2_FLOOR);
        Ok(())
    }

    fn step_diagonal(&self, st: &mut AmpState, y: ArrayView2<Complex64>) -> Result<()> {
        let s2 = st.sigma2;
        let damp = self.config.damping;

        let q_p = self.s_abs2.dot(&st.q_x).mapv(|v| v.max(VARIANCE_FLOOR));
        let mut p = self.s.dot(&to_complex(&st.x_hat));
        Zip::from(&mut p)
            .and(&q_p)
            .and(&st.s_hat)
            .for_each(|p, &q, &s| *p -= s * q);

        let q_z = q_p.mapv(|q| (q * s2 / (q + s2)).max(VARIANCE_FLOOR));
        let z = Zip::from(y)
            .and(&p)
            .and(&q_p)
            .map_collect(|&y, &p, &q| (y * q + p * s2) / (q + s2));
        let q_s = q_p.mapv(|q| 1.0 / (q + s2));
        let mut s_new = Zip::from(y).and(&p).and(&q_s).map_collect(|&y, &p, &qs| (y - p) * qs);
        if damp < 1.0 {
            Zip::from(&mut s_new)
                .and(&st.s_hat)
                .for_each(|n, &o| *n = *n * damp + o * (1.0 - damp));
        }

        let q_r = self.s_abs2.t().dot(&q_s).mapv(|v| (1.0 / v).max(VARIANCE_FLOOR));
        let mut r = self.s_h.dot(&s_new);
        Zip::from(&mut r)
            .and(&q_r)
            .and(&st.x_hat)
            .for_each(|r, &q, &x| *r = *r * q + x);

        let sc = likelihood_scores(r.view(), q_r.view(), &self.rho)?;
        let (mut x_new, q_x, probs) = posterior(sc.view(), st.llr.view(), &self.rho);
        if damp < 1.0 {
            Zip::from(&mut x_new)
                .and(&st.x_hat)
                .for_each(|n, &o| *n = *n * damp + o * (1.0 - damp));
        }
        let llr = llr_from_scores(sc.view());

        st.eps = eps_from_llr(llr.view());
        st.llr = llr;
        st.q_p = q_p;
        st.p_hat = p;
        st.q_z = q_z;
        st.z_hat = z;
        st.q_s = q_s;
        st.s_hat = s_new;
        st.q_r = q_r;
        st.r_hat = r;
        st.x_hat = x_new;
        st.q_x = q_x;
        st.probs = probs;
        Ok(())
    }

    /// User-averaged row covariance `(1/M) Σ_k ‖s_k‖² ρ_k² (diag P_k − P_k P_kᵀ)`.
    fn row_covariance(&self, probs: &Array2<f64>) -> Array2<f64> {
        let n = self.sections;
        let m = self.s.nrows() as f64;
        let w = Array1::from_shape_fn(self.rho.len(), |k| self.col_norm2[k] * self.rho[k] * self.rho[k] / m);
        let diag = probs.t().dot(&w);
        let weighted = probs * &w.view().insert_axis(Axis(1));
        let mut cov = -weighted.t().dot(probs);
        for j in 0..n {
            cov[[j, j]] += diag[j];
        }
        // symmetrize against round-off
        let t = cov.t().to_owned();
        (cov + t) * 0.5
    }

    fn step_row_cov(&self, st: &mut AmpState, y: ArrayView2<Complex64>) -> Result<()> {
        let n = self.sections;
        let s2 = st.sigma2;
        let damp = self.config.damping;

        let qp = self.row_covariance(&st.probs);
        let qp_c = to_complex(&qp);
        let p = self.s.dot(&to_complex(&st.x_hat)) - st.s_hat.dot(&qp_c);

        let mut a = to_na(&qp);
        for j in 0..n {
            a[(j, j)] += s2;
        }
        let v = a
            .clone()
            .cholesky()
            .ok_or(Error::NumericalFailure {
                iteration: st.t + 1,
                quantity: "output covariance",
            })?
            .inverse();
        let v_nd = from_na(&v);
        let a_nd = from_na(&a);

        let mut s_new = (y.to_owned() - &p).dot(&to_complex(&v_nd));
        if damp < 1.0 {
            Zip::from(&mut s_new)
                .and(&st.s_hat)
                .for_each(|n, &o| *n = *n * damp + o * (1.0 - damp));
        }
        let z = &p + &s_new.dot(&qp_c);
        let qz = from_na(&(to_na(&qp) - to_na(&qp) * &v * to_na(&qp)));

        let b = self.s_h.dot(&s_new);
        let vx = st.x_hat.dot(&v_nd);
        let r_off = b.dot(&to_complex(&a_nd));
        let (k, _) = st.x_hat.dim();
        let mut sc = Array2::zeros((k, n));
        let mut r = Array2::zeros((k, n));
        let mut q_r = Array2::zeros((k, n));
        for u in 0..k {
            let nrm = self.col_norm2[u];
            let rho = self.rho[u];
            for j in 0..n {
                let uj = nrm * vx[[u, j]] + b[[u, j]].re;
                sc[[u, j]] = 2.0 * rho * uj - rho * rho * nrm * v_nd[[j, j]];
                r[[u, j]] = st.x_hat[[u, j]] + r_off[[u, j]] / nrm;
                q_r[[u, j]] = (a_nd[[j, j]] / nrm).max(VARIANCE_FLOOR);
            }
        }

        let llr = llr_from_scores(sc.view());
        let (mut x_new, q_x, probs) = posterior(sc.view(), llr.view(), &self.rho);
        if damp < 1.0 {
            Zip::from(&mut x_new)
                .and(&st.x_hat)
                .for_each(|n, &o| *n = *n * damp + o * (1.0 - damp));
        }

        let m = self.s.nrows();
        st.q_p = Array2::from_shape_fn((m, n), |(_, j)| qp[[j, j]].max(VARIANCE_FLOOR));
        st.q_z = Array2::from_shape_fn((m, n), |(_, j)| qz[[j, j]].max(VARIANCE_FLOOR));
        st.q_s = Array2::from_shape_fn((m, n), |(_, j)| v_nd[[j, j]]);
        st.eps = eps_from_llr(llr.view());
        st.llr = llr;
        st.p_hat = p;
        st.z_hat = z;
        st.s_hat = s_new;
        st.r_hat = r;
        st.q_r = q_r;
        st.x_hat = x_new;
        st.q_x = q_x;
        st.probs = probs;
        st.row_cov = Some(qp);
        Ok(())
    }

    /// Iterates until the relative change of `x̂` drops below the tolerance
    /// or `max_iters` passes have run. Not converging is reported through
    /// [`DecodeOutput::converged`], not as an error.
    pub fn run(&self, y: ArrayView2<Complex64>, truth: Option<ArrayView2<f64>>) -> Result<DecodeOutput> {
        let mut state = self.init(y)?;
        let mut mse_trace = Vec::new();
        let mut sigma2_trace = Vec::new();
        let mut converged = false;
        for _ in 0..self.config.max_iters {
            let prev = state.x_hat.clone();
            self.step(&mut state, y)?;
            if self.config.em {
                self.em_step(&mut state, y)?;
            }
            sigma2_trace.push(state.sigma2);
            if let Some(x) = truth {
                mse_trace.push(crate::system::mse(state.x_hat.view(), x)?);
            }
            let change: f64 = Zip::from(&state.x_hat)
                .and(&prev)
                .fold(0.0, |a, &n, &o| a + (n - o) * (n - o));
            let norm: f64 = state.x_hat.iter().map(|v| v * v).sum();
            if change <= self.config.tol * norm {
                converged = true;
                break;
            }
        }
        Ok(DecodeOutput {
            iterations: state.t,
            state,
            converged,
            mse_trace,
            sigma2_trace,
        })
    }
}

/// Builds a [`Decoder`] for `s` and runs it on `y`.
pub fn run_decoder(
    config: &AmpConfig,
    y: ArrayView2<Complex64>,
    s: ArrayView2<Complex64>,
    rho: &[f64],
    truth: Option<ArrayView2<f64>>,
) -> Result<DecodeOutput> {
    Decoder::new(config.clone(), s, rho, y.ncols())?.run(y, truth)
}

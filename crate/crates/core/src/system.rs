//! Second-phase signal model: configuration, messages, channels, received
//! blocks and the error metrics.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{mismatch, Error, Result};
use crate::rng::complex_normal;

/// Per-user transmit amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum Amplitudes {
    Uniform(f64),
    PerUser(Vec<f64>),
}

impl Default for Amplitudes {
    fn default() -> Self {
        Amplitudes::Uniform(1.0)
    }
}

/// Scheme and channel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Active users `K`.
    pub users: usize,
    /// Base-station antennas `M`.
    pub antennas: usize,
    /// Information bits per user `B`.
    pub total_bits: usize,
    /// Bits carried by the first-phase preamble `L0`.
    pub preamble_bits: usize,
    /// Bits per second-phase sub-block `L`.
    pub bits_per_block: usize,
    /// First-phase codeword length `n`.
    pub preamble_len: usize,
    /// Complex noise variance per element of the equivalent model.
    pub sigma2: f64,
    /// Variance of the channel-estimate error, relative to the `1/M`
    /// normalization of the channel entries.
    pub csi_error_var: f64,
    pub rho: Amplitudes,
}

impl SystemConfig {
    /// A single sub-block configuration with unit amplitudes and no CSI error.
    pub fn new(users: usize, antennas: usize, bits_per_block: usize, sigma2: f64) -> Result<Self> {
        let cfg = Self {
            users,
            antennas,
            total_bits: 16 + bits_per_block,
            preamble_bits: 16,
            bits_per_block,
            preamble_len: 500,
            sigma2,
            csi_error_var: 0.0,
            rho: Amplitudes::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InputDomain(msg));
        if self.users == 0 || self.antennas == 0 || self.bits_per_block == 0 {
            return bad(format!(
                "users, antennas and bits_per_block must be positive (got {}, {}, {})",
                self.users, self.antennas, self.bits_per_block
            ));
        }
        if self.bits_per_block > 20 {
            return bad(format!("bits_per_block {} is too large", self.bits_per_block));
        }
        if self.total_bits < self.preamble_bits {
            return bad(format!(
                "total_bits {} smaller than preamble_bits {}",
                self.total_bits, self.preamble_bits
            ));
        }
        if !(self.total_bits - self.preamble_bits).is_multiple_of(self.bits_per_block) {
            return bad(format!(
                "total_bits - preamble_bits = {} is not divisible by bits_per_block {}",
                self.total_bits - self.preamble_bits,
                self.bits_per_block
            ));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.csi_error_var >= 0.0 && self.csi_error_var.is_finite()) {
            return bad(format!("csi_error_var must be nonnegative, got {}", self.csi_error_var));
        }
        match &self.rho {
            Amplitudes::Uniform(r) if !(*r > 0.0 && r.is_finite()) => {
                return bad(format!("rho must be positive, got {r}"));
            }
            Amplitudes::PerUser(v) => {
                if v.len() != self.users {
                    return Err(mismatch("rho", self.users, v.len()));
                }
                if let Some(r) = v.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                    return bad(format!("rho must be positive, got {r}"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Number of second-phase sub-blocks `(B - L0) / L`.
    pub fn sub_blocks(&self) -> usize {
        (self.total_bits - self.preamble_bits) / self.bits_per_block
    }

    /// Codebook size `2^L`.
    pub fn sections(&self) -> usize {
        1 << self.bits_per_block
    }

    /// Antenna-to-user ratio `M / K`.
    pub fn alpha(&self) -> f64 {
        self.antennas as f64 / self.users as f64
    }

    pub fn rho_vec(&self) -> Vec<f64> {
        match &self.rho {
            Amplitudes::Uniform(r) => vec![*r; self.users],
            Amplitudes::PerUser(v) => v.clone(),
        }
    }
}

/// Row-one-hot matrix of codeword choices, `K × 2^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMatrix {
    entries: Array2<f64>,
    support: Vec<usize>,
}

impl IndexMatrix {
    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    /// Column index of the nonzero entry of each row.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn sections(&self) -> usize {
        self.entries.ncols()
    }

    /// Checks that every row has exactly one nonzero, located at `support[k]`.
    pub fn check_one_hot(&self) -> bool {
        self.entries
            .axis_iter(Axis(0))
            .zip(&self.support)
            .all(|(row, &j)| row[j] > 0.0 && row.iter().enumerate().all(|(i, &v)| i == j || v == 0.0))
    }
}

/// Places `rho[k]` at column `messages[k]` of row `k`.
pub fn build_index_matrix(messages: &[usize], rho: &[f64], sections: usize) -> Result<IndexMatrix> {
    if messages.len() != rho.len() {
        return Err(mismatch("build_index_matrix", messages.len(), rho.len()));
    }
    let mut entries = Array2::zeros((messages.len(), sections));
    for (k, (&m, &r)) in messages.iter().zip(rho).enumerate() {
        if m >= sections {
            return Err(Error::InputDomain(format!(
                "message {m} of user {k} outside [0, {sections})"
            )));
        }
        if !(r > 0.0) {
            return Err(Error::InputDomain(format!("rho of user {k} must be positive, got {r}")));
        }
        entries[[k, m]] = r;
    }
    Ok(IndexMatrix {
        entries,
        support: messages.to_vec(),
    })
}

/// Uniform message indices for every user and sub-block, `K × (J-1)`.
pub fn sample_messages<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Array2<usize> {
    let n = config.sections();
    Array2::from_shape_simple_fn((config.users, config.sub_blocks()), || rng.random_range(0..n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    True,
    Estimated,
}

/// Normalized channel signatures, `M × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub s: Array2<Complex64>,
    pub kind: ChannelKind,
}

impl ChannelMatrix {
    pub fn antennas(&self) -> usize {
        self.s.nrows()
    }

    pub fn users(&self) -> usize {
        self.s.ncols()
    }
}

/// I.i.d. 𝒩_ℂ(0, 1/M) entries.
pub fn sample_channel<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelMatrix {
    let var = 1.0 / config.antennas as f64;
    let s = Array2::from_shape_simple_fn((config.antennas, config.users), || complex_normal(rng, var));
    ChannelMatrix {
        s,
        kind: ChannelKind::True,
    }
}

/// Adds independent 𝒩_ℂ(0, csi_error_var / M) errors to the true channel.
pub fn inject_csi_error<R: Rng + ?Sized>(
    channel: &ChannelMatrix,
    csi_error_var: f64,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if !(csi_error_var >= 0.0 && csi_error_var.is_finite()) {
        return Err(Error::InputDomain(format!(
            "csi_error_var must be nonnegative, got {csi_error_var}"
        )));
    }
    let mut s = channel.s.clone();
    if csi_error_var > 0.0 {
        let var = csi_error_var / channel.antennas() as f64;
        s.mapv_inplace(|v| v + complex_normal(rng, var));
    }
    Ok(ChannelMatrix {
        s,
        kind: ChannelKind::Estimated,
    })
}

/// Second-phase observation of one sub-block.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    /// Despread equivalent observation, `M × 2^L`.
    pub y: Array2<Complex64>,
    /// Received samples before despreading, `2^L × M`, when produced by
    /// [`transmit_raw`].
    pub raw: Option<Array2<Complex64>>,
}

fn noiseless(x: ArrayView2<f64>, s: ArrayView2<Complex64>) -> Result<Array2<Complex64>> {
    if s.ncols() != x.nrows() {
        return Err(mismatch("transmit: channel users vs index rows", s.ncols(), x.nrows()));
    }
    let (m, n) = (s.nrows(), x.ncols());
    let mut y = Array2::<Complex64>::zeros((m, n));
    for (k, xrow) in x.outer_iter().enumerate() {
        let col = s.column(k);
        for (j, &v) in xrow.iter().enumerate() {
            if v != 0.0 {
                y.column_mut(j).zip_mut_with(&col, |a, &b| *a += b * v);
            }
        }
    }
    Ok(y)
}

/// Equivalent-model observation `Y = S·X + Ξ` with Ξ i.i.d. 𝒩_ℂ(0, sigma2).
///
/// Despreading with an orthonormal codebook leaves white noise white, so the
/// spreading and despreading steps are skipped.
pub fn transmit_and_despread<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    channel: &ChannelMatrix,
    sigma2: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if !(sigma2 >= 0.0) {
        return Err(Error::InputDomain(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    let mut y = noiseless(x, channel.s.view())?;
    if sigma2 > 0.0 {
        y.mapv_inplace(|v| v + complex_normal(rng, sigma2));
    }
    Ok(ReceivedBlock { y, raw: None })
}

/// Unitary DFT codebook with `n` codewords of length `n`, one per column.
pub fn dft_codebook(n: usize) -> Array2<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(t, j)| {
        Complex64::from_polar(scale, -2.0 * PI * (t * j) as f64 / n as f64)
    })
}

/// Spreads with the DFT codebook, adds noise to the `2^L × M` raw samples and
/// despreads with the conjugate transpose.
pub fn transmit_raw<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    channel: &ChannelMatrix,
    sigma2: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if !(sigma2 >= 0.0) {
        return Err(Error::InputDomain(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    let c = dft_codebook(x.ncols());
    // raw = C · Xᵀ · Sᵀ + noise, i.e. each user sends its codeword on every antenna
    let sx = noiseless(x, channel.s.view())?;
    let mut raw = c.dot(&sx.t());
    if sigma2 > 0.0 {
        raw.mapv_inplace(|v| v + complex_normal(rng, sigma2));
    }
    let y = c.t().mapv(|v| v.conj()).dot(&raw).reversed_axes();
    Ok(ReceivedBlock { y, raw: Some(raw) })
}

/// Per-user error indicators: user `k` is wrong if its row differs in any
/// sub-block.
pub fn user_errors(decoded: &[IndexMatrix], truth: &[IndexMatrix]) -> Result<Vec<bool>> {
    if decoded.len() != truth.len() {
        return Err(mismatch("per_user_error: sub-blocks", truth.len(), decoded.len()));
    }
    let users = truth.first().map_or(0, IndexMatrix::users);
    let mut wrong = vec![false; users];
    for (d, t) in decoded.iter().zip(truth) {
        if d.entries.dim() != t.entries.dim() || t.users() != users {
            return Err(mismatch(
                "per_user_error: block shape",
                t.entries.dim(),
                d.entries.dim(),
            ));
        }
        for (k, flag) in wrong.iter_mut().enumerate() {
            *flag |= d.entries.row(k) != t.entries.row(k);
        }
    }
    Ok(wrong)
}

/// Fraction of users with at least one wrongly decoded sub-block.
pub fn per_user_error(decoded: &[IndexMatrix], truth: &[IndexMatrix]) -> Result<f64> {
    let wrong = user_errors(decoded, truth)?;
    if wrong.is_empty() {
        return Ok(0.0);
    }
    Ok(wrong.iter().filter(|w| **w).count() as f64 / wrong.len() as f64)
}

/// `(1/K) Σ_k ‖x_k − x̂_k‖²`.
pub fn mse(x_hat: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<f64> {
    if x_hat.dim() != x.dim() {
        return Err(mismatch("mse", x.dim(), x_hat.dim()));
    }
    if x.nrows() == 0 {
        return Ok(0.0);
    }
    let sq: f64 = x_hat.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / x.nrows() as f64)
}

/// Total spectral efficiency `K·B / (n + (B − L0)·2^L / L)` in bits per
/// channel use.
pub fn spectral_efficiency(config: &SystemConfig) -> f64 {
    let second =
        (config.total_bits - config.preamble_bits) as f64 * config.sections() as f64 / config.bits_per_block as f64;
    (config.users * config.total_bits) as f64 / (config.preamble_len as f64 + second)
}

/// Summary metrics of one end-to-end run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub pe: f64,
    pub mse: f64,
    pub spectral_efficiency: f64,
}

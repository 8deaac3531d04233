//! Depolarizing noise reduced to independent binary symmetric channels, and
//! the a priori LLRs fed to the decoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::BitVec;
use crate::mp::{Algorithm, LlrVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid depolarizing parameters: {0}")]
    InvalidParams(String),
    #[error("flip probability {0} gives infinite sum-product priors")]
    DegeneratePrior(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Z,
}

/// Per-qubit Pauli error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolarizingParams {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl DepolarizingParams {
    pub fn new(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, ChannelError> {
        if [p_x, p_y, p_z].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ChannelError::InvalidParams(format!(
                "components must be finite and nonnegative, got ({p_x}, {p_y}, {p_z})"
            )));
        }
        if p_x + p_y + p_z >= 1.0 {
            return Err(ChannelError::InvalidParams(format!(
                "total probability {} must be below 1",
                p_x + p_y + p_z
            )));
        }
        Ok(DepolarizingParams { p_x, p_y, p_z })
    }

    /// `p_x = p_y = p_z = p / 3`.
    pub fn uniform(p: f64) -> Result<Self, ChannelError> {
        Self::new(p / 3.0, p / 3.0, p / 3.0)
    }

    pub fn total(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }
}

/// Flip probability of the BSC seen by the decoder of the given error type:
/// `p_x + p_y` for X errors, `p_z + p_y` for Z errors.
pub fn marginal_flip_prob(params: &DepolarizingParams, kind: PauliKind) -> f64 {
    match kind {
        PauliKind::X => params.p_x + params.p_y,
        PauliKind::Z => params.p_z + params.p_y,
    }
}

/// Reproducible random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws `n` independent bits, each set with probability `eps`.
pub fn sample_x_error<R: Rng + ?Sized>(n: usize, eps: f64, rng: &mut R) -> BitVec {
    debug_assert!((0.0..1.0).contains(&eps));
    let mut e = BitVec::zeros(n);
    for i in 0..n {
        if rng.gen::<f64>() < eps {
            e.set(i, true);
        }
    }
    e
}

/// A priori LLRs: `ln((1 - eps) / eps)` for sum-product, the constant 1 for
/// min-sum and normalized min-sum.
pub fn a_priori_llrs(n: usize, eps: f64, algorithm: Algorithm) -> Result<LlrVector, ChannelError> {
    match algorithm {
        Algorithm::SumProduct => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(ChannelError::DegeneratePrior(eps));
            }
            Ok(LlrVector(vec![((1.0 - eps) / eps).ln(); n]))
        }
        Algorithm::MinSum | Algorithm::NormalizedMinSum { .. } => Ok(LlrVector(vec![1.0; n])),
    }
}

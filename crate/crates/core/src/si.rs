//! Stabilizer inactivation post-processing for X-error decoding.
//!
//! When message passing on `hz` fails, X-checks are ranked by reliability
//! (sum of `|soft|` over their support) and inactivated one at a time, least
//! reliable first. Inactivating a check removes the qubits in its support
//! from the Tanner graph. Message passing reruns on the remaining block
//! `h_out`; the removed qubits are then recovered from a small GF(2) system
//! `h_in · e_in = s_in + a · ê_out`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::CssCode;
use crate::gf2::{self, BitVec, SparseBitMatrix};
use crate::mp::{hard_decision, DecodeError, DecodeOutcome, DecoderConfig, LlrVector, MpDecoder, Schedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SiError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("check index {index} out of range for {rows} X-checks")]
    CheckOutOfRange { index: usize, rows: usize },
    #[error("invalid SI config: {0}")]
    InvalidConfig(String),
}

/// Block split of `hz` around a set of inactivated columns:
///
/// ```text
///        in_cols  out_cols
/// in_rows  [ h_in   a     ]
/// out_rows [ 0      h_out ]
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    pub in_cols: Vec<usize>,
    pub out_cols: Vec<usize>,
    pub in_rows: Vec<usize>,
    pub out_rows: Vec<usize>,
    pub h_in: SparseBitMatrix,
    pub a: SparseBitMatrix,
    pub h_out: SparseBitMatrix,
}

/// Splits `hz` by the column set `support`. `in_rows` are the rows touching
/// at least one column of `support`.
pub fn restrict(hz: &SparseBitMatrix, support: &[usize]) -> Restriction {
    let mut inside = vec![false; hz.cols()];
    for &c in support {
        inside[c] = true;
    }
    let in_cols: Vec<usize> = (0..hz.cols()).filter(|&c| inside[c]).collect();
    let out_cols: Vec<usize> = (0..hz.cols()).filter(|&c| !inside[c]).collect();
    let (in_rows, out_rows): (Vec<usize>, Vec<usize>) =
        (0..hz.rows()).partition(|&r| hz.row(r).iter().any(|&c| inside[c]));
    let r = Restriction {
        h_in: hz.submatrix(&in_rows, &in_cols),
        a: hz.submatrix(&in_rows, &out_cols),
        h_out: hz.submatrix(&out_rows, &out_cols),
        in_cols,
        out_cols,
        in_rows,
        out_rows,
    };
    debug_assert!(r.out_rows.iter().all(|&row| hz.row(row).iter().all(|&c| !inside[c])));
    r
}

/// Maps a layer partition of all rows onto the surviving `out_rows`,
/// renumbered, dropping layers left empty.
fn restrict_layers(layers: &[Vec<usize>], out_rows: &[usize], rows: usize) -> Vec<Vec<usize>> {
    let mut position = vec![None; rows];
    for (k, &r) in out_rows.iter().enumerate() {
        position[r] = Some(k);
    }
    layers
        .iter()
        .map(|layer| layer.iter().filter_map(|&r| position[r]).collect::<Vec<_>>())
        .filter(|layer| !layer.is_empty())
        .collect()
}

/// `Σ_{i ∈ supp(row)} |soft_i|` for X-check `row` of `hx`.
pub fn check_reliability(row: usize, soft: &[f64], hx: &SparseBitMatrix) -> Result<f64, SiError> {
    if soft.len() != hx.cols() {
        return Err(SiError::Decode(DecodeError::DimensionMismatch {
            what: "soft output",
            expected: hx.cols(),
            found: soft.len(),
        }));
    }
    if row >= hx.rows() {
        return Err(SiError::CheckOutOfRange {
            index: row,
            rows: hx.rows(),
        });
    }
    Ok(reliability_unchecked(hx.row(row), soft))
}

#[inline]
fn reliability_unchecked(support: &[usize], soft: &[f64]) -> f64 {
    support.iter().map(|&i| soft[i].abs()).sum()
}

/// Reliabilities of every X-check.
pub fn all_check_reliabilities(hx: &SparseBitMatrix, soft: &[f64]) -> Vec<f64> {
    (0..hx.rows()).map(|r| reliability_unchecked(hx.row(r), soft)).collect()
}

/// Number of checks strictly less reliable than `row`.
pub fn rank_of_check(row: usize, reliabilities: &[f64]) -> usize {
    let own = reliabilities[row];
    reliabilities.iter().filter(|&&x| x < own).count()
}

/// Check indices sorted by increasing reliability, ties by index.
pub fn reliability_order(reliabilities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reliabilities.len()).collect();
    order.sort_by(|&a, &b| reliabilities[a].total_cmp(&reliabilities[b]).then(a.cmp(&b)));
    order
}

/// Change in soft information separating `e` from `e + r_x`:
/// `Σ_{supp(hard+e)} |soft| - Σ_{supp(hard+e+r_x)} |soft|`.
pub fn delta_metric(e: &BitVec, r_x: &BitVec, hard: &BitVec, soft: &[f64]) -> f64 {
    assert!(e.len() == r_x.len() && e.len() == hard.len() && e.len() == soft.len());
    let mut to_e = hard.clone();
    to_e ^= e;
    let mut to_e_prime = to_e.clone();
    to_e_prime ^= r_x;
    let left: f64 = to_e.iter_ones().map(|i| soft[i].abs()).sum();
    let right: f64 = to_e_prime.iter_ones().map(|i| soft[i].abs()).sum();
    left - right
}

/// How many X-checks SI may inactivate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMax {
    Count(usize),
    /// `ceil(fraction · m_X)`, at least 1.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiConfig {
    pub lambda_max: LambdaMax,
    /// Iteration budget for decoding `h_out`; defaults to the main decoder's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restricted_iters: Option<usize>,
}

impl SiConfig {
    pub fn count(lambda_max: usize) -> Self {
        SiConfig {
            lambda_max: LambdaMax::Count(lambda_max),
            restricted_iters: None,
        }
    }

    pub fn fraction(fraction: f64) -> Self {
        SiConfig {
            lambda_max: LambdaMax::Fraction(fraction),
            restricted_iters: None,
        }
    }

    pub fn with_restricted_iters(mut self, iters: usize) -> Self {
        self.restricted_iters = Some(iters);
        self
    }

    /// Resolves against `m_x` X-checks; the result lies in `1..=m_x`.
    pub fn resolve(&self, m_x: usize) -> Result<usize, SiError> {
        if m_x == 0 {
            return Err(SiError::InvalidConfig("code has no X-checks".into()));
        }
        let n = match self.lambda_max {
            LambdaMax::Count(0) => return Err(SiError::InvalidConfig("lambda_max must be at least 1".into())),
            LambdaMax::Count(n) => n,
            LambdaMax::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(SiError::InvalidConfig(format!("lambda fraction {f} outside (0, 1]")))
            }
            LambdaMax::Fraction(f) => ((f * m_x as f64).ceil() as usize).max(1),
        };
        Ok(n.min(m_x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SiResult {
    Success(BitVec),
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiOutcome {
    pub result: SiResult,
    /// 0 when the initial decode converged; otherwise the number of checks
    /// inactivated (the successful attempt included).
    pub inactivations_used: usize,
    /// Attempts abandoned because message passing on `h_out` did not converge.
    pub mp_failures: usize,
    /// Attempts abandoned because the inactivated system had no solution.
    pub unsolvable: usize,
    /// Times the check reliabilities were computed: 0 or 1.
    pub reliability_passes: usize,
    pub initial: DecodeOutcome,
}

impl SiOutcome {
    pub fn estimate(&self) -> Option<&BitVec> {
        match &self.result {
            SiResult::Success(e) => Some(e),
            SiResult::Failure => None,
        }
    }
}

struct Inactivation {
    restriction: Restriction,
    decoder: Option<MpDecoder>,
}

/// SI decoder for one code and configuration. Restrictions are built lazily
/// per X-check and shared across threads.
pub struct SiDecoder {
    hx: SparseBitMatrix,
    hz: SparseBitMatrix,
    mp: MpDecoder,
    restricted_config: DecoderConfig,
    lambda_max: usize,
    cache: Vec<OnceLock<Arc<Inactivation>>>,
}

impl SiDecoder {
    pub fn new(code: &CssCode, mp: DecoderConfig, si: SiConfig) -> Result<Self, SiError> {
        let lambda_max = si.resolve(code.m_x())?;
        let mut restricted = mp.clone();
        if let Some(iters) = si.restricted_iters {
            if iters == 0 {
                return Err(SiError::InvalidConfig("restricted_iters must be at least 1".into()));
            }
            restricted.max_iters = iters;
        }
        Ok(SiDecoder {
            hx: code.hx().clone(),
            hz: code.hz().clone(),
            mp: MpDecoder::new(code.hz(), mp)?,
            restricted_config: restricted,
            lambda_max,
            cache: (0..code.m_x()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn lambda_max(&self) -> usize {
        self.lambda_max
    }

    fn inactivation(&self, check: usize) -> Result<Arc<Inactivation>, SiError> {
        if let Some(hit) = self.cache[check].get() {
            return Ok(hit.clone());
        }
        let restriction = restrict(&self.hz, self.hx.row(check));
        let decoder = if restriction.h_out.rows() > 0 {
            let mut config = self.restricted_config.clone();
            if let Schedule::Layered(layers) = &config.schedule {
                config.schedule = Schedule::Layered(restrict_layers(layers, &restriction.out_rows, self.hz.rows()));
            }
            Some(MpDecoder::new(&restriction.h_out, config)?)
        } else {
            None
        };
        let built = Arc::new(Inactivation { restriction, decoder });
        Ok(self.cache[check].get_or_init(|| built).clone())
    }

    pub fn decode(&self, s: &BitVec, priors: &[f64]) -> Result<SiOutcome, SiError> {
        let initial = self.mp.decode(s, priors)?;
        if initial.converged {
            return Ok(SiOutcome {
                result: SiResult::Success(initial.hard.clone()),
                inactivations_used: 0,
                mp_failures: 0,
                unsolvable: 0,
                reliability_passes: 0,
                initial,
            });
        }
        let reliabilities = all_check_reliabilities(&self.hx, &initial.soft);
        let order = reliability_order(&reliabilities);
        let priors = LlrVector(priors.to_vec());
        let (mut mp_failures, mut unsolvable) = (0, 0);

        for (attempt, &check) in order.iter().take(self.lambda_max).enumerate() {
            let inact = self.inactivation(check)?;
            let r = &inact.restriction;
            let out_priors = priors.gather(&r.out_cols);
            let e_out = match &inact.decoder {
                Some(dec) => {
                    let out = dec.decode(&s.gather(&r.out_rows), &out_priors)?;
                    if !out.converged {
                        mp_failures += 1;
                        continue;
                    }
                    out.hard
                }
                None => hard_decision(&out_priors),
            };
            let mut rhs = s.gather(&r.in_rows);
            rhs ^= &r.a.mat_vec(&e_out).expect("a has out_cols columns");
            let Some(e_in) = gf2::solve(&r.h_in, &rhs).expect("h_in has in_rows rows") else {
                unsolvable += 1;
                continue;
            };
            let mut estimate = BitVec::zeros(self.hz.cols());
            for (k, &c) in r.in_cols.iter().enumerate() {
                estimate.set(c, e_in.get(k));
            }
            for (k, &c) in r.out_cols.iter().enumerate() {
                estimate.set(c, e_out.get(k));
            }
            debug_assert_eq!(&self.hz.mat_vec(&estimate).unwrap(), s);
            return Ok(SiOutcome {
                result: SiResult::Success(estimate),
                inactivations_used: attempt + 1,
                mp_failures,
                unsolvable,
                reliability_passes: 1,
                initial,
            });
        }
        Ok(SiOutcome {
            result: SiResult::Failure,
            inactivations_used: self.lambda_max.min(order.len()),
            mp_failures,
            unsolvable,
            reliability_passes: 1,
            initial,
        })
    }
}

/// One-shot wrapper around [`SiDecoder`].
pub fn si_decode(
    code: &CssCode,
    s: &BitVec,
    priors: &[f64],
    mp: &DecoderConfig,
    si: &SiConfig,
) -> Result<SiOutcome, SiError> {
    SiDecoder::new(code, mp.clone(), *si)?.decode(s, priors)
}

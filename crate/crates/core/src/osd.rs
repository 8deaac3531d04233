//! Order-0 ordered statistics post-processing.
//!
//! Columns are ranked by reliability `|soft_i|`; the first `rank(hz)`
//! linearly independent columns in that order form the basis and are
//! re-solved, the rest keep the message-passing hard decision.

use thiserror::Error;

use crate::gf2::{self, BitVec, DenseBitMatrix, SparseBitMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsdError {
    #[error("{what}: expected length {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("syndrome is not in the column space of hz")]
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OsdSelection {
    /// All columns by increasing reliability, ties by index.
    pub ordered_cols: Vec<usize>,
    pub basis_cols: Vec<usize>,
    pub complement_cols: Vec<usize>,
}

/// OSD-0 bound to one matrix, with its rank computed once.
#[derive(Debug, Clone)]
pub struct Osd0Decoder {
    hz: SparseBitMatrix,
    rank: usize,
}

impl Osd0Decoder {
    pub fn new(hz: &SparseBitMatrix) -> Self {
        Osd0Decoder {
            hz: hz.clone(),
            rank: gf2::rank(hz),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn decode(&self, s: &BitVec, mp_hard: &BitVec, soft: &[f64]) -> Result<BitVec, OsdError> {
        self.decode_with_selection(s, mp_hard, soft).map(|(e, _)| e)
    }

    pub fn decode_with_selection(
        &self,
        s: &BitVec,
        mp_hard: &BitVec,
        soft: &[f64],
    ) -> Result<(BitVec, OsdSelection), OsdError> {
        let hz = &self.hz;
        let n = hz.cols();
        for (what, expected, found) in [
            ("syndrome", hz.rows(), s.len()),
            ("hard decision", n, mp_hard.len()),
            ("soft output", n, soft.len()),
        ] {
            if expected != found {
                return Err(OsdError::DimensionMismatch { what, expected, found });
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| soft[a].abs().total_cmp(&soft[b].abs()).then(a.cmp(&b)));

        let mut aug = DenseBitMatrix::from_sparse_columns(hz, &order, 1);
        for r in s.iter_ones() {
            aug.set(r, n, true);
        }
        let pivots = aug.rref_in_place(n, self.rank);
        debug_assert_eq!(pivots.len(), self.rank);
        if (pivots.len()..hz.rows()).any(|r| aug.get(r, n)) {
            return Err(OsdError::Inconsistent);
        }

        let mut is_pivot = vec![false; n];
        for &k in &pivots {
            is_pivot[k] = true;
        }
        // Fixed values of the complement, in permuted column positions.
        let mut fixed = BitVec::zeros(n + 1);
        for k in 0..n {
            if !is_pivot[k] && mp_hard.get(order[k]) {
                fixed.set(k, true);
            }
        }

        let mut estimate = mp_hard.clone();
        for (i, &k) in pivots.iter().enumerate() {
            let parity = aug
                .row_words(i)
                .iter()
                .zip(fixed.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            estimate.set(order[k], aug.get(i, n) ^ (parity == 1));
        }

        let basis_cols: Vec<usize> = pivots.iter().map(|&k| order[k]).collect();
        let complement_cols = order.iter().enumerate().filter(|(k, _)| !is_pivot[*k]).map(|(_, &c)| c).collect();
        Ok((
            estimate,
            OsdSelection {
                ordered_cols: order,
                basis_cols,
                complement_cols,
            },
        ))
    }
}

pub fn osd0_decode(hz: &SparseBitMatrix, s: &BitVec, mp_hard: &BitVec, soft: &[f64]) -> Result<BitVec, OsdError> {
    Osd0Decoder::new(hz).decode(s, mp_hard, soft)
}

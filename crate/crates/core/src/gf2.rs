//! Exact linear algebra over GF(2).
//!
//! [`SparseBitMatrix`] is the interchange form for parity-check matrices and
//! their restrictions. Elimination runs on [`DenseBitMatrix`], a bit-packed
//! row-major copy.

use std::fmt;
use std::ops::BitXorAssign;
use std::str::FromStr;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for {bound} columns")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("duplicate column index {index} in row {row}")]
    DuplicateIndex { row: usize, index: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

/// Packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from 0/1 entries; any nonzero byte counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in ones {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD_BITS + tz)
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Entries at `indices`, in that order.
    pub fn gather(&self, indices: &[usize]) -> BitVec {
        let mut out = BitVec::zeros(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            if self.get(i) {
                out.set(k, true);
            }
        }
        out
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl BitXorAssign<&BitVec> for BitVec {
    fn bitxor_assign(&mut self, rhs: &BitVec) {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = Gf2Error;

    /// Parses a string of `0`/`1` characters; `_` and whitespace are skipped.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                '_' => {}
                c if c.is_whitespace() => {}
                c => return Err(Gf2Error::InvalidBit(c)),
            }
        }
        Ok(BitVec::from_bools(&bits))
    }
}

/// Sparse binary matrix with row and column adjacency kept in sync.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SparseBitMatrix {
    rows: usize,
    cols: usize,
    row_supports: Vec<Vec<usize>>,
    col_supports: Vec<Vec<usize>>,
}

impl SparseBitMatrix {
    /// Builds a matrix from per-row column indices. Indices within a row are
    /// sorted; duplicates and out-of-range indices are rejected.
    pub fn new(rows: usize, cols: usize, row_supports: Vec<Vec<usize>>) -> Result<Self, Gf2Error> {
        if row_supports.len() != rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: rows,
                found: row_supports.len(),
            });
        }
        let mut row_supports = row_supports;
        for (r, row) in row_supports.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(Gf2Error::DuplicateIndex { row: r, index: w[0] });
                }
            }
            if let Some(&last) = row.last() {
                if last >= cols {
                    return Err(Gf2Error::IndexOutOfRange {
                        index: last,
                        bound: cols,
                    });
                }
            }
        }
        Ok(Self::from_sorted_rows(rows, cols, row_supports))
    }

    fn from_sorted_rows(rows: usize, cols: usize, row_supports: Vec<Vec<usize>>) -> Self {
        let mut col_supports = vec![Vec::new(); cols];
        for (r, row) in row_supports.iter().enumerate() {
            for &c in row {
                col_supports[c].push(r);
            }
        }
        SparseBitMatrix {
            rows,
            cols,
            row_supports,
            col_supports,
        }
    }

    /// Builds a matrix from dense 0/1 rows, all of which must have equal length.
    pub fn from_dense_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut supports = Vec::with_capacity(rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            supports.push(r.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect());
        }
        Ok(Self::from_sorted_rows(rows.len(), cols, supports))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sorted_rows(rows, cols, vec![Vec::new(); rows])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted_rows(n, n, (0..n).map(|i| vec![i]).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_supports[r]
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_supports[c]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.row_supports
    }

    pub fn col_supports(&self) -> &[Vec<usize>] {
        &self.col_supports
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.row_supports.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_supports[r].binary_search(&c).is_ok()
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec::from_indices(self.cols, &self.row_supports[r])
    }

    pub fn transpose(&self) -> SparseBitMatrix {
        SparseBitMatrix {
            rows: self.cols,
            cols: self.rows,
            row_supports: self.col_supports.clone(),
            col_supports: self.row_supports.clone(),
        }
    }

    /// Submatrix on the given rows and columns, in the given orders.
    /// Column `k` of the result is column `cols[k]` of `self`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseBitMatrix {
        let mut position = vec![usize::MAX; self.cols];
        for (k, &c) in cols.iter().enumerate() {
            position[c] = k;
        }
        let supports = rows
            .iter()
            .map(|&r| {
                let mut row: Vec<usize> = self.row_supports[r]
                    .iter()
                    .filter_map(|&c| (position[c] != usize::MAX).then_some(position[c]))
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        Self::from_sorted_rows(rows.len(), cols.len(), supports)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix, Gf2Error> {
        if self.rows != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let supports = self
            .row_supports
            .iter()
            .zip(&other.row_supports)
            .map(|(a, b)| a.iter().copied().chain(b.iter().map(|&c| c + self.cols)).collect())
            .collect();
        Ok(Self::from_sorted_rows(self.rows, self.cols + other.cols, supports))
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_supports.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        self.col_supports.iter().map(Vec::len).collect()
    }

    pub fn to_dense(&self) -> DenseBitMatrix {
        let mut d = DenseBitMatrix::zeros(self.rows, self.cols);
        for (r, row) in self.row_supports.iter().enumerate() {
            for &c in row {
                d.set(r, c, true);
            }
        }
        d
    }

    /// `self · v` over GF(2).
    pub fn mat_vec(&self, v: &BitVec) -> Result<BitVec, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitVec::zeros(self.rows);
        for (r, row) in self.row_supports.iter().enumerate() {
            let parity = row.iter().fold(false, |acc, &c| acc ^ v.get(c));
            if parity {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Product `self · otherᵀ` as a sparse matrix.
    pub fn mul_transpose(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut parity = vec![false; other.rows];
        let mut touched = Vec::new();
        let mut supports = Vec::with_capacity(self.rows);
        for row in &self.row_supports {
            for &c in row {
                for &r2 in &other.col_supports[c] {
                    if !parity[r2] && !touched.contains(&r2) {
                        touched.push(r2);
                    }
                    parity[r2] ^= true;
                }
            }
            let mut out: Vec<usize> = touched.iter().copied().filter(|&r2| parity[r2]).collect();
            out.sort_unstable();
            for &r2 in &touched {
                parity[r2] = false;
            }
            touched.clear();
            supports.push(out);
        }
        Ok(Self::from_sorted_rows(self.rows, other.rows, supports))
    }
}

impl fmt::Debug for SparseBitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseBitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "." })?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Bit-packed row-major matrix used for elimination.
#[derive(Clone, PartialEq, Eq)]
pub struct DenseBitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl DenseBitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        DenseBitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    /// Dense copy of `m` with columns permuted: column `k` here is column
    /// `order[k]` of `m`. `extra_cols` zero columns are appended on the right.
    pub fn from_sparse_columns(m: &SparseBitMatrix, order: &[usize], extra_cols: usize) -> Self {
        let mut d = DenseBitMatrix::zeros(m.rows(), order.len() + extra_cols);
        for (k, &c) in order.iter().enumerate() {
            for &r in m.col(c) {
                d.set(r, k, true);
            }
        }
        d
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let idx = r * self.stride + c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// `row[dst] ^= row[src]` on words from `from_word` onwards.
    #[inline]
    fn xor_row(&mut self, src: usize, dst: usize, from_word: usize) {
        let (s, d) = (src * self.stride, dst * self.stride);
        for w in from_word..self.stride {
            let v = self.data[s + w];
            self.data[d + w] ^= v;
        }
    }

    /// Reduces in place to reduced row echelon form, choosing pivots only among
    /// the first `pivot_limit` columns and stopping once `max_rank` pivots are
    /// found. Pivot columns are scanned left to right; each takes the lowest
    /// available row. Returns the pivot columns; pivot `i` sits in row `i`.
    pub fn rref_in_place(&mut self, pivot_limit: usize, max_rank: usize) -> Vec<usize> {
        let limit = pivot_limit.min(self.cols);
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..limit {
            if pivot_row >= self.rows || pivots.len() >= max_rank {
                break;
            }
            let Some(found) = (pivot_row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(found, pivot_row);
            let from_word = col / WORD_BITS;
            for r in 0..self.rows {
                if r != pivot_row && self.get(r, col) {
                    self.xor_row(pivot_row, r, from_word);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    pub fn to_sparse(&self) -> SparseBitMatrix {
        let supports = (0..self.rows)
            .map(|r| (0..self.cols).filter(|&c| self.get(r, c)).collect())
            .collect();
        SparseBitMatrix::from_sorted_rows(self.rows, self.cols, supports)
    }
}

impl fmt::Debug for DenseBitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_sparse())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrefResult {
    pub rref: SparseBitMatrix,
    pub pivot_cols: Vec<usize>,
    pub rank: usize,
}

pub fn mat_vec(m: &SparseBitMatrix, v: &BitVec) -> Result<BitVec, Gf2Error> {
    m.mat_vec(v)
}

pub fn rref(m: &SparseBitMatrix) -> RrefResult {
    let mut d = m.to_dense();
    let pivot_cols = d.rref_in_place(m.cols(), usize::MAX);
    RrefResult {
        rref: d.to_sparse(),
        rank: pivot_cols.len(),
        pivot_cols,
    }
}

pub fn rank(m: &SparseBitMatrix) -> usize {
    let mut d = m.to_dense();
    d.rref_in_place(m.cols(), usize::MAX).len()
}

/// Solves `m · x = b`. Free variables are set to zero. Returns `None` when
/// `b` is outside the column space of `m`.
pub fn solve(m: &SparseBitMatrix, b: &BitVec) -> Result<Option<BitVec>, Gf2Error> {
    if b.len() != m.rows() {
        return Err(Gf2Error::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    let n = m.cols();
    let order: Vec<usize> = (0..n).collect();
    let mut aug = DenseBitMatrix::from_sparse_columns(m, &order, 1);
    for r in b.iter_ones() {
        aug.set(r, n, true);
    }
    let pivots = aug.rref_in_place(n, usize::MAX);
    if (pivots.len()..m.rows()).any(|r| aug.get(r, n)) {
        return Ok(None);
    }
    let mut x = BitVec::zeros(n);
    for (i, &p) in pivots.iter().enumerate() {
        if aug.get(i, n) {
            x.set(p, true);
        }
    }
    Ok(Some(x))
}

/// True iff `v` is a GF(2) combination of rows of `m`.
pub fn in_row_space(m: &SparseBitMatrix, v: &BitVec) -> Result<bool, Gf2Error> {
    if v.len() != m.cols() {
        return Err(Gf2Error::DimensionMismatch {
            expected: m.cols(),
            found: v.len(),
        });
    }
    Ok(solve(&m.transpose(), v)?.is_some())
}

/// Precomputed echelon basis of a row space, for repeated membership tests.
#[derive(Debug, Clone)]
pub struct RowSpaceBasis {
    cols: usize,
    basis: Vec<(usize, BitVec)>,
}

impl RowSpaceBasis {
    pub fn new(m: &SparseBitMatrix) -> Self {
        let mut d = m.to_dense();
        let pivots = d.rref_in_place(m.cols(), usize::MAX);
        let basis = pivots
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut v = BitVec::zeros(m.cols());
                v.words.copy_from_slice(d.row_words(i));
                (p, v)
            })
            .collect();
        RowSpaceBasis {
            cols: m.cols(),
            basis,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &BitVec) -> Result<bool, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut rest = v.clone();
        for (pivot, row) in &self.basis {
            if rest.get(*pivot) {
                rest ^= row;
            }
        }
        Ok(rest.is_zero())
    }
}

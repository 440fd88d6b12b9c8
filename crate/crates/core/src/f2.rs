//! Linear algebra over GF(2).
//!
//! [`BitVec`] is a fixed-length packed bit vector. [`SparseBitMatrix`] stores
//! each row as a sorted list of set column indices, which is the layout the
//! message-passing decoder walks. Rank, kernel and solve copy the matrix into
//! packed dense rows and run plain Gaussian elimination.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    /// Builds a vector from a slice where any nonzero entry is a set bit.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        let mut v = BitVec::zeros(len);
        for &i in support {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, bound: len });
            }
            v.flip(i);
        }
        Ok(v)
    }

    /// Parses a string of `0`/`1` characters, first character is bit 0.
    pub fn parse_bits(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
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
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn push(&mut self, value: bool) {
        if self.len % WORD == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// In-place XOR. Panics if lengths differ.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of unequal-length bit vectors");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the bitwise AND.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal-length bit vectors");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    /// Position of the lowest set bit at or after `from`.
    fn first_one_from(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from / WORD;
        let mut w = self.words[wi] & (!0u64 << (from % WORD));
        loop {
            if w != 0 {
                let i = wi * WORD + w.trailing_zeros() as usize;
                return (i < self.len).then_some(i);
            }
            wi += 1;
            if wi == self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    /// Hex rendering where bit `i` carries weight `2^i`, zero-padded to
    /// `ceil(len/4)` digits. Empty vectors render as the empty string.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                let i = 4 * d + b;
                if i < self.len && self.get(i) {
                    nibble |= 1 << b;
                }
            }
            out.push(char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(s: &str, len: usize) -> Option<Self> {
        let mut v = BitVec::zeros(len);
        for (pos, c) in s.chars().rev().enumerate() {
            let nibble = c.to_digit(16)?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let i = 4 * pos + b;
                    if i >= len {
                        return None;
                    }
                    v.set(i, true);
                }
            }
        }
        Some(v)
    }

    /// Returns a copy with one extra bit appended.
    pub fn with_bit(&self, value: bool) -> BitVec {
        let mut out = self.clone();
        out.push(value);
        out
    }
}

/// Lexicographic on the bit sequence, bit 0 first; shorter vectors first.
impl Ord for BitVec {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for (a, b) in self.words.iter().zip(&other.words) {
                let diff = a ^ b;
                if diff != 0 {
                    let bit = diff & diff.wrapping_neg();
                    return if a & bit == 0 {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    };
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

impl PartialOrd for BitVec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Row-sparse binary matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparseBitMatrix {
    rows: usize,
    cols: usize,
    row_support: Vec<Vec<usize>>,
}

impl SparseBitMatrix {
    /// Empty matrix with zero rows.
    pub fn empty(cols: usize) -> Self {
        SparseBitMatrix {
            rows: 0,
            cols,
            row_support: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseBitMatrix {
            rows: n,
            cols: n,
            row_support: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Builds a matrix from per-row column lists. Rows are sorted; duplicates
    /// and out-of-range columns are errors.
    pub fn from_rows(cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut row_support = Vec::with_capacity(rows.len());
        for (r, mut support) in rows.into_iter().enumerate() {
            support.sort_unstable();
            for w in support.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DuplicateColumn { row: r, col: w[0] });
                }
            }
            if let Some(&c) = support.last() {
                if c >= cols {
                    return Err(Error::ColumnOutOfRange { col: c, cols });
                }
            }
            row_support.push(support);
        }
        Ok(SparseBitMatrix {
            rows: row_support.len(),
            cols,
            row_support,
        })
    }

    pub fn from_dense(cols: usize, dense: &[Vec<u8>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(dense.len());
        for row in dense {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "from_dense",
                    expected: cols,
                    found: row.len(),
                });
            }
            rows.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(c, _)| c)
                    .collect(),
            );
        }
        Self::from_rows(cols, rows)
    }

    pub fn from_bitvec_rows(cols: usize, rows: &[BitVec]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "from_bitvec_rows",
                    expected: cols,
                    found: r.len(),
                });
            }
            out.push(r.ones().collect());
        }
        Self::from_rows(cols, out)
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
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_support[i]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.row_support
    }

    pub fn nnz(&self) -> usize {
        self.row_support.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_support[r].binary_search(&c).is_ok()
    }

    pub fn row_bitvec(&self, i: usize) -> BitVec {
        let mut v = BitVec::zeros(self.cols);
        for &c in &self.row_support[i] {
            v.set(c, true);
        }
        v
    }

    pub fn to_bitvec_rows(&self) -> Vec<BitVec> {
        (0..self.rows).map(|i| self.row_bitvec(i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.to_bitvec_rows().iter().map(BitVec::to_u8).collect()
    }

    /// For each column, the sorted list of rows containing it.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.cols];
        for (r, support) in self.row_support.iter().enumerate() {
            for &c in support {
                cols[c].push(r);
            }
        }
        cols
    }

    pub fn transpose(&self) -> SparseBitMatrix {
        SparseBitMatrix {
            rows: self.cols,
            cols: self.rows,
            row_support: self.column_supports(),
        }
    }

    /// `M · v` over GF(2).
    pub fn mul_vec(&self, v: &BitVec) -> Result<BitVec> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "mat_vec_mul",
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitVec::zeros(self.rows);
        for (r, support) in self.row_support.iter().enumerate() {
            let parity = support.iter().filter(|&&c| v.get(c)).count() & 1 == 1;
            if parity {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ` as a dense row list (`self.rows × other.rows`).
    pub fn mul_transpose(&self, other: &SparseBitMatrix) -> Result<Vec<BitVec>> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "mul_transpose",
                expected: self.cols,
                found: other.cols,
            });
        }
        let other_rows = other.to_bitvec_rows();
        Ok((0..self.rows)
            .map(|i| {
                let a = self.row_bitvec(i);
                let mut out = BitVec::zeros(other.rows);
                for (j, b) in other_rows.iter().enumerate() {
                    if a.dot(b) {
                        out.set(j, true);
                    }
                }
                out
            })
            .collect())
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.to_bitvec_rows();
        row_reduce(&mut rows, self.cols).len()
    }

    /// A basis for `{v : M v = 0}`, one vector per free column in increasing
    /// column order.
    pub fn kernel_basis(&self) -> Vec<BitVec> {
        let mut rows = self.to_bitvec_rows();
        let pivots = row_reduce(&mut rows, self.cols);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = BitVec::zeros(self.cols);
                v.set(f, true);
                for (r, &p) in pivots.iter().enumerate() {
                    if rows[r].get(f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// Solves `M x = b`. Free variables are set to zero, so the result is
    /// deterministic. `None` when `b` is outside the column space.
    pub fn solve(&self, b: &BitVec) -> Result<Option<BitVec>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "solve",
                expected: self.rows,
                found: b.len(),
            });
        }
        // Augment with the right-hand side as the last column.
        let mut rows: Vec<BitVec> = (0..self.rows)
            .map(|i| {
                let mut r = BitVec::zeros(self.cols + 1);
                for &c in &self.row_support[i] {
                    r.set(c, true);
                }
                r.set(self.cols, b.get(i));
                r
            })
            .collect();
        let pivots = row_reduce(&mut rows, self.cols);
        if rows[pivots.len()..].iter().any(|r| r.get(self.cols)) {
            return Ok(None);
        }
        let mut x = BitVec::zeros(self.cols);
        for (r, &p) in pivots.iter().enumerate() {
            if rows[r].get(self.cols) {
                x.set(p, true);
            }
        }
        Ok(Some(x))
    }

    /// Copy of `self` with `r` appended as the last row.
    pub fn append_row(&self, r: &BitVec) -> Result<SparseBitMatrix> {
        if r.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "append_row",
                expected: self.cols,
                found: r.len(),
            });
        }
        let mut out = self.clone();
        out.row_support.push(r.ones().collect());
        out.rows += 1;
        Ok(out)
    }

    /// Copy of `self` with the last row removed.
    pub fn without_last_row(&self) -> SparseBitMatrix {
        let mut out = self.clone();
        if out.row_support.pop().is_some() {
            out.rows -= 1;
        }
        out
    }
}

/// Reduces `rows` in place to reduced row echelon form over the first `cols`
/// columns and returns the pivot column of each leading row. Rows beyond
/// `pivots.len()` are zero on those columns afterwards.
pub(crate) fn row_reduce(rows: &mut [BitVec], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(found) = (r..rows.len()).find(|&i| rows[i].get(c)) else {
            continue;
        };
        rows.swap(r, found);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(c) {
                row.xor_assign(&pivot);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Incremental basis for a subspace of GF(2)^n, kept in echelon form keyed by
/// leading bit.
#[derive(Clone, Debug, Default)]
pub(crate) struct EchelonBasis {
    rows: Vec<(usize, BitVec)>,
}

impl EchelonBasis {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Reduces `v` by the basis; returns the residual.
    pub(crate) fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (lead, row) in &self.rows {
            if v.get(*lead) {
                v.xor_assign(row);
            }
        }
        v
    }

    /// Adds `v` if independent; returns whether the span grew.
    pub(crate) fn insert(&mut self, v: &BitVec) -> bool {
        let v = self.reduce(v);
        match v.first_one_from(0) {
            None => false,
            Some(lead) => {
                for (_, row) in self.rows.iter_mut() {
                    if row.get(lead) {
                        row.xor_assign(&v);
                    }
                }
                self.rows.push((lead, v));
                true
            }
        }
    }
}

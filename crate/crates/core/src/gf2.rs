//! Exact arithmetic over GF(2): packed bit vectors and small dense matrices.
//!
//! A [`BitMatrix`] with `K` rows and `N` columns doubles as the generator of a
//! binary linear code: the codeword of message `u` is `u·M`, the XOR of the
//! rows selected by the ones of `u`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};

const WORD_BITS: usize = 64;

/// Largest row count for which codewords are enumerated exhaustively.
pub const MAX_ENUM_ROWS: usize = 20;

/// Binary vector stored as packed 64-bit words. Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            words: vec![!0; len.div_ceil(WORD_BITS)],
            len,
        };
        v.clear_tail();
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    /// The low `len` bits of `value`, bit `i` of the vector taken from bit `i` of the word.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS);
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_tail();
        }
        v
    }

    /// Builds a vector from raw words; bits beyond `len` are discarded.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(WORD_BITS), 0);
        let mut v = Self { words, len };
        v.clear_tail();
        v
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Appends all bits of `other`.
    pub fn extend(&mut self, other: &BitVec) {
        for b in other.iter() {
            self.push(b);
        }
    }

    /// Bits `start..end` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVec {
        assert!(start <= end && end <= self.len);
        BitVec::from_bits((start..end).map(|i| self.get(i)))
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitVec) -> Result<()> {
        check_len(self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
        Ok(())
    }

    /// Number of positions where `self` and `other` differ.
    pub fn distance(&self, other: &BitVec) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Indices of the one bits.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
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

impl FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitVec::from_bits)
    }
}

/// Dense binary matrix stored row-wise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows: vec![BitVec::zeros(cols); rows],
            cols,
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self> {
        let cols = rows.first().map_or(0, BitVec::len);
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Self { rows, cols })
    }

    /// Builds a `rows × cols.len()` matrix from columns given as integers,
    /// bit `i` of a column word being the entry in row `i`.
    pub fn from_column_words(rows: usize, cols: &[u64]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for i in 0..rows {
                m.set(i, j, (c >> i) & 1 == 1);
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.rows[row].set(col, value);
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> BitVec {
        BitVec::from_bits(self.rows.iter().map(|r| r.get(j)))
    }

    pub fn column_weight(&self, j: usize) -> usize {
        self.rows.iter().filter(|r| r.get(j)).count()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        (0..self.cols).map(|j| self.column_weight(j)).collect()
    }

    /// Columns packed as integers (row `i` in bit `i`). `None` above 64 rows.
    pub fn column_words(&self) -> Option<Vec<u64>> {
        if self.n_rows() > WORD_BITS {
            return None;
        }
        Some(
            (0..self.cols)
                .map(|j| {
                    self.rows
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (i, r)| acc | (u64::from(r.get(j)) << i))
                })
                .collect(),
        )
    }

    /// Sub-matrix keeping only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| BitVec::from_bits(cols.iter().map(|&j| r.get(j))))
            .collect();
        BitMatrix {
            rows,
            cols: cols.len(),
        }
    }

    /// GF(2) rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    // lengths are equal by construction
                    let _ = row.xor_assign(&pivot_row);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Codeword `u·M`.
    pub fn encode(&self, message: &BitVec) -> Result<BitVec> {
        check_len(self.n_rows(), message.len())?;
        let mut out = BitVec::zeros(self.cols);
        for i in message.support() {
            out.xor_assign(&self.rows[i])?;
        }
        Ok(out)
    }

    /// A nonzero codeword of minimum weight together with its message,
    /// found by exhaustive Gray-code enumeration of all `2^K − 1` messages.
    pub fn min_weight_codeword(&self) -> Result<(BitVec, BitVec)> {
        let k = self.n_rows();
        if k > MAX_ENUM_ROWS {
            return Err(Error::TooLarge {
                what: "message space 2^K",
                limit: 1 << MAX_ENUM_ROWS,
            });
        }
        let mut codeword = BitVec::zeros(self.cols);
        let mut best: Option<(usize, u64, BitVec)> = None;
        let mut prev_gray = 0u64;
        for step in 1..(1u64 << k) {
            let gray = step ^ (step >> 1);
            let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
            prev_gray = gray;
            codeword.xor_assign(&self.rows[flipped])?;
            let w = codeword.weight();
            if w > 0 && best.as_ref().is_none_or(|(bw, bg, _)| (w, gray) < (*bw, *bg)) {
                best = Some((w, gray, codeword.clone()));
            }
        }
        best.map(|(_, msg, cw)| (BitVec::from_u64(msg, k), cw))
            .ok_or(Error::ZeroMatrix)
    }

    /// Minimum Hamming weight over nonzero codewords.
    pub fn min_distance(&self) -> Result<usize> {
        self.min_weight_codeword().map(|(_, cw)| cw.weight())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.rows.iter().map(ToString::to_string).collect();
        write!(f, "BitMatrix[{}]", rows.join("/"))
    }
}

/// Rows of `'0'`/`'1'` characters, one row per line. Blank lines are ignored.
impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(BitVec::from_str)
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(Error::Parse("empty matrix".into()));
        }
        BitMatrix::from_rows(rows).map_err(|e| Error::Parse(format!("ragged matrix rows: {e}")))
    }
}

/// Rank of the span of a set of vectors packed as integers.
pub fn rank_of_words(words: &[u64]) -> usize {
    // basis[b] holds a vector whose highest set bit is b
    let mut basis = [0u64; WORD_BITS];
    let mut rank = 0;
    for &w in words {
        let mut v = w;
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = v;
                rank += 1;
                break;
            }
            v ^= basis[top];
        }
    }
    rank
}

/// Solves `u·M = rhs` for the `K` message vectors `u`.
///
/// Column `j` of `m` is the equation `⊕_i M[i][j]·u_i = rhs[j]`; every bit
/// position of the right-hand sides is solved by the same elimination, done
/// word-parallel on the packed vectors. Extra equations must be consistent.
pub fn solve(m: &BitMatrix, rhs: &[BitVec]) -> Result<Vec<BitVec>> {
    check_len(m.n_cols(), rhs.len())?;
    let width = rhs.first().map_or(0, BitVec::len);
    for r in rhs {
        check_len(width, r.len())?;
    }
    let k = m.n_rows();
    // one equation per column: coefficient vector over the K unknowns
    let mut eqs: Vec<(BitVec, BitVec)> = (0..m.n_cols())
        .map(|j| (m.column(j), rhs[j].clone()))
        .collect();
    let mut rank = 0;
    for var in 0..k {
        let Some(pivot) = (rank..eqs.len()).find(|&e| eqs[e].0.get(var)) else {
            continue;
        };
        eqs.swap(rank, pivot);
        let (pc, pr) = eqs[rank].clone();
        for (e, (coef, val)) in eqs.iter_mut().enumerate() {
            if e != rank && coef.get(var) {
                coef.xor_assign(&pc)?;
                val.xor_assign(&pr)?;
            }
        }
        rank += 1;
    }
    if rank < k {
        return Err(Error::RankDeficient { rank, needed: k });
    }
    if eqs[rank..].iter().any(|(_, val)| !val.is_zero()) {
        return Err(Error::InconsistentSystem);
    }
    // after full reduction pivot row `i` has coefficient vector e_i
    Ok(eqs.into_iter().take(k).map(|(_, val)| val).collect())
}

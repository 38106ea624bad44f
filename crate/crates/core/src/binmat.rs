//! Dense matrices over GF(2).
//!
//! Rows are packed into `u64` words, least significant bit first, so column
//! `c` of a row lives in word `c / 64` at bit `c % 64`. Kernels are at most
//! 64 columns wide and fit a single word per row; larger matrices (explicit
//! generator matrices used as test oracles) simply use more words.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BinMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        let words = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of `0`/`1` values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("no rows".into()));
        }
        let cols = rows[0].as_ref().len();
        if cols == 0 {
            return Err(Error::DimensionMismatch("empty row".into()));
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(r, c, true),
                    _ => return Err(Error::Parse(format!("entry ({r},{c}) is not binary"))),
                }
            }
        }
        Ok(m)
    }

    /// Parses the plain-text kernel format: one line per row, each a string of
    /// `0`/`1` characters. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(Error::Parse(format!(
                        "line {}: unexpected character {other:?}",
                        lineno + 1
                    ))),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    /// Row `r` as a single word. Only valid for matrices at most 64 columns wide.
    pub fn row_mask(&self, r: usize) -> u64 {
        assert!(self.cols <= 64, "row_mask needs cols <= 64");
        self.data[r * self.words]
    }

    pub fn row_weight(&self, r: usize) -> u32 {
        self.row_words(r).iter().map(|w| w.count_ones()).sum()
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words;
        for k in 0..w {
            let v = self.data[src * w + k];
            self.data[dst * w + k] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        for k in 0..w {
            self.data.swap(a * w + k, b * w + k);
        }
    }

    /// Index of the first nonzero column of row `r`.
    pub fn leading(&self, r: usize) -> Option<usize> {
        self.row_words(r)
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    /// Index of the last nonzero column of row `r`.
    pub fn trailing(&self, r: usize) -> Option<usize> {
        self.row_words(r)
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + 63 - w.leading_zeros() as usize)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Copy with the column order reversed.
    pub fn reverse_cols(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.set(r, self.cols - 1 - c, true);
                }
            }
        }
        out
    }

    /// Copy with rows reordered: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} rows",
                perm.len(),
                self.rows
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &src) in perm.iter().enumerate() {
            if src >= self.rows {
                return Err(Error::DimensionMismatch(format!("row index {src} out of range")));
            }
            let w = self.words;
            out.data[i * w..(i + 1) * w].copy_from_slice(self.row_words(src));
        }
        Ok(out)
    }

    /// Horizontal concatenation `(self other)`.
    pub fn hconcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hconcat of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        Ok(out)
    }

    /// GF(2) product `self * rhs`.
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        let w = out.words;
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    for x in 0..w {
                        out.data[r * w + x] ^= rhs.data[k * w + x];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `bits * self`.
    pub fn left_mul_vec(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} times {}x{}",
                bits.len(),
                self.rows,
                self.cols
            )));
        }
        let mut acc = vec![0u64; self.words];
        for (r, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                    *a ^= w;
                }
            }
        }
        Ok((0..self.cols)
            .map(|c| ((acc[c / 64] >> (c % 64)) & 1) as u8)
            .collect())
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for a in 0..self.rows {
            for b in 0..self.cols {
                if !self.get(a, b) {
                    continue;
                }
                for c in 0..rhs.rows {
                    for d in 0..rhs.cols {
                        if rhs.get(c, d) {
                            out.set(a * rhs.rows + c, b * rhs.cols + d, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// `t`-fold Kronecker power; the zeroth power is the 1x1 identity.
    pub fn kron_power(&self, t: u32) -> Self {
        (0..t).fold(Self::identity(1), |acc, _| acc.kron(self))
    }

    /// Inverse over GF(2) by Gauss-Jordan elimination.
    pub fn invert(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot invert {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = self.hconcat(&Self::identity(n))?;
        for col in 0..n {
            let pivot = (col..n).find(|&r| aug.get(r, col)).ok_or(Error::Singular)?;
            aug.swap_rows(col, pivot);
            for r in 0..n {
                if r != col && aug.get(r, col) {
                    aug.xor_row_into(col, r);
                }
            }
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, aug.get(r, n + c));
            }
        }
        Ok(inv)
    }

    /// Row-reduces a full-row-rank matrix into minimum-span form: the first
    /// nonzero of row `i` is in column `i`, and the last nonzero columns of
    /// all rows are pairwise distinct.
    pub fn min_span_form(&self) -> Result<Self> {
        let n = self.rows;
        if self.cols < n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} cannot have leading columns 0..{n}",
                self.rows, self.cols
            )));
        }
        let mut m = self.clone();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| m.get(r, col))
                .ok_or(Error::RankDeficient(col))?;
            m.swap_rows(col, pivot);
            for r in col + 1..n {
                if m.get(r, col) {
                    m.xor_row_into(col, r);
                }
            }
        }
        // Row b > a is zero left of column b, so adding it into row a keeps
        // a's leading column and strictly lowers a's trailing column.
        loop {
            let z: Vec<usize> = (0..n).map(|r| m.trailing(r).expect("full rank")).collect();
            let clash = (0..n).find_map(|a| (a + 1..n).find(|&b| z[a] == z[b]).map(|b| (a, b)));
            match clash {
                Some((a, b)) => m.xor_row_into(b, a),
                None => break,
            }
        }
        Ok(m)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == (r == c)))
    }

    pub fn row_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }
}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The Arikan kernel `F2 = [[1,0],[1,1]]`.
pub fn arikan_f2() -> BinMatrix {
    BinMatrix::from_rows(&[[1u8, 0], [1, 1]]).expect("static matrix")
}

/// Digit-reversal permutation of `[l^m]`: index `sum t_i l^i` maps to
/// `sum t_{m-1-i} l^i`.
pub fn digit_reversal_perm(l: usize, m: usize) -> Vec<usize> {
    assert!(l >= 2 && m >= 1);
    let n = l.pow(m as u32);
    (0..n)
        .map(|mut x| {
            let mut y = 0;
            for _ in 0..m {
                y = y * l + x % l;
                x /= l;
            }
            y
        })
        .collect()
}

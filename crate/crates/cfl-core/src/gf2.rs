//! Bit-packed linear algebra over GF(2).
//!
//! Vectors and matrix rows are stored as little-endian `u64` words, so all
//! row operations are word-parallel XORs. Elimination always picks the
//! leftmost available pivot, which makes every reduced form (and everything
//! derived from one, such as nullspace bases) deterministic.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("row has length {got}, expected {expected}")]
    RowLength { expected: usize, got: usize },
    #[error("invalid bit character {0:?}, expected '0' or '1'")]
    BadBitChar(char),
    #[error("matrix rows have unequal lengths")]
    RaggedRows,
}

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
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

    /// The standard basis vector with a single one at `pos`.
    pub fn unit(len: usize, pos: usize) -> Self {
        let mut v = BitVec::zeros(len);
        v.set(pos, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses a string of `'0'`/`'1'` characters, most significant first in
    /// reading order: `"0110"` has ones at positions 1 and 2.
    pub fn parse(s: &str) -> Result<Self, Gf2Error> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(Gf2Error::BadBitChar(other)),
            }
        }
        Ok(BitVec::from_bools(&bits))
    }

    /// Builds a vector of `len` bits from the low bits of `mask`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD_BITS, "mask constructor limited to 64 bits");
        assert!(len == WORD_BITS || mask >> len == 0, "mask wider than len");
        BitVec {
            len,
            words: if len == 0 { vec![] } else { vec![mask] },
        }
    }

    /// The low word of the vector, valid when `len <= 64`.
    pub fn as_mask(&self) -> u64 {
        assert!(self.len <= WORD_BITS, "vector wider than 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len, "bit index {pos} out of range {}", self.len);
        self.words[pos / WORD_BITS] >> (pos % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, pos: usize, value: bool) {
        assert!(pos < self.len, "bit index {pos} out of range {}", self.len);
        let word = &mut self.words[pos / WORD_BITS];
        let bit = 1u64 << (pos % WORD_BITS);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    /// Position of the first (lowest-index) one, if any.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find_map(|(i, &w)| (w != 0).then(|| i * WORD_BITS + w.trailing_zeros() as usize))
    }

    /// Iterates positions of ones in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

impl std::ops::BitXorAssign<&BitVec> for BitVec {
    fn bitxor_assign(&mut self, rhs: &BitVec) {
        self.xor_assign(rhs);
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// A row-major matrix over GF(2). Rows all share the same length.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix { cols, rows: vec![] }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::new(n);
        for i in 0..n {
            m.push_row(BitVec::unit(n, i));
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, BitVec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Gf2Error::RaggedRows);
        }
        Ok(BitMatrix { cols, rows })
    }

    /// Parses whitespace-separated rows of `'0'`/`'1'` characters.
    pub fn parse_rows(text: &str) -> Result<Self, Gf2Error> {
        let rows = text
            .split_whitespace()
            .map(BitVec::parse)
            .collect::<Result<Vec<_>, _>>()?;
        BitMatrix::from_rows(rows)
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    /// Stacks `self` on top of `other`, which must have the same width.
    pub fn stacked(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "stack of unequal widths");
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        BitMatrix {
            cols: self.cols,
            rows,
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix-vector product `self * v`, one bit per row.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            out.set(i, row.dot(v));
        }
        out
    }

    /// The linear combination of rows selected by `coeffs`.
    pub fn combine_rows(&self, coeffs: &BitVec) -> BitVec {
        assert_eq!(coeffs.len(), self.rows.len(), "coefficient length mismatch");
        let mut out = BitVec::zeros(self.cols);
        for i in coeffs.ones() {
            out ^= &self.rows[i];
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut echelon: Vec<BitVec> = Vec::new();
        for row in &self.rows {
            let mut r = row.clone();
            for e in &echelon {
                let pivot = e.first_one().unwrap();
                if r.get(pivot) {
                    r ^= e;
                }
            }
            if !r.is_zero() {
                echelon.push(r);
                echelon.sort_by_key(|v| v.first_one().unwrap());
            }
        }
        echelon.len()
    }

    /// A basis of the right nullspace `{ v : self * v = 0 }`, one basis
    /// vector per free column of the reduced form, ordered by free column.
    pub fn nullspace_basis(&self) -> BitMatrix {
        let reduced = RowSolver::new(self);
        let pivot_cols = &reduced.pivots;
        let mut basis = BitMatrix::new(self.cols);
        for free in 0..self.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = BitVec::unit(self.cols, free);
            for (row, &p) in reduced.reduced.iter().zip(pivot_cols) {
                if row.get(free) {
                    v.set(p, true);
                }
            }
            basis.push_row(v);
        }
        basis
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix[{}x{}]", self.rows.len(), self.cols)
    }
}

/// Reduced row echelon form of a matrix, remembering how each reduced row
/// was combined from the original rows. Solves `c * M = target` queries and
/// reports the witness combination `c`.
#[derive(Clone, Debug)]
pub struct RowSolver {
    n_rows: usize,
    reduced: Vec<BitVec>,
    combos: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl RowSolver {
    pub fn new(m: &BitMatrix) -> Self {
        let n_rows = m.n_rows();
        let mut rows: Vec<BitVec> = m.iter_rows().cloned().collect();
        let mut combos: Vec<BitVec> = (0..n_rows).map(|i| BitVec::unit(n_rows, i)).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..m.n_cols() {
            let Some(pivot_row) = (r..n_rows).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(r, pivot_row);
            combos.swap(r, pivot_row);
            for i in 0..n_rows {
                if i != r && rows[i].get(col) {
                    let (head, tail) = split_two(&mut rows, i, r);
                    head.xor_assign(tail);
                    let (head, tail) = split_two(&mut combos, i, r);
                    head.xor_assign(tail);
                }
            }
            pivots.push(col);
            r += 1;
            if r == n_rows {
                break;
            }
        }
        rows.truncate(r);
        combos.truncate(r);
        RowSolver {
            n_rows,
            reduced: rows,
            combos,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    /// Whether `target` lies in the row space.
    pub fn contains(&self, target: &BitVec) -> bool {
        self.residual(target).is_zero()
    }

    /// Finds `c` with `c * M = target`, if one exists. The returned vector
    /// has one coefficient per original row.
    pub fn solve(&self, target: &BitVec) -> Option<BitVec> {
        let mut t = target.clone();
        let mut c = BitVec::zeros(self.n_rows);
        for (i, &p) in self.pivots.iter().enumerate() {
            if t.get(p) {
                t ^= &self.reduced[i];
                c ^= &self.combos[i];
            }
        }
        t.is_zero().then_some(c)
    }

    fn residual(&self, target: &BitVec) -> BitVec {
        let mut t = target.clone();
        for (i, &p) in self.pivots.iter().enumerate() {
            if t.get(p) {
                t ^= &self.reduced[i];
            }
        }
        t
    }
}

/// Mutable references to two distinct vector elements.
fn split_two<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&str]) -> BitMatrix {
        BitMatrix::parse_rows(&rows.join("\n")).unwrap()
    }

    #[test]
    fn bitvec_basics() {
        let v = BitVec::parse("0110").unwrap();
        assert_eq!(v.len(), 4);
        assert!(!v.get(0) && v.get(1) && v.get(2) && !v.get(3));
        assert_eq!(v.weight(), 2);
        assert_eq!(v.first_one(), Some(1));
        assert_eq!(v.to_string(), "0110");
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn xor_and_dot() {
        let mut a = BitVec::parse("1100").unwrap();
        let b = BitVec::parse("0110").unwrap();
        assert!(a.dot(&b));
        a ^= &b;
        assert_eq!(a.to_string(), "1010");
        assert!(!a.dot(&BitVec::parse("0101").unwrap()));
    }

    #[test]
    fn mask_round_trip() {
        let v = BitVec::from_mask(9, 0b1_0000_0011);
        assert_eq!(v.to_string(), "110000001");
        assert_eq!(v.as_mask(), 0b1_0000_0011);
    }

    #[test]
    fn rank_hand_checked() {
        assert_eq!(mat(&["110", "011", "101"]).rank(), 2);
        assert_eq!(mat(&["110", "011", "111"]).rank(), 3);
        assert_eq!(BitMatrix::identity(5).rank(), 5);
        assert_eq!(BitMatrix::zeros(3, 4).rank(), 0);
    }

    #[test]
    fn nullspace_of_all_ones_row() {
        let m = mat(&["111"]);
        let ns = m.nullspace_basis();
        assert_eq!(ns.n_rows(), 2);
        for row in ns.iter_rows() {
            assert!(m.mul_vec(row).is_zero());
        }
        assert_eq!(ns.rank(), 2);
    }

    #[test]
    fn nullspace_deterministic_order() {
        let m = mat(&["1010", "0110"]);
        let ns = m.nullspace_basis();
        assert_eq!(ns.to_string(), "1110\n0001");
    }

    #[test]
    fn solver_finds_witness_combination() {
        let m = mat(&["1100", "0110", "0011"]);
        let solver = RowSolver::new(&m);
        assert_eq!(solver.rank(), 3);
        let target = BitVec::parse("1010").unwrap();
        let c = solver.solve(&target).expect("in row space");
        assert_eq!(m.combine_rows(&c), target);
        assert!(solver.solve(&BitVec::parse("1000").unwrap()).is_none());
    }

    #[test]
    fn combine_rows_matches_manual_xor() {
        let m = mat(&["1100", "0110", "0011"]);
        let c = BitVec::parse("101").unwrap();
        assert_eq!(m.combine_rows(&c).to_string(), "1111");
    }

    #[test]
    fn transpose_round_trip() {
        let m = mat(&["110", "011"]);
        assert_eq!(m.transpose().to_string(), "10\n11\n01");
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!(BitVec::parse("01x"), Err(Gf2Error::BadBitChar('x')));
        assert!(matches!(
            BitMatrix::parse_rows("10\n100"),
            Err(Gf2Error::RaggedRows)
        ));
    }

    proptest! {
        #[test]
        fn rank_nullity(rows in 1usize..12, cols in 1usize..32, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut m = BitMatrix::new(cols);
            for _ in 0..rows {
                let bits: Vec<bool> = (0..cols).map(|_| rng.random()).collect();
                m.push_row(BitVec::from_bools(&bits));
            }
            let ns = m.nullspace_basis();
            prop_assert_eq!(m.rank() + ns.n_rows(), cols);
            prop_assert_eq!(ns.rank(), ns.n_rows());
            for v in ns.iter_rows() {
                prop_assert!(m.mul_vec(v).is_zero());
            }
        }

        #[test]
        fn solver_agrees_with_membership(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let cols = 10;
            let mut m = BitMatrix::new(cols);
            for _ in 0..6 {
                let bits: Vec<bool> = (0..cols).map(|_| rng.random()).collect();
                m.push_row(BitVec::from_bools(&bits));
            }
            let solver = RowSolver::new(&m);
            prop_assert_eq!(solver.rank(), m.rank());
            for _ in 0..20 {
                let bits: Vec<bool> = (0..cols).map(|_| rng.random()).collect();
                let t = BitVec::from_bools(&bits);
                match solver.solve(&t) {
                    Some(c) => prop_assert_eq!(m.combine_rows(&c), t),
                    None => prop_assert!(!solver.contains(&t)),
                }
            }
        }
    }
}

//! Binary linear block codes used to harden delivery against symbol errors,
//! with bounded-distance decoding.
//!
//! [`best_code`] picks the shortest available `[n, k, 2*delta+1]` code for a
//! given message length: a registered known-optimal generator when one
//! exists, then a user-supplied code table, then a constructive family
//! (repetition for a single message bit, a shortened Hamming code for
//! single-error correction, bitwise repetition otherwise). Registered and
//! table codes are reported as optimal, constructive ones as achievable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::gf2::{BitMatrix, BitVec, RowSolver};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("generator must have full row rank {expected}, got {got}")]
    GeneratorRank { expected: usize, got: usize },
    #[error("claimed distance {claimed} but generator achieves {actual}")]
    DistanceTooSmall { claimed: usize, actual: usize },
    #[error("received word has more than {radius} errors")]
    DecodingFailure { radius: usize },
    #[error("no decoder available for an [{n}, {k}] code (need n <= 64 with small redundancy, or k <= 24)")]
    NoDecoder { n: usize, k: usize },
    #[error("distance sweep limited to k <= {limit}, code has k = {k}")]
    SweepTooLarge { k: usize, limit: usize },
    #[error("invalid code table: {0}")]
    TableInvalid(String),
    #[error("cannot read code table: {0}")]
    TableIo(#[from] std::io::Error),
    #[error("cannot parse code table: {0}")]
    TableCsv(#[from] csv::Error),
}

/// Where a selected code came from, which also determines whether its
/// length is known optimal or merely achievable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeOrigin {
    /// No protection requested; the identity map.
    Identity,
    /// One of the registered known-optimal generators.
    Builtin,
    /// Taken from a user-supplied code table.
    UserTable,
    /// Constructive single-error-correcting family.
    ShortenedHamming,
    /// Bitwise repetition.
    Repetition,
}

impl CodeOrigin {
    pub fn label(self) -> &'static str {
        match self {
            CodeOrigin::Identity => "optimal (identity)",
            CodeOrigin::Builtin => "optimal (built-in)",
            CodeOrigin::UserTable => "optimal (table)",
            CodeOrigin::ShortenedHamming => "achievable (shortened Hamming)",
            CodeOrigin::Repetition => "achievable (repetition)",
        }
    }

    pub fn is_optimal(self) -> bool {
        matches!(
            self,
            CodeOrigin::Identity | CodeOrigin::Builtin | CodeOrigin::UserTable
        )
    }
}

impl fmt::Display for CodeOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

const BUILTIN_10_6_3: &str = "1000001100
0100001010
0010001001
0001000110
0000100101
0000010011";

const BUILTIN_6_3_3: &str = "100110
010101
001011";

/// Registered known-optimal generators by `(k, d)`.
pub fn builtin_generator(k: usize, d: usize) -> Option<BitMatrix> {
    let text = match (k, d) {
        (6, 3) => BUILTIN_10_6_3,
        (3, 3) => BUILTIN_6_3_3,
        _ => return None,
    };
    Some(BitMatrix::parse_rows(text).expect("registered generators parse"))
}

#[derive(Clone, Debug)]
enum Decoder {
    /// Syndrome lookup: error mask indexed by syndrome. Requires `n <= 64`
    /// and small redundancy.
    Syndrome {
        h_cols: Vec<u64>,
        table: Vec<Option<u64>>,
    },
    /// Nearest-codeword sweep over all messages. Requires `k <= 24`.
    Sweep,
    /// Per-block majority vote for bitwise repetition.
    BlockMajority { reps: usize },
}

/// An `[n, k, d]` binary linear code with encoder and bounded-distance
/// decoder.
#[derive(Clone, Debug)]
pub struct LinearCode {
    n: usize,
    k: usize,
    d: usize,
    gen: BitMatrix,
    origin: CodeOrigin,
    decoder: Option<Decoder>,
    msg_solver: RowSolver,
}

/// A successful decode: the nearest codeword, its message, and how many
/// positions were corrected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub message: BitVec,
    pub codeword: BitVec,
    pub corrected: usize,
}

const SYNDROME_REDUNDANCY_LIMIT: usize = 22;
const SWEEP_K_LIMIT: usize = 24;
const CONSTRUCTION_CHECK_K_LIMIT: usize = 16;

impl LinearCode {
    /// Wraps a generator matrix, checking full rank and (for `k <= 16`)
    /// that the claimed distance is actually achieved.
    pub fn new(gen: BitMatrix, d: usize, origin: CodeOrigin) -> Result<Self, CodeError> {
        let k = gen.n_rows();
        let n = gen.n_cols();
        assert!(k >= 1 && d >= 1, "degenerate code parameters");
        let rank = gen.rank();
        if rank != k {
            return Err(CodeError::GeneratorRank {
                expected: k,
                got: rank,
            });
        }
        let msg_solver = RowSolver::new(&gen);
        let mut code = LinearCode {
            n,
            k,
            d,
            gen,
            origin,
            decoder: None,
            msg_solver,
        };
        if k <= CONSTRUCTION_CHECK_K_LIMIT {
            let actual = sweep_min_distance(&code.gen);
            if actual < d {
                return Err(CodeError::DistanceTooSmall { claimed: d, actual });
            }
        }
        code.decoder = code.pick_decoder();
        Ok(code)
    }

    fn with_block_majority(gen: BitMatrix, reps: usize) -> Self {
        let k = gen.n_rows();
        let n = gen.n_cols();
        let msg_solver = RowSolver::new(&gen);
        LinearCode {
            n,
            k,
            d: reps,
            gen,
            origin: CodeOrigin::Repetition,
            decoder: Some(Decoder::BlockMajority { reps }),
            msg_solver,
        }
    }

    fn pick_decoder(&self) -> Option<Decoder> {
        let radius = self.radius();
        // Error masks are u64, so syndrome decoding needs n <= 64 except in
        // the trivial full-rate case where the mask is always zero.
        if self.n == self.k || (self.n <= 64 && self.n - self.k <= SYNDROME_REDUNDANCY_LIMIT) {
            let check = self.gen.nullspace_basis();
            let r = check.n_rows();
            let h_cols: Vec<u64> = (0..self.n)
                .map(|c| (0..r).fold(0u64, |acc, j| acc | u64::from(check.get(j, c)) << j))
                .collect();
            let mut table: Vec<Option<u64>> = vec![None; 1 << r];
            let mut frontier: Vec<(u64, u64)> = vec![(0, 0)];
            table[0] = Some(0);
            for _ in 0..radius {
                let mut next = Vec::new();
                for &(err, syn) in &frontier {
                    let start = 64 - err.leading_zeros() as usize;
                    for (p, &col) in h_cols.iter().enumerate().skip(start) {
                        let e = err | 1 << p;
                        let s = syn ^ col;
                        if table[s as usize].is_none() {
                            table[s as usize] = Some(e);
                            next.push((e, s));
                        }
                    }
                }
                frontier = next;
            }
            return Some(Decoder::Syndrome { h_cols, table });
        }
        if self.k <= SWEEP_K_LIMIT {
            return Some(Decoder::Sweep);
        }
        None
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn origin(&self) -> CodeOrigin {
        self.origin
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.gen
    }

    /// Guaranteed correction radius, `floor((d-1)/2)`.
    pub fn radius(&self) -> usize {
        (self.d - 1) / 2
    }

    pub fn encode(&self, message: &BitVec) -> BitVec {
        assert_eq!(message.len(), self.k, "message length mismatch");
        let mut out = BitVec::zeros(self.n);
        for i in message.ones() {
            out ^= self.gen.row(i);
        }
        out
    }

    /// Decodes to the nearest codeword if it lies within the correction
    /// radius, otherwise fails.
    pub fn decode_bounded(&self, received: &BitVec) -> Result<Decoded, CodeError> {
        assert_eq!(received.len(), self.n, "received length mismatch");
        let radius = self.radius();
        let fail = || CodeError::DecodingFailure { radius };
        match self.decoder.as_ref().ok_or(CodeError::NoDecoder {
            n: self.n,
            k: self.k,
        })? {
            Decoder::Syndrome { h_cols, table } => {
                let syn: u64 = received.ones().fold(0, |acc, p| acc ^ h_cols[p]);
                let err = table[syn as usize].ok_or_else(fail)?;
                let mut codeword = received.clone();
                for p in 0..self.n {
                    if err >> p & 1 == 1 {
                        codeword.set(p, !codeword.get(p));
                    }
                }
                let corrected = err.count_ones() as usize;
                if corrected > radius {
                    return Err(fail());
                }
                let message = self
                    .msg_solver
                    .solve(&codeword)
                    .expect("corrected word is a codeword");
                Ok(Decoded {
                    message,
                    codeword,
                    corrected,
                })
            }
            Decoder::Sweep => {
                let mut best: Option<(usize, u64, BitVec)> = None;
                let mut codeword = BitVec::zeros(self.n);
                let mut msg = 0u64;
                for g in 0..1u64 << self.k {
                    if g > 0 {
                        let flip = g.trailing_zeros() as usize;
                        // Gray-code order: counter g visits message
                        // g ^ (g >> 1) after flipping one bit.
                        codeword ^= self.gen.row(flip);
                        msg ^= 1 << flip;
                    }
                    let mut diff = codeword.clone();
                    diff ^= received;
                    let dist = diff.weight();
                    if best.as_ref().is_none_or(|(b, _, _)| dist < *b) {
                        best = Some((dist, msg, codeword.clone()));
                        if dist <= radius {
                            break;
                        }
                    }
                }
                let (dist, msg, codeword) = best.unwrap();
                if dist > radius {
                    return Err(fail());
                }
                Ok(Decoded {
                    message: BitVec::from_mask(self.k, msg),
                    codeword,
                    corrected: dist,
                })
            }
            Decoder::BlockMajority { reps } => {
                let mut message = BitVec::zeros(self.k);
                let mut corrected = 0;
                for i in 0..self.k {
                    let ones = (0..*reps).filter(|j| received.get(i * reps + j)).count();
                    message.set(i, 2 * ones > *reps);
                    corrected += ones.min(reps - ones);
                }
                if corrected > radius {
                    return Err(fail());
                }
                Ok(Decoded {
                    codeword: self.encode(&message),
                    message,
                    corrected,
                })
            }
        }
    }
}

fn sweep_min_distance(gen: &BitMatrix) -> usize {
    let k = gen.n_rows();
    let mut codeword = BitVec::zeros(gen.n_cols());
    let mut best = usize::MAX;
    for g in 1..1u64 << k {
        codeword ^= gen.row(g.trailing_zeros() as usize);
        best = best.min(codeword.weight());
    }
    best
}

/// Exact minimum distance by sweeping all nonzero codewords. Limited to
/// `k <= 24`.
pub fn min_distance(code: &LinearCode) -> Result<usize, CodeError> {
    if code.k > SWEEP_K_LIMIT {
        return Err(CodeError::SweepTooLarge {
            k: code.k,
            limit: SWEEP_K_LIMIT,
        });
    }
    Ok(sweep_min_distance(&code.gen))
}

/// Length of the shortened Hamming code for `k` message bits: the least
/// `n = k + r` with `2^r >= k + r + 1`.
pub fn shortened_hamming_length(k: usize) -> usize {
    let r = (1..).find(|&r| checked_pow2(r).is_some_and(|p| p > k + r));
    k + r.unwrap()
}

fn checked_pow2(r: usize) -> Option<usize> {
    1usize.checked_shl(r as u32)
}

/// The systematic `[k + r, k, 3]` shortened Hamming code: parity part rows
/// are the distinct `r`-bit patterns of weight at least two, taken lightest
/// first and within equal weight in decreasing numeric order (most
/// significant bit first).
pub fn shortened_hamming_code(k: usize) -> Result<LinearCode, CodeError> {
    assert!(k >= 1, "need at least one message bit");
    let n = shortened_hamming_length(k);
    let r = n - k;
    let mut patterns: Vec<u32> = (1..1u32 << r).filter(|p| p.count_ones() >= 2).collect();
    patterns.sort_by_key(|&p| (p.count_ones(), std::cmp::Reverse(p)));
    let mut gen = BitMatrix::new(n);
    for (i, &p) in patterns.iter().take(k).enumerate() {
        let mut row = BitVec::unit(n, i);
        for bit in 0..r {
            if p >> (r - 1 - bit) & 1 == 1 {
                row.set(k + bit, true);
            }
        }
        gen.push_row(row);
    }
    LinearCode::new(gen, 3, CodeOrigin::ShortenedHamming)
}

fn repetition_code(k: usize, d: usize) -> LinearCode {
    let mut gen = BitMatrix::new(k * d);
    for i in 0..k {
        let mut row = BitVec::zeros(k * d);
        for j in 0..d {
            row.set(i * d + j, true);
        }
        gen.push_row(row);
    }
    LinearCode::with_block_majority(gen, d)
}

fn identity_code(k: usize) -> LinearCode {
    LinearCode::new(BitMatrix::identity(k), 1, CodeOrigin::Identity)
        .expect("identity generator is valid")
}

/// One code table row: the best known length for `(k, d)`, a free-form
/// source note, and optionally a generator.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub n: usize,
    pub source: String,
    pub generator: Option<BitMatrix>,
}

/// Best known `[n, k, d]` lengths, keyed by `(k, d)`, loaded from CSV.
///
/// Expected columns: `k,d,n,source`. A source of the form `file:PATH`
/// points at a whitespace-separated generator matrix, resolved relative to
/// the CSV file. Lengths must be consistent: `n >= k`, and for a fixed `d`
/// no longer message may need a shorter code.
#[derive(Clone, Debug, Default)]
pub struct CodeTable {
    entries: BTreeMap<(usize, usize), TableEntry>,
}

impl CodeTable {
    pub fn empty() -> Self {
        CodeTable::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, k: usize, d: usize) -> Option<&TableEntry> {
        self.entries.get(&(k, d))
    }

    pub fn load_csv(path: &Path) -> Result<Self, CodeError> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut entries = BTreeMap::new();
        for record in reader.deserialize() {
            let row: CsvRow = record?;
            if row.k < 1 || row.d < 1 {
                return Err(CodeError::TableInvalid(format!(
                    "k and d must be positive, got k={} d={}",
                    row.k, row.d
                )));
            }
            if row.n < row.k {
                return Err(CodeError::TableInvalid(format!(
                    "n={} shorter than k={}",
                    row.n, row.k
                )));
            }
            let generator = match row.source.strip_prefix("file:") {
                Some(rel) => {
                    let text = std::fs::read_to_string(dir.join(rel))?;
                    let gen = BitMatrix::parse_rows(&text)
                        .map_err(|e| CodeError::TableInvalid(format!("generator {rel}: {e}")))?;
                    if gen.n_rows() != row.k || gen.n_cols() != row.n {
                        return Err(CodeError::TableInvalid(format!(
                            "generator {rel} is {}x{}, expected {}x{}",
                            gen.n_rows(),
                            gen.n_cols(),
                            row.k,
                            row.n
                        )));
                    }
                    Some(gen)
                }
                None => None,
            };
            if entries
                .insert(
                    (row.k, row.d),
                    TableEntry {
                        n: row.n,
                        source: row.source,
                        generator,
                    },
                )
                .is_some()
            {
                return Err(CodeError::TableInvalid(format!(
                    "duplicate entry for k={} d={}",
                    row.k, row.d
                )));
            }
        }
        let table = CodeTable { entries };
        table.check_monotone()?;
        Ok(table)
    }

    fn check_monotone(&self) -> Result<(), CodeError> {
        let mut last: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (&(k, d), entry) in &self.entries {
            if let Some(&(prev_k, prev_n)) = last.get(&d) {
                if entry.n < prev_n {
                    return Err(CodeError::TableInvalid(format!(
                        "length not monotone for d={d}: k={prev_k} needs {prev_n} but k={k} needs {}",
                        entry.n
                    )));
                }
            }
            last.insert(d, (k, entry.n));
        }
        Ok(())
    }
}

#[derive(serde::Deserialize)]
struct CsvRow {
    k: usize,
    d: usize,
    n: usize,
    source: String,
}

/// Selects the shortest available code correcting `delta` errors on `k`
/// message bits: registered generator, then user table, then the
/// constructive family.
pub fn best_code(k: usize, delta: usize, table: &CodeTable) -> Result<LinearCode, CodeError> {
    assert!(k >= 1, "need at least one message bit");
    if delta == 0 {
        return Ok(identity_code(k));
    }
    let d = 2 * delta + 1;
    if let Some(gen) = builtin_generator(k, d) {
        return LinearCode::new(gen, d, CodeOrigin::Builtin);
    }
    if let Some(entry) = table.lookup(k, d) {
        if let Some(gen) = &entry.generator {
            return LinearCode::new(gen.clone(), d, CodeOrigin::UserTable);
        }
    }
    if k == 1 {
        return Ok(repetition_code(1, d));
    }
    if d == 3 {
        return shortened_hamming_code(k);
    }
    Ok(repetition_code(k, d))
}

/// The code length [`best_code`] would use, resolvable even from table
/// entries that record only a length.
pub fn best_code_length(k: usize, delta: usize, table: &CodeTable) -> (usize, CodeOrigin) {
    assert!(k >= 1, "need at least one message bit");
    if delta == 0 {
        return (k, CodeOrigin::Identity);
    }
    let d = 2 * delta + 1;
    if let Some(gen) = builtin_generator(k, d) {
        return (gen.n_cols(), CodeOrigin::Builtin);
    }
    if let Some(entry) = table.lookup(k, d) {
        return (entry.n, CodeOrigin::UserTable);
    }
    if k == 1 {
        return (d, CodeOrigin::Repetition);
    }
    if d == 3 {
        return (shortened_hamming_length(k), CodeOrigin::ShortenedHamming);
    }
    (k * d, CodeOrigin::Repetition)
}

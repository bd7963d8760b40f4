//! Error-correcting delivery: the error-free schedule concatenated with a
//! `[n, kappa, 2*delta + 1]` outer code, plus an end-to-end simulator.
//!
//! Subfiles carry `b`-bit payloads, one `u64` block per subfile coordinate.
//! Encoding works per bit plane: plane `p` of the broadcast symbols is the
//! outer encoding of plane `p` of the error-free transmissions, which makes
//! each broadcast symbol a GF(2) combination of subfile blocks and lets a
//! receiver first correct up to `delta` corrupted symbols per plane and
//! then solve the error-free system against its cache.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caching::{cfl_place, CachingParams, Demand, Placement, SubfileIndex};
use crate::code::{best_code, CodeError, CodeTable, LinearCode};
use crate::delivery::{cfl_deliver, ScheduleEntry, TransmissionSchedule};
use crate::gf2::{BitMatrix, BitVec, RowSolver};

#[derive(Debug, Error)]
pub enum EcError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("user {user} cannot solve for {}", .subfile.label())]
    Unsolvable { user: usize, subfile: SubfileIndex },
    #[error("error pattern has weight {weight}, schedule tolerates {delta}")]
    PatternTooHeavy { weight: usize, delta: usize },
    #[error("error position {position} invalid for {symbols} symbols")]
    PatternPosition { position: usize, symbols: usize },
    #[error("error mask {mask:#x} invalid for {bits}-bit payloads")]
    PatternMask { mask: u64, bits: u32 },
    #[error("payload width must be 1..=64 bits, got {0}")]
    BadBits(u32),
    #[error("exhaustive sweep would run {count} patterns, limit is {limit}")]
    ExhaustiveTooLarge { count: u128, limit: u128 },
}

/// The concatenated schedule: one broadcast transmission per outer code
/// position, each a GF(2) combination of subfile coordinates.
#[derive(Clone, Debug)]
pub struct EcSchedule {
    inner: TransmissionSchedule,
    outer: LinearCode,
    delta: usize,
    rows: BitMatrix,
    labels: Vec<String>,
}

impl EcSchedule {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn inner(&self) -> &TransmissionSchedule {
        &self.inner
    }

    pub fn outer(&self) -> &LinearCode {
        &self.outer
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn rows(&self) -> &BitMatrix {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Plain-text rendering, one `T_i: label` line per transmission.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(&format!("T_{}: {}\n", i + 1, label));
        }
        out
    }

    /// Serialized transmissions with 1-based indices and subfile supports.
    pub fn entries(&self, subfiles_per_file: usize) -> Vec<ScheduleEntry> {
        TransmissionSchedule::new(self.rows.clone(), self.labels.clone()).entries(subfiles_per_file)
    }
}

/// Concatenates an error-free schedule with the best available
/// `delta`-error-correcting outer code for its length.
pub fn build_ec_schedule(
    inner: &TransmissionSchedule,
    delta: usize,
    table: &CodeTable,
) -> Result<EcSchedule, CodeError> {
    let outer = best_code(inner.len(), delta, table)?;
    let gen = outer.generator();
    let mut rows = BitMatrix::new(inner.rows().n_cols());
    let mut labels = Vec::with_capacity(outer.n());
    for t in 0..outer.n() {
        let support: Vec<usize> = (0..outer.k()).filter(|&i| gen.get(i, t)).collect();
        let mut row = BitVec::zeros(inner.rows().n_cols());
        for &i in &support {
            row ^= inner.rows().row(i);
        }
        rows.push_row(row);
        let label = support
            .iter()
            .map(|&i| inner.labels()[i].as_str())
            .collect::<Vec<_>>()
            .join(" ⊕ ");
        labels.push(if label.is_empty() { "0".into() } else { label });
    }
    Ok(EcSchedule {
        inner: inner.clone(),
        outer,
        delta,
        rows,
        labels,
    })
}

/// Subfile contents: one block of `bits` payload bits per coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Payload {
    bits: u32,
    blocks: Vec<u64>,
}

impl Payload {
    pub fn new(bits: u32, blocks: Vec<u64>) -> Result<Self, EcError> {
        if !(1..=64).contains(&bits) {
            return Err(EcError::BadBits(bits));
        }
        let mask = bit_mask(bits);
        if let Some(&bad) = blocks.iter().find(|&&b| b & !mask != 0) {
            return Err(EcError::PatternMask { mask: bad, bits });
        }
        Ok(Payload { bits, blocks })
    }

    pub fn random<R: Rng>(n_messages: usize, bits: u32, rng: &mut R) -> Result<Self, EcError> {
        if !(1..=64).contains(&bits) {
            return Err(EcError::BadBits(bits));
        }
        let mask = bit_mask(bits);
        Ok(Payload {
            bits,
            blocks: (0..n_messages)
                .map(|_| rng.random::<u64>() & mask)
                .collect(),
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    /// The blocks of one file, parts in order.
    pub fn file_blocks(&self, file: usize, subfiles_per_file: usize) -> Vec<u64> {
        (1..=subfiles_per_file)
            .map(|part| self.blocks[SubfileIndex::new(file, part).flat(subfiles_per_file)])
            .collect()
    }
}

fn bit_mask(bits: u32) -> u64 {
    if bits == 64 {
        u64::MAX
    } else {
        (1 << bits) - 1
    }
}

/// An adversarial broadcast corruption: up to `delta` symbol positions,
/// each XORed with a nonzero block.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErrorPattern {
    flips: Vec<(usize, u64)>,
}

impl ErrorPattern {
    pub fn none() -> Self {
        ErrorPattern::default()
    }

    pub fn new(
        flips: Vec<(usize, u64)>,
        delta: usize,
        symbols: usize,
        bits: u32,
    ) -> Result<Self, EcError> {
        if flips.len() > delta {
            return Err(EcError::PatternTooHeavy {
                weight: flips.len(),
                delta,
            });
        }
        let mut seen = vec![false; symbols];
        for &(position, mask) in &flips {
            if position >= symbols || seen[position] {
                return Err(EcError::PatternPosition { position, symbols });
            }
            seen[position] = true;
            if mask == 0 || mask & !bit_mask(bits) != 0 {
                return Err(EcError::PatternMask { mask, bits });
            }
        }
        Ok(ErrorPattern { flips })
    }

    pub fn weight(&self) -> usize {
        self.flips.len()
    }

    pub fn flips(&self) -> &[(usize, u64)] {
        &self.flips
    }
}

/// Broadcasts the payload: one block per schedule transmission.
pub fn transmit(schedule: &EcSchedule, payload: &Payload) -> Vec<u64> {
    schedule
        .rows()
        .iter_rows()
        .map(|row| row.ones().fold(0, |acc, c| acc ^ payload.blocks()[c]))
        .collect()
}

/// Applies an error pattern to broadcast symbols.
pub fn corrupt(symbols: &[u64], pattern: &ErrorPattern) -> Vec<u64> {
    let mut out = symbols.to_vec();
    for &(position, mask) in pattern.flips() {
        out[position] ^= mask;
    }
    out
}

/// What a user stores: its cache coding rows applied to the payload.
pub fn cache_blocks(placement: &Placement, user: usize, payload: &Payload) -> Vec<u64> {
    placement
        .user_rows(user)
        .iter_rows()
        .map(|row| row.ones().fold(0, |acc, c| acc ^ payload.blocks()[c]))
        .collect()
}

/// Recovers the blocks of `user`'s requested file from corrupted broadcast
/// symbols and its cache: outer-decode each bit plane, then solve the
/// error-free system.
pub fn receiver_decode(
    schedule: &EcSchedule,
    placement: &Placement,
    demand: &Demand,
    user: usize,
    cache: &[u64],
    received: &[u64],
    bits: u32,
) -> Result<Vec<u64>, EcError> {
    let outer = schedule.outer();
    let k = outer.k();
    let mut inner_blocks = vec![0u64; k];
    for plane in 0..bits {
        let mut word = BitVec::zeros(outer.n());
        for (t, &symbol) in received.iter().enumerate() {
            word.set(t, symbol >> plane & 1 == 1);
        }
        let decoded = outer.decode_bounded(&word)?;
        for (i, block) in inner_blocks.iter_mut().enumerate() {
            if decoded.message.get(i) {
                *block |= 1 << plane;
            }
        }
    }
    let params = placement.params();
    let per_file = params.subfiles_per_file();
    let cache_rows = placement.user_rows(user);
    let stacked = cache_rows.stacked(schedule.inner().rows());
    let solver = RowSolver::new(&stacked);
    let file = demand.of_user(user);
    let mut blocks = Vec::with_capacity(per_file);
    for part in 1..=per_file {
        let subfile = SubfileIndex::new(file, part);
        let target = BitVec::unit(params.n_messages(), subfile.flat(per_file));
        let combo = solver.solve(&target).ok_or(EcError::Unsolvable {
            user: user + 1,
            subfile,
        })?;
        let block = combo.ones().fold(0u64, |acc, i| {
            acc ^ if i < cache.len() {
                cache[i]
            } else {
                inner_blocks[i - cache.len()]
            }
        });
        blocks.push(block);
    }
    Ok(blocks)
}

/// Simulation settings: error budget, payload width, trial count, seed, and
/// whether to sweep every error pattern up to weight `delta` in addition to
/// the random trials.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta: usize,
    pub bits: u32,
    pub trials: u64,
    pub seed: u64,
    pub exhaustive: bool,
}

/// Outer code parameters as reported by the simulator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeInfo {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub origin: String,
}

/// Outcome of an end-to-end simulation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub files: usize,
    pub users: usize,
    pub demand: Vec<usize>,
    pub delta: usize,
    pub bits: u32,
    pub code: CodeInfo,
    pub seed: u64,
    pub trials: u64,
    pub exhaustive: bool,
    /// Total decode attempts per user: exhaustive patterns plus trials.
    pub runs: u64,
    /// Per-user count of runs where the full file was recovered.
    pub successes: Vec<u64>,
}

impl SimReport {
    pub fn all_succeeded(&self) -> bool {
        self.successes.iter().all(|&s| s == self.runs)
    }
}

const EXHAUSTIVE_LIMIT: u128 = 100_000;

fn exhaustive_pattern_count(symbols: usize, delta: usize) -> u128 {
    let mut total: u128 = 0;
    for w in 0..=delta {
        let mut c: u128 = 1;
        for i in 0..w {
            c = c * (symbols - i) as u128 / (i + 1) as u128;
        }
        total += c;
    }
    total
}

/// Runs placement, delivery, corruption, and decoding end to end, counting
/// per-user successes. With `exhaustive` set, every error pattern support
/// of weight up to `delta` is swept (with random nonzero masks) before the
/// random trials.
pub fn end_to_end_sim(
    params: &CachingParams,
    demand: &Demand,
    config: &SimConfig,
    table: &CodeTable,
) -> Result<SimReport, EcError> {
    if !(1..=64).contains(&config.bits) {
        return Err(EcError::BadBits(config.bits));
    }
    let placement = cfl_place(params);
    let inner = cfl_deliver(&placement, demand);
    let schedule = build_ec_schedule(&inner, config.delta, table)?;
    let symbols = schedule.len();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut successes = vec![0u64; params.users()];
    let mut runs = 0u64;

    let run_one = |pattern: &ErrorPattern,
                   rng: &mut ChaCha12Rng,
                   successes: &mut Vec<u64>|
     -> Result<(), EcError> {
        let payload = Payload::random(params.n_messages(), config.bits, rng)?;
        let received = corrupt(&transmit(&schedule, &payload), pattern);
        for (user, tally) in successes.iter_mut().enumerate() {
            let cache = cache_blocks(&placement, user, &payload);
            let expected = payload.file_blocks(demand.of_user(user), params.subfiles_per_file());
            let ok = matches!(
                receiver_decode(&schedule, &placement, demand, user, &cache, &received, config.bits),
                Ok(blocks) if blocks == expected
            );
            if ok {
                *tally += 1;
            }
        }
        Ok(())
    };

    let random_mask = |rng: &mut ChaCha12Rng| loop {
        let m = rng.random::<u64>() & bit_mask(config.bits);
        if m != 0 {
            break m;
        }
    };

    if config.exhaustive {
        let count = exhaustive_pattern_count(symbols, config.delta);
        if count > EXHAUSTIVE_LIMIT {
            return Err(EcError::ExhaustiveTooLarge {
                count,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        for weight in 0..=config.delta {
            let mut positions: Vec<usize> = (0..weight).collect();
            loop {
                let flips: Vec<(usize, u64)> = positions
                    .iter()
                    .map(|&p| (p, random_mask(&mut rng)))
                    .collect();
                let pattern = ErrorPattern::new(flips, config.delta, symbols, config.bits)?;
                run_one(&pattern, &mut rng, &mut successes)?;
                runs += 1;
                if positions.is_empty() || !crate::gic::next_combination(&mut positions, symbols) {
                    break;
                }
            }
        }
    }

    for _ in 0..config.trials {
        let weight = rng.random_range(0..=config.delta);
        let flips: Vec<(usize, u64)> = sample_indices(&mut rng, symbols, weight)
            .into_iter()
            .map(|p| (p, random_mask(&mut rng)))
            .collect();
        let pattern = ErrorPattern::new(flips, config.delta, symbols, config.bits)?;
        run_one(&pattern, &mut rng, &mut successes)?;
        runs += 1;
    }

    Ok(SimReport {
        files: params.files(),
        users: params.users(),
        demand: demand.as_slice().to_vec(),
        delta: config.delta,
        bits: config.bits,
        code: CodeInfo {
            n: schedule.outer().n(),
            k: schedule.outer().k(),
            d: schedule.outer().d(),
            origin: schedule.outer().origin().label().to_string(),
        },
        seed: config.seed,
        trials: config.trials,
        exhaustive: config.exhaustive,
        runs,
        successes,
    })
}

//! The generalized index-coding instance induced by a demand, and the
//! machinery around its two key quantities:
//!
//! - the min-rank `kappa`, the least number of transmissions any linear
//!   scheme needs (closed form, plus a brute-force search for small cases),
//! - the generalized independence number `alpha`, a lower bound on `kappa`
//!   defined through subspaces whose nonzero vectors all lie in some
//!   receiver's confusion set (Z-set).
//!
//! For the placements produced by this crate the two are equal, which is
//! certified constructively: [`constructive_subspace`] builds a subspace of
//! dimension exactly `kappa` and [`verify_subspace_in_a`] checks membership
//! of its nonzero vectors, either exhaustively or by a structural argument
//! that amounts to a machine-checked proof.
//!
//! A receiver here is a (user, subfile) pair: user `i` runs one decoder per
//! subfile of its requested file, each knowing the same cached packets.

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::caching::{CachingParams, Demand, Placement, Regime, SubfileIndex};
use crate::gf2::{BitMatrix, BitVec, RowSolver};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GicError {
    #[error("exhaustive check limited to dimension {limit}, subspace has dimension {dim}")]
    ExhaustiveTooLarge { dim: usize, limit: usize },
    #[error("min-rank search space has {bits} free coefficient bits, limit is {limit}")]
    SearchTooLarge { bits: u32, limit: u32 },
    #[error("subspace enumeration would visit about {estimate} vectors, limit is {limit}")]
    EnumerationTooLarge { estimate: BigInt, limit: u64 },
    #[error("operation requires at most 64 message coordinates, instance has {n}")]
    TooWide { n: usize },
}

/// One decoding task: the owning user, the side information available to it,
/// and the single coordinate it must recover.
#[derive(Clone, Debug)]
pub struct Receiver {
    pub user: usize,
    pub side_info: BitMatrix,
    pub demand_row: BitVec,
}

/// A generalized index-coding instance with coded side information.
#[derive(Clone, Debug)]
pub struct GicInstance {
    pub n_messages: usize,
    pub receivers: Vec<Receiver>,
}

impl GicInstance {
    /// Receivers as `(demand mask, side-info masks)` for the fast u64 paths.
    fn masks(&self) -> Result<Vec<(u64, Vec<u64>)>, GicError> {
        if self.n_messages > 64 {
            return Err(GicError::TooWide { n: self.n_messages });
        }
        Ok(self
            .receivers
            .iter()
            .map(|r| {
                let sides = r.side_info.iter_rows().map(BitVec::as_mask).collect();
                (r.demand_row.as_mask(), sides)
            })
            .collect())
    }
}

/// Builds the instance induced by a placement and a demand: one receiver per
/// (user, subfile-of-requested-file) pair, ordered user-major then by part.
pub fn build_gic_instance(placement: &Placement, demand: &Demand) -> GicInstance {
    let params = placement.params();
    assert_eq!(demand.len(), params.users(), "demand length mismatch");
    let per_file = params.subfiles_per_file();
    let width = params.n_messages();
    let mut receivers = Vec::with_capacity(params.users() * per_file);
    for user in 0..params.users() {
        let file = demand.of_user(user);
        for part in 1..=per_file {
            receivers.push(Receiver {
                user,
                side_info: placement.user_rows(user).clone(),
                demand_row: BitVec::unit(width, SubfileIndex::new(file, part).flat(per_file)),
            });
        }
    }
    GicInstance {
        n_messages: width,
        receivers,
    }
}

/// Min-rank of the induced instance as a function of the number of distinct
/// requested files, in closed form.
pub fn min_rank_closed_form(params: &CachingParams, distinct_files: usize) -> usize {
    let n = params.files();
    let k = params.users();
    assert!(
        (1..=n).contains(&distinct_files),
        "distinct file count must be in 1..={n}"
    );
    match params.regime() {
        Regime::EqualUsers => {
            if distinct_files < n {
                n * distinct_files
            } else {
                n * (n - 1)
            }
        }
        Regime::MoreUsers => {
            if distinct_files < n {
                n * k * distinct_files
            } else {
                n * n * (k - 1)
            }
        }
    }
}

/// Whether `v` lies in the Z-set of `receiver`: invisible to its side
/// information but overlapping its demand.
pub fn z_set_contains(inst: &GicInstance, receiver: usize, v: &BitVec) -> bool {
    let r = &inst.receivers[receiver];
    r.side_info.mul_vec(v).is_zero() && r.demand_row.dot(v)
}

fn in_some_z_set(inst: &GicInstance, v: &BitVec) -> bool {
    (0..inst.receivers.len()).any(|i| z_set_contains(inst, i, v))
}

/// A subspace presented two ways: as the nullspace of a constraint matrix
/// and as an explicit basis (the deterministic nullspace basis).
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub constraints: BitMatrix,
    pub basis: BitMatrix,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.n_rows()
    }

    /// Wraps an explicit basis, deriving constraints whose nullspace is its
    /// span.
    pub fn from_basis(basis: BitMatrix) -> Self {
        let constraints = basis.nullspace_basis();
        SubspaceBasis { constraints, basis }
    }
}

/// Builds the subspace witnessing `alpha >= kappa` for the given demand, as
/// the nullspace of an explicit constraint system:
///
/// - every cache packet equation of a spanning set of users (all users,
///   except that when `K > N` and all files are requested only the
///   lowest-indexed requester of each file contributes),
/// - when some file goes unrequested, one zeroing equation per subfile of
///   every unrequested file except the largest-indexed one.
pub fn constructive_subspace(placement: &Placement, demand: &Demand) -> SubspaceBasis {
    let params = placement.params();
    let n = params.files();
    let per_file = params.subfiles_per_file();
    let ne = demand.distinct_files();
    let mut constraints = BitMatrix::new(params.n_messages());
    let representatives_only = params.regime() == Regime::MoreUsers && ne == n;
    let mut seen = vec![false; n + 1];
    for user in 0..params.users() {
        let file = demand.of_user(user);
        if representatives_only && seen[file] {
            continue;
        }
        seen[file] = true;
        for row in placement.user_rows(user).iter_rows() {
            constraints.push_row(row.clone());
        }
    }
    if ne < n {
        let survivor = (1..=n).rev().find(|&f| !demand.requests(f)).unwrap();
        for file in 1..=n {
            if file != survivor && !demand.requests(file) {
                for part in 1..=per_file {
                    let coord = SubfileIndex::new(file, part).flat(per_file);
                    constraints.push_row(BitVec::unit(params.n_messages(), coord));
                }
            }
        }
    }
    let basis = constraints.nullspace_basis();
    SubspaceBasis { constraints, basis }
}

/// How to check that all nonzero vectors of a subspace lie in some Z-set.
#[derive(Clone, Copy, Debug)]
pub enum SubspaceCheckMode {
    /// Visit every nonzero vector. Requires dimension at most 24.
    Exhaustive,
    /// Structural certificate plus basis vectors, pairwise sums, and random
    /// combinations.
    Sampled { trials: u64, seed: u64 },
}

/// Outcome of a subspace check.
#[derive(Clone, Debug)]
pub struct SubspaceReport {
    pub dim: usize,
    pub vectors_checked: u64,
    /// First vector found in the subspace but in no Z-set, if any.
    pub violation: Option<BitVec>,
    /// Result of the structural certificate, present in sampled mode.
    pub structural_proof: Option<bool>,
}

impl SubspaceReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none() && self.structural_proof != Some(false)
    }
}

/// Checks that every nonzero vector of the subspace lies in some receiver's
/// Z-set, exhaustively or by certificate-plus-sampling.
pub fn verify_subspace_in_a(
    inst: &GicInstance,
    subspace: &SubspaceBasis,
    mode: SubspaceCheckMode,
) -> Result<SubspaceReport, GicError> {
    let dim = subspace.dim();
    let mut report = SubspaceReport {
        dim,
        vectors_checked: 0,
        violation: None,
        structural_proof: None,
    };
    let check = |v: &BitVec, report: &mut SubspaceReport| {
        report.vectors_checked += 1;
        if report.violation.is_none() && !in_some_z_set(inst, v) {
            report.violation = Some(v.clone());
        }
        report.violation.is_none()
    };
    match mode {
        SubspaceCheckMode::Exhaustive => {
            const LIMIT: usize = 24;
            if dim > LIMIT {
                return Err(GicError::ExhaustiveTooLarge { dim, limit: LIMIT });
            }
            let mut v = BitVec::zeros(inst.n_messages);
            for g in 1..1u64 << dim {
                v ^= subspace.basis.row(g.trailing_zeros() as usize);
                if !check(&v, &mut report) {
                    break;
                }
            }
        }
        SubspaceCheckMode::Sampled { trials, seed } => {
            report.structural_proof = Some(structural_certificate(inst, subspace));
            'outer: {
                for i in 0..dim {
                    if !check(subspace.basis.row(i), &mut report) {
                        break 'outer;
                    }
                }
                for i in 0..dim {
                    for j in i + 1..dim {
                        let mut v = subspace.basis.row(i).clone();
                        v ^= subspace.basis.row(j);
                        if !check(&v, &mut report) {
                            break 'outer;
                        }
                    }
                }
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                for _ in 0..trials {
                    if dim == 0 {
                        break;
                    }
                    let mut v = BitVec::zeros(inst.n_messages);
                    while v.is_zero() {
                        for i in 0..dim {
                            if rng.random() {
                                v ^= subspace.basis.row(i);
                            }
                        }
                    }
                    if !check(&v, &mut report) {
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Proves `nullspace(constraints) \ {0}` is covered by the Z-sets without
/// enumerating it.
///
/// A coordinate is covered when some receiver demands it and all of that
/// receiver's side-info rows lie in the row space of the constraints: any
/// subspace vector with a one at a covered coordinate then belongs to that
/// receiver's Z-set. The remaining coordinates must be forced to zero
/// whenever all covered coordinates are, which holds exactly when each of
/// their unit vectors lies in the row space of the constraints extended by
/// the covered units. Together the two conditions imply every nonzero
/// subspace vector has a one at a covered coordinate.
fn structural_certificate(inst: &GicInstance, subspace: &SubspaceBasis) -> bool {
    let n = inst.n_messages;
    let solver = RowSolver::new(&subspace.constraints);
    let mut covered = vec![false; n];
    for r in &inst.receivers {
        if r.demand_row.weight() != 1 {
            continue;
        }
        let coord = r.demand_row.first_one().unwrap();
        if covered[coord] {
            continue;
        }
        if r.side_info.iter_rows().all(|row| solver.contains(row)) {
            covered[coord] = true;
        }
    }
    let mut extended = subspace.constraints.clone();
    for (coord, &c) in covered.iter().enumerate() {
        if c {
            extended.push_row(BitVec::unit(n, coord));
        }
    }
    let extended_solver = RowSolver::new(&extended);
    covered
        .iter()
        .enumerate()
        .all(|(coord, &c)| c || extended_solver.contains(&BitVec::unit(n, coord)))
}

/// Exact min-rank by exhausting every choice of side-information
/// combination at every receiver, with incremental-rank pruning. Limited to
/// 2^20 assignments.
pub fn min_rank_brute_force(inst: &GicInstance) -> Result<usize, GicError> {
    const LIMIT: u32 = 20;
    let bits: u32 = inst
        .receivers
        .iter()
        .map(|r| r.side_info.n_rows() as u32)
        .sum();
    if bits > LIMIT {
        return Err(GicError::SearchTooLarge { bits, limit: LIMIT });
    }
    let rows = inst.masks()?;
    let mut table = [0u64; 64];
    let mut best = usize::MAX;
    search(&rows, 0, 0, &mut table, &mut best);
    Ok(best)
}

fn search(
    rows: &[(u64, Vec<u64>)],
    idx: usize,
    rank: usize,
    table: &mut [u64; 64],
    best: &mut usize,
) {
    if rank >= *best {
        return;
    }
    if idx == rows.len() {
        *best = rank;
        return;
    }
    let (demand, sides) = &rows[idx];
    for mask in 0u32..1 << sides.len() {
        let mut row = *demand;
        for (b, side) in sides.iter().enumerate() {
            if mask >> b & 1 == 1 {
                row ^= side;
            }
        }
        let inserted = loop {
            if row == 0 {
                break None;
            }
            let lead = 63 - row.leading_zeros() as usize;
            if table[lead] == 0 {
                table[lead] = row;
                break Some(lead);
            }
            row ^= table[lead];
        };
        match inserted {
            None => search(rows, idx + 1, rank, table, best),
            Some(lead) => {
                search(rows, idx + 1, rank + 1, table, best);
                table[lead] = 0;
            }
        }
    }
}

/// The Gaussian binomial coefficient: the number of `t`-dimensional
/// subspaces of an `n`-dimensional space over GF(2).
pub fn gaussian_binomial(n: usize, t: usize) -> BigInt {
    if t > n {
        return BigInt::ZERO;
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..t {
        num *= (BigInt::one() << n) - (BigInt::one() << i);
        den *= (BigInt::one() << t) - (BigInt::one() << i);
    }
    num / den
}

/// Decides whether every `t`-dimensional subspace contains a nonzero vector
/// outside all Z-sets, i.e. whether the generalized independence number is
/// strictly below `t`. Enumerates canonical reduced bases; refuses when the
/// visit estimate exceeds 10^9 vectors.
pub fn independence_number_below(inst: &GicInstance, t: usize) -> Result<bool, GicError> {
    let n = inst.n_messages;
    if t == 0 {
        return Ok(false);
    }
    if t > n {
        return Ok(true);
    }
    const LIMIT: u64 = 1_000_000_000;
    let estimate = gaussian_binomial(n, t) * (BigInt::one() << t);
    if estimate > BigInt::from(LIMIT) {
        return Err(GicError::EnumerationTooLarge {
            estimate,
            limit: LIMIT,
        });
    }
    let recv = inst.masks()?;
    let in_a = |v: u64| {
        recv.iter().any(|(demand, sides)| {
            (v & demand).count_ones() & 1 == 1
                && sides.iter().all(|s| (v & s).count_ones() & 1 == 0)
        })
    };
    let mut pivots: Vec<usize> = (0..t).collect();
    let mut rows = vec![0u64; t];
    loop {
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            for c in p + 1..n {
                if !pivots.contains(&c) {
                    slots.push((i, c));
                }
            }
        }
        for mask in 0u64..1 << slots.len() {
            for (i, &p) in pivots.iter().enumerate() {
                rows[i] = 1 << p;
            }
            for (b, &(i, c)) in slots.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    rows[i] |= 1 << c;
                }
            }
            let mut v = 0u64;
            let mut all_in = true;
            for g in 1..1u64 << t {
                v ^= rows[g.trailing_zeros() as usize];
                if !in_a(v) {
                    all_in = false;
                    break;
                }
            }
            if all_in {
                return Ok(false);
            }
        }
        if !next_combination(&mut pivots, n) {
            return Ok(true);
        }
    }
}

pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let t = idx.len();
    let mut i = t;
    while i > 0 {
        i -= 1;
        if idx[i] < n - (t - i) {
            idx[i] += 1;
            for j in i + 1..t {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caching::cfl_place;

    fn setup(n: usize, k: usize, d: &[usize]) -> (Placement, Demand, GicInstance) {
        let params = CachingParams::new(n, k).unwrap();
        let placement = cfl_place(&params);
        let demand = params.demand(d.to_vec()).unwrap();
        let inst = build_gic_instance(&placement, &demand);
        (placement, demand, inst)
    }

    #[test]
    fn closed_form_tables() {
        let p33 = CachingParams::new(3, 3).unwrap();
        assert_eq!(min_rank_closed_form(&p33, 1), 3);
        assert_eq!(min_rank_closed_form(&p33, 2), 6);
        assert_eq!(min_rank_closed_form(&p33, 3), 6);
        let p34 = CachingParams::new(3, 4).unwrap();
        assert_eq!(min_rank_closed_form(&p34, 1), 12);
        assert_eq!(min_rank_closed_form(&p34, 2), 24);
        assert_eq!(min_rank_closed_form(&p34, 3), 27);
        let p22 = CachingParams::new(2, 2).unwrap();
        assert_eq!(min_rank_closed_form(&p22, 1), 2);
        assert_eq!(min_rank_closed_form(&p22, 2), 2);
    }

    #[test]
    fn instance_shape() {
        let (_, _, inst) = setup(3, 3, &[1, 2, 3]);
        assert_eq!(inst.n_messages, 9);
        assert_eq!(inst.receivers.len(), 9);
        let (_, _, inst) = setup(3, 4, &[1, 2, 3, 1]);
        assert_eq!(inst.n_messages, 36);
        assert_eq!(inst.receivers.len(), 48);
        for r in &inst.receivers {
            assert_eq!(r.demand_row.weight(), 1);
            assert_eq!(r.side_info.n_rows(), 3);
        }
    }

    #[test]
    fn z_set_hand_cases() {
        let (_, _, inst) = setup(3, 3, &[1, 2, 3]);
        let n = inst.n_messages;
        let pair = |a: usize, b: usize| {
            let mut v = BitVec::unit(n, a);
            v.set(b, true);
            v
        };
        let flat = |f: usize, p: usize| SubfileIndex::new(f, p).flat(3);
        // Receiver 0 is user 1's decoder for X_{1,1}.
        assert!(z_set_contains(&inst, 0, &pair(flat(1, 1), flat(2, 1))));
        assert!(z_set_contains(&inst, 0, &pair(flat(1, 1), flat(3, 1))));
        // Visible to the cache packet covering column 1.
        assert!(!z_set_contains(&inst, 0, &pair(flat(1, 1), flat(2, 2))));
        // Misses the demanded coordinate.
        assert!(!z_set_contains(&inst, 0, &pair(flat(2, 1), flat(3, 1))));
        // The all-column indicator is visible to every cache.
        let mut v = pair(flat(1, 1), flat(2, 1));
        v.set(flat(3, 1), true);
        assert!(!z_set_contains(&inst, 0, &v));
    }

    #[test]
    fn constructive_dimensions_match_closed_form() {
        let cases: [(usize, usize, &[usize]); 8] = [
            (3, 3, &[1, 2, 3]),
            (3, 3, &[1, 1, 2]),
            (3, 3, &[1, 1, 1]),
            (3, 4, &[1, 2, 3, 1]),
            (3, 4, &[1, 1, 2, 2]),
            (3, 4, &[2, 2, 2, 2]),
            (2, 3, &[1, 2, 1]),
            (2, 3, &[1, 1, 1]),
        ];
        for (n, k, d) in cases {
            let (placement, demand, _) = setup(n, k, d);
            let subspace = constructive_subspace(&placement, &demand);
            let expected = min_rank_closed_form(placement.params(), demand.distinct_files());
            assert_eq!(subspace.dim(), expected, "N={n} K={k} d={d:?}");
            assert_eq!(subspace.basis.rank(), subspace.dim());
        }
    }

    #[test]
    fn exhaustive_check_accepts_constructed_subspace() {
        let (placement, demand, inst) = setup(3, 3, &[1, 2, 3]);
        let subspace = constructive_subspace(&placement, &demand);
        let report = verify_subspace_in_a(&inst, &subspace, SubspaceCheckMode::Exhaustive).unwrap();
        assert!(report.holds());
        assert_eq!(report.vectors_checked, (1 << subspace.dim()) - 1);
    }

    #[test]
    fn exhaustive_check_reports_violation() {
        let (_, _, inst) = setup(3, 3, &[1, 2, 3]);
        // A single demanded coordinate is visible to its own cache packet,
        // so its unit vector lies in no Z-set.
        let basis =
            BitMatrix::from_rows(vec![BitVec::unit(9, SubfileIndex::new(1, 1).flat(3))]).unwrap();
        let subspace = SubspaceBasis::from_basis(basis);
        let report = verify_subspace_in_a(&inst, &subspace, SubspaceCheckMode::Exhaustive).unwrap();
        assert!(!report.holds());
        assert_eq!(report.violation.as_ref().unwrap().weight(), 1);
    }

    #[test]
    fn structural_certificate_accepts_all_regimes() {
        let cases: [(usize, usize, &[usize]); 6] = [
            (3, 3, &[1, 2, 3]),
            (3, 3, &[2, 2, 2]),
            (3, 4, &[1, 2, 3, 1]),
            (3, 4, &[1, 1, 2, 2]),
            (3, 4, &[3, 3, 3, 3]),
            (2, 4, &[1, 2, 2, 1]),
        ];
        for (n, k, d) in cases {
            let (placement, demand, inst) = setup(n, k, d);
            let subspace = constructive_subspace(&placement, &demand);
            let report = verify_subspace_in_a(
                &inst,
                &subspace,
                SubspaceCheckMode::Sampled {
                    trials: 64,
                    seed: 7,
                },
            )
            .unwrap();
            assert!(report.holds(), "N={n} K={k} d={d:?}");
            assert_eq!(report.structural_proof, Some(true));
        }
    }

    #[test]
    fn structural_certificate_rejects_padded_subspace() {
        let (placement, demand, inst) = setup(3, 3, &[1, 2, 3]);
        let good = constructive_subspace(&placement, &demand);
        // Extending the basis past kappa must break the certificate.
        let mut padded = good.basis.clone();
        padded.push_row(BitVec::unit(9, SubfileIndex::new(1, 1).flat(3)));
        let subspace = SubspaceBasis::from_basis(padded);
        let report = verify_subspace_in_a(
            &inst,
            &subspace,
            SubspaceCheckMode::Sampled {
                trials: 16,
                seed: 3,
            },
        )
        .unwrap();
        assert!(!report.holds());
    }

    #[test]
    fn brute_force_matches_closed_form_smallest_case() {
        let params = CachingParams::new(2, 2).unwrap();
        let placement = cfl_place(&params);
        for demand in params.all_demands() {
            let inst = build_gic_instance(&placement, &demand);
            let expected = min_rank_closed_form(&params, demand.distinct_files());
            assert_eq!(min_rank_brute_force(&inst).unwrap(), expected);
            assert_eq!(independence_number_below(&inst, expected + 1), Ok(true));
            let subspace = constructive_subspace(&placement, &demand);
            assert_eq!(subspace.dim(), expected);
            let report =
                verify_subspace_in_a(&inst, &subspace, SubspaceCheckMode::Exhaustive).unwrap();
            assert!(report.holds());
        }
    }

    #[test]
    fn brute_force_refuses_large_search() {
        let (_, _, inst) = setup(3, 4, &[1, 2, 3, 1]);
        assert!(matches!(
            min_rank_brute_force(&inst),
            Err(GicError::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn enumeration_refuses_large_sweep() {
        let (_, _, inst) = setup(3, 4, &[1, 2, 3, 1]);
        assert!(matches!(
            independence_number_below(&inst, 5),
            Err(GicError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn gaussian_binomial_known_values() {
        assert_eq!(gaussian_binomial(4, 2), BigInt::from(35));
        assert_eq!(gaussian_binomial(9, 4), BigInt::from(3_309_747));
        assert_eq!(gaussian_binomial(9, 7), BigInt::from(43_435));
        assert_eq!(gaussian_binomial(3, 5), BigInt::ZERO);
        assert_eq!(gaussian_binomial(6, 0), BigInt::from(1));
    }

    #[test]
    fn independence_number_brackets_kappa_for_pairs() {
        // alpha = kappa: dimension kappa is achieved, kappa + 1 is not.
        let (placement, demand, inst) = setup(2, 2, &[1, 2]);
        let kappa = min_rank_closed_form(placement.params(), demand.distinct_files());
        assert_eq!(independence_number_below(&inst, kappa), Ok(false));
        assert_eq!(independence_number_below(&inst, kappa + 1), Ok(true));
    }
}

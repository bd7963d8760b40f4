//! Error-free delivery: a transmission schedule meeting the min-rank bound
//! for every demand, plus a decodability checker.
//!
//! Each transmission is a GF(2) combination of subfiles. The construction
//! depends on the regime and on the set of requested files:
//!
//! - all `N` files requested, `N = K` (the demand is a permutation): for
//!   part `j`, send every subfile `X_{f,j}` with `f != d_j`; user `j` then
//!   peels its cached packet to recover `X_{d_j,j}`,
//! - all `N` files requested, `K > N`: send the same per-column uncoded
//!   block for every user, then for each file chain its requesters
//!   pairwise: consecutive requesters `u < u'` exchange their column blocks
//!   through sums `X_{f,c} + X_{f,c'}`, which either endpoint can resolve
//!   after decoding its own columns,
//! - otherwise (some file unrequested): send every subfile of every
//!   requested file uncoded.
//!
//! In every case the schedule length equals the min-rank closed form, and
//! dropping any single transmission leaves some receiver undecodable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caching::{Demand, Placement, Regime, SubfileIndex};
use crate::gf2::{BitMatrix, BitVec, RowSolver};
use crate::gic::min_rank_closed_form;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("user {user} cannot recover {}", .subfile.label())]
pub struct DecodabilityError {
    /// 1-based user index.
    pub user: usize,
    pub subfile: SubfileIndex,
}

/// An ordered list of broadcast transmissions, each a GF(2) combination of
/// subfile coordinates with a printable label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionSchedule {
    rows: BitMatrix,
    labels: Vec<String>,
}

/// One transmission in serialized form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    /// 1-based transmission index.
    pub index: usize,
    pub label: String,
    pub support: Vec<SubfileIndex>,
}

impl TransmissionSchedule {
    pub fn new(rows: BitMatrix, labels: Vec<String>) -> Self {
        assert_eq!(rows.n_rows(), labels.len(), "one label per transmission");
        TransmissionSchedule { rows, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
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

    pub fn entries(&self, subfiles_per_file: usize) -> Vec<ScheduleEntry> {
        self.labels
            .iter()
            .zip(self.rows.iter_rows())
            .enumerate()
            .map(|(i, (label, row))| ScheduleEntry {
                index: i + 1,
                label: label.clone(),
                support: row
                    .ones()
                    .map(|c| SubfileIndex::from_flat(c, subfiles_per_file))
                    .collect(),
            })
            .collect()
    }
}

/// Builds the delivery schedule for a demand. The result has exactly
/// `min_rank_closed_form` transmissions.
pub fn cfl_deliver(placement: &Placement, demand: &Demand) -> TransmissionSchedule {
    let params = placement.params();
    assert_eq!(demand.len(), params.users(), "demand length mismatch");
    let n = params.files();
    let per_file = params.subfiles_per_file();
    let width = params.n_messages();
    let ne = demand.distinct_files();

    let mut rows = BitMatrix::new(width);
    let mut labels = Vec::new();
    let single = |f: usize, p: usize, rows: &mut BitMatrix, labels: &mut Vec<String>| {
        let sub = SubfileIndex::new(f, p);
        rows.push_row(BitVec::unit(width, sub.flat(per_file)));
        labels.push(sub.label());
    };

    if ne < n {
        for file in 1..=n {
            if demand.requests(file) {
                for part in 1..=per_file {
                    single(file, part, &mut rows, &mut labels);
                }
            }
        }
    } else {
        match params.regime() {
            Regime::EqualUsers => {
                for part in 1..=n {
                    let skip = demand.of_user(part - 1);
                    for file in 1..=n {
                        if file != skip {
                            single(file, part, &mut rows, &mut labels);
                        }
                    }
                }
            }
            Regime::MoreUsers => {
                for user in 0..params.users() {
                    let skip = demand.of_user(user);
                    for j in 1..=n {
                        let part = n * user + j;
                        for file in 1..=n {
                            if file != skip {
                                single(file, part, &mut rows, &mut labels);
                            }
                        }
                    }
                }
                for file in 1..=n {
                    let requesters: Vec<usize> = (0..params.users())
                        .filter(|&u| demand.of_user(u) == file)
                        .collect();
                    for pair in requesters.windows(2) {
                        for j in 1..=n {
                            let a = SubfileIndex::new(file, n * pair[0] + j);
                            let b = SubfileIndex::new(file, n * pair[1] + j);
                            let mut row = BitVec::unit(width, a.flat(per_file));
                            row.set(b.flat(per_file), true);
                            rows.push_row(row);
                            labels.push(format!("{} ⊕ {}", a.label(), b.label()));
                        }
                    }
                }
            }
        }
    }

    debug_assert_eq!(rows.n_rows(), min_rank_closed_form(params, ne));
    TransmissionSchedule::new(rows, labels)
}

/// Checks that every user can recover every subfile of its requested file
/// from its cache plus the schedule. Reports the first failure.
pub fn verify_decodable(
    schedule: &TransmissionSchedule,
    placement: &Placement,
    demand: &Demand,
) -> Result<(), DecodabilityError> {
    let params = placement.params();
    let per_file = params.subfiles_per_file();
    for user in 0..params.users() {
        let stacked = placement.user_rows(user).stacked(schedule.rows());
        let solver = RowSolver::new(&stacked);
        for part in 1..=per_file {
            let subfile = SubfileIndex::new(demand.of_user(user), part);
            let target = BitVec::unit(params.n_messages(), subfile.flat(per_file));
            if !solver.contains(&target) {
                return Err(DecodabilityError {
                    user: user + 1,
                    subfile,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caching::{cfl_place, CachingParams};

    fn deliver(n: usize, k: usize, d: &[usize]) -> (Placement, Demand, TransmissionSchedule) {
        let params = CachingParams::new(n, k).unwrap();
        let placement = cfl_place(&params);
        let demand = params.demand(d.to_vec()).unwrap();
        let schedule = cfl_deliver(&placement, &demand);
        (placement, demand, schedule)
    }

    #[test]
    fn permutation_demand_equal_regime() {
        let (_, _, schedule) = deliver(3, 3, &[1, 2, 3]);
        assert_eq!(
            schedule.labels(),
            &["X_{2,1}", "X_{3,1}", "X_{1,2}", "X_{3,2}", "X_{1,3}", "X_{2,3}",]
        );
    }

    #[test]
    fn repeated_demand_equal_regime() {
        let (_, _, schedule) = deliver(3, 3, &[1, 1, 2]);
        assert_eq!(
            schedule.labels(),
            &["X_{1,1}", "X_{1,2}", "X_{1,3}", "X_{2,1}", "X_{2,2}", "X_{2,3}",]
        );
        let (_, _, schedule) = deliver(3, 3, &[1, 1, 1]);
        assert_eq!(schedule.labels(), &["X_{1,1}", "X_{1,2}", "X_{1,3}"]);
    }

    #[test]
    fn full_demand_more_users_regime() {
        let (_, _, schedule) = deliver(3, 4, &[1, 2, 3, 1]);
        assert_eq!(schedule.len(), 27);
        assert_eq!(schedule.labels()[0], "X_{2,1}");
        assert_eq!(schedule.labels()[1], "X_{3,1}");
        assert_eq!(schedule.labels()[6], "X_{1,4}");
        assert_eq!(schedule.labels()[24], "X_{1,1} ⊕ X_{1,10}");
        assert_eq!(schedule.labels()[25], "X_{1,2} ⊕ X_{1,11}");
        assert_eq!(schedule.labels()[26], "X_{1,3} ⊕ X_{1,12}");
    }

    #[test]
    fn text_rendering() {
        let (_, _, schedule) = deliver(3, 3, &[1, 1, 1]);
        assert_eq!(
            schedule.text(),
            "T_1: X_{1,1}\nT_2: X_{1,2}\nT_3: X_{1,3}\n"
        );
    }

    #[test]
    fn entries_carry_support() {
        let (_, _, schedule) = deliver(3, 4, &[1, 2, 3, 1]);
        let entries = schedule.entries(12);
        assert_eq!(entries[24].support.len(), 2);
        assert_eq!(entries[24].support[0], SubfileIndex::new(1, 1));
        assert_eq!(entries[24].support[1], SubfileIndex::new(1, 10));
        assert_eq!(entries[0].support, vec![SubfileIndex::new(2, 1)]);
        assert_eq!(entries[0].index, 1);
    }

    #[test]
    fn schedules_meet_min_rank_and_decode() {
        let cases: [(usize, usize); 4] = [(2, 2), (3, 3), (2, 3), (3, 4)];
        for (n, k) in cases {
            let params = CachingParams::new(n, k).unwrap();
            let placement = cfl_place(&params);
            for demand in params.all_demands() {
                let schedule = cfl_deliver(&placement, &demand);
                let expected = min_rank_closed_form(&params, demand.distinct_files());
                assert_eq!(schedule.len(), expected);
                verify_decodable(&schedule, &placement, &demand).unwrap();
                for row in schedule.rows().iter_rows() {
                    assert!(row.weight() == 1 || row.weight() == 2);
                }
            }
        }
    }

    #[test]
    fn dropping_any_transmission_breaks_some_user() {
        let (placement, demand, schedule) = deliver(2, 3, &[1, 2, 1]);
        for drop in 0..schedule.len() {
            let mut rows = BitMatrix::new(schedule.rows().n_cols());
            let mut labels = Vec::new();
            for i in 0..schedule.len() {
                if i != drop {
                    rows.push_row(schedule.rows().row(i).clone());
                    labels.push(schedule.labels()[i].clone());
                }
            }
            let pruned = TransmissionSchedule::new(rows, labels);
            assert!(verify_decodable(&pruned, &placement, &demand).is_err());
        }
    }

    #[test]
    fn decodability_error_names_user_and_subfile() {
        let (placement, demand, _) = deliver(3, 3, &[1, 2, 3]);
        let empty = TransmissionSchedule::new(BitMatrix::new(9), vec![]);
        let err = verify_decodable(&empty, &placement, &demand).unwrap_err();
        assert_eq!(err.user, 1);
        assert_eq!(err.subfile, SubfileIndex::new(1, 1));
        assert_eq!(err.to_string(), "user 1 cannot recover X_{1,1}");
    }
}

//! Coded caching with coded prefetching, analyzed through generalized index
//! coding, plus an error-correcting delivery layer built on classical codes.
//!
//! The library models the small-buffer regime where each of `K` users caches
//! exactly `1/K`-th of a library of `N` files (`N <= K`). Placement stores a
//! single coded packet (or `N` of them when `K > N`) per user, delivery is a
//! sequence of XOR transmissions, and the delivery problem for a fixed demand
//! is a generalized index-coding instance whose min-rank gives the optimal
//! number of transmissions. Concatenating the delivery schedule with a
//! `[n, kappa, 2*delta + 1]` binary code yields delivery that tolerates up to
//! `delta` symbol errors on the broadcast link, and that construction is
//! optimal: no scheme using fewer transmissions can serve every receiver.
//!
//! Module map:
//! - [`gf2`]: bit-packed linear algebra over GF(2),
//! - [`caching`]: placement parameters, subfile indexing, cache contents,
//! - [`gic`]: the induced index-coding instance, min-rank and independence
//!   number machinery, constructive optimal subspaces,
//! - [`delivery`]: error-free transmission schedules and decodability checks,
//! - [`code`]: linear block codes, bounded-distance decoding, code selection,
//! - [`ec`]: error-correcting delivery schedules and end-to-end simulation,
//! - [`rates`]: exact rate and distribution computations as rationals.

pub mod caching;
pub mod code;
pub mod delivery;
pub mod ec;
pub mod gf2;
pub mod gic;
pub mod rates;

pub use caching::{
    cfl_place, CachingError, CachingParams, Demand, Placement, Regime, SubfileIndex,
};
pub use code::{
    best_code, best_code_length, builtin_generator, min_distance, shortened_hamming_code,
    shortened_hamming_length, CodeError, CodeOrigin, CodeTable, Decoded, LinearCode, TableEntry,
};
pub use delivery::{
    cfl_deliver, verify_decodable, DecodabilityError, ScheduleEntry, TransmissionSchedule,
};
pub use ec::{
    build_ec_schedule, cache_blocks, corrupt, end_to_end_sim, receiver_decode, transmit, CodeInfo,
    EcError, EcSchedule, ErrorPattern, Payload, SimConfig, SimReport,
};
pub use gf2::{BitMatrix, BitVec, RowSolver};
pub use gic::{
    build_gic_instance, constructive_subspace, independence_number_below, min_rank_brute_force,
    min_rank_closed_form, verify_subspace_in_a, z_set_contains, GicError, GicInstance, Receiver,
    SubspaceBasis, SubspaceCheckMode, SubspaceReport,
};
pub use rates::{
    average_rate, memory_envelope, min_rank_table, ne_distribution, peak_rate, rate_report,
    RateEntry, RateReport, RateVariant,
};

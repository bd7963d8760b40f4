//! Problem parameters, subfile indexing, and the coded placement phase.
//!
//! The scheme serves `N` files to `K >= N` users, each with cache memory
//! `M = 1/K` of a file. Subfile granularity depends on the regime:
//!
//! - `N = K`: every file splits into `N` subfiles and user `j` caches the
//!   single coded packet `X_{1,j} + X_{2,j} + ... + X_{N,j}`,
//! - `K > N`: every file splits into `N*K` subfiles and user `i` caches the
//!   `N` coded packets `X_{1,c} + X_{2,c} + ... + X_{N,c}` for the columns
//!   `c = N*(i-1)+1, ..., N*i`.
//!
//! Either way a cache stores one `1/(N*K)`-th of the library per packet and
//! `M = 1/K` exactly. Subfiles are addressed as `X_{file,part}` with 1-based
//! `file` and `part`, and flattened file-major for linear algebra: subfile
//! `X_{f,p}` is coordinate `(f-1)*subfiles_per_file + (p-1)`.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, BitVec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CachingError {
    #[error("need at least 2 files, got {0}")]
    TooFewFiles(usize),
    #[error("need at least as many users as files, got {users} users for {files} files")]
    TooFewUsers { files: usize, users: usize },
    #[error("cache memory must be exactly 1/{users} of a file, got {memory}")]
    UnsupportedMemory { users: usize, memory: Ratio<u64> },
    #[error("demand vector has length {got}, expected one entry per user ({expected})")]
    DemandLength { expected: usize, got: usize },
    #[error("demand entry {entry} out of range, files are numbered 1..={files}")]
    DemandRange { entry: usize, files: usize },
}

/// Which of the two placement regimes applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `N = K`: one coded packet per cache.
    EqualUsers,
    /// `K > N`: `N` coded packets per cache.
    MoreUsers,
}

/// Validated problem parameters `(N, K, M)` with `2 <= N <= K` and `M = 1/K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachingParams {
    files: usize,
    users: usize,
    memory: (u64, u64),
}

impl CachingParams {
    /// Parameters with the scheme's memory point `M = 1/K`.
    pub fn new(files: usize, users: usize) -> Result<Self, CachingError> {
        CachingParams::with_memory(files, users, Ratio::new(1, users.max(1) as u64))
    }

    /// Parameters with an explicit memory size, which must equal `1/K`.
    pub fn with_memory(
        files: usize,
        users: usize,
        memory: Ratio<u64>,
    ) -> Result<Self, CachingError> {
        if files < 2 {
            return Err(CachingError::TooFewFiles(files));
        }
        if users < files {
            return Err(CachingError::TooFewUsers { files, users });
        }
        if memory != Ratio::new(1, users as u64) {
            return Err(CachingError::UnsupportedMemory { users, memory });
        }
        Ok(CachingParams {
            files,
            users,
            memory: (*memory.numer(), *memory.denom()),
        })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn memory(&self) -> Ratio<u64> {
        Ratio::new(self.memory.0, self.memory.1)
    }

    pub fn memory_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.memory.0), BigInt::from(self.memory.1))
    }

    pub fn regime(&self) -> Regime {
        if self.files == self.users {
            Regime::EqualUsers
        } else {
            Regime::MoreUsers
        }
    }

    /// Subfiles per file: `N` when `N = K`, `N*K` when `K > N`.
    pub fn subfiles_per_file(&self) -> usize {
        match self.regime() {
            Regime::EqualUsers => self.files,
            Regime::MoreUsers => self.files * self.users,
        }
    }

    /// Total number of subfiles across the library.
    pub fn n_messages(&self) -> usize {
        self.files * self.subfiles_per_file()
    }

    /// Validates one file request per user.
    pub fn demand(&self, requests: Vec<usize>) -> Result<Demand, CachingError> {
        if requests.len() != self.users {
            return Err(CachingError::DemandLength {
                expected: self.users,
                got: requests.len(),
            });
        }
        for &entry in &requests {
            if entry < 1 || entry > self.files {
                return Err(CachingError::DemandRange {
                    entry,
                    files: self.files,
                });
            }
        }
        Ok(Demand(requests))
    }

    /// All `N^K` demand vectors, in lexicographic order.
    pub fn all_demands(&self) -> impl Iterator<Item = Demand> + '_ {
        let (files, users) = (self.files, self.users);
        let total = (files as u128).pow(users as u32);
        (0..total).map(move |mut idx| {
            let mut requests = vec![1; users];
            for slot in (0..users).rev() {
                requests[slot] = (idx % files as u128) as usize + 1;
                idx /= files as u128;
            }
            Demand(requests)
        })
    }
}

/// A subfile address `X_{file,part}`, both components 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubfileIndex {
    pub file: usize,
    pub part: usize,
}

impl SubfileIndex {
    pub fn new(file: usize, part: usize) -> Self {
        assert!(file >= 1 && part >= 1, "subfile addresses are 1-based");
        SubfileIndex { file, part }
    }

    /// File-major flat coordinate, 0-based.
    pub fn flat(&self, subfiles_per_file: usize) -> usize {
        assert!(self.part <= subfiles_per_file, "part out of range");
        (self.file - 1) * subfiles_per_file + (self.part - 1)
    }

    pub fn from_flat(coord: usize, subfiles_per_file: usize) -> Self {
        SubfileIndex {
            file: coord / subfiles_per_file + 1,
            part: coord % subfiles_per_file + 1,
        }
    }

    /// Rendering used in schedules and reports, e.g. `X_{2,5}`.
    pub fn label(&self) -> String {
        format!("X_{{{},{}}}", self.file, self.part)
    }
}

/// One validated file request per user, entries in `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand(Vec<usize>);

impl Demand {
    /// Requested file of `user` (0-based user index).
    pub fn of_user(&self, user: usize) -> usize {
        self.0[user]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Number of distinct files requested.
    pub fn distinct_files(&self) -> usize {
        let mut seen = vec![false; self.0.iter().copied().max().unwrap_or(0)];
        for &f in &self.0 {
            seen[f - 1] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Whether any user requests `file`.
    pub fn requests(&self, file: usize) -> bool {
        self.0.contains(&file)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Cache contents after placement: one row per coded packet, expressed over
/// flat subfile coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    params: CachingParams,
    user_rows: Vec<BitMatrix>,
}

impl Placement {
    pub fn params(&self) -> &CachingParams {
        &self.params
    }

    /// The coding matrix of `user`'s cache (0-based), one row per packet.
    pub fn user_rows(&self, user: usize) -> &BitMatrix {
        &self.user_rows[user]
    }

    /// All users' cache rows stacked in user order.
    pub fn all_rows(&self) -> BitMatrix {
        let mut all = BitMatrix::new(self.params.n_messages());
        for rows in &self.user_rows {
            for row in rows.iter_rows() {
                all.push_row(row.clone());
            }
        }
        all
    }
}

/// Runs the placement phase, producing every user's cache coding matrix.
pub fn cfl_place(params: &CachingParams) -> Placement {
    let n = params.files();
    let per_file = params.subfiles_per_file();
    let width = params.n_messages();
    let packet = |part: usize| {
        let mut row = BitVec::zeros(width);
        for file in 1..=n {
            row.set(SubfileIndex::new(file, part).flat(per_file), true);
        }
        row
    };
    let user_rows = (0..params.users())
        .map(|i| {
            let mut rows = BitMatrix::new(width);
            match params.regime() {
                Regime::EqualUsers => rows.push_row(packet(i + 1)),
                Regime::MoreUsers => {
                    for j in 1..=n {
                        rows.push_row(packet(n * i + j));
                    }
                }
            }
            rows
        })
        .collect();
    Placement {
        params: *params,
        user_rows,
    }
}

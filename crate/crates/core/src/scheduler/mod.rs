//! Delivery scheduling: reference selection, fragment mapping, index matrices and the
//! per-slot transmission plan, plus its decodability checks.
//!
//! One reference array fixes the slot structure. Each user's requested subfiles are cut
//! into fragments so that every slot carries the same number of fragments per user; a
//! max-flow assignment decides which subfile feeds which row of the reference array.
//! Files split across two gains are delivered in two phases, one per part of the
//! reference file.

mod context;
mod fm;
mod index;
mod plan;
mod split;
mod text;
mod verify;

use thiserror::Error;

pub use context::{build_context, compute_context, select_reference, DeliveryContext, Reference, Stream, StreamSpec};
pub use fm::{build_fm_matrix, FmMatrix, FmViolation};
pub use index::{generate_index_matrix, IndexMatrix};
pub use plan::{build_plan, Fragment, Slot, Transmission, TransmissionPlan};
pub use split::{plan_delivery, split_plan_noninteger, DeliveryPlan, Phase};
pub use text::{emit_plan, emit_requests, parse_requests};
pub use verify::{verify_decodability, verify_delivery, DeliveryViolation, VerificationReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("no requests")]
    NoRequests,
    #[error("user {user} requests STU {stu}, only {stus} STUs exist")]
    UnknownStu { user: usize, stu: usize, stus: usize },
    #[error("{requests} requests for {users} users")]
    UserCount { requests: usize, users: usize },
    #[error("user {user} has data to receive but no slot in the reference array")]
    NoSlotFor { user: usize },
    #[error("user {user}: temporary row {row} has no admissible subfile")]
    NoAdmissibleSubfile { user: usize, row: usize },
    #[error("user {user}: fragment mapping infeasible, flow {flow} of {demand}")]
    MappingInfeasible { user: usize, flow: usize, demand: usize },
    #[error("user {user}: mapping row {row} exhausted at slot {slot}")]
    RowExhausted { user: usize, row: usize, slot: usize },
    #[error("cached share of STU {stu} is below the reference share")]
    SplitOrder { stu: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// STU of each user's requested file, indexed by user (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestVector {
    stus: Vec<usize>,
}

impl RequestVector {
    pub fn new(stus: Vec<usize>) -> Self {
        Self { stus }
    }

    pub fn len(&self) -> usize {
        self.stus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stus.is_empty()
    }

    pub fn stu(&self, user: usize) -> usize {
        self.stus[user]
    }

    pub fn stus(&self) -> &[usize] {
        &self.stus
    }

    pub(crate) fn check(&self, stus: usize) -> Result<(), ScheduleError> {
        if self.stus.is_empty() {
            return Err(ScheduleError::NoRequests);
        }
        match self.stus.iter().position(|&s| s >= stus) {
            Some(user) => Err(ScheduleError::UnknownStu { user, stu: self.stus[user], stus }),
            None => Ok(()),
        }
    }
}

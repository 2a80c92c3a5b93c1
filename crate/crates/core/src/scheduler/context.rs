//! Reference selection, temporary/requested index sets and fragmentation.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;

use super::{RequestVector, ScheduleError};
use crate::pda::Mlpda;
use crate::placement::Placement;
use crate::rational::from_usize;
use crate::Rational;

/// User whose requested file has the least cached share, and its STU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reference {
    pub user: usize,
    pub stu: usize,
}

/// Smallest `m(s_k)`; ties go to the lowest user index.
pub fn select_reference(requests: &RequestVector, placement: &Placement) -> Result<Reference, ScheduleError> {
    requests.check(placement.stu_count())?;
    let user = (0..requests.len())
        .min_by(|&a, &b| {
            placement
                .stu(requests.stu(a))
                .memory
                .cmp(&placement.stu(requests.stu(b)).memory)
                .then(a.cmp(&b))
        })
        .ok_or(ScheduleError::NoRequests)?;
    Ok(Reference { user, stu: requests.stu(user) })
}

/// Portion `fraction` of every missing subfile of one file part, requested by one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSpec {
    pub user: usize,
    pub stu: usize,
    pub part: usize,
    pub fraction: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    pub user: usize,
    pub stu: usize,
    pub part: usize,
    pub fraction: Rational,
    /// Share of the whole file held by the part.
    pub share: Rational,
    pub array: Arc<Mlpda>,
    /// Rows of the reference array where this user's column is not a star.
    pub temporary: Vec<usize>,
    /// Rows of the part's array the user is missing.
    pub requested: Vec<usize>,
    /// Fragments per requested subfile.
    pub fragments: usize,
}

impl Stream {
    /// Size of one fragment.
    pub fn fragment_size(&self) -> Rational {
        &self.share * &self.fraction / from_usize(self.array.rows() * self.fragments)
    }
}

/// Everything the mapping and index steps need for one reference array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryContext {
    pub reference: Reference,
    pub reference_array: Arc<Mlpda>,
    /// Fragments carried per user and stream in each slot.
    pub stretch: usize,
    pub streams: Vec<Stream>,
    /// Users with at least one stream.
    pub active: Vec<bool>,
    /// Users with nothing left to receive.
    pub excluded: Vec<usize>,
}

impl DeliveryContext {
    pub fn rows(&self) -> usize {
        self.reference_array.rows()
    }

    pub fn stars(&self) -> usize {
        self.reference_array.stars()
    }

    pub fn slots(&self) -> usize {
        self.reference_array.slots()
    }

    /// Active users with an entry `n` in the reference array, increasing.
    pub fn served(&self, n: usize) -> Vec<usize> {
        self.reference_array.served_users(n).into_iter().filter(|&k| self.active[k]).collect()
    }

    pub fn streams_of(&self, user: usize) -> impl Iterator<Item = (usize, &Stream)> {
        self.streams.iter().enumerate().filter(move |(_, s)| s.user == user)
    }

    /// Index of the first stream of `user`, the only one when files are not split.
    pub fn stream_of(&self, user: usize) -> Option<usize> {
        self.streams_of(user).map(|(i, _)| i).next()
    }
}

/// Builds streams for `specs` against `reference_array`; empty streams are dropped.
pub fn build_context(
    placement: &Placement,
    users: usize,
    reference: Reference,
    reference_array: Arc<Mlpda>,
    specs: &[StreamSpec],
) -> Result<DeliveryContext, ScheduleError> {
    let mut streams = Vec::new();
    for spec in specs {
        let part = &placement.stu(spec.stu).parts[spec.part];
        let requested = part.array.missing_rows(spec.user);
        if requested.is_empty() || spec.fraction.is_zero() {
            continue;
        }
        let temporary = reference_array.missing_rows(spec.user);
        if temporary.is_empty() {
            return Err(ScheduleError::NoSlotFor { user: spec.user });
        }
        streams.push(Stream {
            user: spec.user,
            stu: spec.stu,
            part: spec.part,
            fraction: spec.fraction.clone(),
            share: part.share.clone(),
            array: part.array.clone(),
            temporary,
            requested,
            fragments: 0,
        });
    }
    let stretch = streams.iter().fold(1usize, |acc, s| {
        let g = s.temporary.len().gcd(&s.requested.len());
        acc.lcm(&(s.requested.len() / g))
    });
    for s in &mut streams {
        s.fragments = stretch * s.temporary.len() / s.requested.len();
    }
    let mut active = vec![false; users];
    for s in &streams {
        active[s.user] = true;
    }
    let excluded = (0..users).filter(|&k| !active[k]).collect();
    Ok(DeliveryContext { reference, reference_array, stretch, streams, active, excluded })
}

/// Single-phase context: every part of every requested file, delivered in full.
pub fn compute_context(requests: &RequestVector, placement: &Placement, reference: Reference) -> Result<DeliveryContext, ScheduleError> {
    requests.check(placement.stu_count())?;
    let reference_array = placement.stu(reference.stu).parts[0].array.clone();
    let specs: Vec<StreamSpec> = (0..requests.len())
        .flat_map(|user| {
            let stu = requests.stu(user);
            (0..placement.stu(stu).parts.len()).map(move |part| StreamSpec {
                user,
                stu,
                part,
                fraction: Rational::from_integer(1.into()),
            })
        })
        .collect();
    build_context(placement, requests.len(), reference, reference_array, &specs)
}

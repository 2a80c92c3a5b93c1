//! Decodability and completeness checks for transmission plans.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_traits::{One, Zero};

use super::{Fragment, RequestVector, TransmissionPlan};
use crate::placement::{CacheManifest, Placement};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeliveryViolation {
    /// `receiver` hears `sender`'s payload unsuppressed but lacks `fragment`.
    Undecodable { phase: usize, slot: usize, receiver: usize, sender: usize, fragment: Fragment },
    /// Beam needs more spatial dimensions than antennas.
    NullingLoad { phase: usize, slot: usize, user: usize, nulls: usize, limit: usize },
    /// Same fragment sent twice.
    Duplicate { phase: usize, user: usize, fragment: Fragment },
    /// Subfile delivered to the wrong extent.
    Incomplete { user: usize, stu: usize, part: usize, subfile: usize, delivered: Rational, expected: Rational },
    /// Total delivered to a user differs from its uncached share.
    Conservation { user: usize, delivered: Rational, expected: Rational },
}

impl fmt::Display for DeliveryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Undecodable { phase, slot, receiver, sender, fragment } => write!(
                f,
                "phase {phase} slot {slot}: user {} cannot remove user {}'s fragment (s={},j={},q={})",
                receiver + 1,
                sender + 1,
                fragment.stu + 1,
                fragment.subfile + 1,
                fragment.counter
            ),
            Self::NullingLoad { phase, slot, user, nulls, limit } => write!(
                f,
                "phase {phase} slot {slot}: user {} suppresses {nulls} users, at most {limit} allowed",
                user + 1
            ),
            Self::Duplicate { phase, user, fragment } => write!(
                f,
                "phase {phase}: user {} receives (s={},j={},q={}) twice",
                user + 1,
                fragment.stu + 1,
                fragment.subfile + 1,
                fragment.counter
            ),
            Self::Incomplete { user, stu, part, subfile, delivered, expected } => write!(
                f,
                "user {}: subfile {} of part {} in STU {} delivered {delivered}, expected {expected}",
                user + 1,
                subfile + 1,
                part + 1,
                stu + 1
            ),
            Self::Conservation { user, delivered, expected } => {
                write!(f, "user {}: delivered {delivered}, expected {expected}", user + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub violations: Vec<DeliveryViolation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Every co-served user either suppresses a payload by beamforming or caches all of it,
/// and no beam suppresses more than `L - 1` users.
pub fn verify_decodability(plan: &TransmissionPlan, manifest: &CacheManifest) -> VerificationReport {
    let mut violations = Vec::new();
    let phase = plan.phase;
    for slot in &plan.slots {
        for t in &slot.transmissions {
            if t.interference.len() + 1 > plan.antennas {
                violations.push(DeliveryViolation::NullingLoad {
                    phase,
                    slot: slot.index,
                    user: t.user,
                    nulls: t.interference.len(),
                    limit: plan.antennas - 1,
                });
            }
            for r in &slot.transmissions {
                if r.user == t.user || t.interference.contains(&r.user) {
                    continue;
                }
                for frag in &t.fragments {
                    if !manifest.caches(r.user, frag.stu, frag.part, frag.subfile) {
                        violations.push(DeliveryViolation::Undecodable {
                            phase,
                            slot: slot.index,
                            receiver: r.user,
                            sender: t.user,
                            fragment: frag.clone(),
                        });
                    }
                }
            }
        }
    }
    VerificationReport { violations }
}

/// Across all phases, each user receives every missing subfile of its requested file
/// exactly once in total and nothing it already caches.
pub fn verify_delivery(plans: &[&TransmissionPlan], placement: &Placement, requests: &RequestVector) -> VerificationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    let mut delivered: BTreeMap<(usize, usize, usize, usize), Rational> = BTreeMap::new();
    let mut totals = vec![Rational::zero(); requests.len()];
    for plan in plans {
        for t in plan.slots.iter().flat_map(|s| &s.transmissions) {
            for frag in &t.fragments {
                let key = (plan.phase, t.user, frag.stu, frag.part, frag.subfile, frag.counter);
                if !seen.insert(key) {
                    violations.push(DeliveryViolation::Duplicate { phase: plan.phase, user: t.user, fragment: frag.clone() });
                }
                *delivered.entry((t.user, frag.stu, frag.part, frag.subfile)).or_insert_with(Rational::zero) += &frag.size;
                totals[t.user] += &frag.size;
            }
        }
    }
    for user in 0..requests.len() {
        let stu = requests.stu(user);
        let sp = placement.stu(stu);
        for (part, fp) in sp.parts.iter().enumerate() {
            for subfile in 0..fp.array.rows() {
                let expected = if fp.array.get(subfile, user).is_star() { Rational::zero() } else { fp.subfile_size() };
                let got = delivered.remove(&(user, stu, part, subfile)).unwrap_or_else(Rational::zero);
                if got != expected {
                    violations.push(DeliveryViolation::Incomplete { user, stu, part, subfile, delivered: got, expected });
                }
            }
        }
        let expected = Rational::one() - &sp.memory;
        if totals[user] != expected {
            violations.push(DeliveryViolation::Conservation { user, delivered: totals[user].clone(), expected });
        }
    }
    for ((user, stu, part, subfile), got) in delivered {
        violations.push(DeliveryViolation::Incomplete { user, stu, part, subfile, delivered: got, expected: Rational::zero() });
    }
    VerificationReport { violations }
}

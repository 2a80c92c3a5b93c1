//! Per-slot transmission plan assembled from the index matrices.

use std::collections::HashMap;

use num_traits::Zero;

use super::{DeliveryContext, IndexMatrix};
use crate::Rational;

/// One fragment: counter `counter` (1-based) of subfile `subfile` of part `part` of the
/// file stored in STU `stu`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fragment {
    pub stu: usize,
    pub part: usize,
    pub subfile: usize,
    pub counter: usize,
    pub size: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub user: usize,
    /// Co-served users that cannot remove this user's signal from cache.
    pub interference: Vec<usize>,
    pub fragments: Vec<Fragment>,
    /// Total payload size.
    pub size: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    /// 1-based slot index in the reference array.
    pub index: usize,
    pub transmissions: Vec<Transmission>,
}

impl Slot {
    pub fn users(&self) -> Vec<usize> {
        self.transmissions.iter().map(|t| t.user).collect()
    }

    pub fn transmission(&self, user: usize) -> Option<&Transmission> {
        self.transmissions.iter().find(|t| t.user == user)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionPlan {
    pub users: usize,
    pub antennas: usize,
    /// Phase number, 0 unless the reference file is split.
    pub phase: usize,
    pub slots: Vec<Slot>,
}

impl TransmissionPlan {
    /// Total size delivered to each user.
    pub fn delivered(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.users];
        for t in self.slots.iter().flat_map(|s| &s.transmissions) {
            out[t.user] += &t.size;
        }
        out
    }
}

/// Assembles slots from one index matrix per stream of `ctx`.
pub fn build_plan(ctx: &DeliveryContext, index: &[IndexMatrix], phase: usize) -> TransmissionPlan {
    let q = &ctx.reference_array;
    let users = ctx.active.len();
    let mut counters: HashMap<(usize, usize), usize> = HashMap::new();
    let mut slots = Vec::new();
    for n in 1..=ctx.slots() {
        let served = ctx.served(n);
        let mut transmissions = Vec::new();
        for &k in &served {
            let row = q.slot_row(n, k).expect("served user has the slot");
            let interference = served
                .iter()
                .copied()
                .filter(|&j| j != k && !q.get(row, j).is_star())
                .collect();
            let mut fragments = Vec::new();
            for (i, s) in ctx.streams_of(k) {
                let size = s.fragment_size();
                for &w in index[i].slot(n).iter().filter(|&&w| w > 0) {
                    let counter = counters.entry((i, w)).or_insert(0);
                    *counter += 1;
                    fragments.push(Fragment {
                        stu: s.stu,
                        part: s.part,
                        subfile: w - 1,
                        counter: *counter,
                        size: size.clone(),
                    });
                }
            }
            if fragments.is_empty() {
                continue;
            }
            let size = fragments.iter().map(|f| &f.size).sum();
            transmissions.push(Transmission { user: k, interference, fragments, size });
        }
        slots.push(Slot { index: n, transmissions });
    }
    TransmissionPlan { users, antennas: q.antennas(), phase, slots }
}

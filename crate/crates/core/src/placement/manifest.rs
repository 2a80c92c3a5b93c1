//! What each user stores.

use std::collections::HashSet;

use num_traits::Zero;

use super::Placement;
use crate::pda::Lapda;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub stu: usize,
    pub part: usize,
    pub subfile: usize,
    pub size: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheManifest {
    entries: Vec<Vec<CacheEntry>>,
    index: HashSet<(usize, usize, usize, usize)>,
}

impl CacheManifest {
    pub fn users(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self, user: usize) -> &[CacheEntry] {
        &self.entries[user]
    }

    pub fn caches(&self, user: usize, stu: usize, part: usize, subfile: usize) -> bool {
        self.index.contains(&(user, stu, part, subfile))
    }

    /// Subfiles of `(stu, part)` cached by `user`, increasing.
    pub fn subfiles(&self, user: usize, stu: usize, part: usize) -> Vec<usize> {
        self.entries[user]
            .iter()
            .filter(|e| e.stu == stu && e.part == part)
            .map(|e| e.subfile)
            .collect()
    }

    pub fn total(&self, user: usize) -> Rational {
        self.entries[user].iter().fold(Rational::zero(), |acc, e| acc + &e.size)
    }
}

/// User `k` stores subfile `f` of a part iff the part's array has a star at `(f, k)`.
pub fn arrange_cache(placement: &Placement) -> CacheManifest {
    let mut entries = vec![Vec::new(); placement.users()];
    let mut index = HashSet::new();
    for (s, stu) in placement.stus().iter().enumerate() {
        for (p, part) in stu.parts.iter().enumerate() {
            let size = part.subfile_size();
            for (k, list) in entries.iter_mut().enumerate() {
                for f in part.array.cached_rows(k) {
                    index.insert((k, s, p, f));
                    list.push(CacheEntry { stu: s, part: p, subfile: f, size: size.clone() });
                }
            }
        }
    }
    CacheManifest { entries, index }
}

pub fn arrange_lapda(lapda: &Lapda) -> CacheManifest {
    arrange_cache(&Placement::from_lapda(lapda))
}

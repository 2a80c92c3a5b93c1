//! Multi-antenna placement delivery arrays.
//!
//! An [`Mlpda`] is an `F x K` grid whose cells are either a star (the user
//! caches that subfile) or a slot index (the subfile is delivered to that user
//! in that slot). A [`Lapda`] groups one array per spatial unit and requires
//! the star sets of arrays with different memory to nest.

mod construct;
mod text;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::from_usize;
use crate::Rational;

pub use construct::{construct_lapda, construct_mlpda};
pub use text::{emit_lapda, parse_grid, parse_lapda, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Star,
    /// 1-based slot index.
    Slot(usize),
}

impl Entry {
    pub fn is_star(self) -> bool {
        matches!(self, Entry::Star)
    }

    pub fn slot(self) -> Option<usize> {
        match self {
            Entry::Star => None,
            Entry::Slot(n) => Some(n),
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Star => f.write_str("*"),
            Entry::Slot(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdaError {
    #[error("array has no rows or no columns")]
    Empty,
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("slot index 0 at row {row}, column {column}; slots are 1-based")]
    ZeroSlot { row: usize, column: usize },
    #[error("antenna budget must be at least 1")]
    NoAntennas,
    #[error("caching gain {gain} exceeds user count {users}")]
    GainOutOfRange { gain: usize, users: usize },
    #[error("memory fraction {0} times the user count is not an integer in [0, K]")]
    FractionalGain(String),
    #[error("array {stu} has K={users}, L={antennas}; expected K={expected_users}, L={expected_antennas}")]
    Mismatch {
        stu: usize,
        users: usize,
        antennas: usize,
        expected_users: usize,
        expected_antennas: usize,
    },
    #[error("array has no transmissions")]
    NoSlots,
    #[error("no arrays given")]
    NoStus,
}

/// Condition identifiers used in validation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Every column has the same number of stars.
    C1,
    /// Every slot in `1..=N` occurs.
    C2,
    /// No slot twice in a column.
    C3,
    /// Antenna load per slot.
    C4,
    /// Star fraction equals the declared memory.
    Memory,
    /// Star sets nest across memory levels.
    Nesting,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::Memory => "memory",
            Condition::Nesting => "nesting",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NestingGap {
    /// A star set of the lower-memory array lies in no star set of the higher one.
    NotCovered,
    /// A star set of the higher-memory array contains no star set of the lower one.
    NoSubset,
}

/// Rows, columns, slots and STUs are 0-based in violations except `slot`, which is the array value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    StarCount { column: usize, stars: usize, expected: usize },
    MissingSlot { slot: usize },
    RepeatedSlot { column: usize, slot: usize, rows: (usize, usize) },
    AntennaLoad { slot: usize, row: usize, entries: usize, limit: usize },
    Memory { stu: usize, declared: Rational, actual: Rational },
    Nesting { higher: usize, lower: usize, row: usize, gap: NestingGap },
}

impl Violation {
    pub fn condition(&self) -> Condition {
        match self {
            Violation::StarCount { .. } => Condition::C1,
            Violation::MissingSlot { .. } => Condition::C2,
            Violation::RepeatedSlot { .. } => Condition::C3,
            Violation::AntennaLoad { .. } => Condition::C4,
            Violation::Memory { .. } => Condition::Memory,
            Violation::Nesting { .. } => Condition::Nesting,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StarCount { column, stars, expected } => write!(
                f,
                "C1: column {} has {stars} stars, expected {expected}",
                column + 1
            ),
            Violation::MissingSlot { slot } => write!(f, "C2: slot {slot} never appears"),
            Violation::RepeatedSlot { column, slot, rows } => write!(
                f,
                "C3: slot {slot} appears in rows {} and {} of column {}",
                rows.0 + 1,
                rows.1 + 1,
                column + 1
            ),
            Violation::AntennaLoad { slot, row, entries, limit } => write!(
                f,
                "C4: slot {slot}, row {} has {entries} integer entries among served users, limit {limit}",
                row + 1
            ),
            Violation::Memory { stu, declared, actual } => write!(
                f,
                "memory: STU {} declares m={declared} but Z/F={actual}",
                stu + 1
            ),
            Violation::Nesting { higher, lower, row, gap } => match gap {
                NestingGap::NotCovered => write!(
                    f,
                    "nesting: star set of row {} in STU {} is inside no star set of STU {}",
                    row + 1,
                    lower + 1,
                    higher + 1
                ),
                NestingGap::NoSubset => write!(
                    f,
                    "nesting: star set of row {} in STU {} contains no star set of STU {}",
                    row + 1,
                    higher + 1,
                    lower + 1
                ),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fails(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition() == condition)
    }

    pub fn first(&self, condition: Condition) -> Option<&Violation> {
        self.violations.iter().find(|v| v.condition() == condition)
    }

    pub fn failed_conditions(&self) -> BTreeSet<Condition> {
        self.violations.iter().map(Violation::condition).collect()
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A single-STU placement delivery array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlpda {
    rows: usize,
    users: usize,
    antennas: usize,
    cells: Vec<Entry>,
    stars: usize,
    slots: usize,
    slot_cells: Vec<Vec<(usize, usize)>>,
}

impl Mlpda {
    pub fn from_rows(rows: Vec<Vec<Entry>>, antennas: usize) -> Result<Self, PdaError> {
        if antennas == 0 {
            return Err(PdaError::NoAntennas);
        }
        let users = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || users == 0 {
            return Err(PdaError::Empty);
        }
        let mut cells = Vec::with_capacity(rows.len() * users);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != users {
                return Err(PdaError::Ragged { row: r, found: row.len(), expected: users });
            }
            for (c, &e) in row.iter().enumerate() {
                if e == Entry::Slot(0) {
                    return Err(PdaError::ZeroSlot { row: r, column: c });
                }
                cells.push(e);
            }
        }
        Ok(Self::from_cells(rows.len(), users, antennas, cells))
    }

    pub(crate) fn from_cells(rows: usize, users: usize, antennas: usize, cells: Vec<Entry>) -> Self {
        let slots = cells.iter().filter_map(|e| e.slot()).max().unwrap_or(0);
        let mut slot_cells = vec![Vec::new(); slots];
        for (i, e) in cells.iter().enumerate() {
            if let Entry::Slot(n) = e {
                slot_cells[n - 1].push((i / users, i % users));
            }
        }
        let stars = modal_star_count(rows, users, &cells);
        Self { rows, users, antennas, cells, stars, slots, slot_cells }
    }

    /// F
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// K
    pub fn users(&self) -> usize {
        self.users
    }

    /// L
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Z, the star count shared by the columns (the most common count when the array is invalid).
    pub fn stars(&self) -> usize {
        self.stars
    }

    /// N, the largest slot index.
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, row: usize, user: usize) -> Entry {
        self.cells[row * self.users + user]
    }

    pub fn row(&self, row: usize) -> &[Entry] {
        &self.cells[row * self.users..(row + 1) * self.users]
    }

    pub fn row_entries(&self) -> impl Iterator<Item = &[Entry]> {
        self.cells.chunks(self.users)
    }

    /// Users caching subfile `row`.
    pub fn star_users(&self, row: usize) -> Vec<usize> {
        self.row(row)
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_star())
            .map(|(k, _)| k)
            .collect()
    }

    /// Subfiles cached by `user`.
    pub fn cached_rows(&self, user: usize) -> Vec<usize> {
        (0..self.rows).filter(|&f| self.get(f, user).is_star()).collect()
    }

    /// Subfiles `user` is missing, in increasing order.
    pub fn missing_rows(&self, user: usize) -> Vec<usize> {
        (0..self.rows).filter(|&f| !self.get(f, user).is_star()).collect()
    }

    /// Cells `(row, user)` holding slot `n`.
    pub fn slot_cells(&self, n: usize) -> &[(usize, usize)] {
        &self.slot_cells[n - 1]
    }

    /// Users served in slot `n`, increasing.
    pub fn served_users(&self, n: usize) -> Vec<usize> {
        let mut users: Vec<usize> = self.slot_cells(n).iter().map(|&(_, k)| k).collect();
        users.sort_unstable();
        users.dedup();
        users
    }

    /// Row of `user`'s column that holds slot `n`.
    pub fn slot_row(&self, n: usize, user: usize) -> Option<usize> {
        self.slot_cells(n).iter().find(|&&(_, k)| k == user).map(|&(f, _)| f)
    }

    /// Z/F.
    pub fn memory(&self) -> Rational {
        Rational::new(self.stars.into(), self.rows.into())
    }

    /// Sum-DoF K(F-Z)/N.
    pub fn dof(&self) -> Result<Rational, PdaError> {
        if self.slots == 0 {
            return Err(PdaError::NoSlots);
        }
        Ok(from_usize(self.users * (self.rows - self.stars)) / from_usize(self.slots))
    }

    /// Checks the four array conditions.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for k in 0..self.users {
            let stars = (0..self.rows).filter(|&f| self.get(f, k).is_star()).count();
            if stars != self.stars {
                report.violations.push(Violation::StarCount { column: k, stars, expected: self.stars });
            }
        }
        for n in 1..=self.slots {
            if self.slot_cells[n - 1].is_empty() {
                report.violations.push(Violation::MissingSlot { slot: n });
            }
        }
        for k in 0..self.users {
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for f in 0..self.rows {
                if let Entry::Slot(n) = self.get(f, k) {
                    if let Some(&first) = seen.get(&n) {
                        report.violations.push(Violation::RepeatedSlot { column: k, slot: n, rows: (first, f) });
                    } else {
                        seen.insert(n, f);
                    }
                }
            }
        }
        for n in 1..=self.slots {
            let cells = &self.slot_cells[n - 1];
            let mut rows: Vec<usize> = cells.iter().map(|&(f, _)| f).collect();
            rows.sort_unstable();
            rows.dedup();
            let columns = self.served_users(n);
            for f in rows {
                let entries = columns.iter().filter(|&&k| !self.get(f, k).is_star()).count();
                if entries > self.antennas {
                    report.violations.push(Violation::AntennaLoad { slot: n, row: f, entries, limit: self.antennas });
                }
            }
        }
        report
    }

    /// Distinct star sets over all rows.
    pub fn star_sets(&self) -> Vec<Vec<usize>> {
        let set: BTreeSet<Vec<usize>> = (0..self.rows).map(|f| self.star_users(f)).collect();
        set.into_iter().collect()
    }
}

fn modal_star_count(rows: usize, users: usize, cells: &[Entry]) -> usize {
    let counts: Vec<usize> = (0..users)
        .map(|k| (0..rows).filter(|&f| cells[f * users + k].is_star()).count())
        .collect();
    let mut best = counts[0];
    let mut best_freq = 0;
    for &c in &counts {
        let freq = counts.iter().filter(|&&x| x == c).count();
        if freq > best_freq {
            best = c;
            best_freq = freq;
        }
    }
    best
}

/// One array per STU together with its memory fraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StuArray {
    pub memory: Rational,
    pub array: Mlpda,
}

/// Location-aware array family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lapda {
    users: usize,
    antennas: usize,
    stus: Vec<StuArray>,
}

impl Lapda {
    pub fn new(stus: Vec<StuArray>) -> Result<Self, PdaError> {
        let first = stus.first().ok_or(PdaError::NoStus)?;
        let users = first.array.users();
        let antennas = first.array.antennas();
        for (s, stu) in stus.iter().enumerate() {
            if stu.array.users() != users || stu.array.antennas() != antennas {
                return Err(PdaError::Mismatch {
                    stu: s,
                    users: stu.array.users(),
                    antennas: stu.array.antennas(),
                    expected_users: users,
                    expected_antennas: antennas,
                });
            }
        }
        Ok(Self { users, antennas, stus })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn stu_count(&self) -> usize {
        self.stus.len()
    }

    pub fn stus(&self) -> &[StuArray] {
        &self.stus
    }

    pub fn array(&self, stu: usize) -> &Mlpda {
        &self.stus[stu].array
    }

    pub fn memory(&self, stu: usize) -> &Rational {
        &self.stus[stu].memory
    }

    pub fn memories(&self) -> Vec<Rational> {
        self.stus.iter().map(|s| s.memory.clone()).collect()
    }

    /// Memory consistency and cross-array nesting.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (s, stu) in self.stus.iter().enumerate() {
            let actual = stu.array.memory();
            if actual != stu.memory {
                report.violations.push(Violation::Memory { stu: s, declared: stu.memory.clone(), actual });
            }
        }
        let sets: Vec<Vec<Vec<usize>>> = self.stus.iter().map(|s| row_star_sets(&s.array)).collect();
        for hi in 0..self.stus.len() {
            for lo in 0..self.stus.len() {
                if self.stus[hi].memory <= self.stus[lo].memory {
                    continue;
                }
                for (row, lower) in sets[lo].iter().enumerate() {
                    if !sets[hi].iter().any(|upper| is_subset(lower, upper)) {
                        report.violations.push(Violation::Nesting { higher: hi, lower: lo, row, gap: NestingGap::NotCovered });
                    }
                }
                for (row, upper) in sets[hi].iter().enumerate() {
                    if !sets[lo].iter().any(|lower| is_subset(lower, upper)) {
                        report.violations.push(Violation::Nesting { higher: hi, lower: lo, row, gap: NestingGap::NoSubset });
                    }
                }
            }
        }
        report
    }

    /// Member conditions followed by the cross-array checks.
    pub fn validate_all(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for stu in &self.stus {
            report.extend(stu.array.validate());
        }
        report.extend(self.validate());
        report
    }

    pub fn is_zero_memory(&self, stu: usize) -> bool {
        self.stus[stu].memory.is_zero()
    }
}

fn row_star_sets(array: &Mlpda) -> Vec<Vec<usize>> {
    (0..array.rows()).map(|f| array.star_users(f)).collect()
}

/// Both slices sorted.
fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

pub fn validate_mlpda(array: &Mlpda) -> ValidationReport {
    array.validate()
}

pub fn validate_lapda(lapda: &Lapda) -> ValidationReport {
    lapda.validate()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn example_arrays_are_valid() {
        for text in [Q1, Q2, Q3] {
            let a = q(text);
            assert!(a.validate().is_valid(), "{}", a.validate());
        }
        let q2 = q(Q2);
        assert_eq!((q2.rows(), q2.users(), q2.stars(), q2.slots()), (4, 4, 2, 2));
    }

    #[test]
    fn single_cell() {
        let a = Mlpda::from_rows(vec![vec![Entry::Slot(1)]], 1).unwrap();
        assert!(a.validate().is_valid());
        assert_eq!((a.stars(), a.slots()), (0, 1));
    }

    #[test]
    fn mutated_cell_breaks_star_count_and_column_repeat() {
        let q2 = q(Q2);
        let mut rows: Vec<Vec<Entry>> = q2.row_entries().map(|r| r.to_vec()).collect();
        rows[0][0] = Entry::Slot(1);
        let bad = Mlpda::from_rows(rows, 2).unwrap();
        let report = bad.validate();
        assert!(report.fails(Condition::C1) && report.fails(Condition::C3));
        // Row 1 now holds three integers among the four users served in slot 1.
        assert_eq!(
            report.first(Condition::C4),
            Some(&Violation::AntennaLoad { slot: 1, row: 0, entries: 3, limit: 2 })
        );
        assert_eq!(
            report.first(Condition::C1),
            Some(&Violation::StarCount { column: 0, stars: 1, expected: 2 })
        );
        assert_eq!(
            report.first(Condition::C3),
            Some(&Violation::RepeatedSlot { column: 0, slot: 1, rows: (0, 1) })
        );
    }

    #[test]
    fn antenna_load_violation() {
        // Slot 1 serves three users, each row has three integers among them.
        let a = parse_grid("1 1 1", 2).unwrap();
        let report = a.validate();
        assert_eq!(report.failed_conditions(), [Condition::C4].into_iter().collect());
    }

    #[test]
    fn missing_slot_detected() {
        let a = parse_grid("1 3", 2).unwrap();
        assert_eq!(a.validate().first(Condition::C2), Some(&Violation::MissingSlot { slot: 2 }));
    }

    #[test]
    fn structural_errors() {
        let err = Mlpda::from_rows(vec![vec![Entry::Star, Entry::Slot(1)], vec![Entry::Star]], 1);
        assert_eq!(err, Err(PdaError::Ragged { row: 1, found: 1, expected: 2 }));
        assert_eq!(Mlpda::from_rows(vec![], 1), Err(PdaError::Empty));
        assert_eq!(Mlpda::from_rows(vec![vec![Entry::Star]], 0), Err(PdaError::NoAntennas));
    }

    #[test]
    fn dof_of_example_arrays() {
        assert_eq!(q(Q1).dof().unwrap(), int(3));
        assert_eq!(q(Q2).dof().unwrap(), int(4));
        assert_eq!(q(Q3).dof().unwrap(), int(4));
        let all_star = parse_grid("* *", 1).unwrap();
        assert_eq!(all_star.dof(), Err(PdaError::NoSlots));
    }

    #[test]
    fn example_family_is_location_aware() {
        let lapda = example_lapda();
        assert!(lapda.validate_all().is_valid(), "{}", lapda.validate_all());
        let stars: Vec<usize> = lapda.stus().iter().map(|s| s.array.stars()).collect();
        assert_eq!(stars, vec![3, 2, 3, 2, 3]);
    }

    #[test]
    fn single_stu_passes_vacuously() {
        let lapda = Lapda::new(vec![StuArray { memory: ratio(1, 4), array: q(Q1) }]).unwrap();
        assert!(lapda.validate().is_valid());
    }

    #[test]
    fn non_nesting_family_fails() {
        let bad = parse_grid("* * * 1\n* * * 2\n* * * 3\n* * * 4", 2).unwrap();
        let lapda = Lapda::new(vec![
            StuArray { memory: ratio(1, 4), array: q(Q1) },
            StuArray { memory: ratio(3, 4), array: bad },
        ])
        .unwrap();
        let report = lapda.validate();
        // Rows 10-12 of the first array cache only user 4.
        for row in 9..12 {
            assert!(report.violations.contains(&Violation::Nesting {
                higher: 1,
                lower: 0,
                row,
                gap: NestingGap::NotCovered
            }));
        }
    }

    #[test]
    fn mismatched_members_are_structural() {
        let other = parse_grid("* 1 1 2", 3).unwrap();
        let err = Lapda::new(vec![
            StuArray { memory: ratio(1, 4), array: q(Q1) },
            StuArray { memory: ratio(1, 4), array: other },
        ]);
        assert!(matches!(err, Err(PdaError::Mismatch { stu: 1, .. })));
    }

    #[test]
    fn subset_helper() {
        assert!(is_subset(&[], &[1, 2]));
        assert!(is_subset(&[1, 3], &[0, 1, 2, 3]));
        assert!(!is_subset(&[1, 4], &[0, 1, 2, 3]));
    }
}

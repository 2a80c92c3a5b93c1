//! Fragment index matrices: which subfile each fragment position carries in each slot.

use std::fmt;

use super::{DeliveryContext, FmMatrix, ScheduleError};

/// `slots × α`; entry 0 means no transmission, otherwise a 1-based subfile index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMatrix {
    slots: usize,
    stretch: usize,
    cells: Vec<usize>,
}

impl IndexMatrix {
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn stretch(&self) -> usize {
        self.stretch
    }

    /// Entry for 1-based slot `n` and position `m`.
    pub fn get(&self, n: usize, m: usize) -> usize {
        self.cells[(n - 1) * self.stretch + m]
    }

    pub fn slot(&self, n: usize) -> &[usize] {
        &self.cells[(n - 1) * self.stretch..n * self.stretch]
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let stretch = rows.first().map_or(0, Vec::len);
        Self { slots: rows.len(), stretch, cells: rows.concat() }
    }
}

impl fmt::Display for IndexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in 1..=self.slots {
            let line: Vec<String> = self.slot(n).iter().map(usize::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Walks slots in order and, for each fragment position, takes the lowest-indexed
/// subfile still owed on the user's row of that slot.
pub fn generate_index_matrix(ctx: &DeliveryContext, stream: usize, fm: &FmMatrix) -> Result<IndexMatrix, ScheduleError> {
    let s = &ctx.streams[stream];
    let mut g = fm.clone();
    let slots = ctx.slots();
    let mut cells = vec![0; slots * ctx.stretch];
    for n in 1..=slots {
        let Some(row) = ctx.reference_array.slot_row(n, s.user) else {
            continue;
        };
        for m in 0..ctx.stretch {
            let column = (0..g.cols())
                .find(|&c| g.get(row, c) > 0)
                .ok_or(ScheduleError::RowExhausted { user: s.user, row, slot: n })?;
            g.set(row, column, g.get(row, column) - 1);
            cells[(n - 1) * ctx.stretch + m] = column + 1;
        }
    }
    Ok(IndexMatrix { slots, stretch: ctx.stretch, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::tests::example;
    use crate::scheduler::{build_fm_matrix, compute_context, select_reference};

    fn parse(rows: &str) -> FmMatrix {
        let rows: Vec<Vec<usize>> = rows
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
            .collect();
        let mut g = FmMatrix::zeros(rows.len(), rows[0].len());
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                g.set(r, c, v);
            }
        }
        g
    }

    const G2: &str = "
        0 0 0 2
        0 0 0 2
        0 0 0 2
        0 0 0 0
        0 0 0 0
        0 0 0 0
        0 0 2 0
        0 0 2 0
        0 0 2 0
        0 0 0 2
        0 0 2 0
        0 0 1 1";

    #[test]
    fn first_user_index_matrix() {
        let (p, d) = example();
        let ctx = compute_context(&d, &p, select_reference(&d, &p).unwrap()).unwrap();
        let g = build_fm_matrix(&ctx, 0).unwrap();
        let idx = generate_index_matrix(&ctx, 0, &g).unwrap();
        let firsts: Vec<usize> = (1..=12).map(|n| idx.get(n, 0)).collect();
        assert_eq!(firsts, vec![4, 7, 10, 0, 5, 6, 8, 9, 0, 11, 0, 12]);
        assert!((1..=12).all(|n| idx.get(n, 0) == idx.get(n, 1)));
    }

    #[test]
    fn given_mapping_yields_its_index_matrix() {
        let (p, d) = example();
        let ctx = compute_context(&d, &p, select_reference(&d, &p).unwrap()).unwrap();
        let g = parse(G2);
        assert!(g.validate(&ctx, 1).is_empty());
        let idx = generate_index_matrix(&ctx, 1, &g).unwrap();
        let rows: Vec<Vec<usize>> = (1..=12).map(|n| idx.slot(n).to_vec()).collect();
        // Rows 5, 10 and 11 follow from walking this mapping in slot order.
        let expected = [
            [4, 4], [0, 0], [4, 4], [3, 3], [4, 4], [4, 4],
            [0, 0], [3, 3], [3, 3], [3, 3], [3, 4], [0, 0],
        ];
        assert_eq!(rows, expected.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    }
}

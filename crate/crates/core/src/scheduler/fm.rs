//! Fragment mapping: how many fragments of each requested subfile ride on each
//! temporary row of the reference array.

use std::fmt;

use super::{DeliveryContext, ScheduleError};
use crate::flow::FlowNetwork;
use crate::pda::Entry;

/// Rows index the reference array, columns index the stream's part array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FmViolation {
    /// Row outside the temporary set carries fragments, or a temporary row carries the wrong count.
    RowSum { row: usize, sum: usize, expected: usize },
    /// Column outside the requested set carries fragments, or a requested column the wrong count.
    ColumnSum { column: usize, sum: usize, expected: usize },
    /// Some user that treats the row's content as cached does not hold the subfile.
    Uncached { row: usize, column: usize },
}

impl fmt::Display for FmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RowSum { row, sum, expected } => write!(f, "row {}: sum {sum}, expected {expected}", row + 1),
            Self::ColumnSum { column, sum, expected } => {
                write!(f, "column {}: sum {sum}, expected {expected}", column + 1)
            }
            Self::Uncached { row, column } => write!(f, "cell ({}, {}) maps an uncached subfile", row + 1, column + 1),
        }
    }
}

impl FmMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cells: vec![0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: usize) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[usize] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_sum(&self, row: usize) -> usize {
        self.row(row).iter().sum()
    }

    pub fn col_sum(&self, col: usize) -> usize {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    /// Checks sums and cache admissibility against stream `stream` of `ctx`.
    pub fn validate(&self, ctx: &DeliveryContext, stream: usize) -> Vec<FmViolation> {
        let s = &ctx.streams[stream];
        let mut out = Vec::new();
        for row in 0..self.rows {
            let expected = if s.temporary.contains(&row) { ctx.stretch } else { 0 };
            let sum = self.row_sum(row);
            if sum != expected {
                out.push(FmViolation::RowSum { row, sum, expected });
            }
        }
        for column in 0..self.cols {
            let expected = if s.requested.contains(&column) { s.fragments } else { 0 };
            let sum = self.col_sum(column);
            if sum != expected {
                out.push(FmViolation::ColumnSum { column, sum, expected });
            }
        }
        for row in 0..self.rows {
            for column in 0..self.cols {
                if self.get(row, column) > 0 && !admissible(ctx, stream, row, column) {
                    out.push(FmViolation::Uncached { row, column });
                }
            }
        }
        out
    }
}

impl fmt::Display for FmMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(usize::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Every active user co-served with the stream's owner in the row's slot and holding the
/// row as a star must cache subfile `column` of the stream's part.
fn admissible(ctx: &DeliveryContext, stream: usize, row: usize, column: usize) -> bool {
    let s = &ctx.streams[stream];
    let q = &ctx.reference_array;
    let Entry::Slot(n) = q.get(row, s.user) else {
        return false;
    };
    let holders = s.array.star_users(column);
    ctx.served(n)
        .into_iter()
        .filter(|&j| q.get(row, j).is_star())
        .all(|j| holders.contains(&j))
}

/// Max-flow assignment from temporary rows (supply `α` each) to requested subfiles
/// (demand `D` each). Arcs try the same-index subfile first, then ascending indices.
pub fn build_fm_matrix(ctx: &DeliveryContext, stream: usize) -> Result<FmMatrix, ScheduleError> {
    let s = &ctx.streams[stream];
    let rows = ctx.rows();
    let cols = s.array.rows();
    let tis = s.temporary.len();
    let ris = s.requested.len();
    let source = 0;
    let sink = 1 + tis + ris;
    let mut net = FlowNetwork::new(sink + 1);
    let mut arcs = Vec::new();
    for (a, &row) in s.temporary.iter().enumerate() {
        net.add_edge(source, 1 + a, ctx.stretch as i64);
        let mut order: Vec<usize> = (0..ris).collect();
        if let Some(pos) = s.requested.iter().position(|&c| c == row) {
            order.remove(pos);
            order.insert(0, pos);
        }
        let mut any = false;
        for b in order {
            let column = s.requested[b];
            if admissible(ctx, stream, row, column) {
                arcs.push((row, column, net.add_edge(1 + a, 1 + tis + b, ctx.stretch as i64)));
                any = true;
            }
        }
        if !any {
            return Err(ScheduleError::NoAdmissibleSubfile { user: s.user, row });
        }
    }
    for b in 0..ris {
        net.add_edge(1 + tis + b, sink, s.fragments as i64);
    }
    let flow = net.max_flow(source, sink) as usize;
    let demand = ctx.stretch * tis;
    if flow != demand {
        return Err(ScheduleError::MappingInfeasible { user: s.user, flow, demand });
    }
    let mut g = FmMatrix::zeros(rows, cols);
    for (row, column, e) in arcs {
        g.set(row, column, net.flow(e) as usize);
    }
    Ok(g)
}

//! Cyclic-window array construction.
//!
//! Row `f` of every constructed array caches the window of `t` consecutive
//! users starting at `f / r` (modulo K), where `r` is the row replication
//! factor. Windows of different lengths nest, so any family of constructed
//! arrays for the same K forms a valid location-aware family.

use std::collections::HashMap;

use super::{Entry, Lapda, Mlpda, PdaError, StuArray};
use crate::flow::FlowNetwork;
use crate::rational::{from_usize, gcd_usize, to_usize};
use crate::Rational;

/// Largest replication tried for the slot shapes of the general case.
const MAX_SHAPE_COPIES: usize = 4;

/// Builds an array with Z/F = `gain`/`users`.
pub fn construct_mlpda(users: usize, antennas: usize, gain: usize) -> Result<Mlpda, PdaError> {
    if antennas == 0 {
        return Err(PdaError::NoAntennas);
    }
    if users == 0 {
        return Err(PdaError::Empty);
    }
    if gain > users {
        return Err(PdaError::GainOutOfRange { gain, users });
    }
    let array = if gain == users {
        Mlpda::from_cells(1, users, antennas, vec![Entry::Star; users])
    } else if gain == 0 && antennas >= users {
        Mlpda::from_cells(1, users, antennas, vec![Entry::Slot(1); users])
    } else if gain == 0 {
        cacheless(users, antennas)
    } else if gain + antennas >= users {
        shifted(users, antennas, gain)
    } else {
        shaped(users, antennas, gain).unwrap_or_else(|| unicast(users, antennas, gain))
    };
    debug_assert!(array.validate().is_valid());
    Ok(array)
}

/// One array per STU; every `users * m(s)` must be an integer.
pub fn construct_lapda(users: usize, antennas: usize, memory: &[Rational]) -> Result<Lapda, PdaError> {
    let mut cache: HashMap<usize, Mlpda> = HashMap::new();
    let mut stus = Vec::with_capacity(memory.len());
    for m in memory {
        let gain = to_usize(&(m * from_usize(users)))
            .filter(|&g| g <= users)
            .ok_or_else(|| PdaError::FractionalGain(m.to_string()))?;
        let array = match cache.get(&gain) {
            Some(a) => a.clone(),
            None => {
                let a = construct_mlpda(users, antennas, gain)?;
                cache.insert(gain, a.clone());
                a
            }
        };
        stus.push(StuArray { memory: m.clone(), array });
    }
    Lapda::new(stus)
}

fn in_window(start: usize, len: usize, user: usize, users: usize) -> bool {
    (user + users - start) % users < len
}

/// No caching: groups of `antennas` consecutive cells in row-major order.
fn cacheless(users: usize, antennas: usize) -> Mlpda {
    let rows = antennas / gcd_usize(users, antennas);
    let cells = (0..rows * users).map(|i| Entry::Slot(i / antennas + 1)).collect();
    Mlpda::from_cells(rows, users, antennas, cells)
}

/// `gain + antennas >= users`: every slot serves all users.
fn shifted(users: usize, antennas: usize, gain: usize) -> Mlpda {
    let mut cells = vec![Entry::Star; users * users];
    for row in 0..users {
        for k in 0..users {
            if !in_window(row, gain, k, users) {
                let offset = (k + users - row) % users - gain;
                cells[row * users + k] = Entry::Slot(offset + 1);
            }
        }
    }
    Mlpda::from_cells(users, users, antennas, cells)
}

/// Every missing cell in its own slot.
fn unicast(users: usize, antennas: usize, gain: usize) -> Mlpda {
    let mut cells = vec![Entry::Star; users * users];
    let mut next = 0;
    for row in 0..users {
        for k in 0..users {
            if !in_window(row, gain, k, users) {
                next += 1;
                cells[row * users + k] = Entry::Slot(next);
            }
        }
    }
    Mlpda::from_cells(users, users, antennas, cells)
}

/// A slot template anchored at user 0; rotated over all K anchors.
struct Shape {
    members: Vec<usize>,
    /// Per member, the admissible offsets `i`, meaning the member reads row window `member - t - i`.
    offsets: Vec<Vec<usize>>,
}

fn shapes(users: usize, antennas: usize, gain: usize) -> Vec<Shape> {
    let head = gain.min(antennas);
    (head..=users - antennas)
        .map(|gap| {
            let members: Vec<usize> = (0..head).chain(gap..gap + antennas).collect();
            let offsets = members
                .iter()
                .map(|&k| {
                    let mut allowed: Vec<usize> = (0..users)
                        .filter(|&b| !in_window(b, gain, k, users))
                        .filter(|&b| members.iter().filter(|&&j| !in_window(b, gain, j, users)).count() <= antennas)
                        .map(|b| (k + users - b) % users - gain)
                        .collect();
                    allowed.sort_unstable();
                    allowed
                })
                .collect();
            Shape { members, offsets }
        })
        .collect()
}

/// Units per (shape, member), listed by offset.
type Assignment = Vec<Vec<Vec<usize>>>;

fn assign(shapes: &[Shape], copies: usize, replication: usize, width: usize) -> Option<Assignment> {
    let mut net = FlowNetwork::new(2);
    let (source, sink) = (0, 1);
    let offset_nodes: Vec<usize> = (0..width).map(|_| net.add_node()).collect();
    let mut arcs = Vec::new();
    for shape in shapes {
        let mut per_member = Vec::new();
        for allowed in &shape.offsets {
            let node = net.add_node();
            net.add_edge(source, node, copies as i64);
            per_member.push(allowed.iter().map(|&i| (i, net.add_edge(node, offset_nodes[i], copies as i64))).collect::<Vec<_>>());
        }
        arcs.push(per_member);
    }
    for &node in &offset_nodes {
        net.add_edge(node, sink, replication as i64);
    }
    if net.max_flow(source, sink) != (replication * width) as i64 {
        return None;
    }
    Some(
        arcs.iter()
            .map(|members| {
                members
                    .iter()
                    .map(|arcs| {
                        arcs.iter()
                            .flat_map(|&(i, e)| std::iter::repeat_n(i, net.flow(e) as usize))
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    )
}

fn realize(users: usize, antennas: usize, gain: usize, shapes: &[Shape], units: &Assignment, replication: usize) -> Mlpda {
    let rows = users * replication;
    let mut cells = vec![Entry::Star; rows * users];
    let mut used = vec![0usize; users * (users - gain)];
    let mut slot = 0;
    for (shape, members) in shapes.iter().zip(units) {
        let copies = members.iter().map(Vec::len).max().unwrap_or(0);
        for copy in 0..copies {
            for anchor in 0..users {
                slot += 1;
                for (&member, list) in shape.members.iter().zip(members) {
                    let Some(&offset) = list.get(copy) else { continue };
                    let k = (anchor + member) % users;
                    let window = (k + users - gain - offset) % users;
                    let counter = &mut used[window * (users - gain) + offset];
                    let row = window * replication + *counter;
                    *counter += 1;
                    cells[row * users + k] = Entry::Slot(slot);
                }
            }
        }
    }
    Mlpda::from_cells(rows, users, antennas, cells)
}

/// General case `1 <= t`, `t + L < K`.
fn shaped(users: usize, antennas: usize, gain: usize) -> Option<Mlpda> {
    let shapes = shapes(users, antennas, gain);
    let width = users - gain;
    let per_slot = gain.min(antennas) + antennas;
    let mut best: Option<(Rational, Mlpda)> = None;
    for copies in 1..=MAX_SHAPE_COPIES {
        let upper = copies * shapes.len() * per_slot / width;
        for replication in (1..=upper).rev() {
            let Some(units) = assign(&shapes, copies, replication, width) else { continue };
            let array = realize(users, antennas, gain, &shapes, &units, replication);
            let dof = array.dof().ok()?;
            let better = match &best {
                None => true,
                Some((d, a)) => dof > *d || (dof == *d && array.rows() < a.rows()),
            };
            if better {
                best = Some((dof, array));
            }
            break;
        }
    }
    best.map(|(_, a)| a)
}

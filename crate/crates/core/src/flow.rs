//! Integer max-flow (Dinic) used by the array constructor and the file-mapping solver.
//!
//! Arcs are explored in insertion order, so results are reproducible for a
//! given construction order.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId(usize);

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    original: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            original: Vec::new(),
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.head.push(Vec::new());
        self.head.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.head.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: i64) -> EdgeId {
        debug_assert!(capacity >= 0);
        let id = self.to.len();
        self.to.push(to);
        self.cap.push(capacity);
        self.original.push(capacity);
        self.head[from].push(id);
        self.to.push(from);
        self.cap.push(0);
        self.original.push(0);
        self.head[to].push(id + 1);
        EdgeId(id)
    }

    /// Flow currently routed through `edge`.
    pub fn flow(&self, edge: EdgeId) -> i64 {
        self.original[edge.0] - self.cap[edge.0]
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let n = self.head.len();
        let mut total = 0;
        let mut level = vec![usize::MAX; n];
        let mut cursor = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if self.cap[e] > 0 && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[sink] == usize::MAX {
                return total;
            }
            cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.augment(source, sink, i64::MAX, &level, &mut cursor);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn augment(&mut self, u: usize, sink: usize, limit: i64, level: &[usize], cursor: &mut [usize]) -> i64 {
        if u == sink {
            return limit;
        }
        while cursor[u] < self.head[u].len() {
            let e = self.head[u][cursor[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let pushed = self.augment(v, sink, limit.min(self.cap[e]), level, cursor);
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            cursor[u] += 1;
        }
        0
    }
}

//! Dinic max-flow with real capacities, iterative so that large supports do
//! not recurse deeply.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Residual capacities at or below this are treated as saturated.
const CAPACITY_FLOOR: f64 = 1e-15;

pub(crate) struct FlowNetwork {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const NIL: usize = usize::MAX;

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { head: vec![NIL; nodes], next: Vec::new(), to: Vec::new(), cap: Vec::new() }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        for (a, b, c) in [(from, to, cap), (to, from, 0.0)] {
            self.to.push(b);
            self.cap.push(c);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn levels(&self, source: usize, sink: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.head.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let mut e = self.head[v];
            while e != NIL {
                let w = self.to[e];
                if self.cap[e] > CAPACITY_FLOOR && level[w] == u32::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
                e = self.next[e];
            }
        }
        (level[sink] != u32::MAX).then_some(level)
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let mut total = 0.0;
        while let Some(level) = self.levels(source, sink) {
            let mut cursor = self.head.clone();
            loop {
                let pushed = self.augment(source, sink, &level, &mut cursor);
                if pushed <= CAPACITY_FLOOR {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    /// Finds one augmenting path in the level graph and saturates it.
    fn augment(&mut self, source: usize, sink: usize, level: &[u32], cursor: &mut [usize]) -> f64 {
        let mut path: Vec<usize> = Vec::new();
        let mut v = source;
        loop {
            if v == sink {
                let bottleneck = path.iter().map(|&e| self.cap[e]).fold(f64::INFINITY, f64::min);
                for &e in &path {
                    self.cap[e] -= bottleneck;
                    self.cap[e ^ 1] += bottleneck;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while cursor[v] != NIL {
                let e = cursor[v];
                let w = self.to[e];
                if self.cap[e] > CAPACITY_FLOOR && level[w] == level[v] + 1 {
                    path.push(e);
                    v = w;
                    advanced = true;
                    break;
                }
                cursor[v] = self.next[e];
            }
            if !advanced {
                // Dead end: retreat and skip the edge that led here.
                let Some(e) = path.pop() else {
                    return 0.0;
                };
                v = self.to[e ^ 1];
                cursor[v] = self.next[cursor[v]];
            }
        }
    }
}

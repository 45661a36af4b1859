use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::flow::FlowNetwork;
use super::prokhorov::{distance, TIE};
use super::FiniteMeasure;
use crate::error::{Error, Result};

/// Weak* typicality test for sequences whose letters come from fixed
/// finite alphabets, one per coordinate.
///
/// The empirical measure of such a sequence is determined by the letter
/// counts on the product grid, so the verdict is memoised per count table.
/// The neighbourhood structure between grid cells and reference atoms is
/// computed once.
#[derive(Clone, Debug)]
pub struct GridTypicality {
    reference: FiniteMeasure,
    eps: f64,
    sizes: Vec<usize>,
    /// Reference atoms strictly closer than `eps` to each grid cell.
    neighbours: Vec<Vec<usize>>,
    counts: Vec<u32>,
    cache: BTreeMap<Vec<u8>, bool>,
    evaluations: u64,
}

impl GridTypicality {
    pub fn new(reference: &FiniteMeasure, axes: &[Vec<f64>], eps: f64) -> Result<Self> {
        if axes.len() != reference.dim() {
            return Err(Error::DimensionMismatch { expected: reference.dim(), found: axes.len() });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive"));
        }
        let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
        let cells: usize = sizes.iter().product();
        let mut neighbours = Vec::with_capacity(cells);
        let mut point = vec![0.0; axes.len()];
        for cell in 0..cells {
            let mut rest = cell;
            for (axis, values) in axes.iter().enumerate().rev() {
                point[axis] = values[rest % values.len()];
                rest /= values.len();
            }
            neighbours.push(
                reference
                    .atoms()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| distance(&a.point, &point) < eps - TIE)
                    .map(|(j, _)| j)
                    .collect(),
            );
        }
        Ok(GridTypicality {
            reference: reference.clone(),
            eps,
            sizes,
            neighbours,
            counts: vec![0; cells],
            cache: BTreeMap::new(),
            evaluations: 0,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn reference(&self) -> &FiniteMeasure {
        &self.reference
    }

    /// Number of flow computations performed (cache misses).
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Typicality of a pair of letter-index sequences (2-D grids only).
    pub fn pair<A, B>(&mut self, x: &[A], y: &[B]) -> bool
    where
        A: Copy + Into<u64>,
        B: Copy + Into<u64>,
    {
        debug_assert_eq!(self.sizes.len(), 2);
        debug_assert_eq!(x.len(), y.len());
        let width = self.sizes[1];
        let cells = x.iter().zip(y).map(|(&a, &b)| a.into() as usize * width + b.into() as usize);
        self.cells(cells, x.len())
    }

    /// Typicality given the flat grid cell of every letter of a sequence of
    /// length `n`.
    pub fn cells(&mut self, cells: impl Iterator<Item = usize>, n: usize) -> bool {
        if self.eps >= 1.0 {
            return true;
        }
        self.counts.iter_mut().for_each(|c| *c = 0);
        for c in cells {
            self.counts[c] += 1;
        }
        if n < 256 {
            let key: Vec<u8> = self.counts.iter().map(|&c| c as u8).collect();
            if let Some(&hit) = self.cache.get(&key) {
                return hit;
            }
            let verdict = self.evaluate(n);
            self.cache.insert(key, verdict);
            verdict
        } else {
            self.evaluate(n)
        }
    }

    fn evaluate(&mut self, n: usize) -> bool {
        self.evaluations += 1;
        let occupied: Vec<usize> = (0..self.counts.len()).filter(|&c| self.counts[c] > 0).collect();
        let nr = self.reference.len();
        let source = occupied.len() + nr;
        let sink = source + 1;
        let mut net = FlowNetwork::new(sink + 1);
        for (i, &cell) in occupied.iter().enumerate() {
            net.add_edge(source, i, f64::from(self.counts[cell]) / n as f64);
            for &j in &self.neighbours[cell] {
                net.add_edge(i, occupied.len() + j, f64::INFINITY);
            }
        }
        for (j, atom) in self.reference.atoms().iter().enumerate() {
            net.add_edge(occupied.len() + j, sink, atom.mass);
        }
        let deficiency = 1.0 - net.max_flow(source, sink);
        deficiency < self.eps - TIE
    }
}

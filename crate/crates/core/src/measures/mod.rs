//! Finite-support probability measures on `R^d`.
//!
//! Atoms are kept sorted by point (lexicographic, `total_cmp`) with exact
//! duplicates merged, so two measures over the same points line up
//! position by position. Information quantities are in bits.

mod flow;
mod prokhorov;
mod typicality;

use alloc::vec::Vec;
use core::cmp::Ordering;

pub use prokhorov::{
    is_jointly_typical, is_typical, prokhorov_deficiency, prokhorov_distance, prokhorov_within, total_variation,
};
pub use typicality::GridTypicality;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance used when matching atoms of different measures by coordinates.
pub const MATCH_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// `-0.0` and `0.0` are the same point.
fn canonical_zero(point: &mut [f64]) {
    for c in point {
        if *c == 0.0 {
            *c = 0.0;
        }
    }
}

/// Lexicographic comparison that treats coordinates within
/// [`MATCH_TOLERANCE`] as equal.
fn cmp_points_tol(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > MATCH_TOLERANCE {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

impl FiniteMeasure {
    /// Builds a measure from weighted points: zero weights are dropped and
    /// identical points merged. The weights must sum to one.
    pub fn from_weighted<I, P>(dim: usize, weighted: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<Vec<f64>>,
    {
        let mut atoms = Vec::new();
        for (point, mass) in weighted {
            let point = point.into();
            if point.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: point.len() });
            }
            if !(mass >= 0.0 && mass.is_finite()) || point.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure("masses must be finite and non-negative, points finite"));
            }
            if mass > 0.0 {
                atoms.push(Atom { point, mass });
            }
        }
        Self::from_atoms_merging(dim, atoms)
    }

    fn from_atoms_merging(dim: usize, mut atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive"));
        }
        for a in &mut atoms {
            canonical_zero(&mut a.point);
        }
        atoms.sort_by(|a, b| cmp_points(&a.point, &b.point));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if cmp_points(&last.point, &atom.point).is_eq() => last.mass += atom.mass,
                _ => merged.push(atom),
            }
        }
        let total: f64 = merged.iter().map(|a| a.mass).sum();
        // Summation error grows with the number of atoms.
        if (total - 1.0).abs() > MASS_TOLERANCE * libm::sqrt(1.0 + merged.len() as f64) {
            return Err(Error::InvalidMeasure("masses must sum to one"));
        }
        Ok(FiniteMeasure { dim, atoms: merged })
    }

    /// Point mass at `point`.
    pub fn dirac(point: Vec<f64>) -> Self {
        let dim = point.len();
        FiniteMeasure { dim, atoms: alloc::vec![Atom { point, mass: 1.0 }] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass at `point` (matched within [`MATCH_TOLERANCE`]).
    pub fn mass_at(&self, point: &[f64]) -> f64 {
        self.atoms
            .binary_search_by(|a| cmp_points_tol(&a.point, point))
            .map_or(0.0, |i| self.atoms[i].mass)
    }

    /// Pushforward under `f`, merging atoms that land on the same point.
    pub fn map_points(&self, dim: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<FiniteMeasure> {
        let atoms = self.atoms.iter().map(|a| Atom { point: f(&a.point), mass: a.mass }).collect::<Vec<_>>();
        if let Some(a) = atoms.iter().find(|a| a.point.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: a.point.len() });
        }
        Self::from_atoms_merging(dim, atoms)
    }

    /// Marginal on the listed coordinates, in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<FiniteMeasure> {
        if let Some(&bad) = axes.iter().find(|&&a| a >= self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, found: bad + 1 });
        }
        self.map_points(axes.len(), |p| axes.iter().map(|&a| p[a]).collect())
    }

    /// Product measure with coordinates `(self, other)`.
    pub fn product(&self, other: &FiniteMeasure) -> FiniteMeasure {
        let mut atoms = Vec::with_capacity(self.len() * other.len());
        for a in &self.atoms {
            for b in &other.atoms {
                let mut point = a.point.clone();
                point.extend_from_slice(&b.point);
                atoms.push(Atom { point, mass: a.mass * b.mass });
            }
        }
        // Both factors are sorted, so the product already is.
        FiniteMeasure { dim: self.dim + other.dim, atoms }
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        -self.atoms.iter().map(|a| a.mass * libm::log2(a.mass)).sum::<f64>()
    }
}

/// A measure whose masses are counts over a sequence of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    measure: FiniteMeasure,
    counts: Vec<u64>,
    n: usize,
}

impl EmpiricalMeasure {
    /// Empirical measure of a sequence of points in `R^d`.
    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empirical measure of an empty sequence"));
        }
        let mut pts: Vec<Vec<f64>> = points.iter().map(|p| p.as_ref().to_vec()).collect();
        if let Some(bad) = pts.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        for p in &mut pts {
            canonical_zero(p);
        }
        pts.sort_by(|a, b| cmp_points(a, b));
        let n = pts.len();
        let mut atoms: Vec<Atom> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for p in pts {
            match atoms.last() {
                Some(last) if cmp_points(&last.point, &p).is_eq() => *counts.last_mut().expect("paired") += 1,
                _ => {
                    atoms.push(Atom { point: p, mass: 0.0 });
                    counts.push(1);
                }
            }
        }
        for (a, &c) in atoms.iter_mut().zip(&counts) {
            a.mass = c as f64 / n as f64;
        }
        Ok(EmpiricalMeasure { measure: FiniteMeasure { dim, atoms }, counts, n })
    }

    pub fn measure(&self) -> &FiniteMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> FiniteMeasure {
        self.measure
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn source_len(&self) -> usize {
        self.n
    }
}

/// Empirical measure of a scalar sequence.
pub fn empirical(x: &[f64]) -> Result<EmpiricalMeasure> {
    let pts: Vec<[f64; 1]> = x.iter().map(|&v| [v]).collect();
    EmpiricalMeasure::from_points(1, &pts)
}

/// Empirical joint measure of `(x_i, y_i)`.
pub fn empirical_joint(x: &[f64], y: &[f64]) -> Result<EmpiricalMeasure> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let pts: Vec<[f64; 2]> = x.iter().zip(y).map(|(&a, &b)| [a, b]).collect();
    EmpiricalMeasure::from_points(2, &pts)
}

/// `D(P || Q)` in bits; `+inf` when `P` charges a point `Q` does not.
pub fn kl_divergence(p: &FiniteMeasure, q: &FiniteMeasure) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, found: q.dim });
    }
    let mut total = 0.0;
    let mut j = 0;
    for a in &p.atoms {
        while j < q.atoms.len() && cmp_points_tol(&q.atoms[j].point, &a.point).is_lt() {
            j += 1;
        }
        if j == q.atoms.len() || cmp_points_tol(&q.atoms[j].point, &a.point).is_ne() {
            return Ok(f64::INFINITY);
        }
        total += a.mass * libm::log2(a.mass / q.atoms[j].mass);
    }
    Ok(total)
}

/// `I(X; Y)` in bits for a joint measure whose first `split` coordinates
/// are `X` and the rest `Y`.
pub fn mutual_information_split(joint: &FiniteMeasure, split: usize) -> Result<f64> {
    if split == 0 || split >= joint.dim {
        return Err(Error::InvalidParameter("split must separate the coordinates into two non-empty groups"));
    }
    let xs: Vec<usize> = (0..split).collect();
    let ys: Vec<usize> = (split..joint.dim).collect();
    let px = joint.marginal(&xs)?;
    let py = joint.marginal(&ys)?;
    let mut total = 0.0;
    for a in &joint.atoms {
        let mx = px.mass_at(&a.point[..split]);
        let my = py.mass_at(&a.point[split..]);
        total += a.mass * libm::log2(a.mass / (mx * my));
    }
    // Guard against -0.0 and tiny negative rounding for product measures.
    Ok(if total < 0.0 && total > -1e-12 { 0.0 } else { total })
}

/// `I(X; Y)` for a measure on `R^2`.
pub fn mutual_information(joint: &FiniteMeasure) -> Result<f64> {
    if joint.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: joint.dim });
    }
    mutual_information_split(joint, 1)
}

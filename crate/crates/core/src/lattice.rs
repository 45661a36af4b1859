//! Real lattice codebooks built from `Z_p` codes.
//!
//! A code `C ⊆ Z_p^n` becomes the finite codebook `γ(C - (p-1)/2)`, which
//! lives in the fundamental region `S' = γ(Z_p^n - (p-1)/2)`. Its mod-`p`
//! replication `Λ̄` is never built; membership is decided by reducing the
//! grid coordinates mod `p`.

use alloc::vec::Vec;

use crate::codes::{BinIndex, GeneratorNestedCode};
use crate::error::{Error, Result};
use crate::zp::{PrimeModulus, ZpVector};

/// Grid-snapping tolerance, in units of `γ`.
pub const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    gamma: f64,
    p: PrimeModulus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint(pub Vec<f64>);

impl LatticePoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl LatticeParams {
    pub fn new(gamma: f64, p: PrimeModulus) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter("step size must be positive and finite"));
        }
        Ok(LatticeParams { gamma, p })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    /// Real value of the letter `v ∈ Z_p`.
    #[inline]
    pub fn letter(&self, v: u32) -> f64 {
        self.gamma * (f64::from(v) - f64::from(self.p.half()))
    }

    /// The `p` points `γ(Z_p - (p-1)/2)`, in increasing order.
    pub fn alphabet(&self) -> Vec<f64> {
        (0..self.p.get()).map(|v| self.letter(v)).collect()
    }

    pub fn to_point(&self, v: &ZpVector) -> LatticePoint {
        LatticePoint(v.as_slice().iter().map(|&e| self.letter(e)).collect())
    }

    /// Grid coordinate `x/γ + (p-1)/2` rounded to an integer, if `x` is on
    /// the grid.
    fn grid_coordinate(&self, x: f64) -> Option<i64> {
        let w = x / self.gamma + f64::from(self.p.half());
        let r = libm::round(w);
        ((w - r).abs() <= GRID_TOLERANCE && r.abs() < 9.0e15).then_some(r as i64)
    }

    /// Inverse of [`LatticeParams::to_point`] on `S'`.
    pub fn from_point(&self, x: &LatticePoint) -> Result<ZpVector> {
        let p = i64::from(self.p.get());
        let entries = x
            .coords()
            .iter()
            .enumerate()
            .map(|(index, &value)| match self.grid_coordinate(value) {
                Some(w) if (0..p).contains(&w) => Ok(w as u32),
                _ => Err(Error::NotOnGrid { index, value }),
            })
            .collect::<Result<Vec<u32>>>()?;
        ZpVector::new(self.p, entries)
    }

    /// Membership in the mod-`p` lattice `{ x : x/γ + (p-1)/2 ∈ Z^n,
    /// (x/γ + (p-1)/2) mod p ∈ C }` for the code described by `in_code`.
    pub fn mod_member(&self, x: &[f64], in_code: impl FnOnce(&ZpVector) -> bool) -> bool {
        let p = i64::from(self.p.get());
        let mut reduced = Vec::with_capacity(x.len());
        for &value in x {
            match self.grid_coordinate(value) {
                Some(w) => reduced.push(w.rem_euclid(p) as u32),
                None => return false,
            }
        }
        in_code(&ZpVector::new(self.p, reduced).expect("reduced mod p"))
    }

    /// Membership in `Λ(C) + γp Z^n` given the finite codebook `Λ(C)`:
    /// some codeword differs from `x` by an integer multiple of `γp` in
    /// every coordinate.
    pub fn shift_member(&self, x: &[f64], codebook: &[LatticePoint]) -> bool {
        let period = self.gamma * f64::from(self.p.get());
        codebook.iter().any(|c| {
            c.len() == x.len()
                && x.iter().zip(c.coords()).all(|(&xi, &ci)| {
                    let t = (xi - ci) / period;
                    (t - libm::round(t)).abs() <= GRID_TOLERANCE
                })
        })
    }

    /// Grid points `γ(w - (p-1)/2)` with every `w` in
    /// `[-reach·p, (reach+1)·p)`: `S'` plus `reach` periods on each side.
    pub fn window(&self, n: usize, reach: u32) -> Vec<Vec<f64>> {
        let p = i64::from(self.p.get());
        let lo = -i64::from(reach) * p;
        let width = (2 * i64::from(reach) + 1) * p;
        let total = (width as usize).pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = alloc::vec![0.0; n];
                for slot in x.iter_mut().rev() {
                    let w = lo + (idx % width as usize) as i64;
                    idx /= width as usize;
                    *slot = self.gamma * (w as f64 - f64::from(self.p.half()));
                }
                x
            })
            .collect()
    }

    /// `g(a, m) = γ((aG + mΔG + B) - (p-1)/2)`.
    pub fn g_map(&self, code: &GeneratorNestedCode, a: &ZpVector, m: &BinIndex) -> Result<LatticePoint> {
        if code.modulus() != self.p {
            return Err(Error::ModulusMismatch);
        }
        Ok(self.to_point(&code.codeword(a, m)?))
    }
}

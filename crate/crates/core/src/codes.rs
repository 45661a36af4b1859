//! Nested linear code pairs `(C_i, C_o)` over `Z_p`.
//!
//! Two representations are provided. The generator form is
//! `C_o = { aG + mΔG + B }` with the inner code at a fixed `m`, and the
//! parity-check form is `C_o = { u : Hu = c }` with the inner code cut out by
//! the extra constraint `ΔH u = Δc`. In both, the cosets of the inner code
//! inside the outer code are the bins, indexed by `m ∈ Z_p^k`.
//!
//! Bins are never materialised; they are streamed.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::zp::{solve_affine, AffineSolutions, PrimeModulus, ZpMatrix, ZpVector};

/// Block length `n`, bin-index length `k` and inner-code dimension `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeDims {
    pub n: usize,
    pub k: usize,
    pub l: usize,
}

impl CodeDims {
    pub fn new(n: usize, k: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be positive"));
        }
        Ok(CodeDims { n, k, l })
    }
}

/// A message: the index `m ∈ Z_p^k` of a bin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinIndex(ZpVector);

impl BinIndex {
    pub fn new(m: ZpVector) -> Self {
        BinIndex(m)
    }

    pub fn from_index(p: PrimeModulus, k: usize, index: u64) -> Self {
        BinIndex(ZpVector::from_index(p, k, index))
    }

    pub fn zero(p: PrimeModulus, k: usize) -> Self {
        BinIndex(ZpVector::zeros(p, k))
    }

    pub fn vector(&self) -> &ZpVector {
        &self.0
    }

    pub fn index(&self) -> u64 {
        self.0.index()
    }

    pub fn into_vector(self) -> ZpVector {
        self.0
    }
}

/// Generator-form nested code: `G` is `l x n`, `ΔG` is `k x n`, `B ∈ Z_p^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorNestedCode {
    g: ZpMatrix,
    delta_g: ZpMatrix,
    dither: ZpVector,
    dims: CodeDims,
}

impl GeneratorNestedCode {
    pub fn new(g: ZpMatrix, delta_g: ZpMatrix, dither: ZpVector) -> Result<Self> {
        let p = dither.modulus();
        if g.modulus() != p || delta_g.modulus() != p {
            return Err(Error::ModulusMismatch);
        }
        let n = dither.len();
        for m in [&g, &delta_g] {
            if m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.cols() });
            }
        }
        let dims = CodeDims::new(n, delta_g.rows(), g.rows())?;
        Ok(GeneratorNestedCode { g, delta_g, dither, dims })
    }

    /// Draws every entry of `G`, `ΔG` and `B` independently and uniformly,
    /// in that order, row-major.
    pub fn sample<R: Rng + ?Sized>(p: PrimeModulus, dims: CodeDims, rng: &mut R) -> Self {
        let g = random_matrix(p, dims.l, dims.n, rng);
        let delta_g = random_matrix(p, dims.k, dims.n, rng);
        let dither = random_vector(p, dims.n, rng);
        GeneratorNestedCode { g, delta_g, dither, dims }
    }

    pub fn dims(&self) -> CodeDims {
        self.dims
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.dither.modulus()
    }

    pub fn g(&self) -> &ZpMatrix {
        &self.g
    }

    pub fn delta_g(&self) -> &ZpMatrix {
        &self.delta_g
    }

    pub fn dither(&self) -> &ZpVector {
        &self.dither
    }

    /// `aG + mΔG + B`.
    pub fn codeword(&self, a: &ZpVector, m: &BinIndex) -> Result<ZpVector> {
        let mut u = self.bin_offset(m)?;
        u.add_assign_slice(self.g.vec_mat_mul(a)?.as_slice());
        Ok(u)
    }

    /// `mΔG + B`, the codeword of bin `m` at `a = 0`.
    fn bin_offset(&self, m: &BinIndex) -> Result<ZpVector> {
        let mut u = self.delta_g.vec_mat_mul(m.vector())?;
        u.add_assign_slice(self.dither.as_slice());
        Ok(u)
    }

    /// Rank of the stacked matrix `[G; ΔG]`; bins are disjoint and cover
    /// `C_o` exactly when this equals `l + k`.
    pub fn stacked_rank(&self) -> usize {
        self.g.vstack(&self.delta_g).expect("shapes checked at construction").rank()
    }

    /// Streams bin `m`, i.e. `aG + mΔG + B` for `a` in lexicographic order.
    pub fn bin(&self, m: &BinIndex) -> Result<GeneratorBin<'_>> {
        let start = self.bin_offset(m)?;
        Ok(GeneratorBin { code: self, digits: alloc::vec![0; self.dims.l], current: Some(start) })
    }

    /// An equivalent parity-check code: same outer code and same inner code.
    ///
    /// `H` spans the vectors orthogonal to `[G; ΔG]` and `ΔH` completes it
    /// to the vectors orthogonal to `G`. With a full-rank stack, `H` has
    /// `n - l - k` rows and `ΔH` has `k` rows. Bin labels are a bijective
    /// relabelling of the generator-form labels.
    pub fn to_parity(&self) -> ParityNestedCode {
        let p = self.modulus();
        let n = self.dims.n;
        let stacked = self.g.vstack(&self.delta_g).expect("shapes checked at construction");
        let h = stacked.orthogonal_complement();
        let inner = self.g.orthogonal_complement();
        let mut chosen: Vec<u32> = Vec::new();
        let mut acc = h.clone();
        for r in 0..inner.rows() {
            let row = ZpMatrix::new(p, 1, n, inner.row(r).to_vec()).expect("row of a valid matrix");
            let candidate = acc.vstack(&row).expect("same width");
            if candidate.rank() > acc.rank() {
                chosen.extend_from_slice(inner.row(r));
                acc = candidate;
            }
        }
        let delta_h = ZpMatrix::new(p, chosen.len() / n.max(1), n, chosen).expect("rows of width n");
        let c = h.mat_vec_mul(&self.dither).expect("width n");
        let delta_c = delta_h.mat_vec_mul(&self.dither).expect("width n");
        ParityNestedCode::new(h, delta_h, c, delta_c).expect("consistent shapes")
    }
}

/// Streaming cursor over one generator-form bin.
pub struct GeneratorBin<'a> {
    code: &'a GeneratorNestedCode,
    digits: Vec<u32>,
    current: Option<ZpVector>,
}

impl Iterator for GeneratorBin<'_> {
    type Item = ZpVector;

    fn next(&mut self) -> Option<ZpVector> {
        let out = self.current.clone()?;
        let p = self.code.modulus().get();
        let cur = self.current.as_mut().expect("checked above");
        let mut advanced = false;
        for i in (0..self.digits.len()).rev() {
            cur.add_assign_slice(self.code.g.row(i));
            if self.digits[i] + 1 < p {
                self.digits[i] += 1;
                advanced = true;
                break;
            }
            self.digits[i] = 0;
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

/// Where a vector sits relative to a parity-check nested code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inner,
    Outer,
    Neither,
}

/// Parity-check nested code: `H` is `l x n`, `ΔH` is `k x n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityNestedCode {
    h: ZpMatrix,
    delta_h: ZpMatrix,
    c: ZpVector,
    delta_c: ZpVector,
    dims: CodeDims,
}

impl ParityNestedCode {
    pub fn new(h: ZpMatrix, delta_h: ZpMatrix, c: ZpVector, delta_c: ZpVector) -> Result<Self> {
        let p = h.modulus();
        if delta_h.modulus() != p || c.modulus() != p || delta_c.modulus() != p {
            return Err(Error::ModulusMismatch);
        }
        let n = h.cols();
        if delta_h.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: delta_h.cols() });
        }
        if c.len() != h.rows() {
            return Err(Error::DimensionMismatch { expected: h.rows(), found: c.len() });
        }
        if delta_c.len() != delta_h.rows() {
            return Err(Error::DimensionMismatch { expected: delta_h.rows(), found: delta_c.len() });
        }
        let dims = CodeDims::new(n, delta_h.rows(), h.rows())?;
        Ok(ParityNestedCode { h, delta_h, c, delta_c, dims })
    }

    /// Draws `H`, `ΔH`, `c`, `Δc` entrywise uniform, in that order.
    pub fn sample<R: Rng + ?Sized>(p: PrimeModulus, dims: CodeDims, rng: &mut R) -> Self {
        let h = random_matrix(p, dims.l, dims.n, rng);
        let delta_h = random_matrix(p, dims.k, dims.n, rng);
        let c = random_vector(p, dims.l, rng);
        let delta_c = random_vector(p, dims.k, rng);
        ParityNestedCode { h, delta_h, c, delta_c, dims }
    }

    pub fn dims(&self) -> CodeDims {
        self.dims
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.h.modulus()
    }

    pub fn h(&self) -> &ZpMatrix {
        &self.h
    }

    pub fn delta_h(&self) -> &ZpMatrix {
        &self.delta_h
    }

    pub fn c(&self) -> &ZpVector {
        &self.c
    }

    pub fn delta_c(&self) -> &ZpVector {
        &self.delta_c
    }

    pub fn rank_h(&self) -> usize {
        self.h.rank()
    }

    pub fn stacked_rank(&self) -> usize {
        self.h.vstack(&self.delta_h).expect("shapes checked at construction").rank()
    }

    pub fn membership(&self, u: &ZpVector) -> Result<Membership> {
        if self.h.mat_vec_mul(u)? != self.c {
            return Ok(Membership::Neither);
        }
        if self.delta_h.mat_vec_mul(u)? == self.delta_c {
            Ok(Membership::Inner)
        } else {
            Ok(Membership::Outer)
        }
    }

    /// `m = ΔH u` for an outer codeword `u`.
    pub fn bin_index(&self, u: &ZpVector) -> Result<BinIndex> {
        if self.h.mat_vec_mul(u)? != self.c {
            return Err(Error::NotACodeword);
        }
        Ok(BinIndex(self.delta_h.mat_vec_mul(u)?))
    }

    /// Solutions of `Hu = c`, in the solver's deterministic order.
    pub fn outer_code(&self) -> AffineSolutions {
        solve_affine(&self.h, &self.c).expect("shapes checked at construction")
    }

    /// Solutions of `Hu = c, ΔHu = m`.
    pub fn bin(&self, m: &BinIndex) -> Result<AffineSolutions> {
        if m.vector().len() != self.dims.k {
            return Err(Error::DimensionMismatch { expected: self.dims.k, found: m.vector().len() });
        }
        let stacked = self.h.vstack(&self.delta_h)?;
        let mut rhs = self.c.as_slice().to_vec();
        rhs.extend_from_slice(m.vector().as_slice());
        solve_affine(&stacked, &ZpVector::new(self.modulus(), rhs)?)
    }
}

fn random_matrix<R: Rng + ?Sized>(p: PrimeModulus, rows: usize, cols: usize, rng: &mut R) -> ZpMatrix {
    let entries = (0..rows * cols).map(|_| rng.random_range(0..p.get())).collect();
    ZpMatrix::new(p, rows, cols, entries).expect("entries drawn in range")
}

fn random_vector<R: Rng + ?Sized>(p: PrimeModulus, n: usize, rng: &mut R) -> ZpVector {
    ZpVector::new(p, (0..n).map(|_| rng.random_range(0..p.get())).collect()).expect("entries drawn in range")
}

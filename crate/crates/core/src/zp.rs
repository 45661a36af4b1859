//! Exact arithmetic and dense linear algebra over `Z_p` for odd primes `p`.
//!
//! Every entry is stored as its canonical representative in `[0, p)` and all
//! reductions happen eagerly, so equality of vectors and matrices is plain
//! structural equality.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// An odd prime modulus `p < 2^31`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeModulus(u32);

impl PrimeModulus {
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(u64::from(p)) || p >= 1 << 31 {
            return Err(Error::NotOddPrime(u64::from(p)));
        }
        Ok(PrimeModulus(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// `(p - 1) / 2`, the shift that centres `Z_p` on the origin.
    #[inline]
    pub fn half(self) -> u32 {
        (self.0 - 1) / 2
    }

    #[inline]
    pub fn reduce(self, x: u64) -> u32 {
        (x % u64::from(self.0)) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        self.reduce(u64::from(a) * u64::from(b))
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a non-zero element.
    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(a != 0 && a < self.0);
        self.pow(a, u64::from(self.0) - 2)
    }

    /// `p^e` as an exact integer, `None` on overflow.
    pub fn checked_pow(self, e: usize) -> Option<u64> {
        let mut acc: u64 = 1;
        for _ in 0..e {
            acc = acc.checked_mul(u64::from(self.0))?;
        }
        Some(acc)
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic primality test (trial division; adequate for `n < 2^62`
/// at the sizes used here).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Least prime strictly greater than `x`. Requires `x >= 2`, so the result
/// is always odd.
pub fn smallest_prime_above(x: u64) -> Result<PrimeModulus> {
    if x < 2 {
        return Err(Error::InvalidParameter("smallest_prime_above requires x >= 2"));
    }
    let mut c = x + 1;
    while !is_prime(c) {
        c += 1;
    }
    u32::try_from(c)
        .map_err(|_| Error::NotOddPrime(c))
        .and_then(PrimeModulus::new)
}

/// A vector in `Z_p^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZpVector {
    p: PrimeModulus,
    entries: Vec<u32>,
}

impl ZpVector {
    pub fn zeros(p: PrimeModulus, n: usize) -> Self {
        ZpVector { p, entries: vec![0; n] }
    }

    /// Builds a vector, reducing every entry mod `p`.
    pub fn from_reduced(p: PrimeModulus, entries: impl IntoIterator<Item = u64>) -> Self {
        ZpVector {
            p,
            entries: entries.into_iter().map(|e| p.reduce(e)).collect(),
        }
    }

    /// Builds a vector from entries that must already lie in `[0, p)`.
    pub fn new(p: PrimeModulus, entries: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&e| e >= p.get()) {
            return Err(Error::EntryOutOfRange { entry: u64::from(bad), p: p.get() });
        }
        Ok(ZpVector { p, entries })
    }

    /// The `index`-th vector of `Z_p^n` in lexicographic order (last
    /// coordinate varies fastest).
    pub fn from_index(p: PrimeModulus, n: usize, mut index: u64) -> Self {
        let q = u64::from(p.get());
        let mut entries = vec![0; n];
        for e in entries.iter_mut().rev() {
            *e = (index % q) as u32;
            index /= q;
        }
        ZpVector { p, entries }
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u32> {
        self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Lexicographic rank of this vector, inverse of [`ZpVector::from_index`].
    pub fn index(&self) -> u64 {
        let q = u64::from(self.p.get());
        self.entries.iter().fold(0, |acc, &e| acc * q + u64::from(e))
    }

    fn check_same(&self, other: &ZpVector) -> Result<()> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch);
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(())
    }

    pub fn add(&self, other: &ZpVector) -> Result<ZpVector> {
        self.check_same(other)?;
        let p = self.p;
        Ok(ZpVector {
            p,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| p.add(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &ZpVector) -> Result<ZpVector> {
        self.check_same(other)?;
        let p = self.p;
        Ok(ZpVector {
            p,
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| p.sub(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: u32) -> ZpVector {
        let p = self.p;
        let c = p.reduce(u64::from(c));
        ZpVector { p, entries: self.entries.iter().map(|&a| p.mul(a, c)).collect() }
    }

    /// `self += c * other`, in place.
    pub(crate) fn add_scaled_assign(&mut self, other: &[u32], c: u32) {
        let p = self.p;
        for (a, &b) in self.entries.iter_mut().zip(other) {
            *a = p.add(*a, p.mul(b, c));
        }
    }

    pub(crate) fn add_assign_slice(&mut self, other: &[u32]) {
        let p = self.p;
        for (a, &b) in self.entries.iter_mut().zip(other) {
            *a = p.add(*a, b);
        }
    }

    pub fn dot(&self, other: &ZpVector) -> Result<u32> {
        self.check_same(other)?;
        Ok(dot(self.p, &self.entries, &other.entries))
    }
}

impl fmt::Display for ZpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

#[inline]
fn dot(p: PrimeModulus, a: &[u32], b: &[u32]) -> u32 {
    // acc < p < 2^31 and each product < 2^62, so the sum fits in u64.
    let q = u64::from(p.get());
    a.iter().zip(b).fold(0u64, |acc, (&x, &y)| (acc + u64::from(x) * u64::from(y)) % q) as u32
}

/// A dense `rows x cols` matrix over `Z_p`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZpMatrix {
    p: PrimeModulus,
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl ZpMatrix {
    pub fn zeros(p: PrimeModulus, rows: usize, cols: usize) -> Self {
        ZpMatrix { p, rows, cols, entries: vec![0; rows * cols] }
    }

    pub fn identity(p: PrimeModulus, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major entries in `[0, p)`.
    pub fn new(p: PrimeModulus, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: entries.len() });
        }
        if let Some(&bad) = entries.iter().find(|&&e| e >= p.get()) {
            return Err(Error::EntryOutOfRange { entry: u64::from(bad), p: p.get() });
        }
        Ok(ZpMatrix { p, rows, cols, entries })
    }

    pub fn from_rows(p: PrimeModulus, rows: &[&[u64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
        }
        let entries = rows.iter().flat_map(|r| r.iter().map(|&e| p.reduce(e))).collect();
        Ok(ZpMatrix { p, rows: rows.len(), cols, entries })
    }

    /// The `index`-th `rows x cols` matrix in lexicographic order of its
    /// row-major entries.
    pub fn from_index(p: PrimeModulus, rows: usize, cols: usize, index: u64) -> Self {
        let v = ZpVector::from_index(p, rows * cols, index);
        ZpMatrix { p, rows, cols, entries: v.into_entries() }
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.entries
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &ZpMatrix) -> Result<ZpMatrix> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch);
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.cols });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(ZpMatrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, entries })
    }

    /// Row vector times matrix: `u G`.
    pub fn vec_mat_mul(&self, u: &ZpVector) -> Result<ZpVector> {
        if u.p != self.p {
            return Err(Error::ModulusMismatch);
        }
        if u.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: u.len() });
        }
        let mut out = ZpVector::zeros(self.p, self.cols);
        for (i, &c) in u.entries.iter().enumerate() {
            if c != 0 {
                out.add_scaled_assign(self.row(i), c);
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `H u`.
    pub fn mat_vec_mul(&self, u: &ZpVector) -> Result<ZpVector> {
        if u.p != self.p {
            return Err(Error::ModulusMismatch);
        }
        if u.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: u.len() });
        }
        let entries = (0..self.rows).map(|r| dot(self.p, self.row(r), &u.entries)).collect();
        Ok(ZpVector { p: self.p, entries })
    }

    /// Rank over `Z_p` by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.row_reduce(self.cols).len()
    }

    /// In-place reduced row echelon form restricted to the first
    /// `pivot_cols` columns. Returns the pivot column of each non-zero row.
    fn row_reduce(&mut self, pivot_cols: usize) -> Vec<usize> {
        let p = self.p;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..pivot_cols {
            if r == self.rows {
                break;
            }
            let Some(sel) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if sel != r {
                for j in 0..cols {
                    self.entries.swap(sel * cols + j, r * cols + j);
                }
            }
            let inv = p.inv(self.get(r, c));
            for j in 0..cols {
                let e = &mut self.entries[r * cols + j];
                *e = p.mul(*e, inv);
            }
            for i in 0..self.rows {
                let f = self.get(i, c);
                if i == r || f == 0 {
                    continue;
                }
                for j in 0..cols {
                    let sub = p.mul(f, self.entries[r * cols + j]);
                    let e = &mut self.entries[i * cols + j];
                    *e = p.sub(*e, sub);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// A basis (as rows) of `{ x : x self^T = 0 }`, i.e. of the vectors
    /// orthogonal to every row of `self`. The returned matrix has
    /// `cols - rank` rows.
    pub fn orthogonal_complement(&self) -> ZpMatrix {
        let zero = ZpVector::zeros(self.p, self.rows);
        let sol = solve_affine(self, &zero).expect("dimensions agree by construction");
        let basis = sol.kernel_basis();
        let mut entries = Vec::with_capacity(basis.len() * self.cols);
        for b in basis {
            entries.extend_from_slice(b.as_slice());
        }
        ZpMatrix { p: self.p, rows: basis.len(), cols: self.cols, entries }
    }
}

impl fmt::Display for ZpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str(";")?;
            }
            for (j, e) in self.row(r).iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
        }
        f.write_str("]")
    }
}

/// The solution set of `H u = c` in parametric form: a particular solution
/// plus the span of a kernel basis.
#[derive(Clone, Debug)]
pub struct AffineSolutions {
    p: PrimeModulus,
    particular: Option<ZpVector>,
    kernel: Vec<ZpVector>,
    rank: usize,
}

/// Solves `H u = c` over `Z_p`.
///
/// The solution set is enumerated as `particular + sum_i t_i k_i` with the
/// coefficient tuple `t` running through `Z_p^{n-rank}` in lexicographic
/// order. The particular solution sets every free variable to zero and
/// `k_i` sets the `i`-th free variable to one.
pub fn solve_affine(h: &ZpMatrix, c: &ZpVector) -> Result<AffineSolutions> {
    if h.p != c.p {
        return Err(Error::ModulusMismatch);
    }
    if h.rows != c.len() {
        return Err(Error::DimensionMismatch { expected: h.rows, found: c.len() });
    }
    let p = h.p;
    let n = h.cols;
    // Augmented matrix [H | c].
    let mut aug = ZpMatrix::zeros(p, h.rows, n + 1);
    for r in 0..h.rows {
        aug.entries[r * (n + 1)..r * (n + 1) + n].copy_from_slice(h.row(r));
        aug.entries[r * (n + 1) + n] = c.entries[r];
    }
    let pivots = aug.row_reduce(n);
    let rank = pivots.len();
    let consistent = (rank..h.rows).all(|r| aug.get(r, n) == 0);

    let mut is_pivot = vec![false; n];
    for &pc in &pivots {
        is_pivot[pc] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();

    let kernel = free
        .iter()
        .map(|&fj| {
            let mut v = ZpVector::zeros(p, n);
            v.entries[fj] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v.entries[pc] = p.neg(aug.get(r, fj));
            }
            v
        })
        .collect();

    let particular = consistent.then(|| {
        let mut v = ZpVector::zeros(p, n);
        for (r, &pc) in pivots.iter().enumerate() {
            v.entries[pc] = aug.get(r, n);
        }
        v
    });

    Ok(AffineSolutions { p, particular, kernel, rank })
}

impl AffineSolutions {
    pub fn is_consistent(&self) -> bool {
        self.particular.is_some()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn particular(&self) -> Option<&ZpVector> {
        self.particular.as_ref()
    }

    pub fn kernel_basis(&self) -> &[ZpVector] {
        &self.kernel
    }

    /// Number of solutions, `None` if it overflows `u64`.
    pub fn count(&self) -> Option<u64> {
        if self.is_consistent() {
            self.p.checked_pow(self.kernel.len())
        } else {
            Some(0)
        }
    }

    pub fn iter(&self) -> AffineIter<'_> {
        AffineIter {
            sol: self,
            digits: vec![0; self.kernel.len()],
            current: self.particular.clone(),
        }
    }
}

impl<'a> IntoIterator for &'a AffineSolutions {
    type Item = ZpVector;
    type IntoIter = AffineIter<'a>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// Odometer over the coefficient tuples of an [`AffineSolutions`].
pub struct AffineIter<'a> {
    sol: &'a AffineSolutions,
    digits: Vec<u32>,
    current: Option<ZpVector>,
}

impl Iterator for AffineIter<'_> {
    type Item = ZpVector;

    fn next(&mut self) -> Option<ZpVector> {
        let out = self.current.clone()?;
        let p = self.sol.p.get();
        let mut advanced = false;
        let cur = self.current.as_mut().expect("checked above");
        for i in (0..self.digits.len()).rev() {
            // Bumping a digit adds its basis vector once; rolling it over
            // from p-1 to 0 also adds it once, because p copies vanish.
            cur.add_assign_slice(self.sol.kernel[i].as_slice());
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

/// Odometer over `Z_p^len` in lexicographic order, yielding slices.
#[derive(Clone, Debug)]
pub struct Lexicographic {
    p: u32,
    digits: Vec<u32>,
    started: bool,
    done: bool,
}

impl Lexicographic {
    pub fn new(p: PrimeModulus, len: usize) -> Self {
        Lexicographic { p: p.get(), digits: vec![0; len], started: false, done: false }
    }

    /// Advances to the next tuple and returns it, or `None` when exhausted.
    pub fn advance(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.digits);
        }
        for i in (0..self.digits.len()).rev() {
            if self.digits[i] + 1 < self.p {
                self.digits[i] += 1;
                return Some(&self.digits);
            }
            self.digits[i] = 0;
        }
        self.done = true;
        None
    }
}

//! Exhaustive and Monte Carlo checks of the ensemble lemmas.
//!
//! Exhaustive checks count exactly over every parameter draw and report an
//! exact match only when every count equals its predicted value. Requests
//! beyond [`ENUMERATION_BUDGET`] draws fail instead of sampling.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codes::{BinIndex, CodeDims, GeneratorNestedCode};
use crate::error::{Error, Result};
use crate::gp::GpScheme;
use crate::measures::{is_typical, FiniteMeasure, GridTypicality};
use crate::rng::trial_stream;
use crate::stats::{sample_index, wilson_interval, Moments, Z95};
use crate::zp::{Lexicographic, PrimeModulus, ZpMatrix};

/// Largest number of parameter draws an exhaustive check may enumerate.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ExactMatch,
    WithinTolerance,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ExactMatch => "exact-match",
            Verdict::WithinTolerance => "within-tolerance",
            Verdict::Fail => "fail",
        }
    }

    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `observed == expected`, or within `tolerance` when it is positive.
    Equal,
    /// `observed <= expected`.
    AtMost,
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Closed form stated by the lemma.
    Lemma,
    /// Closed form derived independently of the lemma.
    Derived,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Lemma => "lemma",
            Provenance::Derived => "derived",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub relation: Relation,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
}

impl Check {
    fn exact(label: String, expected: f64, observed: f64) -> Self {
        Check { label, relation: Relation::Equal, expected, observed, tolerance: 0.0, provenance: Provenance::Lemma }
    }

    fn verdict(&self) -> Verdict {
        match self.relation {
            Relation::AtMost if self.observed <= self.expected => Verdict::ExactMatch,
            Relation::Equal if self.observed == self.expected => Verdict::ExactMatch,
            Relation::Equal if (self.observed - self.expected).abs() <= self.tolerance => Verdict::WithinTolerance,
            _ => Verdict::Fail,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    GUniform,
    SameBinIndependence,
    CrossBinIndependence,
    ParityUniformIndependent,
    RankDistribution,
    RankSampling,
}

impl Lemma {
    pub fn id(self) -> &'static str {
        match self {
            Lemma::GUniform => "g-uniform",
            Lemma::SameBinIndependence => "pairwise-same-m",
            Lemma::CrossBinIndependence => "pairwise-diff-m",
            Lemma::ParityUniformIndependent => "parity-uniform-independent",
            Lemma::RankDistribution => "rank-distribution",
            Lemma::RankSampling => "rank-sampling",
        }
    }
}

/// Outcome of one lemma check on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub p: u32,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    /// Parameter draws enumerated or sampled.
    pub draws: u64,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl LemmaReport {
    fn new(lemma: Lemma, p: PrimeModulus, dims: (usize, usize, usize), draws: u64, checks: Vec<Check>) -> Self {
        let verdict = checks.iter().map(Check::verdict).fold(Verdict::ExactMatch, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::WithinTolerance, _) | (_, Verdict::WithinTolerance) => Verdict::WithinTolerance,
            _ => Verdict::ExactMatch,
        });
        LemmaReport { lemma, p: p.get(), n: dims.0, k: dims.1, l: dims.2, draws, checks, verdict }
    }

    /// Checks whose own verdict is a failure.
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict() == Verdict::Fail)
    }
}

fn budgeted(p: PrimeModulus, exponent: usize) -> Result<u64> {
    match p.checked_pow(exponent) {
        Some(c) if c <= ENUMERATION_BUDGET => Ok(c),
        other => Err(Error::InstanceTooLarge {
            configurations: other.map_or(u128::MAX, u128::from),
            budget: ENUMERATION_BUDGET,
        }),
    }
}

fn all_vectors(p: PrimeModulus, len: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut it = Lexicographic::new(p, len);
    while let Some(v) = it.advance() {
        out.push(v.to_vec());
    }
    out
}

/// Flat indices of `aG + mΔG + B` for every `(a, m)`, `a` major, with the
/// parameters packed as `[G | ΔG | B]` row-major.
fn codeword_indices(p: PrimeModulus, dims: CodeDims, params: &[u32], pairs: &[(Vec<u32>, Vec<u32>)], out: &mut Vec<usize>) {
    let (n, k, l) = (dims.n, dims.k, dims.l);
    let g = &params[..l * n];
    let dg = &params[l * n..(l + k) * n];
    let b = &params[(l + k) * n..];
    let q = u64::from(p.get());
    out.clear();
    for (a, m) in pairs {
        let mut idx = 0usize;
        for j in 0..n {
            let mut v = u64::from(b[j]);
            for (r, &ar) in a.iter().enumerate() {
                v += u64::from(ar) * u64::from(g[r * n + j]);
            }
            for (r, &mr) in m.iter().enumerate() {
                v += u64::from(mr) * u64::from(dg[r * n + j]);
            }
            idx = idx * p.get() as usize + (v % q) as usize;
        }
        out.push(idx);
    }
}

fn ag_pairs(p: PrimeModulus, dims: CodeDims) -> Vec<(Vec<u32>, Vec<u32>)> {
    let a_all = all_vectors(p, dims.l);
    let m_all = all_vectors(p, dims.k);
    a_all.iter().flat_map(|a| m_all.iter().map(move |m| (a.clone(), m.clone()))).collect()
}

/// Exhaustive count of `u = aG + mΔG + B` over every `(G, ΔG, B)` for each
/// `(a, m)`; `dithered = false` pins `B = 0`.
fn g_counts(p: PrimeModulus, dims: CodeDims, dithered: bool) -> Result<(u64, Vec<Vec<u64>>, Vec<(Vec<u32>, Vec<u32>)>)> {
    let (n, k, l) = (dims.n, dims.k, dims.l);
    let free = n * (l + k) + if dithered { n } else { 0 };
    let draws = budgeted(p, n * (l + k + 1))?.min(budgeted(p, free)?);
    let pairs = ag_pairs(p, dims);
    let cells = p.checked_pow(n).expect("bounded by the budget") as usize;
    let mut counts = vec![vec![0u64; cells]; pairs.len()];
    let mut params = vec![0u32; n * (l + k + 1)];
    let mut idx = Vec::with_capacity(pairs.len());
    let mut it = Lexicographic::new(p, free);
    while let Some(v) = it.advance() {
        params[..free].copy_from_slice(v);
        codeword_indices(p, dims, &params, &pairs, &mut idx);
        for (row, &u) in counts.iter_mut().zip(&idx) {
            row[u] += 1;
        }
    }
    Ok((draws, counts, pairs))
}

fn label(a: &[u32], m: &[u32]) -> String {
    format!("a={a:?} m={m:?}")
}

/// Every `g(a, m)` is uniform on `S'` over the ensemble.
pub fn verify_g_uniform(p: PrimeModulus, n: usize, k: usize, l: usize) -> Result<LemmaReport> {
    g_uniform(p, CodeDims::new(n, k, l)?, true)
}

/// The same count with the dither pinned to zero, which leaves the ensemble:
/// `g(0, 0)` is then always the centre point.
pub fn verify_g_uniform_undithered(p: PrimeModulus, n: usize, k: usize, l: usize) -> Result<LemmaReport> {
    g_uniform(p, CodeDims::new(n, k, l)?, false)
}

fn g_uniform(p: PrimeModulus, dims: CodeDims, dithered: bool) -> Result<LemmaReport> {
    let (draws, counts, pairs) = g_counts(p, dims, dithered)?;
    let cells = counts.first().map_or(1, Vec::len) as u64;
    let expected = draws as f64 / cells as f64;
    let checks = counts
        .iter()
        .zip(&pairs)
        .flat_map(|(row, (a, m))| {
            row.iter().enumerate().map(move |(u, &c)| Check::exact(format!("{} u={u}", label(a, m)), expected, c as f64))
        })
        .collect();
    Ok(LemmaReport::new(Lemma::GUniform, p, (dims.n, dims.k, dims.l), draws, checks))
}

/// Which pairs of codeword positions to test for independence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairCase {
    /// `(a, m)` and `(ã, m)` with `a != ã`.
    SameMDiffA,
    /// `(a, m)` and `(ã, m̃)` with `m != m̃`, any `a, ã`.
    DiffM,
}

/// Joint counts of `(g(a, m), g(ã, m̃))` over the whole ensemble for one
/// pair of positions, as a `p^n x p^n` table flattened row-major.
pub fn pair_counts(p: PrimeModulus, dims: CodeDims, first: (&[u32], &[u32]), second: (&[u32], &[u32])) -> Result<Vec<u64>> {
    let n = dims.n;
    let draws_exp = n * (dims.l + dims.k + 1);
    budgeted(p, draws_exp)?;
    let pairs = vec![(first.0.to_vec(), first.1.to_vec()), (second.0.to_vec(), second.1.to_vec())];
    if pairs.iter().any(|(a, m)| a.len() != dims.l || m.len() != dims.k) {
        return Err(Error::DimensionMismatch { expected: dims.l, found: first.0.len() });
    }
    let cells = p.checked_pow(n).expect("bounded by the budget") as usize;
    let mut table = vec![0u64; cells * cells];
    let mut idx = Vec::with_capacity(2);
    let mut it = Lexicographic::new(p, draws_exp);
    while let Some(params) = it.advance() {
        codeword_indices(p, dims, params, &pairs, &mut idx);
        table[idx[0] * cells + idx[1]] += 1;
    }
    Ok(table)
}

/// Pairwise independence of codewords over the ensemble, for every pair of
/// positions in the chosen case.
pub fn verify_pairwise_independence(p: PrimeModulus, n: usize, k: usize, l: usize, case: PairCase) -> Result<LemmaReport> {
    let dims = CodeDims::new(n, k, l)?;
    let draws = budgeted(p, n * (l + k + 1))?;
    let pairs = ag_pairs(p, dims);
    let selected: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|i| (0..pairs.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let ((a, m), (b, mm)) = (&pairs[i], &pairs[j]);
            match case {
                PairCase::SameMDiffA => m == mm && a != b,
                PairCase::DiffM => m != mm,
            }
        })
        .collect();
    let cells = p.checked_pow(n).expect("bounded by the budget") as usize;
    let mut tables = vec![vec![0u64; cells * cells]; selected.len()];
    let mut idx = Vec::with_capacity(pairs.len());
    let mut it = Lexicographic::new(p, n * (l + k + 1));
    while let Some(params) = it.advance() {
        codeword_indices(p, dims, params, &pairs, &mut idx);
        for (table, &(i, j)) in tables.iter_mut().zip(&selected) {
            table[idx[i] * cells + idx[j]] += 1;
        }
    }
    let expected = draws as f64 / (cells * cells) as f64;
    let mut checks = Vec::new();
    for (table, &(i, j)) in tables.iter().zip(&selected) {
        let name = format!("{} / {}", label(&pairs[i].0, &pairs[i].1), label(&pairs[j].0, &pairs[j].1));
        for (cell, &c) in table.iter().enumerate() {
            checks.push(Check::exact(format!("{name} cell={cell}"), expected, c as f64));
        }
    }
    let lemma = match case {
        PairCase::SameMDiffA => Lemma::SameBinIndependence,
        PairCase::DiffM => Lemma::CrossBinIndependence,
    };
    Ok(LemmaReport::new(lemma, p, (n, k, l), draws, checks))
}

/// Over every `(H, c)` with `H` of size `l x n`: each point lies on the
/// outer code with probability `p^-l`, and each pair of distinct points
/// with probability `p^-2l`.
pub fn verify_parity_uniform_independent(p: PrimeModulus, n: usize, l: usize) -> Result<LemmaReport> {
    let draws = budgeted(p, n * l + l)?;
    let points = all_vectors(p, n);
    let mut single = vec![0u64; points.len()];
    let mut pair = vec![0u64; points.len() * points.len()];
    let mut member = vec![false; points.len()];
    let q = u64::from(p.get());
    let mut it = Lexicographic::new(p, n * l + l);
    while let Some(params) = it.advance() {
        let (h, c) = params.split_at(n * l);
        for (slot, u) in member.iter_mut().zip(&points) {
            *slot = (0..l).all(|r| {
                let dot: u64 = (0..n).map(|j| u64::from(h[r * n + j]) * u64::from(u[j])).sum();
                dot % q == u64::from(c[r])
            });
        }
        for i in 0..points.len() {
            if !member[i] {
                continue;
            }
            single[i] += 1;
            for j in 0..points.len() {
                if member[j] {
                    pair[i * points.len() + j] += 1;
                }
            }
        }
    }
    let pl = p.checked_pow(l).expect("bounded by the budget");
    let mut checks = Vec::new();
    for (i, &c) in single.iter().enumerate() {
        checks.push(Check::exact(format!("u={:?}", points[i]), (draws / pl) as f64, c as f64));
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let c = pair[i * points.len() + j];
            checks.push(Check::exact(format!("u={:?} v={:?}", points[i], points[j]), (draws / (pl * pl)) as f64, c as f64));
        }
    }
    Ok(LemmaReport::new(Lemma::ParityUniformIndependent, p, (n, 0, l), draws, checks))
}

/// Number of `l x n` matrices over `Z_p` of rank `r`:
/// `Π_{i<r} (p^n - p^i)(p^l - p^i) / (p^r - p^i)`.
pub fn rank_count(p: PrimeModulus, n: usize, l: usize, r: usize) -> u128 {
    if r > n.min(l) {
        return 0;
    }
    let q = u128::from(p.get());
    let pow = |e: usize| q.pow(e as u32);
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..r {
        num *= (pow(n) - pow(i)) * (pow(l) - pow(i));
        den *= pow(r) - pow(i);
    }
    num / den
}

/// The full-rank probability `(p^n - 1)(p^n - p)...(p^n - p^{l-1}) / p^{nl}`
/// as an exact fraction `(numerator, denominator)`.
pub fn full_rank_fraction(p: PrimeModulus, n: usize, l: usize) -> (u128, u128) {
    let q = u128::from(p.get());
    let pn = q.pow(n as u32);
    let num = (0..l).map(|i| pn.saturating_sub(q.pow(i as u32))).product();
    (num, q.pow((n * l) as u32))
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact rank census over every `l x n` matrix: the full-rank frequency
/// against the product formula, and each deficient rank `i` against the
/// bound `C(l, i) p^{i(l-i)} / p^{n(l-i)}`.
pub fn verify_rank_distribution(p: PrimeModulus, n: usize, l: usize) -> Result<LemmaReport> {
    let draws = budgeted(p, n * l)?;
    let mut census = vec![0u64; l + 1];
    let mut it = Lexicographic::new(p, n * l);
    while let Some(entries) = it.advance() {
        let h = ZpMatrix::new(p, l, n, entries.to_vec()).expect("entries in range");
        census[h.rank()] += 1;
    }
    let total = draws as f64;
    let (num, den) = full_rank_fraction(p, n, l);
    let mut checks = vec![Check::exact(
        String::from("P(rank = l)"),
        (num as f64) / (den as f64),
        census[l] as f64 / total,
    )];
    // Same comparison in integers, so the verdict does not rest on rounding.
    checks.push(Check::exact(String::from("count(rank = l) * p^{nl} - numerator"), 0.0, {
        let lhs = u128::from(census[l]) * den;
        let rhs = num * u128::from(draws);
        if lhs >= rhs { (lhs - rhs) as f64 } else { -((rhs - lhs) as f64) }
    }));
    let q = u128::from(p.get());
    for i in 0..l {
        let bound_num = binomial(l, i) * q.pow((i * (l - i)) as u32);
        let bound_den = q.pow((n * (l - i)) as u32);
        // count / p^{nl} <= bound_num / bound_den, cross-multiplied.
        let holds = u128::from(census[i]) * bound_den <= bound_num * u128::from(draws);
        checks.push(Check {
            label: format!("P(rank = {i}) <= C(l,{i}) p^{{{i}(l-{i})}} / p^{{n(l-{i})}}"),
            relation: Relation::AtMost,
            expected: bound_num as f64 / bound_den as f64,
            observed: if holds { census[i] as f64 / total } else { f64::INFINITY },
            tolerance: 0.0,
            provenance: Provenance::Lemma,
        });
        checks.push(Check {
            label: format!("count(rank = {i})"),
            relation: Relation::Equal,
            expected: rank_count(p, n, l, i) as f64,
            observed: census[i] as f64,
            tolerance: 0.0,
            provenance: Provenance::Derived,
        });
    }
    Ok(LemmaReport::new(Lemma::RankDistribution, p, (n, 0, l), draws, checks))
}

/// Rank frequencies of `samples` uniformly drawn `l x n` matrices against
/// the exact distribution, each within `sigmas` binomial standard errors.
pub fn sample_rank_distribution(p: PrimeModulus, n: usize, l: usize, samples: u64, sigmas: f64, seed: u64) -> Result<LemmaReport> {
    let mut rng = trial_stream(seed, 0);
    let mut census = vec![0u64; l + 1];
    for _ in 0..samples {
        let entries = (0..n * l).map(|_| rng.random_range(0..p.get())).collect();
        census[ZpMatrix::new(p, l, n, entries)?.rank()] += 1;
    }
    let total = u128::from(p.get()).pow((n * l) as u32) as f64;
    let checks = census
        .iter()
        .enumerate()
        .map(|(r, &c)| {
            let prob = rank_count(p, n, l, r) as f64 / total;
            let se = libm::sqrt(prob * (1.0 - prob) / samples as f64);
            Check {
                label: format!("P(rank = {r})"),
                relation: Relation::Equal,
                expected: prob,
                observed: c as f64 / samples as f64,
                tolerance: sigmas * se,
                provenance: Provenance::Derived,
            }
        })
        .collect();
    Ok(LemmaReport::new(Lemma::RankSampling, p, (n, 0, l), samples, checks))
}

/// A `(P_XY, P_Z)` pair for exponent estimation: `X` is replaced by an
/// i.i.d. `P_Z` sequence and tested for joint typicality with a typical `y`.
#[derive(Clone, Debug)]
pub struct ExponentSetup {
    joint: FiniteMeasure,
    reference: FiniteMeasure,
    marginal_y: FiniteMeasure,
    x_letters: Vec<f64>,
    y_letters: Vec<f64>,
    z_law: Vec<f64>,
    y_law: Vec<f64>,
    eps: f64,
}

/// Samples per independent random stream in exponent estimation. Fixed so
/// that results do not depend on how chunks are spread over workers.
pub const EXPONENT_CHUNK: u64 = 1 << 16;

impl ExponentSetup {
    /// `joint` lives on `R^2` with coordinates `(x, y)`; `reference` is
    /// `P_Z` on `R`.
    pub fn new(joint: &FiniteMeasure, reference: &FiniteMeasure, eps: f64) -> Result<Self> {
        if joint.dim() != 2 || reference.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 2, found: joint.dim() });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive"));
        }
        let marginal_x = joint.marginal(&[0])?;
        let marginal_y = joint.marginal(&[1])?;
        let mut x_letters: Vec<f64> =
            marginal_x.atoms().iter().chain(reference.atoms()).map(|a| a.point[0]).collect();
        x_letters.sort_by(f64::total_cmp);
        x_letters.dedup();
        let y_letters: Vec<f64> = marginal_y.atoms().iter().map(|a| a.point[0]).collect();
        let z_law = x_letters.iter().map(|&x| reference.mass_at(&[x])).collect();
        let y_law = marginal_y.atoms().iter().map(|a| a.mass).collect();
        Ok(ExponentSetup {
            joint: joint.clone(),
            reference: reference.clone(),
            marginal_y,
            x_letters,
            y_letters,
            z_law,
            y_law,
            eps,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `D(P_XY || P_Z P_Y)` in bits.
    pub fn divergence(&self) -> Result<f64> {
        crate::measures::kl_divergence(&self.joint, &self.reference.product(&self.marginal_y))
    }

    /// A `P_Y`-typical `y` of length `n` (letter indices), by rejection from
    /// i.i.d. draws. Gives up after `max_tries`.
    pub fn typical_y<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, max_tries: u32) -> Result<Vec<usize>> {
        for _ in 0..max_tries {
            let y: Vec<usize> = (0..n).map(|_| sample_index(rng, &self.y_law)).collect();
            let values: Vec<f64> = y.iter().map(|&i| self.y_letters[i]).collect();
            if is_typical(&values, &self.marginal_y, self.eps)? {
                return Ok(y);
            }
        }
        Err(Error::InvalidParameter("no typical sequence found; eps too small for this n"))
    }

    /// A fresh typicality cache for `(z, y)` pairs.
    pub fn typicality(&self) -> Result<GridTypicality> {
        GridTypicality::new(&self.joint, &[self.x_letters.clone(), self.y_letters.clone()], self.eps)
    }

    /// Hits among the `len` samples starting at `start`, drawn from the
    /// streams `(seed, n, chunk)` in chunks of [`EXPONENT_CHUNK`].
    pub fn count_hits(&self, cache: &mut GridTypicality, y: &[usize], seed: u64, start: u64, len: u64) -> u64 {
        let n = y.len();
        let width = self.y_letters.len();
        let mut hits = 0;
        let mut z = vec![0usize; n];
        let end = start + len;
        let mut pos = start;
        while pos < end {
            let chunk = pos / EXPONENT_CHUNK;
            let chunk_end = ((chunk + 1) * EXPONENT_CHUNK).min(end);
            let mut rng = trial_stream(seed, exponent_stream(n, chunk));
            // Skip ahead within the chunk so any split gives the same draws.
            for _ in chunk * EXPONENT_CHUNK..pos {
                for _ in 0..n {
                    sample_index(&mut rng, &self.z_law);
                }
            }
            for _ in pos..chunk_end {
                for zi in z.iter_mut() {
                    *zi = sample_index(&mut rng, &self.z_law);
                }
                if cache.cells(z.iter().zip(y).map(|(&a, &b)| a * width + b), n) {
                    hits += 1;
                }
            }
            pos = chunk_end;
        }
        hits
    }
}

/// Stream id for exponent chunk `chunk` at block length `n`; the typical `y`
/// for `n` uses chunk id `u32::MAX`.
fn exponent_stream(n: usize, chunk: u64) -> u64 {
    ((n as u64) << 32) | (chunk & 0xffff_ffff)
}

/// One row of an exponent table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentRow {
    pub n: usize,
    pub samples: u64,
    pub hits: u64,
    /// `-(1/n) log2 P̂`; for zero hits, the bound from the upper Wilson limit.
    pub exponent: f64,
    /// Exponents at the upper and lower Wilson limits of `P̂`.
    pub exponent_low: f64,
    pub exponent_high: f64,
    pub lower_bound_only: bool,
}

impl ExponentRow {
    pub fn from_hits(n: usize, samples: u64, hits: u64) -> Self {
        let (lo, hi) = wilson_interval(hits, samples, Z95);
        let e = |prob: f64| -libm::log2(prob) / n as f64;
        let lower_bound_only = hits == 0;
        ExponentRow {
            n,
            samples,
            hits,
            exponent: if lower_bound_only { e(hi) } else { e(hits as f64 / samples as f64) },
            exponent_low: e(hi),
            exponent_high: if lo > 0.0 { e(lo) } else { f64::INFINITY },
            lower_bound_only,
        }
    }
}

/// The typical `y` used for block length `n`.
pub fn exponent_y(setup: &ExponentSetup, n: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = trial_stream(seed, exponent_stream(n, u64::from(u32::MAX)));
    setup.typical_y(&mut rng, n, 1_000_000)
}

/// Monte Carlo estimate of `-(1/n) log2 P((Z^n, y) typical)` for each `n`.
pub fn estimate_typicality_exponent(setup: &ExponentSetup, n_grid: &[usize], samples: u64, seed: u64) -> Result<Vec<ExponentRow>> {
    let mut cache = setup.typicality()?;
    n_grid
        .iter()
        .map(|&n| {
            let y = exponent_y(setup, n, seed)?;
            let hits = setup.count_hits(&mut cache, &y, seed, 0, samples);
            Ok(ExponentRow::from_hits(n, samples, hits))
        })
        .collect()
}

/// Summary of the typical-candidate count `θ` at the encoder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondMomentReport {
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    /// `var θ / (E θ)^2`, infinite when `E θ = 0`.
    pub chebyshev: f64,
    pub p_zero: f64,
    /// Standard error of `p_zero`.
    pub p_zero_se: f64,
}

/// Samples `(code, m, s)` and counts the members of bin `m` jointly typical
/// with `s`.
pub fn second_moment_report(scheme: &mut GpScheme, samples: u64, seed: u64) -> Result<SecondMomentReport> {
    let dims = scheme.dims();
    let p = scheme.spec().lattice().modulus();
    let bins = p.checked_pow(dims.k).ok_or(Error::InvalidParameter("too many bins"))?;
    let mut theta = Moments::default();
    let mut zeros = 0u64;
    for t in 0..samples {
        let mut rng = trial_stream(seed, t);
        let code = GeneratorNestedCode::sample(p, dims, &mut rng);
        let m = BinIndex::from_index(p, dims.k, rng.random_range(0..bins));
        let s = scheme.spec().sample_states(&mut rng, dims.n);
        let count = scheme.typical_candidates(&code, &m, &s)?;
        zeros += u64::from(count == 0);
        theta.push(count as f64);
    }
    let (mean, variance) = (theta.mean(), theta.variance());
    let p_zero = zeros as f64 / samples as f64;
    Ok(SecondMomentReport {
        samples,
        mean,
        variance,
        chebyshev: if mean > 0.0 { variance / (mean * mean) } else { f64::INFINITY },
        p_zero,
        p_zero_se: libm::sqrt(p_zero * (1.0 - p_zero) / samples as f64),
    })
}

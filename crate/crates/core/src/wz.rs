//! Wyner-Ziv coding with nested lattice codes in parity-check form.
//!
//! The encoder searches the outer lattice for a point jointly typical with
//! the source block and sends its bin index `ΔH u`. The decoder looks in that
//! bin for the unique point jointly typical with the side information and
//! reconstructs letter by letter.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codes::{BinIndex, CodeDims, ParityNestedCode};
use crate::error::{Error, Result};
use crate::gp::{divergence_from_uniform, RateThresholds, SEARCH_BUDGET};
use crate::lattice::LatticeParams;
use crate::measures::{mutual_information_split, FiniteMeasure, GridTypicality};
use crate::rng::trial_stream;
use crate::stats::{check_pmf, sample_index};
use crate::zp::ZpVector;

/// Per-letter distortion measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distortion {
    Squared,
    Absolute,
    Hamming,
}

impl Distortion {
    pub fn eval(self, x: f64, xhat: f64) -> f64 {
        match self {
            Distortion::Squared => (x - xhat) * (x - xhat),
            Distortion::Absolute => (x - xhat).abs(),
            Distortion::Hamming => f64::from(u8::from(x != xhat)),
        }
    }
}

/// Raw tables describing a Wyner-Ziv setup.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceTables {
    pub lattice: LatticeParams,
    /// Source alphabet `X` and side-information alphabet `S`.
    pub sources: Vec<f64>,
    pub sides: Vec<f64>,
    /// `P_XS` indexed `[x][s]`.
    pub source_law: Vec<Vec<f64>>,
    /// `W_{Û|X}` indexed `[x][u]` over the lattice alphabet.
    pub test_channel: Vec<Vec<f64>>,
    /// `f(s, u)` indexed `[s][u]`.
    pub reconstruction: Vec<Vec<f64>>,
    pub distortion: Distortion,
    /// Target distortion `D`.
    pub target: f64,
}

/// A validated Wyner-Ziv setup with its joint law `P_XS W_{Û|X}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    t: SourceTables,
    /// `P(x, s, u)` flattened in that order.
    joint: Vec<f64>,
}

impl SourceSpec {
    pub fn new(t: SourceTables) -> Result<Self> {
        let p = t.lattice.modulus().get() as usize;
        let (nx, ns) = (t.sources.len(), t.sides.len());
        for alphabet in [&t.sources, &t.sides] {
            if alphabet.is_empty() || alphabet.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("alphabets must be non-empty and finite"));
            }
            let mut sorted = alphabet.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter("alphabet letters must be distinct"));
            }
        }
        if t.source_law.len() != nx || t.source_law.iter().any(|r| r.len() != ns) {
            return Err(Error::DimensionMismatch { expected: nx, found: t.source_law.len() });
        }
        check_pmf(&t.source_law.concat())?;
        if t.test_channel.len() != nx {
            return Err(Error::DimensionMismatch { expected: nx, found: t.test_channel.len() });
        }
        for row in &t.test_channel {
            if row.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: row.len() });
            }
            check_pmf(row)?;
        }
        if t.reconstruction.len() != ns || t.reconstruction.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: ns, found: t.reconstruction.len() });
        }
        if t.reconstruction.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("reconstruction values must be finite"));
        }
        let mut joint = vec![0.0; nx * ns * p];
        for x in 0..nx {
            for s in 0..ns {
                for u in 0..p {
                    joint[(x * ns + s) * p + u] = t.source_law[x][s] * t.test_channel[x][u];
                }
            }
        }
        let spec = SourceSpec { t, joint };
        if spec.expected_distortion() > spec.t.target + 1e-12 {
            return Err(Error::InvalidParameter("expected distortion exceeds the target"));
        }
        Ok(spec)
    }

    pub fn tables(&self) -> &SourceTables {
        &self.t
    }

    pub fn lattice(&self) -> LatticeParams {
        self.t.lattice
    }

    fn sizes(&self) -> [usize; 3] {
        [self.t.sources.len(), self.t.sides.len(), self.t.lattice.modulus().get() as usize]
    }

    fn unflatten(&self, flat: usize) -> [usize; 3] {
        let [_, ns, p] = self.sizes();
        [flat / (ns * p), (flat / p) % ns, flat % p]
    }

    /// `P(x, s, u)` by letter index.
    pub fn mass(&self, x: usize, s: usize, u: usize) -> f64 {
        let [_, ns, p] = self.sizes();
        self.joint[(x * ns + s) * p + u]
    }

    /// Marginal of the joint on the kept coordinates, indexing `(x, s, u)`.
    fn project(&self, keep: &[usize]) -> Result<FiniteMeasure> {
        let alphabets = [self.t.sources.clone(), self.t.sides.clone(), self.t.lattice.alphabet()];
        let weighted = self.joint.iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(flat, &m)| {
            let idx = self.unflatten(flat);
            (keep.iter().map(|&a| alphabets[a][idx[a]]).collect::<Vec<f64>>(), m)
        });
        FiniteMeasure::from_weighted(keep.len(), weighted)
    }

    /// `P_{XSÛ}` with coordinates `(x, s, u)`.
    pub fn joint_xsu(&self) -> Result<FiniteMeasure> {
        self.project(&[0, 1, 2])
    }

    /// `P_{ÛX}` with coordinates `(u, x)`.
    pub fn joint_ux(&self) -> Result<FiniteMeasure> {
        self.project(&[2, 0])
    }

    /// `P_{ÛS}` with coordinates `(u, s)`.
    pub fn joint_us(&self) -> Result<FiniteMeasure> {
        self.project(&[2, 1])
    }

    /// `E d(X, f(S, Û))`, summed exactly over the joint.
    pub fn expected_distortion(&self) -> f64 {
        self.joint
            .iter()
            .enumerate()
            .map(|(flat, &m)| {
                let [x, s, u] = self.unflatten(flat);
                m * self.t.distortion.eval(self.t.sources[x], self.t.reconstruction[s][u])
            })
            .sum()
    }

    /// Largest `|P(x,s,u) P(x) - P(x,s) P(x,u)|`; zero exactly when
    /// `Û - X - S` is a Markov chain.
    pub fn markov_gap(&self) -> f64 {
        let [nx, ns, p] = self.sizes();
        let mut gap: f64 = 0.0;
        for x in 0..nx {
            let px: f64 = (0..ns).flat_map(|s| (0..p).map(move |u| (s, u))).map(|(s, u)| self.mass(x, s, u)).sum();
            for s in 0..ns {
                let pxs: f64 = (0..p).map(|u| self.mass(x, s, u)).sum();
                for u in 0..p {
                    let pxu: f64 = (0..ns).map(|s2| self.mass(x, s2, u)).sum();
                    gap = gap.max((self.mass(x, s, u) * px - pxs * pxu).abs());
                }
            }
        }
        gap
    }

    /// Draws `(x_i, s_i)` pairs from `P_XS`.
    pub fn sample_source<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> (Vec<usize>, Vec<usize>) {
        let ns = self.t.sides.len();
        let flat = self.t.source_law.concat();
        (0..n).map(|_| sample_index(rng, &flat)).map(|j| (j / ns, j % ns)).unzip()
    }

    pub fn source_values(&self, x: &[usize]) -> Vec<f64> {
        x.iter().map(|&i| self.t.sources[i]).collect()
    }

    /// `x̂_i = f(s_i, u_i)`.
    pub fn reconstruct(&self, s: &[usize], u: &[u32]) -> Vec<f64> {
        s.iter().zip(u).map(|(&si, &ui)| self.t.reconstruction[si][ui as usize]).collect()
    }
}

/// `(1/n) Σ d(x_i, x̂_i)`.
pub fn block_distortion(x: &[f64], xhat: &[f64], d: Distortion) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: xhat.len() });
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(x.iter().zip(xhat).map(|(&a, &b)| d.eval(a, b)).sum::<f64>() / x.len() as f64)
}

/// Thresholds for a joint `P_{XSÛ}` with coordinates `(x, s, u)`.
///
/// `enc_bound = log2 p - D(P_ÛX || P_Z P_X)` and
/// `dec_bound = log2 p - D(P_ÛS || P_Z P_S)`; a pair `(k, l)` works when
/// `(l/n) log p < enc_bound` and `((k+l)/n) log p > dec_bound`. The rate is
/// `D(P_ÛX || P_Z P_X) - D(P_ÛS || P_Z P_S)`, and `rate_mi` is
/// `I(X;Û) - I(S;Û)`.
pub fn wz_rate_thresholds(joint_xsu: &FiniteMeasure, lattice: &LatticeParams) -> Result<RateThresholds> {
    if joint_xsu.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: joint_xsu.dim() });
    }
    let swap = |pt: &[f64]| vec![pt[1], pt[0]];
    let ux = joint_xsu.marginal(&[0, 2])?.map_points(2, swap)?;
    let us = joint_xsu.marginal(&[1, 2])?.map_points(2, swap)?;
    let log_p = libm::log2(f64::from(lattice.modulus().get()));
    let d_ux = divergence_from_uniform(&ux, lattice)?;
    let d_us = divergence_from_uniform(&us, lattice)?;
    let rate_mi = mutual_information_split(&ux, 1)? - mutual_information_split(&us, 1)?;
    Ok(RateThresholds { enc_bound: log_p - d_ux, dec_bound: log_p - d_us, rate: d_ux - d_us, rate_mi })
}

/// Picks `(k, l)` strictly inside both thresholds: `l` is the largest value
/// with `(l/n) log2 p <= enc_fraction * enc_bound` and `k + l` the smallest
/// with `((k+l)/n) log2 p >= dec_fraction * dec_bound`.
pub fn wz_dims_for_fractions(
    thresholds: &RateThresholds,
    lattice: &LatticeParams,
    n: usize,
    enc_fraction: f64,
    dec_fraction: f64,
) -> Result<CodeDims> {
    let log_p = libm::log2(f64::from(lattice.modulus().get()));
    let l = libm::floor(enc_fraction * n as f64 * thresholds.enc_bound / log_p + 1e-12);
    let total = libm::ceil(dec_fraction * n as f64 * thresholds.dec_bound / log_p - 1e-12);
    if !(l.is_finite() && total.is_finite() && l >= 0.0 && total > l && total <= n as f64) {
        return Err(Error::InvalidParameter("thresholds leave no valid (k, l) at this block length"));
    }
    CodeDims::new(n, (total - l) as usize, l as usize)
}

/// Outcome of one Wyner-Ziv block.
#[derive(Clone, Debug, PartialEq)]
pub struct WzTrialRecord {
    pub trial: u64,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub p: u32,
    pub gamma: f64,
    pub eps: f64,
    pub seed: u64,
    pub encoder_found: bool,
    pub decoder_unique: bool,
    /// Present only when both the encoder and the decoder succeeded.
    pub block_distortion: Option<f64>,
    pub rank_h: usize,
}

/// What the decoder returns.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub u: ZpVector,
    pub xhat: Vec<f64>,
}

/// Encoder, decoder and trial driver for one `(spec, dims, eps)`.
#[derive(Clone, Debug)]
pub struct WzScheme {
    spec: SourceSpec,
    dims: CodeDims,
    eps: f64,
    enc: GridTypicality,
    dec: GridTypicality,
}

impl WzScheme {
    pub fn new(spec: SourceSpec, dims: CodeDims, eps: f64) -> Result<Self> {
        let p = spec.lattice().modulus();
        match p.checked_pow(dims.n.saturating_sub(dims.l)) {
            Some(c) if c <= SEARCH_BUDGET => {}
            count => {
                return Err(Error::InstanceTooLarge {
                    configurations: count.map_or(u128::MAX, u128::from),
                    budget: SEARCH_BUDGET,
                })
            }
        }
        let alphabet = spec.lattice().alphabet();
        let enc = GridTypicality::new(&spec.joint_ux()?, &[alphabet.clone(), spec.t.sources.clone()], eps)?;
        let dec = GridTypicality::new(&spec.joint_us()?, &[alphabet, spec.t.sides.clone()], eps)?;
        Ok(WzScheme { spec, dims, eps, enc, dec })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn dims(&self) -> CodeDims {
        self.dims
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn check(&self, code: &ParityNestedCode, len: usize) -> Result<()> {
        if code.modulus() != self.spec.lattice().modulus() {
            return Err(Error::ModulusMismatch);
        }
        if code.dims() != self.dims {
            return Err(Error::InvalidParameter("code dimensions differ from the scheme's"));
        }
        if len != self.dims.n {
            return Err(Error::DimensionMismatch { expected: self.dims.n, found: len });
        }
        Ok(())
    }

    /// First outer codeword, in solver order, jointly typical with `x`,
    /// together with its bin index.
    pub fn encode(&mut self, code: &ParityNestedCode, x: &[usize]) -> Result<Option<(ZpVector, BinIndex)>> {
        self.check(code, x.len())?;
        let x: Vec<u64> = x.iter().map(|&i| i as u64).collect();
        let outer = code.outer_code();
        for u in outer.iter() {
            if self.enc.pair(u.as_slice(), &x) {
                let m = code.bin_index(&u)?;
                return Ok(Some((u, m)));
            }
        }
        Ok(None)
    }

    /// The unique member of bin `m` jointly typical with `s`, and its
    /// reconstruction.
    pub fn decode(&mut self, code: &ParityNestedCode, m: &BinIndex, s: &[usize]) -> Result<Option<Reconstruction>> {
        self.check(code, s.len())?;
        let s64: Vec<u64> = s.iter().map(|&i| i as u64).collect();
        let bin = code.bin(m)?;
        let mut found: Option<ZpVector> = None;
        for u in bin.iter() {
            if self.dec.pair(u.as_slice(), &s64) {
                if found.is_some() {
                    return Ok(None);
                }
                found = Some(u);
            }
        }
        Ok(found.map(|u| {
            let xhat = self.spec.reconstruct(s, u.as_slice());
            Reconstruction { u, xhat }
        }))
    }

    /// One seeded block: draw a code and a source block, encode, decode.
    pub fn run_trial(&mut self, master_seed: u64, trial: u64) -> Result<WzTrialRecord> {
        let mut rng = trial_stream(master_seed, trial);
        let lattice = self.spec.lattice();
        let code = ParityNestedCode::sample(lattice.modulus(), self.dims, &mut rng);
        let (x, s) = self.spec.sample_source(&mut rng, self.dims.n);
        let mut record = WzTrialRecord {
            trial,
            n: self.dims.n,
            k: self.dims.k,
            l: self.dims.l,
            p: lattice.modulus().get(),
            gamma: lattice.gamma(),
            eps: self.eps,
            seed: master_seed,
            encoder_found: false,
            decoder_unique: false,
            block_distortion: None,
            rank_h: code.rank_h(),
        };
        let Some((_, m)) = self.encode(&code, &x)? else {
            return Ok(record);
        };
        record.encoder_found = true;
        if let Some(rec) = self.decode(&code, &m, &s)? {
            record.decoder_unique = true;
            record.block_distortion =
                Some(block_distortion(&self.spec.source_values(&x), &rec.xhat, self.spec.t.distortion)?);
        }
        Ok(record)
    }
}

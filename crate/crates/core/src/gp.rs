//! Gelfand-Pinsker coding with nested lattice codes in generator form.
//!
//! The encoder sees the state sequence and searches the bin of its message
//! for a lattice point jointly typical with it; the decoder searches every
//! bin for points jointly typical with the channel output and succeeds when
//! exactly one bin index qualifies.
//!
//! All alphabets are finite. Sequences are handled as letter indices and
//! mapped to reals only through the alphabets stored in [`ChannelSpec`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codes::{BinIndex, CodeDims, GeneratorNestedCode};
use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, LatticePoint};
use crate::measures::{kl_divergence, mutual_information_split, FiniteMeasure, GridTypicality};
use crate::rng::trial_stream;
use crate::stats::{check_pmf, sample_index};
use crate::zp::ZpVector;

/// Largest number of codewords a single encoder or decoder search may visit.
pub const SEARCH_BUDGET: u64 = 10_000_000;

/// Raw tables describing a Gelfand-Pinsker setup.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTables {
    pub lattice: LatticeParams,
    /// State alphabet and its law `P_S`.
    pub states: Vec<f64>,
    pub state_law: Vec<f64>,
    /// `P_{Û|S}` indexed `[s][u]` over the lattice alphabet.
    pub aux: Vec<Vec<f64>>,
    /// Input alphabet and `W_{X|ÛS}` indexed `[u][s][x]`.
    pub inputs: Vec<f64>,
    pub input_map: Vec<Vec<Vec<f64>>>,
    /// Output alphabet and `W_{Y|XS}` indexed `[x][s][y]`.
    pub outputs: Vec<f64>,
    pub channel: Vec<Vec<Vec<f64>>>,
    /// `w(x, s)` indexed `[x][s]`, and the budget `W`.
    pub cost: Vec<Vec<f64>>,
    pub budget: f64,
}

/// A validated Gelfand-Pinsker setup together with its joint law.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    t: ChannelTables,
    /// `P(u, s, x, y)` flattened in that order.
    joint: Vec<f64>,
}

fn check_alphabet(values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("alphabets must be non-empty and finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("alphabet letters must be distinct"));
    }
    Ok(())
}

fn check_rows(rows: &[Vec<f64>], count: usize, width: usize) -> Result<()> {
    if rows.len() != count {
        return Err(Error::DimensionMismatch { expected: count, found: rows.len() });
    }
    for row in rows {
        if row.len() != width {
            return Err(Error::DimensionMismatch { expected: width, found: row.len() });
        }
        check_pmf(row)?;
    }
    Ok(())
}

impl ChannelSpec {
    pub fn new(t: ChannelTables) -> Result<Self> {
        let p = t.lattice.modulus().get() as usize;
        let (ns, nx, ny) = (t.states.len(), t.inputs.len(), t.outputs.len());
        check_alphabet(&t.states)?;
        check_alphabet(&t.inputs)?;
        check_alphabet(&t.outputs)?;
        check_rows(core::slice::from_ref(&t.state_law), 1, ns)?;
        check_rows(&t.aux, ns, p)?;
        if t.input_map.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: t.input_map.len() });
        }
        for rows in &t.input_map {
            check_rows(rows, ns, nx)?;
        }
        if t.channel.len() != nx {
            return Err(Error::DimensionMismatch { expected: nx, found: t.channel.len() });
        }
        for rows in &t.channel {
            check_rows(rows, ns, ny)?;
        }
        if t.cost.len() != nx || t.cost.iter().any(|r| r.len() != ns) {
            return Err(Error::DimensionMismatch { expected: nx, found: t.cost.len() });
        }
        if t.cost.iter().flatten().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("costs must be finite and non-negative"));
        }
        let mut joint = vec![0.0; p * ns * nx * ny];
        for u in 0..p {
            for s in 0..ns {
                let pus = t.state_law[s] * t.aux[s][u];
                for x in 0..nx {
                    let pusx = pus * t.input_map[u][s][x];
                    for y in 0..ny {
                        joint[((u * ns + s) * nx + x) * ny + y] = pusx * t.channel[x][s][y];
                    }
                }
            }
        }
        let spec = ChannelSpec { t, joint };
        if spec.expected_cost() > spec.t.budget + 1e-12 {
            return Err(Error::InvalidParameter("expected cost exceeds the budget"));
        }
        Ok(spec)
    }

    pub fn tables(&self) -> &ChannelTables {
        &self.t
    }

    pub fn lattice(&self) -> LatticeParams {
        self.t.lattice
    }

    fn sizes(&self) -> [usize; 4] {
        [self.t.lattice.modulus().get() as usize, self.t.states.len(), self.t.inputs.len(), self.t.outputs.len()]
    }

    /// Sum of the joint over the letters not kept, as a measure on the kept
    /// coordinates' real values. `keep` indexes `(u, s, x, y)`.
    fn project(&self, keep: &[usize]) -> Result<FiniteMeasure> {
        let sizes = self.sizes();
        let alphabets = [self.t.lattice.alphabet(), self.t.states.clone(), self.t.inputs.clone(), self.t.outputs.clone()];
        let mut weighted = Vec::with_capacity(self.joint.len());
        for (flat, &mass) in self.joint.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut idx = [0usize; 4];
            let mut rest = flat;
            for axis in (0..4).rev() {
                idx[axis] = rest % sizes[axis];
                rest /= sizes[axis];
            }
            weighted.push((keep.iter().map(|&a| alphabets[a][idx[a]]).collect::<Vec<f64>>(), mass));
        }
        FiniteMeasure::from_weighted(keep.len(), weighted)
    }

    /// `P_{ÛSY}` with coordinates `(u, s, y)`.
    pub fn joint_usy(&self) -> Result<FiniteMeasure> {
        self.project(&[0, 1, 3])
    }

    /// `P_{ÛS}` with coordinates `(u, s)`.
    pub fn joint_us(&self) -> Result<FiniteMeasure> {
        self.project(&[0, 1])
    }

    /// `P_{ÛY}` with coordinates `(u, y)`.
    pub fn joint_uy(&self) -> Result<FiniteMeasure> {
        self.project(&[0, 3])
    }

    /// `E w(X, S)` under the joint law.
    pub fn expected_cost(&self) -> f64 {
        let [_, ns, nx, ny] = self.sizes();
        self.joint
            .iter()
            .enumerate()
            .map(|(flat, &mass)| {
                let x = (flat / ny) % nx;
                let s = (flat / (ny * nx)) % ns;
                mass * self.t.cost[x][s]
            })
            .sum()
    }

    pub fn sample_states<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        (0..n).map(|_| sample_index(rng, &self.t.state_law)).collect()
    }

    /// Sends `u` (letter indices) through the input map and the channel.
    pub fn transmit<R: Rng + ?Sized>(&self, rng: &mut R, u: &[u32], s: &[usize]) -> Result<Transmission> {
        if u.len() != s.len() {
            return Err(Error::DimensionMismatch { expected: s.len(), found: u.len() });
        }
        let mut x = Vec::with_capacity(u.len());
        let mut y = Vec::with_capacity(u.len());
        let mut cost = 0.0;
        for (&ui, &si) in u.iter().zip(s) {
            let xi = sample_index(rng, &self.t.input_map[ui as usize][si]);
            y.push(sample_index(rng, &self.t.channel[xi][si]));
            cost += self.t.cost[xi][si];
            x.push(xi);
        }
        let block_cost = if u.is_empty() { 0.0 } else { cost / u.len() as f64 };
        Ok(Transmission { x, y, block_cost })
    }

    pub fn state_values(&self, s: &[usize]) -> Vec<f64> {
        s.iter().map(|&i| self.t.states[i]).collect()
    }

    pub fn output_values(&self, y: &[usize]) -> Vec<f64> {
        y.iter().map(|&i| self.t.outputs[i]).collect()
    }
}

/// Result of sending one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    /// `(1/n) Σ w(x_i, s_i)`.
    pub block_cost: f64,
}

/// Rate thresholds in bits per symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateThresholds {
    pub enc_bound: f64,
    pub dec_bound: f64,
    /// `dec_bound - enc_bound`.
    pub rate: f64,
    /// The same rate as a difference of mutual informations.
    pub rate_mi: f64,
}

/// The uniform law `P_Z` on the lattice alphabet.
pub fn uniform_reference(lattice: &LatticeParams) -> FiniteMeasure {
    let p = f64::from(lattice.modulus().get());
    FiniteMeasure::from_weighted(1, lattice.alphabet().into_iter().map(|a| (vec![a], 1.0 / p)))
        .expect("uniform law on distinct letters")
}

/// `D(P_{ÛA} || P_Z ⊗ P_A)` for a joint with `Û` first.
pub(crate) fn divergence_from_uniform(joint: &FiniteMeasure, lattice: &LatticeParams) -> Result<f64> {
    let rest: Vec<usize> = (1..joint.dim()).collect();
    kl_divergence(joint, &uniform_reference(lattice).product(&joint.marginal(&rest)?))
}

/// Encoding and decoding thresholds of the scheme for a joint `P_{ÛSY}`
/// with coordinates `(u, s, y)`.
///
/// `enc_bound = D(P_ÛS || P_Z P_S)` and `dec_bound = D(P_ÛY || P_Z P_Y)`;
/// a rate is supported when `(l/n) log p > enc_bound` and
/// `((k+l)/n) log p < dec_bound`.
pub fn gp_rate_thresholds(joint_usy: &FiniteMeasure, lattice: &LatticeParams) -> Result<RateThresholds> {
    if joint_usy.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: joint_usy.dim() });
    }
    let us = joint_usy.marginal(&[0, 1])?;
    let uy = joint_usy.marginal(&[0, 2])?;
    let enc_bound = divergence_from_uniform(&us, lattice)?;
    let dec_bound = divergence_from_uniform(&uy, lattice)?;
    let rate_mi = mutual_information_split(&uy, 1)? - mutual_information_split(&us, 1)?;
    Ok(RateThresholds { enc_bound, dec_bound, rate: dec_bound - enc_bound, rate_mi })
}

/// Default margin, in bits per symbol, by which the encoder's list rate
/// `(l/n) log2 p` exceeds `enc_bound`. A finite `eps` shrinks the chance
/// that any one candidate is typical, so the list needs some slack.
pub const DEFAULT_ENC_MARGIN: f64 = 0.2;

/// Picks `(k, l)` for block length `n`: `k + l` is the nearest integer to
/// `multiplier * n * dec_bound / log2 p`, and `l` is the smallest value with
/// `(l/n) log2 p > enc_bound + enc_margin`, leaving `k >= 1`.
pub fn gp_dims_for_multiplier(
    thresholds: &RateThresholds,
    lattice: &LatticeParams,
    n: usize,
    multiplier: f64,
    enc_margin: f64,
) -> Result<CodeDims> {
    let log_p = libm::log2(f64::from(lattice.modulus().get()));
    let total = libm::round(multiplier * n as f64 * thresholds.dec_bound / log_p);
    let l = libm::floor(n as f64 * (thresholds.enc_bound + enc_margin) / log_p) + 1.0;
    if !(total.is_finite() && l.is_finite() && l >= 0.0 && total > l) {
        return Err(Error::InvalidParameter("rate multiplier leaves no room for a message"));
    }
    let (total, l) = (total as usize, l as usize);
    CodeDims::new(n, total - l, l)
}

/// Outcome of one Gelfand-Pinsker block.
#[derive(Clone, Debug, PartialEq)]
pub struct GpTrialRecord {
    pub trial: u64,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub p: u32,
    pub gamma: f64,
    pub eps: f64,
    pub seed: u64,
    pub encoder_found: bool,
    pub decoded_ok: bool,
    /// Absent when the encoder failed and nothing was sent.
    pub block_cost: Option<f64>,
    pub within_budget: Option<bool>,
    pub stacked_rank: usize,
}

/// Encoder, decoder and trial driver for one `(spec, dims, eps)`.
///
/// Holds typicality caches, so each worker should own a clone.
#[derive(Clone, Debug)]
pub struct GpScheme {
    spec: ChannelSpec,
    dims: CodeDims,
    eps: f64,
    enc: GridTypicality,
    dec: GridTypicality,
}

impl GpScheme {
    pub fn new(spec: ChannelSpec, dims: CodeDims, eps: f64) -> Result<Self> {
        let p = spec.lattice().modulus();
        for count in [p.checked_pow(dims.l), p.checked_pow(dims.k + dims.l)] {
            match count {
                Some(c) if c <= SEARCH_BUDGET => {}
                _ => {
                    return Err(Error::InstanceTooLarge {
                        configurations: count.map_or(u128::MAX, u128::from),
                        budget: SEARCH_BUDGET,
                    })
                }
            }
        }
        let alphabet = spec.lattice().alphabet();
        let enc = GridTypicality::new(&spec.joint_us()?, &[alphabet.clone(), spec.t.states.clone()], eps)?;
        let dec = GridTypicality::new(&spec.joint_uy()?, &[alphabet, spec.t.outputs.clone()], eps)?;
        Ok(GpScheme { spec, dims, eps, enc, dec })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn dims(&self) -> CodeDims {
        self.dims
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn check_code(&self, code: &GeneratorNestedCode) -> Result<()> {
        if code.modulus() != self.spec.lattice().modulus() {
            return Err(Error::ModulusMismatch);
        }
        if code.dims() != self.dims {
            return Err(Error::InvalidParameter("code dimensions differ from the scheme's"));
        }
        Ok(())
    }

    /// First `u = g(a, m)`, in lexicographic order of `a`, jointly typical
    /// with the state sequence; `None` is an encoder failure.
    pub fn encode(&mut self, code: &GeneratorNestedCode, m: &BinIndex, s: &[usize]) -> Result<Option<ZpVector>> {
        self.check_code(code)?;
        if s.len() != self.dims.n {
            return Err(Error::DimensionMismatch { expected: self.dims.n, found: s.len() });
        }
        let s = to_u64(s);
        for u in code.bin(m)? {
            if self.enc.pair(u.as_slice(), &s) {
                return Ok(Some(u));
            }
        }
        Ok(None)
    }

    /// Number of members of bin `m` jointly typical with `s`.
    pub fn typical_candidates(&mut self, code: &GeneratorNestedCode, m: &BinIndex, s: &[usize]) -> Result<u64> {
        self.check_code(code)?;
        if s.len() != self.dims.n {
            return Err(Error::DimensionMismatch { expected: self.dims.n, found: s.len() });
        }
        let s = to_u64(s);
        let mut count = 0;
        for u in code.bin(m)? {
            count += u64::from(self.enc.pair(u.as_slice(), &s));
        }
        Ok(count)
    }

    /// The encoder's choice as a real lattice point.
    pub fn encode_point(&mut self, code: &GeneratorNestedCode, m: &BinIndex, s: &[usize]) -> Result<Option<LatticePoint>> {
        let lattice = self.spec.lattice();
        Ok(self.encode(code, m, s)?.map(|u| lattice.to_point(&u)))
    }

    /// The unique bin index with a member jointly typical with `y`, if any.
    pub fn decode(&mut self, code: &GeneratorNestedCode, y: &[usize]) -> Result<Option<BinIndex>> {
        self.check_code(code)?;
        if y.len() != self.dims.n {
            return Err(Error::DimensionMismatch { expected: self.dims.n, found: y.len() });
        }
        let y = to_u64(y);
        let p = code.modulus();
        let bins = p.checked_pow(self.dims.k).expect("checked at construction");
        let mut found: Option<BinIndex> = None;
        for index in 0..bins {
            let m = BinIndex::from_index(p, self.dims.k, index);
            let mut hit = false;
            for u in code.bin(&m)? {
                if self.dec.pair(u.as_slice(), &y) {
                    hit = true;
                    break;
                }
            }
            if hit {
                if found.is_some() {
                    return Ok(None);
                }
                found = Some(m);
            }
        }
        Ok(found)
    }

    /// One seeded block: draw a code, a message and a state sequence, encode,
    /// transmit, decode.
    pub fn run_trial(&mut self, master_seed: u64, trial: u64) -> Result<GpTrialRecord> {
        let mut rng = trial_stream(master_seed, trial);
        let lattice = self.spec.lattice();
        let p = lattice.modulus();
        let code = GeneratorNestedCode::sample(p, self.dims, &mut rng);
        let bins = p.checked_pow(self.dims.k).expect("checked at construction");
        let m = BinIndex::from_index(p, self.dims.k, rng.random_range(0..bins));
        let s = self.spec.sample_states(&mut rng, self.dims.n);
        let mut record = GpTrialRecord {
            trial,
            n: self.dims.n,
            k: self.dims.k,
            l: self.dims.l,
            p: p.get(),
            gamma: lattice.gamma(),
            eps: self.eps,
            seed: master_seed,
            encoder_found: false,
            decoded_ok: false,
            block_cost: None,
            within_budget: None,
            stacked_rank: code.stacked_rank(),
        };
        let Some(u) = self.encode(&code, &m, &s)? else {
            return Ok(record);
        };
        record.encoder_found = true;
        let sent = self.spec.transmit(&mut rng, u.as_slice(), &s)?;
        record.block_cost = Some(sent.block_cost);
        record.within_budget = Some(sent.block_cost <= self.spec.t.budget);
        record.decoded_ok = self.decode(&code, &sent.y)? == Some(m);
        Ok(record)
    }
}

fn to_u64(s: &[usize]) -> Vec<u64> {
    s.iter().map(|&i| i as u64).collect()
}

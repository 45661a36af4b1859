//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sha2::{Digest, Sha256};

use nestlat::codes::{BinIndex, CodeDims, ParityNestedCode};
use nestlat::gp::gp_rate_thresholds;
use nestlat::instances;
use nestlat::lattice::{LatticeParams, LatticePoint};
use nestlat::measures::{prokhorov_distance, total_variation, FiniteMeasure};
use nestlat::rng::trial_stream;
use nestlat::verify::{
    verify_g_uniform, verify_pairwise_independence, verify_parity_uniform_independent, verify_rank_distribution,
    LemmaReport, PairCase, Relation, Verdict,
};
use nestlat::wz::{wz_rate_thresholds, Distortion, SourceSpec, SourceTables};
use nestlat::zp::{PrimeModulus, ZpVector};
use nestlat_sim::config::{ExperimentConfig, Mode};
use nestlat_sim::run::{run, ModeReport, RunOutcome};

const SEED: u64 = 2024;

type Verdicts = Result<String, String>;

struct Suite {
    scratch: tempfile::TempDir,
    /// Configurations already run, with the hashes of their CSV files.
    runs: Vec<(ExperimentConfig, BTreeMap<String, String>)>,
    failed: usize,
}

impl Suite {
    fn criterion(&mut self, id: u32, name: &str, budget: Option<Duration>, f: impl FnOnce(&mut Suite) -> Verdicts) {
        let start = Instant::now();
        let mut verdict = f(self);
        let elapsed = start.elapsed();
        if let (Ok(_), Some(b)) = (&verdict, budget) {
            if elapsed > b {
                verdict = Err(format!("took {elapsed:.1?}, budget {b:?}"));
            }
        }
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if verdict.is_err() {
            self.failed += 1;
        }
        println!("{tag} [{id:>2}] {name}: {detail} ({elapsed:.1?})");
    }

    fn run(&mut self, mut cfg: ExperimentConfig) -> Result<RunOutcome, String> {
        cfg.out = self.scratch.path().join(format!("run{}", self.runs.len()));
        let outcome = run(&cfg).map_err(|e| e.to_string())?;
        let hashes = csv_hashes(&outcome)?;
        self.runs.push((cfg, hashes));
        Ok(outcome)
    }
}

fn csv_hashes(outcome: &RunOutcome) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for path in outcome.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, format!("{:x}", Sha256::digest(&bytes)));
    }
    Ok(out)
}

fn config(mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(mode);
    cfg.seed = SEED;
    cfg
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. Exhaustive lemmas

/// Every check must be exact and equal to the hand-derived count: for a
/// uniform `u` over `p^n` cells, `draws / p^n` per cell, and for an
/// independent pair `draws / p^2n`.
fn lemma_counts_match(r: &LemmaReport, draws: u64, per_cell: u64) -> Result<(), String> {
    ensure(r.draws == draws, || format!("{} {:?}: {} draws, oracle {draws}", r.lemma.id(), (r.n, r.k, r.l), r.draws))?;
    ensure(r.verdict == Verdict::ExactMatch, || format!("{} {:?}: verdict {}", r.lemma.id(), (r.n, r.k, r.l), r.verdict.as_str()))?;
    for c in &r.checks {
        ensure(c.observed == per_cell as f64 && c.expected == per_cell as f64, || {
            format!("{} {}: observed {} oracle {per_cell}", r.lemma.id(), c.label, c.observed)
        })?;
    }
    Ok(())
}

fn lemma_suite() -> Verdicts {
    let p = PrimeModulus::new(3).unwrap();
    let mut checks = 0;
    // (n, k, l, g draws = 3^(n(k+l+1)), parity draws = 3^(nl+l))
    for (n, k, l, g_draws, h_draws) in [(1usize, 1usize, 1usize, 27u64, 9u64), (2, 1, 1, 729, 27)] {
        let cells = 3u64.pow(n as u32);
        let g = verify_g_uniform(p, n, k, l).map_err(|e| e.to_string())?;
        lemma_counts_match(&g, g_draws, g_draws / cells)?;
        for case in [PairCase::SameMDiffA, PairCase::DiffM] {
            let r = verify_pairwise_independence(p, n, k, l, case).map_err(|e| e.to_string())?;
            ensure(!r.checks.is_empty(), || format!("{case:?}: no pairs"))?;
            lemma_counts_match(&r, g_draws, g_draws / (cells * cells))?;
            checks += r.checks.len();
        }
        let h = verify_parity_uniform_independent(p, n, l).map_err(|e| e.to_string())?;
        ensure(h.draws == h_draws && h.verdict == Verdict::ExactMatch, || format!("parity n={n}: {}", h.verdict.as_str()))?;
        for c in &h.checks {
            let oracle = if c.label.contains(" v=") { h_draws / 9 } else { h_draws / 3 };
            ensure(c.observed == oracle as f64, || format!("parity {}: {} vs {oracle}", c.label, c.observed))?;
        }
        checks += g.checks.len() + h.checks.len();
    }
    Ok(format!("{checks} exact counts"))
}

// ---------------------------------------------------------------------------
// 2. Rank distribution

fn rank_by_elimination(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][c] % p != 0) else { continue };
        m.swap(rank, pivot);
        let inv = (1..p).find(|x| x * m[rank][c] % p == 1).unwrap();
        for r in 0..m.len() {
            if r != rank && m[r][c] % p != 0 {
                let f = m[r][c] * inv % p;
                for j in 0..cols {
                    m[r][j] = (m[r][j] + (p - f) * m[rank][j]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn rank_census() -> Verdicts {
    let mut notes = Vec::new();
    for (p, n, l, num, den) in [(3u64, 2usize, 1usize, 8u64, 9u64), (3, 2, 2, 48, 81), (5, 2, 1, 24, 25)] {
        let total = p.pow((n * l) as u32);
        let mut census = vec![0u64; l + 1];
        for idx in 0..total {
            let mut rest = idx;
            let m: Vec<Vec<u64>> = (0..l)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let d = rest % p;
                            rest /= p;
                            d
                        })
                        .collect()
                })
                .collect();
            census[rank_by_elimination(m, p)] += 1;
        }
        ensure(census[l] * den == num * total, || format!("p={p} n={n} l={l}: full rank {}/{total}", census[l]))?;
        for (i, &count) in census.iter().enumerate().take(l) {
            // P(rank = i) <= C(l, i) p^(i(l-i)) / p^(n(l-i))
            let bound_num = binomial(l as u64, i as u64) * p.pow((i * (l - i)) as u32);
            let bound_den = p.pow((n * (l - i)) as u32);
            ensure(u128::from(count) * u128::from(bound_den) <= u128::from(bound_num) * u128::from(total), || {
                format!("p={p} n={n} l={l}: rank {i} count {count} above bound")
            })?;
        }
        let lib = verify_rank_distribution(PrimeModulus::new(p as u32).unwrap(), n, l).map_err(|e| e.to_string())?;
        ensure(lib.verdict == Verdict::ExactMatch, || format!("library verdict {}", lib.verdict.as_str()))?;
        ensure(lib.checks.iter().any(|c| c.relation == Relation::AtMost), || "library checks omit the bound".into())?;
        notes.push(format!("({p},{n},{l}) {}/{total}", census[l]));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------------------
// 3. Lattice definitions

fn lattice_equivalence() -> Verdicts {
    let mut rng = trial_stream(SEED, 3);
    let mut points = 0usize;
    for i in 0..100u32 {
        let p = PrimeModulus::new(if i % 2 == 0 { 3 } else { 5 }).unwrap();
        let n = rng.random_range(1..=3usize);
        let l = rng.random_range(0..n);
        let k = rng.random_range(0..=(n - l).min(1));
        let lattice = LatticeParams::new(0.5, p).unwrap();
        let code = ParityNestedCode::sample(p, CodeDims::new(n, k, l).unwrap(), &mut rng);
        // The outer code read directly off its parity equations.
        let q = u64::from(p.get());
        let on_code = |u: &ZpVector| {
            (0..code.h().rows()).all(|r| {
                let dot: u64 = (0..n).map(|j| u64::from(code.h().get(r, j)) * u64::from(u.as_slice()[j])).sum();
                dot % q == u64::from(code.c().as_slice()[r])
            })
        };
        let mut codebook: Vec<LatticePoint> = Vec::new();
        for idx in 0..q.pow(n as u32) {
            let u = ZpVector::from_index(p, n, idx);
            if on_code(&u) {
                codebook.push(lattice.to_point(&u));
            }
        }
        let bin = BinIndex::zero(p, k);
        let bin_book: Vec<LatticePoint> =
            code.bin(&bin).map_err(|e| e.to_string())?.iter().map(|u| lattice.to_point(&u)).collect();
        for x in lattice.window(n, 1) {
            let shifts = lattice.shift_member(&x, &codebook);
            let reduced = lattice.mod_member(&x, on_code);
            ensure(shifts == reduced, || format!("code {i} p={} x={x:?}: shifts {shifts} mod {reduced}", p.get()))?;
            let in_bin = |u: &ZpVector| on_code(u) && code.bin_index(u).is_ok_and(|m| m == bin);
            ensure(lattice.shift_member(&x, &bin_book) == lattice.mod_member(&x, in_bin), || {
                format!("code {i}: bin membership differs at {x:?}")
            })?;
            points += 1;
        }
    }
    Ok(format!("100 codes, {points} window points"))
}

// ---------------------------------------------------------------------------
// 4. Prokhorov metric

/// `inf { ε : P(A) <= Q(A^ε) + ε for all A ⊆ supp P }` by subset enumeration
/// and bisection, with closed neighbourhoods.
fn prokhorov_oracle(p: &FiniteMeasure, q: &FiniteMeasure) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let holds = |eps: f64| {
        let (pa, qa) = (p.atoms(), q.atoms());
        (0u32..1 << pa.len()).all(|set| {
            let inside: Vec<&[f64]> = (0..pa.len()).filter(|i| set >> i & 1 == 1).map(|i| pa[i].point.as_slice()).collect();
            let mass_p: f64 = (0..pa.len()).filter(|i| set >> i & 1 == 1).map(|i| pa[i].mass).sum();
            let mass_q: f64 =
                qa.iter().filter(|b| inside.iter().any(|a| dist(a, &b.point) <= eps)).map(|b| b.mass).sum();
            mass_p <= mass_q + eps + 1e-12
        })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if holds(0.0) {
        return 0.0;
    }
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn random_measure(rng: &mut impl Rng, dim: usize) -> FiniteMeasure {
    let atoms = rng.random_range(1..=5);
    let weights: Vec<u32> = (0..atoms).map(|_| rng.random_range(1..20)).collect();
    let total: u32 = weights.iter().sum();
    FiniteMeasure::from_weighted(
        dim,
        weights.iter().map(|&w| {
            let pt: Vec<f64> = (0..dim).map(|_| f64::from(rng.random_range(-4i32..=4)) * 0.15).collect();
            (pt, f64::from(w) / f64::from(total))
        }),
    )
    .unwrap()
}

fn prokhorov_properties() -> Verdicts {
    let dirac = |x: f64| FiniteMeasure::dirac(vec![x]);
    let half = FiniteMeasure::from_weighted(1, [(vec![0.0], 0.5), (vec![5.0], 0.5)]).unwrap();
    for (a, b, expected) in [(dirac(0.0), dirac(0.0), 0.0), (dirac(0.0), dirac(0.3), 0.3), (dirac(0.0), half.clone(), 0.5)] {
        let got = prokhorov_distance(&a, &b).map_err(|e| e.to_string())?;
        ensure((got - expected).abs() <= 1e-6, || format!("analytic example {expected}: got {got}"))?;
        ensure((prokhorov_oracle(&a, &b) - expected).abs() <= 1e-6, || format!("oracle disagrees on {expected}"))?;
    }
    let mut rng = trial_stream(SEED, 4);
    let triples = 300;
    let mut worst_triangle = f64::NEG_INFINITY;
    for t in 0..triples {
        let dim = 1 + t % 2;
        let [a, b, c] = [0, 1, 2].map(|_| random_measure(&mut rng, dim));
        let d = |x: &FiniteMeasure, y: &FiniteMeasure| prokhorov_distance(x, y).unwrap();
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        ensure(ab == ba, || format!("triple {t}: asymmetric {ab} vs {ba}"))?;
        worst_triangle = worst_triangle.max(ac - ab - bc);
        ensure(ac <= ab + bc + 1e-9, || format!("triple {t}: triangle {ac} > {ab} + {bc}"))?;
        let tv = total_variation(&a, &b).unwrap();
        ensure(ab <= tv + 1e-12, || format!("triple {t}: π {ab} above TV {tv}"))?;
        let oracle = prokhorov_oracle(&a, &b);
        ensure((ab - oracle).abs() <= 1e-6, || format!("triple {t}: π {ab} vs subset oracle {oracle}"))?;
    }
    Ok(format!("3 analytic cases, {triples} triples, worst triangle slack {worst_triangle:.2e}"))
}

// ---------------------------------------------------------------------------
// 5. Rate identities

fn entropy(masses: impl IntoIterator<Item = f64>) -> f64 {
    masses.into_iter().filter(|&m| m > 0.0).map(|m| -m * m.log2()).sum()
}

/// `I(A;B)` for a table indexed `[a][b]`.
fn mi_table(t: &[Vec<f64>]) -> f64 {
    let cols = t[0].len();
    let row = entropy(t.iter().map(|r| r.iter().sum::<f64>()));
    let col = entropy((0..cols).map(|j| t.iter().map(|r| r[j]).sum::<f64>()));
    row + col - entropy(t.iter().flatten().copied())
}

fn random_pmf(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn rate_identities() -> Verdicts {
    let mut rng = trial_stream(SEED, 5);
    let lattice = LatticeParams::new(1.0, PrimeModulus::new(3).unwrap()).unwrap();
    let a = lattice.alphabet();
    let mut worst = 0.0f64;
    for i in 0..50 {
        // GP: P(u, s, y) on 3 x 2 x 3.
        let w = random_pmf(&mut rng, 18);
        let at = |u: usize, s: usize, y: usize| w[u * 6 + s * 3 + y];
        let mut atoms = Vec::new();
        for u in 0..3 {
            for s in 0..2 {
                for y in 0..3 {
                    atoms.push((vec![a[u], s as f64, y as f64], at(u, s, y)));
                }
            }
        }
        let joint = FiniteMeasure::from_weighted(3, atoms).unwrap();
        let t = gp_rate_thresholds(&joint, &lattice).map_err(|e| e.to_string())?;
        let uy: Vec<Vec<f64>> = (0..3).map(|u| (0..3).map(|y| (0..2).map(|s| at(u, s, y)).sum()).collect()).collect();
        let us: Vec<Vec<f64>> = (0..3).map(|u| (0..2).map(|s| (0..3).map(|y| at(u, s, y)).sum()).collect()).collect();
        let oracle = mi_table(&uy) - mi_table(&us);
        let gap = (t.rate - t.rate_mi).abs().max((t.rate - oracle).abs());
        ensure(gap <= 1e-9, || format!("GP instance {i}: rate {} rate_mi {} oracle {oracle}", t.rate, t.rate_mi))?;
        worst = worst.max(gap);

        // WZ: P(x, s) W(u | x) on 3 x 3 x 3.
        let law = random_pmf(&mut rng, 9);
        let channel: Vec<Vec<f64>> = (0..3).map(|_| random_pmf(&mut rng, 3)).collect();
        let spec = SourceSpec::new(SourceTables {
            lattice,
            sources: a.clone(),
            sides: a.clone(),
            source_law: law.chunks(3).map(<[f64]>::to_vec).collect(),
            test_channel: channel.clone(),
            reconstruction: vec![a.clone(); 3],
            distortion: Distortion::Squared,
            target: f64::INFINITY,
        })
        .map_err(|e| e.to_string())?;
        let t = wz_rate_thresholds(&spec.joint_xsu().map_err(|e| e.to_string())?, &lattice).map_err(|e| e.to_string())?;
        let xu: Vec<Vec<f64>> =
            (0..3).map(|x| (0..3).map(|u| (0..3).map(|s| law[x * 3 + s]).sum::<f64>() * channel[x][u]).collect()).collect();
        let su: Vec<Vec<f64>> =
            (0..3).map(|s| (0..3).map(|u| (0..3).map(|x| law[x * 3 + s] * channel[x][u]).sum()).collect()).collect();
        let oracle = mi_table(&xu) - mi_table(&su);
        let gap = (t.rate - t.rate_mi).abs().max((t.rate - oracle).abs());
        ensure(gap <= 1e-9, || format!("WZ instance {i}: rate {} rate_mi {} oracle {oracle}", t.rate, t.rate_mi))?;
        worst = worst.max(gap);
    }
    Ok(format!("50 GP + 50 WZ instances, worst gap {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 6. Typicality exponent

fn typicality_exponent(suite: &mut Suite) -> Verdicts {
    let mut cfg = config(Mode::Exponent);
    cfg.n = vec![8, 12, 16, 20];
    cfg.trials = 10_000_000;
    let outcome = suite.run(cfg.clone())?;
    let ModeReport::Exponent { divergence, tables } = &outcome.report else { return Err("wrong report".into()) };
    ensure((divergence - 1.0).abs() < 1e-12, || format!("divergence {divergence}"))?;
    let rows = &tables.iter().find(|(eps, _)| *eps == cfg.eps).ok_or("missing main radius")?.1;
    let values: Vec<String> = rows.iter().map(|r| format!("n={} {:.4}", r.n, r.exponent)).collect();
    let summary = values.join(", ");
    let last = rows.last().ok_or("empty table")?;
    ensure(!last.lower_bound_only && (0.8..=1.2).contains(&last.exponent), || {
        format!("n=20 exponent {} outside [0.8, 1.2]; {summary}", last.exponent)
    })?;
    for w in rows.windows(2) {
        let (before, after) = ((w[0].exponent - 1.0).abs(), (w[1].exponent - 1.0).abs());
        ensure(after <= before, || {
            format!("distance to 1 grows from n={} ({before:.4}) to n={} ({after:.4}); {summary}", w[0].n, w[1].n)
        })?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// 7, 8. End-to-end sweeps

fn gp_trend(suite: &mut Suite) -> Verdicts {
    let mut cfg = config(Mode::Gp);
    cfg.n = vec![6, 9, 12];
    cfg.rate_multipliers = vec![0.5, 1.25];
    cfg.trials = 2000;
    let outcome = suite.run(cfg)?;
    ensure(outcome.failures.is_empty(), || outcome.failures.join("; "))?;
    let ModeReport::Sweep(report) = &outcome.report else { return Err("wrong report".into()) };
    let below: Vec<_> = report.rows.iter().filter(|r| r.setting == 0.5).collect();
    let errors: Vec<f64> = below.iter().map(|r| r.error_rate()).collect();
    ensure(below.len() == 3 && errors.windows(2).all(|w| w[1] < w[0]), || format!("error rates at 0.5: {errors:?}"))?;
    let above = report.rows.iter().find(|r| r.setting == 1.25 && r.n == 12).ok_or("no n=12 point at 1.25")?;
    let total_rate = (above.k + above.l) as f64 * 3f64.log2() / above.n as f64;
    ensure(total_rate > report.thresholds.dec_bound, || {
        format!("multiplier 1.25 gives (k+l) log p / n = {total_rate}, not above {}", report.thresholds.dec_bound)
    })?;
    ensure(above.error_rate() > 0.5, || format!("error rate {} at multiplier 1.25", above.error_rate()))?;
    Ok(format!("errors at 0.5: {errors:.4?}; at 1.25, n=12: {:.4}", above.error_rate()))
}

fn wz_trend(suite: &mut Suite) -> Verdicts {
    let mut cfg = config(Mode::Wz);
    cfg.n = vec![6, 9, 12];
    let outcome = suite.run(cfg)?;
    ensure(outcome.failures.is_empty(), || outcome.failures.join("; "))?;
    let ModeReport::Sweep(report) = &outcome.report else { return Err("wrong report".into()) };
    let log_p = 3f64.log2();
    for r in &report.rows {
        let (enc, dec) = (r.l as f64 * log_p / r.n as f64, (r.k + r.l) as f64 * log_p / r.n as f64);
        ensure(enc < report.thresholds.enc_bound && dec > report.thresholds.dec_bound, || {
            format!("n={} (k={}, l={}) not strictly inside the thresholds", r.n, r.k, r.l)
        })?;
    }
    let success: Vec<f64> = report.rows.iter().map(|r| r.success_rate()).collect();
    ensure(success.windows(2).all(|w| w[1] > w[0]), || format!("joint success {success:?}"))?;

    let spec = instances::wz_z3_flip01().map_err(|e| e.to_string())?;
    let t = spec.tables();
    let mut analytic = 0.0;
    for x in 0..t.sources.len() {
        for s in 0..t.sides.len() {
            for u in 0..3 {
                let d = t.sources[x] - t.reconstruction[s][u];
                analytic += spec.mass(x, s, u) * d * d;
            }
        }
    }
    ensure(t.distortion == Distortion::Squared, || "instance distortion is not squared error".into())?;
    ensure((analytic - spec.expected_distortion()).abs() < 1e-12, || "analytic distortion disagrees".into())?;
    let last = report.rows.iter().find(|r| r.n == 12).ok_or("no n=12 point")?;
    ensure(last.metric_count > 0, || "no successful block at n=12".into())?;
    let ratio = last.metric_mean / analytic;
    ensure(ratio <= 1.2, || format!("distortion {} vs analytic {analytic}: ratio {ratio}", last.metric_mean))?;
    Ok(format!("joint success {success:.4?}; distortion ratio at n=12 {ratio:.4}"))
}

// ---------------------------------------------------------------------------
// 9. Quantization

fn quantization(suite: &mut Suite) -> Verdicts {
    let mut cfg = config(Mode::Quantize);
    cfg.first_step = 1;
    cfg.last_step = 6;
    cfg.clip_levels = vec![0.5, 1.0, 2.0, 4.0, 8.0];
    let outcome = suite.run(cfg)?;
    let ModeReport::Quantize { refinement, clipping, .. } = &outcome.report else { return Err("wrong report".into()) };
    let target = -0.5 * (1.0f64 - 0.64).log2();
    let mi: Vec<f64> = refinement.iter().map(|s| s.mi_bits).collect();
    ensure(mi.windows(2).all(|w| w[1] >= w[0]), || format!("refinement not monotone: {mi:?}"))?;
    let last = refinement.last().ok_or("empty sweep")?;
    ensure(last.gamma == 1.0 / 64.0 && last.p >= 257, || format!("last step γ={} p={}", last.gamma, last.p))?;
    ensure((last.mi_bits - target).abs() <= 0.05, || format!("refined MI {} vs {target}", last.mi_bits))?;
    let (level, clipped) = *clipping.iter().find(|(l, _)| *l == 8.0).ok_or("no clip level 8")?;
    ensure((clipped - target).abs() <= 0.01, || format!("clipped MI {clipped} at {level} vs {target}"))?;
    Ok(format!("MI {:.4} at γ=2^-6 p={}, {clipped:.4} clipped at 8, target {target:.4}", last.mi_bits, last.p))
}

// ---------------------------------------------------------------------------
// 10. Reproducibility

fn reproducibility(suite: &mut Suite) -> Verdicts {
    let previous = std::mem::take(&mut suite.runs);
    ensure(!previous.is_empty(), || "no runs to repeat".into())?;
    let mut files = 0;
    for (i, (cfg, hashes)) in previous.iter().enumerate() {
        let mut again = cfg.clone();
        again.workers = Some(2);
        again.out = PathBuf::from(suite.scratch.path()).join(format!("repeat{i}"));
        let outcome = run(&again).map_err(|e| e.to_string())?;
        let repeat = csv_hashes(&outcome)?;
        ensure(&repeat == hashes, || format!("{} run differs on repeat", cfg.mode))?;
        files += repeat.len();
    }
    suite.runs = previous;
    Ok(format!("{files} CSV files byte-identical across repeats with a different worker count"))
}

fn main() -> ExitCode {
    // Libtest flags such as `--nocapture` or a name filter are ignored.
    let mut suite = Suite { scratch: tempfile::tempdir().expect("scratch dir"), runs: Vec::new(), failed: 0 };
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    suite.criterion(1, "exhaustive lemma suite", min(1), |_| lemma_suite());
    suite.criterion(2, "rank distribution", min(2), |_| rank_census());
    suite.criterion(3, "lattice definition equivalence", None, |_| lattice_equivalence());
    suite.criterion(4, "Prokhorov metric properties", Some(Duration::from_secs(30)), |_| prokhorov_properties());
    suite.criterion(5, "divergence and MI identities", None, |_| rate_identities());
    suite.criterion(6, "typicality exponent", min(10), typicality_exponent);
    suite.criterion(7, "GP end-to-end trend", min(15), gp_trend);
    suite.criterion(8, "WZ end-to-end", min(15), wz_trend);
    suite.criterion(9, "quantization convergence", min(5), quantization);
    suite.criterion(10, "reproducibility", None, reproducibility);
    println!("{} of 10 criteria failed", suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

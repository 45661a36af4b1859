use std::collections::BTreeSet;

use proptest::prelude::*;

use nestlat::codes::{BinIndex, CodeDims, GeneratorNestedCode, Membership, ParityNestedCode};
use nestlat::gp::{gp_rate_thresholds, uniform_reference};
use nestlat::lattice::{LatticeParams, LatticePoint};
use nestlat::measures::{mutual_information, prokhorov_distance, total_variation, FiniteMeasure};
use nestlat::quantize::{clip_value, DyadicQuantizer};
use nestlat::rng::trial_stream;
use nestlat::verify::{verify_rank_distribution, Verdict};
use nestlat::wz::{wz_rate_thresholds, Distortion, SourceSpec, SourceTables};
use nestlat::zp::{solve_affine, Lexicographic, PrimeModulus, ZpMatrix, ZpVector};

fn modulus() -> impl Strategy<Value = PrimeModulus> {
    prop_oneof![Just(3u32), Just(5), Just(7)].prop_map(|p| PrimeModulus::new(p).unwrap())
}

fn matrix(p: PrimeModulus, rows: usize, cols: usize) -> impl Strategy<Value = ZpMatrix> {
    prop::collection::vec(0..p.get(), rows * cols).prop_map(move |e| ZpMatrix::new(p, rows, cols, e).unwrap())
}

fn vector(p: PrimeModulus, n: usize) -> impl Strategy<Value = ZpVector> {
    prop::collection::vec(0..p.get(), n).prop_map(move |e| ZpVector::new(p, e).unwrap())
}

/// Small measure on a coarse grid so atoms often coincide across draws.
fn measure(dim: usize) -> impl Strategy<Value = FiniteMeasure> {
    prop::collection::vec((prop::collection::vec(-3i32..=3, dim), 1u32..20), 1..=6).prop_map(move |atoms| {
        let total: u32 = atoms.iter().map(|(_, w)| w).sum();
        FiniteMeasure::from_weighted(
            dim,
            atoms.into_iter().map(|(pt, w)| (pt.into_iter().map(|c| f64::from(c) * 0.25).collect::<Vec<_>>(), f64::from(w) / f64::from(total))),
        )
        .unwrap()
    })
}

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..50, len).prop_map(|w| {
        let total: u32 = w.iter().sum();
        w.into_iter().map(|x| f64::from(x) / f64::from(total)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_mat_mul_is_linear((p, u, v, g) in modulus().prop_flat_map(|p| (1usize..5, 1usize..5).prop_flat_map(move |(r, c)| {
        (Just(p), vector(p, r), vector(p, r), matrix(p, r, c))
    }))) {
        let lhs = g.vec_mat_mul(&u.add(&v).unwrap()).unwrap();
        let rhs = g.vec_mat_mul(&u).unwrap().add(&g.vec_mat_mul(&v).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(g.rank() <= g.rows().min(g.cols()));
        let _ = p;
    }

    #[test]
    fn kernel_is_a_subgroup((p, h) in modulus().prop_flat_map(|p| (1usize..4, 1usize..5).prop_flat_map(move |(r, c)| (Just(p), matrix(p, r, c))))) {
        let sols = solve_affine(&h, &ZpVector::zeros(p, h.rows())).unwrap();
        let set: BTreeSet<Vec<u32>> = sols.iter().map(|v| v.as_slice().to_vec()).collect();
        prop_assert!(set.contains(&vec![0; h.cols()]));
        prop_assert_eq!(set.len() as u64, sols.count().unwrap());
        for a in &set {
            for b in &set {
                let s = ZpVector::new(p, a.clone()).unwrap().add(&ZpVector::new(p, b.clone()).unwrap()).unwrap();
                prop_assert!(set.contains(s.as_slice()));
            }
        }
    }

    #[test]
    fn metric_on_random_triples((a, b, c) in (1usize..=2).prop_flat_map(|d| (measure(d), measure(d), measure(d)))) {
        let ab = prokhorov_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, prokhorov_distance(&b, &a).unwrap());
        let ac = prokhorov_distance(&a, &c).unwrap();
        let bc = prokhorov_distance(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(ab <= total_variation(&a, &b).unwrap() + 1e-9);
        prop_assert_eq!(prokhorov_distance(&a, &a).unwrap(), 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn mutual_information_is_non_negative_and_vanishes_on_products((joint, x, y) in (measure(2), measure(1), measure(1))) {
        prop_assert!(mutual_information(&joint).unwrap() >= 0.0);
        prop_assert!(mutual_information(&x.product(&y)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn quantizer_cells_partition_the_line(k in 1u32..6, idx in 0usize..3, u in -40.0f64..40.0) {
        let p = PrimeModulus::new([3, 5, 7][idx]).unwrap();
        let gamma = 1.0 / f64::from(1u32 << k);
        let q = DyadicQuantizer::new(gamma, p).unwrap();
        let cell = q.cell(u);
        let pts = q.points();
        let lower = if cell == 0 { f64::NEG_INFINITY } else { (pts[cell - 1] + pts[cell]) / 2.0 };
        let upper = if cell + 1 == pts.len() { f64::INFINITY } else { (pts[cell] + pts[cell + 1]) / 2.0 };
        prop_assert!(lower < u && u <= upper);
        prop_assert_eq!(q.quantize(q.quantize(u)), q.quantize(u));
        prop_assert!(clip_value(u, 2.0).abs() <= 2.0);
    }

    /// `D(P_ÛY || P_Z P_Y) = log2 p - H(Û|Y)` and the GP rate identity.
    #[test]
    fn gp_divergence_identity(w in pmf(3 * 2 * 3)) {
        let lattice = LatticeParams::new(1.0, PrimeModulus::new(3).unwrap()).unwrap();
        let a = lattice.alphabet();
        let mut atoms = Vec::new();
        for u in 0..3 { for s in 0..2 { for y in 0..3 {
            atoms.push((vec![a[u], s as f64, y as f64], w[u * 6 + s * 3 + y]));
        }}}
        let joint = FiniteMeasure::from_weighted(3, atoms).unwrap();
        let t = gp_rate_thresholds(&joint, &lattice).unwrap();
        let mut h_uy = 0.0;
        let mut h_y = 0.0;
        for y in 0..3 {
            let py: f64 = (0..3).flat_map(|u| (0..2).map(move |s| (u, s))).map(|(u, s)| w[u * 6 + s * 3 + y]).sum();
            h_y -= py * py.log2();
            for u in 0..3 {
                let m: f64 = (0..2).map(|s| w[u * 6 + s * 3 + y]).sum();
                h_uy -= m * m.log2();
            }
        }
        prop_assert!((t.dec_bound - (3f64.log2() - (h_uy - h_y))).abs() < 1e-9);
        prop_assert!((t.rate - t.rate_mi).abs() < 1e-9);
    }

    /// The WZ test channel acts on `X` only, so `Û - X - S` holds exactly.
    #[test]
    fn wz_joint_is_markov((law, chan) in (pmf(9), pmf(9))) {
        let lattice = LatticeParams::new(1.0, PrimeModulus::new(3).unwrap()).unwrap();
        let a = lattice.alphabet();
        let rows: Vec<Vec<f64>> = (0..3).map(|x| {
            let r = &chan[3 * x..3 * x + 3];
            let t: f64 = r.iter().sum();
            r.iter().map(|m| m / t).collect()
        }).collect();
        let spec = SourceSpec::new(SourceTables {
            lattice,
            sources: a.clone(),
            sides: a.clone(),
            source_law: (0..3).map(|x| law[3 * x..3 * x + 3].to_vec()).collect(),
            test_channel: rows,
            reconstruction: vec![a.clone(); 3],
            distortion: Distortion::Absolute,
            target: 10.0,
        }).unwrap();
        prop_assert!(spec.markov_gap() < 1e-15);
        let t = wz_rate_thresholds(&spec.joint_xsu().unwrap(), &lattice).unwrap();
        prop_assert!((t.rate - t.rate_mi).abs() < 1e-9);
    }

    #[test]
    fn points_round_trip_through_s_prime((p, v) in modulus().prop_flat_map(|p| (Just(p), (1usize..5).prop_flat_map(move |n| vector(p, n)))), k in 0u32..4) {
        let lattice = LatticeParams::new(1.0 / f64::from(1u32 << k), p).unwrap();
        let x = lattice.to_point(&v);
        prop_assert_eq!(lattice.from_point(&x).unwrap(), v.clone());
        let shifted: Vec<f64> = x.coords().iter().map(|c| c + lattice.gamma() * f64::from(p.get()) * 2.0).collect();
        prop_assert!(lattice.mod_member(&shifted, |u| *u == v));
    }
}

/// `|solve_affine(H, c)|` is 0 or `p^(n - rank H)` for every `H`, `c` with
/// `p = 3`, `n <= 3`, `l <= 2`.
#[test]
fn affine_solution_counts_exhaustive() {
    let p = PrimeModulus::new(3).unwrap();
    for n in 1..=3 {
        for l in 1..=2 {
            let mut hs = Lexicographic::new(p, n * l);
            while let Some(h) = hs.advance() {
                let h = ZpMatrix::new(p, l, n, h.to_vec()).unwrap();
                let full = 3u64.pow((n - h.rank()) as u32);
                let mut cs = Lexicographic::new(p, l);
                while let Some(c) = cs.advance() {
                    let count = solve_affine(&h, &ZpVector::new(p, c.to_vec()).unwrap()).unwrap().count().unwrap_or(0);
                    assert!(count == 0 || count == full, "{h:?} {c:?}: {count}");
                }
            }
        }
    }
}

fn outer_codewords(code: &GeneratorNestedCode) -> BTreeSet<Vec<u32>> {
    let p = code.modulus();
    let dims = code.dims();
    let bins = p.checked_pow(dims.k).unwrap();
    (0..bins)
        .flat_map(|m| code.bin(&BinIndex::from_index(p, dims.k, m)).unwrap().map(|u| u.as_slice().to_vec()).collect::<Vec<_>>())
        .collect()
}

#[test]
fn inner_codewords_are_outer_codewords() {
    let p = PrimeModulus::new(3).unwrap();
    let mut rng = trial_stream(31, 0);
    for i in 0..1000u64 {
        let n = 1 + (i % 4) as usize;
        let l = (i / 4 % (n as u64 + 1)) as usize;
        let k = (i / 20 % 2) as usize;
        let code = GeneratorNestedCode::sample(p, CodeDims::new(n, k, l).unwrap(), &mut rng);
        let outer = outer_codewords(&code);
        for u in code.bin(&BinIndex::zero(p, k)).unwrap() {
            assert!(outer.contains(u.as_slice()));
        }
    }
}

#[test]
fn full_rank_bins_partition_the_outer_code() {
    let p = PrimeModulus::new(3).unwrap();
    let mut rng = trial_stream(32, 0);
    let mut checked = 0;
    for (n, k, l) in [(2, 1, 1), (3, 1, 1), (3, 1, 2), (4, 2, 1)] {
        for _ in 0..30 {
            let code = GeneratorNestedCode::sample(p, CodeDims::new(n, k, l).unwrap(), &mut rng);
            if code.stacked_rank() != k + l {
                continue;
            }
            checked += 1;
            let mut seen = BTreeSet::new();
            let mut total = 0;
            for m in 0..p.checked_pow(k).unwrap() {
                for u in code.bin(&BinIndex::from_index(p, k, m)).unwrap() {
                    total += 1;
                    assert!(seen.insert(u.as_slice().to_vec()), "bins overlap");
                }
            }
            assert_eq!(total, 3u64.pow((k + l) as u32));
        }
    }
    assert!(checked > 50);
}

#[test]
fn generator_and_parity_forms_share_the_outer_code() {
    let p = PrimeModulus::new(3).unwrap();
    let mut rng = trial_stream(33, 0);
    for (k, l) in [(1, 1), (1, 0), (0, 2), (2, 1)] {
        for _ in 0..20 {
            let code = GeneratorNestedCode::sample(p, CodeDims::new(3, k, l).unwrap(), &mut rng);
            if code.stacked_rank() != k + l {
                continue;
            }
            let parity = code.to_parity();
            let from_parity: BTreeSet<Vec<u32>> = parity.outer_code().iter().map(|u| u.as_slice().to_vec()).collect();
            assert_eq!(from_parity, outer_codewords(&code));
        }
    }
}

fn parity_codebook(lattice: &LatticeParams, code: &ParityNestedCode, bin: Option<&BinIndex>) -> Vec<LatticePoint> {
    let sols = match bin {
        Some(m) => code.bin(m).unwrap(),
        None => code.outer_code(),
    };
    sols.iter().map(|u| lattice.to_point(&u)).collect()
}

/// Union-of-shifts and mod-p membership agree on a window around `S'`, for
/// whole codes and for single bins.
#[test]
fn lattice_definitions_agree() {
    let mut rng = trial_stream(34, 0);
    for i in 0..100u64 {
        let p = PrimeModulus::new(if i % 2 == 0 { 3 } else { 5 }).unwrap();
        let n = 1 + (i % 3) as usize;
        let lattice = LatticeParams::new(0.5, p).unwrap();
        let dims = CodeDims::new(n, (i / 3 % 2) as usize, (i / 6 % (n as u64)) as usize).unwrap();
        let code = ParityNestedCode::sample(p, dims, &mut rng);
        let outer = parity_codebook(&lattice, &code, None);
        let m = BinIndex::zero(p, dims.k);
        let bin = parity_codebook(&lattice, &code, Some(&m));
        for x in lattice.window(n, 1) {
            let in_outer = |u: &ZpVector| code.membership(u).unwrap() != Membership::Neither;
            assert_eq!(lattice.shift_member(&x, &outer), lattice.mod_member(&x, in_outer));
            let in_bin = |u: &ZpVector| code.membership(u).unwrap() != Membership::Neither && code.bin_index(u).unwrap() == m;
            assert_eq!(lattice.shift_member(&x, &bin), lattice.mod_member(&x, in_bin));
        }
    }
}

#[test]
fn rank_bound_holds_on_every_enumerable_instance() {
    for p in [3, 5] {
        let p = PrimeModulus::new(p).unwrap();
        for n in 1..=3 {
            for l in 0..=3 {
                match verify_rank_distribution(p, n, l) {
                    Ok(r) => assert_eq!(r.verdict, Verdict::ExactMatch, "p={} n={n} l={l}", p.get()),
                    Err(nestlat::Error::InstanceTooLarge { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn uniform_reference_is_uniform() {
    let lattice = LatticeParams::new(0.25, PrimeModulus::new(7).unwrap()).unwrap();
    let u = uniform_reference(&lattice);
    assert_eq!(u.len(), 7);
    assert!(u.atoms().iter().all(|a| (a.mass - 1.0 / 7.0).abs() < 1e-15));
}

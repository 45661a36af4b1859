//! Built-in reference instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::gp::{ChannelSpec, ChannelTables};
use crate::lattice::LatticeParams;
use crate::measures::FiniteMeasure;
use crate::quantize::discretized_bivariate_normal;
use crate::wz::{Distortion, SourceSpec, SourceTables};
use crate::zp::PrimeModulus;

pub const GP_Z3_FLIP01: &str = "gp-z3-flip01";
pub const WZ_Z3_FLIP01: &str = "wz-z3-flip01";
pub const GAUSS_RHO08: &str = "gauss-rho08";
pub const BINARY_EXPONENT_D1: &str = "binary-exponent-d1";

pub const NAMES: [&str; 4] = [GP_Z3_FLIP01, WZ_Z3_FLIP01, GAUSS_RHO08, BINARY_EXPONENT_D1];

/// Default typicality radius for the reference instances.
pub const DEFAULT_EPS: f64 = 0.25;

pub(crate) fn z3() -> LatticeParams {
    LatticeParams::new(1.0, PrimeModulus::new(3).expect("3 is prime")).expect("unit step")
}

/// `[a][b]` table of a ternary symmetric channel keeping the letter with
/// probability `1 - flip`.
pub fn ternary_symmetric(flip: f64) -> Vec<Vec<f64>> {
    (0..3).map(|a| (0..3).map(|b| if a == b { 1.0 - flip } else { flip / 2.0 }).collect()).collect()
}

/// `gp-z3-flip01`: `p = 3`, `γ = 1`, state uniform on `{0, 1}`, `Û`
/// uniform and independent of the state, `X = Û`, and `Y` equal to `X`
/// except that with probability 0.1 it moves to one of the other two
/// letters uniformly. Cost `w(x, s) = x²` with budget `2/3`.
pub fn gp_z3_flip01() -> Result<ChannelSpec> {
    let lattice = z3();
    let alphabet = lattice.alphabet();
    let states = vec![0.0, 1.0];
    let flip = ternary_symmetric(0.1);
    ChannelSpec::new(ChannelTables {
        lattice,
        states: states.clone(),
        state_law: vec![0.5, 0.5],
        aux: vec![vec![1.0 / 3.0; 3]; 2],
        inputs: alphabet.clone(),
        input_map: (0..3).map(|u| vec![(0..3).map(|x| if x == u { 1.0 } else { 0.0 }).collect(); 2]).collect(),
        outputs: alphabet.clone(),
        channel: flip.iter().map(|row| vec![row.clone(); 2]).collect(),
        cost: alphabet.iter().map(|x| vec![x * x; states.len()]).collect(),
        budget: 2.0 / 3.0,
    })
}

/// Flip probability of the side information in `wz-z3-flip01`.
pub const WZ_SIDE_FLIP: f64 = 0.1;
/// Flip probability of the test channel in `wz-z3-flip01`.
pub const WZ_TEST_FLIP: f64 = 0.3;

/// `wz-z3-flip01`: `p = 3`, `γ = 1`, `X` uniform on `{-1, 0, 1}`, `S` a
/// ternary-symmetric copy of `X` with flip probability 0.1, `Û` a
/// ternary-symmetric copy of `X` with flip probability 0.3, squared error,
/// and `f(s, u) = E[X | S = s, Û = u]`. The target distortion is the exact
/// `E d(X, f(S, Û))`.
pub fn wz_z3_flip01() -> Result<SourceSpec> {
    flip_source(WZ_SIDE_FLIP, WZ_TEST_FLIP)
}

/// The `wz-z3-flip01` family with arbitrary flip probabilities.
pub fn flip_source(side_flip: f64, test_flip: f64) -> Result<SourceSpec> {
    let lattice = z3();
    let alphabet = lattice.alphabet();
    let source_law: Vec<Vec<f64>> =
        ternary_symmetric(side_flip).iter().map(|row| row.iter().map(|m| m / 3.0).collect()).collect();
    let test_channel = ternary_symmetric(test_flip);
    let reconstruction = (0..3)
        .map(|s| {
            (0..3)
                .map(|u| {
                    let w: Vec<f64> = (0..3).map(|x| source_law[x][s] * test_channel[x][u]).collect();
                    let total: f64 = w.iter().sum();
                    if total > 0.0 {
                        w.iter().zip(&alphabet).map(|(m, a)| m * a).sum::<f64>() / total
                    } else {
                        alphabet[u]
                    }
                })
                .collect()
        })
        .collect();
    let mut tables = SourceTables {
        lattice,
        sources: alphabet.clone(),
        sides: alphabet,
        source_law,
        test_channel,
        reconstruction,
        distortion: Distortion::Squared,
        target: f64::INFINITY,
    };
    tables.target = SourceSpec::new(tables.clone())?.expected_distortion();
    SourceSpec::new(tables)
}

/// Correlation of `gauss-rho08`.
pub const GAUSS_RHO: f64 = 0.8;
/// Grid points per axis and half-width of the `gauss-rho08` discretization.
pub const GAUSS_POINTS: usize = 201;
pub const GAUSS_SPAN: f64 = 5.0;

/// `gauss-rho08`: standard bivariate normal with correlation 0.8 on a
/// `201 x 201` grid over `[-5, 5]^2`.
pub fn gauss_rho08() -> Result<FiniteMeasure> {
    discretized_bivariate_normal(GAUSS_RHO, GAUSS_POINTS, GAUSS_SPAN)
}

/// The `binary-exponent-d1` setup: `P_XY` with `X = Y` uniform on `{0, 1}`
/// and `P_Z` uniform on `{0, 1}`, so `D(P_XY || P_Z P_Y) = 1` bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentInstance {
    pub joint: FiniteMeasure,
    pub reference: FiniteMeasure,
}

pub fn binary_exponent_d1() -> ExponentInstance {
    ExponentInstance {
        joint: FiniteMeasure::from_weighted(2, [(vec![0.0, 0.0], 0.5), (vec![1.0, 1.0], 0.5)])
            .expect("valid masses"),
        reference: FiniteMeasure::from_weighted(1, [(vec![0.0], 0.5), (vec![1.0], 0.5)]).expect("valid masses"),
    }
}

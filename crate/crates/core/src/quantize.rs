//! Dyadic quantization and clipping of continuous alphabets.
//!
//! Continuous laws enter as fine-grid [`FiniteMeasure`]s, so every
//! convergence statement below is a finite computation against that
//! reference.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measures::{mutual_information_split, prokhorov_distance, FiniteMeasure};
use crate::zp::{smallest_prime_above, PrimeModulus};

/// Largest prime used by [`default_schedule`].
pub const SCHEDULE_PRIME_CAP: u32 = 1021;

/// The quantizer `Q_{γ,p}`: points `a_i = γ(i - (p-1)/2)` and cells
/// `A_0 = (-inf, a_0]`, `A_i = (a_{i-1}, a_i]`, `A_{p-1} = (a_{p-2}, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicQuantizer {
    gamma: f64,
    p: PrimeModulus,
    points: Vec<f64>,
}

impl DyadicQuantizer {
    pub fn new(gamma: f64, p: PrimeModulus) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter("step size must be positive and finite"));
        }
        let half = f64::from(p.half());
        let points = (0..p.get()).map(|i| gamma * (f64::from(i) - half)).collect();
        Ok(DyadicQuantizer { gamma, p, points })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the cell containing `u`.
    pub fn cell(&self, u: f64) -> usize {
        let last = self.points.len() - 1;
        let guess = libm::ceil((u - self.points[0]) / self.gamma);
        let mut i = if guess <= 0.0 {
            0
        } else if guess >= last as f64 {
            last
        } else {
            guess as usize
        };
        // Settle rounding with exact comparisons against the stored points.
        while i > 0 && u <= self.points[i - 1] {
            i -= 1;
        }
        while i < last && u > self.points[i] {
            i += 1;
        }
        i
    }

    pub fn quantize(&self, u: f64) -> f64 {
        self.points[self.cell(u)]
    }
}

/// `sign(x) * min(l, |x|)`.
pub fn clip_value(x: f64, level: f64) -> f64 {
    debug_assert!(level > 0.0);
    x.clamp(-level, level)
}

/// Pushforward of `measure` with coordinate `axis` quantized.
pub fn quantize_axis(measure: &FiniteMeasure, axis: usize, q: &DyadicQuantizer) -> Result<FiniteMeasure> {
    quantize_axes(measure, &[axis], q)
}

/// Pushforward of `measure` with every listed coordinate quantized.
pub fn quantize_axes(measure: &FiniteMeasure, axes: &[usize], q: &DyadicQuantizer) -> Result<FiniteMeasure> {
    check_axes(measure, axes)?;
    measure.map_points(measure.dim(), |pt| {
        let mut out = pt.to_vec();
        for &a in axes {
            out[a] = q.quantize(out[a]);
        }
        out
    })
}

/// Pushforward of `measure` with coordinate `axis` clipped at `level`.
pub fn clip_axis(measure: &FiniteMeasure, axis: usize, level: f64) -> Result<FiniteMeasure> {
    check_axes(measure, &[axis])?;
    if !(level > 0.0) {
        return Err(Error::InvalidParameter("clipping level must be positive"));
    }
    measure.map_points(measure.dim(), |pt| {
        let mut out = pt.to_vec();
        out[axis] = clip_value(out[axis], level);
        out
    })
}

fn check_axes(measure: &FiniteMeasure, axes: &[usize]) -> Result<()> {
    match axes.iter().find(|&&a| a >= measure.dim()) {
        Some(&a) => Err(Error::DimensionMismatch { expected: measure.dim(), found: a + 1 }),
        None => Ok(()),
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / core::f64::consts::SQRT_2))
}

/// Evenly spaced grid of `points` values on `[-span, span]`.
pub fn grid(points: usize, span: f64) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|j| -span + (2.0 * span * j as f64) / last).collect()
}

/// Standard normal law discretized on `points` grid values over
/// `[-span, span]`: each point carries the mass of its midpoint cell and the
/// end points absorb the tails.
pub fn discretized_normal(points: usize, span: f64) -> Result<FiniteMeasure> {
    if points < 2 {
        return Err(Error::InvalidParameter("a grid needs at least two points"));
    }
    let xs = grid(points, span);
    let h = 2.0 * span / (points - 1) as f64;
    let masses = xs.iter().enumerate().map(|(j, &x)| {
        let lo = if j == 0 { 0.0 } else { normal_cdf(x - h / 2.0) };
        let hi = if j + 1 == points { 1.0 } else { normal_cdf(x + h / 2.0) };
        hi - lo
    });
    FiniteMeasure::from_weighted(1, xs.iter().map(|&x| alloc::vec![x]).zip(masses))
}

/// Standard bivariate normal with correlation `rho` on a `points x points`
/// grid over `[-span, span]^2`, masses proportional to the density.
pub fn discretized_bivariate_normal(rho: f64, points: usize, span: f64) -> Result<FiniteMeasure> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidParameter("correlation must lie in (-1, 1)"));
    }
    if points < 2 {
        return Err(Error::InvalidParameter("a grid needs at least two points"));
    }
    let xs = grid(points, span);
    let scale = 1.0 / (2.0 * (1.0 - rho * rho));
    let mut weighted = Vec::with_capacity(points * points);
    let mut total = 0.0;
    for &x in &xs {
        for &y in &xs {
            let w = libm::exp(-(x * x - 2.0 * rho * x * y + y * y) * scale);
            total += w;
            weighted.push((alloc::vec![x, y], w));
        }
    }
    FiniteMeasure::from_weighted(2, weighted.into_iter().map(|(pt, w)| (pt, w / total)))
}

/// `I(X;Y) = -½ log2(1 - ρ²)` for a bivariate normal.
pub fn gaussian_mutual_information(rho: f64) -> f64 {
    -0.5 * libm::log2(1.0 - rho * rho)
}

/// One step `(n, γ_n, p_n)` of a refinement schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementStep {
    pub step: u32,
    pub gamma: f64,
    pub p: PrimeModulus,
}

/// `γ_n = 2^-n` with `p_n` the smallest prime above `2^(2n)`, capped at
/// [`SCHEDULE_PRIME_CAP`], for `n` in `first..=last` (`first >= 1`).
pub fn default_schedule(first: u32, last: u32) -> Result<Vec<RefinementStep>> {
    if first == 0 || first > last || last > 30 {
        return Err(Error::InvalidParameter("schedule steps must satisfy 1 <= first <= last <= 30"));
    }
    (first..=last)
        .map(|n| {
            let candidate = smallest_prime_above(1u64 << (2 * n))?;
            let p = if candidate.get() > SCHEDULE_PRIME_CAP {
                PrimeModulus::new(SCHEDULE_PRIME_CAP)?
            } else {
                candidate
            };
            Ok(RefinementStep { step: n, gamma: libm::ldexp(1.0, -(n as i32)), p })
        })
        .collect()
}

/// One row of a refinement sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub step: u32,
    pub gamma: f64,
    pub p: u32,
    pub mi_bits: f64,
    pub prokhorov_to_ref: f64,
}

/// Quantizes `axes` of `reference` at each step of `schedule` and reports
/// the mutual information between the first `split` coordinates and the
/// rest, together with the Prokhorov distance back to the reference.
pub fn mi_refinement_sweep(
    reference: &FiniteMeasure,
    split: usize,
    axes: &[usize],
    schedule: &[RefinementStep],
) -> Result<Vec<SweepPoint>> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("schedule must not be empty"));
    }
    schedule
        .iter()
        .map(|s| {
            let q = DyadicQuantizer::new(s.gamma, s.p)?;
            let quantized = quantize_axes(reference, axes, &q)?;
            Ok(SweepPoint {
                step: s.step,
                gamma: s.gamma,
                p: s.p.get(),
                mi_bits: mutual_information_split(&quantized, split)?,
                prokhorov_to_ref: prokhorov_distance(&quantized, reference)?,
            })
        })
        .collect()
}

/// `(level, I)` with coordinate `axis` of `reference` clipped at each level.
pub fn clipping_sweep(reference: &FiniteMeasure, split: usize, axis: usize, levels: &[f64]) -> Result<Vec<(f64, f64)>> {
    levels
        .iter()
        .map(|&l| Ok((l, mutual_information_split(&clip_axis(reference, axis, l)?, split)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::mutual_information;
    use alloc::vec;

    fn q(gamma: f64, p: u32) -> DyadicQuantizer {
        DyadicQuantizer::new(gamma, PrimeModulus::new(p).unwrap()).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let q3 = q(1.0, 3);
        assert_eq!(q3.points(), &[-1.0, 0.0, 1.0]);
        assert_eq!(q3.quantize(0.5), 1.0);
        assert_eq!(q3.quantize(-1.0), -1.0);
        assert_eq!(q3.quantize(-7.0), -1.0);
        assert_eq!(q3.quantize(-0.999), 0.0);
        assert_eq!(q3.quantize(1e9), 1.0);
        for qq in [q(0.1, 7), q(0.37, 11), q(1.0 / 64.0, 1021)] {
            for &a in qq.points() {
                assert_eq!(qq.quantize(a), a);
            }
        }
    }

    #[test]
    fn cells_partition_the_line() {
        let qq = q(0.25, 5);
        let mut prev = 0;
        for k in -400..400 {
            let u = f64::from(k) * 0.0037;
            let c = qq.cell(u);
            assert!(c >= prev, "cells must be ordered");
            prev = c;
            let lo = if c == 0 { f64::NEG_INFINITY } else { qq.points()[c - 1] };
            let hi = if c == 4 { f64::INFINITY } else { qq.points()[c] };
            assert!(lo < u && u <= hi);
        }
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_value(-7.2, 5.0), -5.0);
        assert_eq!(clip_value(3.0, 5.0), 3.0);
        assert_eq!(clip_value(0.0, 2.0), 0.0);
    }

    #[test]
    fn quantize_axis_is_identity_on_grid_and_preserves_mass() {
        let qq = q(0.5, 5);
        let m = FiniteMeasure::from_weighted(2, [(vec![-0.5, 3.3], 0.4), (vec![1.0, -2.1], 0.6)]).unwrap();
        assert_eq!(quantize_axis(&m, 0, &qq).unwrap(), m);
        let moved = quantize_axis(&m, 1, &qq).unwrap();
        assert!((moved.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(moved.atoms()[0].point, vec![-0.5, 1.0]);
        assert!(quantize_axis(&m, 2, &qq).is_err());
    }

    #[test]
    fn gaussian_cell_masses() {
        let normal = discretized_normal(1001, 5.0).unwrap();
        let quantized = quantize_axis(&normal, 0, &q(1.0, 3)).unwrap();
        // Cells (-inf, -1], (-1, 0], (0, inf); the grid point at -1 falls in
        // the closed lower cell and carries half a grid step of extra mass.
        let oracle = [normal_cdf(-1.0), normal_cdf(0.0) - normal_cdf(-1.0), 1.0 - normal_cdf(0.0)];
        assert!((oracle[0] - 0.1587).abs() < 1e-4 && (oracle[1] - 0.3413).abs() < 1e-4);
        for (atom, want) in quantized.atoms().iter().zip(oracle) {
            assert!((atom.mass - want).abs() < 5e-3, "{} vs {want}", atom.mass);
        }
    }

    #[test]
    fn schedule_follows_smallest_prime_rule() {
        let s = default_schedule(1, 6).unwrap();
        let ps: Vec<u32> = s.iter().map(|r| r.p.get()).collect();
        assert_eq!(ps, vec![5, 17, 67, 257, 1021, 1021]);
        assert_eq!(s[5].gamma, 1.0 / 64.0);
        assert!(default_schedule(0, 3).is_err());
    }

    #[test]
    fn sweep_on_discrete_and_independent_joints() {
        // Already on a coarse grid: constant once γ resolves it.
        let joint = FiniteMeasure::from_weighted(
            2,
            [(vec![-1.0, -1.0], 0.3), (vec![-1.0, 1.0], 0.2), (vec![1.0, -1.0], 0.1), (vec![1.0, 1.0], 0.4)],
        )
        .unwrap();
        let exact = mutual_information(&joint).unwrap();
        let sweep = mi_refinement_sweep(&joint, 1, &[0, 1], &default_schedule(1, 4).unwrap()).unwrap();
        for row in &sweep {
            assert!((row.mi_bits - exact).abs() < 1e-12);
            assert!(row.prokhorov_to_ref < 1e-12);
        }
        let indep = FiniteMeasure::from_weighted(1, [(vec![-0.3], 0.5), (vec![0.8], 0.5)])
            .unwrap()
            .product(&discretized_normal(21, 3.0).unwrap());
        for row in mi_refinement_sweep(&indep, 1, &[0, 1], &default_schedule(1, 3).unwrap()).unwrap() {
            assert!(row.mi_bits.abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_gaussian_sweep_is_monotone() {
        let reference = discretized_bivariate_normal(0.8, 41, 5.0).unwrap();
        let i_ref = mutual_information(&reference).unwrap();
        let sweep = mi_refinement_sweep(&reference, 1, &[0, 1], &default_schedule(1, 4).unwrap()).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].mi_bits >= w[0].mi_bits - 1e-9);
        }
        assert!(sweep.iter().all(|r| r.mi_bits <= i_ref + 1e-9));
        let clipped = clipping_sweep(&reference, 1, 1, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!((clipped[3].1 - i_ref).abs() < 1e-12);
    }
}

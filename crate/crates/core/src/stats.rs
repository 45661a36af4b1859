//! Small statistics helpers for Monte Carlo summaries.

use rand::Rng;

use crate::error::{Error, Result};

/// Two-sided normal quantile used for 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Standard error of a proportion, `sqrt(p(1-p)/n)`.
pub fn binomial_std_error(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    libm::sqrt(p * (1.0 - p) / trials as f64)
}

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.m2 / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Half-width of a normal-approximation interval for the mean.
    pub fn half_width(&self, z: f64) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            z * libm::sqrt(self.sample_variance() / self.count as f64)
        }
    }
}

impl Extend<f64> for Moments {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        iter.into_iter().for_each(|x| self.push(x));
    }
}

/// Checks that `pmf` is a probability vector within `1e-12`.
pub fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidMeasure("empty probability vector"));
    }
    if pmf.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
        return Err(Error::InvalidMeasure("probabilities must be finite and non-negative"));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMeasure("probabilities must sum to one"));
    }
    Ok(())
}

/// Draws an index from a probability vector by inversion.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, pmf: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &m) in pmf.iter().enumerate() {
        acc += m;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    pmf.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
    }

    #[test]
    fn moments_match_direct_formulas() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let mut m = Moments::default();
        m.extend(xs);
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((m.mean() - mean).abs() < 1e-12);
        assert!((m.variance() - var).abs() < 1e-12);
        assert!(Moments::default().mean().is_nan());
    }

    #[test]
    fn sampling_frequencies() {
        let pmf = [0.2, 0.0, 0.5, 0.3];
        let mut rng = trial_stream(3, 0);
        let mut counts = [0u32; 4];
        let trials: u32 = 100_000;
        for _ in 0..trials {
            counts[sample_index(&mut rng, &pmf)] += 1;
        }
        assert_eq!(counts[1], 0);
        for (c, m) in counts.iter().zip(pmf) {
            let f = f64::from(*c) / f64::from(trials);
            assert!((f - m).abs() <= 5.0 * binomial_std_error(m, trials.into()) + 1e-12);
        }
    }

    #[test]
    fn pmf_checks() {
        assert!(check_pmf(&[0.5, 0.5]).is_ok());
        assert!(check_pmf(&[0.5, 0.6]).is_err());
        assert!(check_pmf(&[-0.1, 1.1]).is_err());
        assert!(check_pmf(&[]).is_err());
    }
}

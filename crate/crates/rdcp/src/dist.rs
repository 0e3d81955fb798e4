//! Degree-constraint distribution `p` on `{2, ..., delta}` and its derived
//! quantities: the tail `q_k = sum_{d >= k} p_d`, the mean `E(D)` and the
//! inverse factorial moment `E(1/D!)` that controls the critical-time
//! asymptotics.

use crate::{Error, Result};

/// Law of the i.i.d. degree constraints.
///
/// Immutable after construction; probabilities are stored in double
/// precision and the tail is accumulated backwards so that
/// `q_k - q_{k+1} == p_k` holds exactly in floating point.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    /// `pmf[k]` is `p_k`; entries `0..2` are zero by convention.
    pmf: Vec<f64>,
    /// Largest `k` with positive mass.
    delta_max: usize,
    /// `tail[k]` is `q_k` for `k in 1..=delta_max + 1`; `tail[0]` unused (= 1).
    tail: Vec<f64>,
    /// Sampling cumulative: `cum[i]` is `P(D <= i)`.
    cum: Vec<f64>,
}

impl DegreeDistribution {
    /// Build a distribution from `(k, weight)` pairs. Weights are
    /// normalized, so integer ratios like `[(2, 1.0), (4, 3.0)]` are fine.
    pub fn from_pmf(entries: &[(usize, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("no entries".into()));
        }
        let mut delta_max = 0usize;
        for &(k, w) in entries {
            if k < 2 {
                return Err(Error::InvalidDistribution(format!(
                    "constraint {k} < 2; constraints live on {{2,3,...}}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {w} for constraint {k} is negative or not finite"
                )));
            }
            if w > 0.0 {
                delta_max = delta_max.max(k);
            }
        }
        if delta_max == 0 {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        let mut pmf = vec![0.0; delta_max + 1];
        for &(k, w) in entries {
            if w > 0.0 {
                pmf[k] += w;
            }
        }
        let total: f64 = pmf.iter().sum();
        for p in pmf.iter_mut() {
            *p /= total;
        }
        // Backward summation avoids cancellation in the tail table. The pmf
        // is then redefined as adjacent tail differences so that
        // q_k - q_{k+1} == p_k holds exactly in floating point.
        let mut tail = vec![0.0; delta_max + 2];
        for k in (1..=delta_max).rev() {
            tail[k] = tail[k + 1] + pmf[k];
        }
        tail[0] = 1.0;
        tail[1] = tail[2];
        for k in 2..=delta_max {
            pmf[k] = tail[k] - tail[k + 1];
        }
        let mut cum = vec![0.0; delta_max + 1];
        let mut acc = 0.0;
        for k in 0..=delta_max {
            acc += pmf[k];
            cum[k] = acc;
        }
        Ok(Self { pmf, delta_max, tail, cum })
    }

    /// Parse the CLI text form: comma-separated `k:weight` pairs, e.g.
    /// `3:1` or `2:0.5,4:0.5`.
    pub fn from_spec_str(spec: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in spec.split(',') {
            let part = part.trim();
            let (k, w) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad dist entry `{part}`, want k:weight")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad constraint `{k}` in `{spec}`")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight `{w}` in `{spec}`")))?;
            entries.push((k, w));
        }
        Self::from_pmf(&entries)
    }

    /// `p_k`, zero outside `2..=delta_max`.
    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// `q_k = P(D >= k)`; `q_1 = q_2 = 1` and `q_{delta+1} = 0`.
    pub fn tail(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.tail.get(k).copied().unwrap_or(0.0)
        }
    }

    /// Largest constraint with positive probability.
    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    /// Smallest constraint with positive probability.
    pub fn min_support(&self) -> usize {
        (2..=self.delta_max).find(|&k| self.pmf[k] > 0.0).unwrap_or(self.delta_max)
    }

    /// `E(D)`.
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `E(1/D!)`.
    pub fn inv_factorial_moment(&self) -> f64 {
        let mut fact = 1.0;
        let mut sum = 0.0;
        for k in 0..=self.delta_max {
            if k > 0 {
                fact *= k as f64;
            }
            sum += self.pmf[k] / fact;
        }
        sum
    }

    /// Draw one constraint; always in `[2, delta_max]`.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> usize {
        let u: f64 = rng.random();
        // Linear scan is fine: delta_max is small by assumption.
        for k in 2..=self.delta_max {
            if u < self.cum[k] {
                return k;
            }
        }
        self.delta_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn point_mass() {
        let d = DegreeDistribution::from_pmf(&[(3, 1.0)]).unwrap();
        assert_eq!(d.delta_max(), 3);
        assert_eq!(d.pmf(3), 1.0);
        assert_eq!(d.tail(3), 1.0);
        assert_eq!(d.tail(4), 0.0);
        assert_eq!(d.mean(), 3.0);
        assert!((d.inv_factorial_moment() - 1.0 / 6.0).abs() < 1e-15);
        let mut rng = stream_rng(1, 0);
        for _ in 0..32 {
            assert_eq!(d.sample(&mut rng), 3);
        }
    }

    #[test]
    fn normalization_and_tail() {
        let d = DegreeDistribution::from_pmf(&[(2, 1.0), (4, 1.0)]).unwrap();
        assert_eq!(d.pmf(2), 0.5);
        assert_eq!(d.pmf(4), 0.5);
        assert_eq!(d.tail(3), 0.5);
        assert_eq!(d.tail(4), 0.5);
        assert_eq!(d.mean(), 3.0);
        assert!((d.inv_factorial_moment() - (0.5 / 2.0 + 0.5 / 24.0)).abs() < 1e-15);
    }

    #[test]
    fn inv_factorial_large_point_mass() {
        let d = DegreeDistribution::from_pmf(&[(8, 1.0)]).unwrap();
        assert!((d.inv_factorial_moment() - 1.0 / 40320.0).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DegreeDistribution::from_pmf(&[(1, 1.0)]).is_err());
        assert!(DegreeDistribution::from_pmf(&[(2, 0.0)]).is_err());
        assert!(DegreeDistribution::from_pmf(&[(2, -1.0)]).is_err());
        assert!(DegreeDistribution::from_pmf(&[]).is_err());
    }

    #[test]
    fn parses_spec_strings() {
        let d = DegreeDistribution::from_spec_str("2:0.5,4:0.5").unwrap();
        assert_eq!(d.pmf(2), 0.5);
        assert!(DegreeDistribution::from_spec_str("3:1").is_ok());
        assert!(DegreeDistribution::from_spec_str("1:1").is_err());
        assert!(DegreeDistribution::from_spec_str("3").is_err());
        assert!(DegreeDistribution::from_spec_str("3:x").is_err());
    }

    #[test]
    fn sample_frequency_ci() {
        // Binomial CI check: frequency of 2 in 0.5 +- 0.002 over 1e6 draws.
        let d = DegreeDistribution::from_pmf(&[(2, 0.5), (4, 0.5)]).unwrap();
        let mut rng = stream_rng(42, 0);
        let n = 1_000_000;
        let twos = (0..n).filter(|_| d.sample(&mut rng) == 2).count();
        let freq = twos as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn sample_histogram_tv() {
        // TV distance <= 3*sqrt(delta/N) at N = 1e6.
        let d = DegreeDistribution::from_pmf(&[(2, 1.0), (3, 2.0), (5, 3.0), (7, 0.5)]).unwrap();
        let mut rng = stream_rng(9, 0);
        let n = 1_000_000usize;
        let mut counts = vec![0usize; d.delta_max() + 1];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        let tv: f64 = (0..=d.delta_max())
            .map(|k| (counts[k] as f64 / n as f64 - d.pmf(k)).abs())
            .sum::<f64>()
            / 2.0;
        let bound = 3.0 * (d.delta_max() as f64 / n as f64).sqrt();
        assert!(tv <= bound, "tv {tv} bound {bound}");
    }

    proptest! {
        #[test]
        fn tail_minus_tail_is_pmf(weights in proptest::collection::vec(0.0f64..10.0, 2..12)) {
            let entries: Vec<(usize, f64)> =
                weights.iter().enumerate().map(|(i, &w)| (i + 2, w)).collect();
            prop_assume!(entries.iter().any(|&(_, w)| w > 0.0));
            let d = DegreeDistribution::from_pmf(&entries).unwrap();
            let total: f64 = (2..=d.delta_max()).map(|k| d.pmf(k)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!((d.tail(1) - 1.0).abs() < 1e-12);
            prop_assert!((d.tail(2) - 1.0).abs() < 1e-12);
            for k in 2..=d.delta_max() {
                prop_assert_eq!(d.tail(k) - d.tail(k + 1), d.pmf(k));
                prop_assert!(d.tail(k) >= d.tail(k + 1));
            }
            prop_assert_eq!(d.tail(d.delta_max() + 1), 0.0);
        }

        #[test]
        fn samples_stay_in_support(seed in 0u64..1000) {
            let d = DegreeDistribution::from_pmf(&[(2, 0.3), (5, 0.7)]).unwrap();
            let mut rng = stream_rng(seed, 0);
            for _ in 0..64 {
                let k = d.sample(&mut rng);
                prop_assert!(k == 2 || k == 5);
            }
        }
    }
}

//! Empirical tail of the condition number over Kostlan random systems,
//! compared with the theoretical bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DEFAULT_POINT_BUDGET;
use crate::par;
use crate::pointestimates::kappa_upper_estimate;
use crate::polysys::{binomial, sample_kostlan};

/// `4e m^{n+2} (n+1) D^{n+1} N / t`, capped at 1.
pub fn theoretical_tail_bound(n: usize, m: usize, max_degree: u32, coeff_dim: u128, t: f64) -> f64 {
    let n = n as f64;
    let v = 4.0
        * std::f64::consts::E
        * (m as f64).powf(n + 2.0)
        * (n + 1.0)
        * f64::from(max_degree).powf(n + 1.0)
        * coeff_dim as f64
        / t;
    v.min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    /// Fraction of samples whose estimate is at least the threshold.
    pub empirical: Vec<f64>,
    pub bound: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub mean_log2_kappa: f64,
}

impl TailReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "empirical", "bound", "samples", "seed"]).expect("write to memory");
        for i in 0..self.thresholds.len() {
            w.write_record([
                self.thresholds[i].to_string(),
                self.empirical[i].to_string(),
                self.bound[i].to_string(),
                self.samples.to_string(),
                self.seed.to_string(),
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

/// Samples `f` from the Kostlan ensemble with seeds `seed + i`, estimates
/// `kappa(f)` from below on the mesh `2^-k`, and tabulates exceedances.
/// The estimate never exceeds the true value, so only the one-sided check
/// `empirical <= bound` is meaningful.
pub fn empirical_tail(
    n: usize,
    degrees: &[u32],
    samples: usize,
    thresholds: &[f64],
    k: u32,
    seed: u64,
) -> Result<TailReport> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if degrees.is_empty() {
        return Err(Error::InvalidShape("at least one degree is required".into()));
    }
    if thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Precondition("thresholds must be positive".into()));
    }
    let seeds: Vec<u64> = (0..samples as u64).map(|i| seed.wrapping_add(i)).collect();
    let estimates = par::map_vec(seeds, |s| {
        let f = sample_kostlan(n, degrees, s)?;
        kappa_upper_estimate(&f, k, DEFAULT_POINT_BUDGET)
    });
    let estimates: Vec<f64> = estimates.into_iter().collect::<Result<_>>()?;
    let m = degrees.len();
    let max_degree = *degrees.iter().max().expect("nonempty");
    let coeff_dim: u128 = degrees.iter().map(|&d| binomial(n as u64 + u64::from(d), u64::from(d))).sum();
    let empirical =
        thresholds.iter().map(|&t| estimates.iter().filter(|&&e| e >= t).count() as f64 / samples as f64).collect();
    let bound = thresholds.iter().map(|&t| theoretical_tail_bound(n, m, max_degree, coeff_dim, t)).collect();
    let mean_log2_kappa = estimates.iter().map(|e| e.log2()).sum::<f64>() / samples as f64;
    Ok(TailReport { thresholds: thresholds.to_vec(), empirical, bound, samples, seed, mean_log2_kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bound_examples() {
        let b = theoretical_tail_bound(1, 1, 2, 3, 1000.0);
        assert_relative_eq!(b, 96.0 * std::f64::consts::E / 1000.0, max_relative = 1e-14);
        assert!((b - 0.2609).abs() < 1e-4);
        assert!(theoretical_tail_bound(1, 1, 2, 3, 1e12) < 1e-6);
        assert_eq!(theoretical_tail_bound(1, 1, 2, 3, 100.0), 1.0);
    }

    #[test]
    fn no_samples() {
        assert_eq!(empirical_tail(1, &[2], 0, &[10.0], 3, 0), Err(Error::NoSamples));
    }

    #[test]
    fn small_report_is_monotone_and_reproducible() {
        let ts = [1.0, 2.0, 5.0, 50.0];
        let a = empirical_tail(1, &[2], 64, &ts, 3, 7).unwrap();
        assert!(a.empirical.windows(2).all(|w| w[0] >= w[1]));
        assert!(a.empirical.iter().all(|e| (0.0..=1.0).contains(e)));
        assert_eq!(a, empirical_tail(1, &[2], 64, &ts, 3, 7).unwrap());
        let csv = a.to_csv();
        assert!(csv.starts_with("t,empirical,bound,samples,seed\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}

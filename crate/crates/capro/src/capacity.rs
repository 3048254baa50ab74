//! Per-pod QPS capacity: a normal distribution fitted to per-instance
//! processed-QPS observations, with the three-sigma point as the capacity
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CAPACITY_SAMPLES: usize = 30;

/// Fitted per-pod QPS capacity. `threshold = mu + 3 * sigma` always holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityModel {
    pub mu: f64,
    pub sigma: f64,
    pub threshold: f64,
    /// Reported diagnostic only; the threshold is what sizing uses.
    pub median: f64,
    pub active_hours: Option<(u8, u8)>,
    pub n_samples: usize,
}

impl CapacityModel {
    /// Build directly from known distribution parameters.
    pub fn from_params(mu: f64, sigma: f64) -> Result<Self> {
        if sigma < 0.0 || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("bad capacity params mu={} sigma={}", mu, sigma)));
        }
        let threshold = mu + 3.0 * sigma;
        if threshold <= 0.0 {
            return Err(Error::NonPositiveThreshold(threshold));
        }
        Ok(Self { mu, sigma, threshold, median: mu, active_hours: None, n_samples: 0 })
    }

    pub fn to_json(&self, w: impl std::io::Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json(r: impl std::io::Read) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Fit mu/sigma to per-instance QPS samples, optionally keeping only
/// samples whose timestamp falls inside `[start_hour, end_hour)` local
/// hours. Anomaly removal is one 3-sigma trim of a first-pass fit followed
/// by a single refit.
pub fn fit_capacity(samples: &[(i64, f64)], active_hours: Option<(u8, u8)>) -> Result<CapacityModel> {
    let filtered: Vec<f64> = match active_hours {
        Some((start, end)) => samples
            .iter()
            .filter(|&&(ts, _)| {
                let hour = (ts.rem_euclid(86_400) / 3_600) as u8;
                hour >= start && hour < end
            })
            .map(|&(_, q)| q)
            .collect(),
        None => samples.iter().map(|&(_, q)| q).collect(),
    };
    fit_capacity_values(&filtered, active_hours)
}

pub fn fit_capacity_values(values: &[f64], active_hours: Option<(u8, u8)>) -> Result<CapacityModel> {
    if values.len() < MIN_CAPACITY_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_CAPACITY_SAMPLES, got: values.len() });
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidConfig(format!("capacity samples must be finite and >= 0, got {}", bad)));
    }
    let (mean0, std0) = mean_and_std(values);
    let kept: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| (v - mean0).abs() <= 3.0 * std0)
        .collect();
    let kept = if kept.len() >= MIN_CAPACITY_SAMPLES { kept } else { values.to_vec() };
    let (mu, sigma) = mean_and_std(&kept);
    let threshold = mu + 3.0 * sigma;
    if threshold <= 0.0 {
        return Err(Error::NonPositiveThreshold(threshold));
    }
    let mut sorted = kept.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(CapacityModel {
        mu,
        sigma,
        threshold,
        median: median(&sorted),
        active_hours,
        n_samples: kept.len(),
    })
}

/// Replicas needed to cover `total_qps`: ceil(qps / threshold). Zero
/// demand maps to zero replicas; callers apply their own minimum.
pub fn demand_to_replicas(model: &CapacityModel, total_qps: f64) -> Result<u32> {
    if model.threshold <= 0.0 {
        return Err(Error::NonPositiveThreshold(model.threshold));
    }
    if total_qps <= 0.0 {
        return Ok(0);
    }
    Ok((total_qps / model.threshold).ceil() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    #[test]
    fn paper_threshold_from_exact_moments() {
        // construct samples with exact mean 573.7 and std 65.9
        let n = 100;
        let base: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // base has mean 0, sample std s
        let (m, s) = mean_and_std(&base);
        assert_eq!(m, 0.0);
        let values: Vec<f64> = base.iter().map(|b| 573.7 + b * 65.9 / s).collect();
        let cm = fit_capacity_values(&values, None).unwrap();
        assert!((cm.mu - 573.7).abs() < 1e-9);
        assert!((cm.sigma - 65.9).abs() < 1e-9);
        assert!((cm.threshold - 771.4).abs() < 1e-9);
    }

    #[test]
    fn degenerate_constant_samples() {
        let values = vec![500.0; 40];
        let cm = fit_capacity_values(&values, None).unwrap();
        assert_eq!(cm.mu, 500.0);
        assert_eq!(cm.sigma, 0.0);
        assert_eq!(cm.threshold, 500.0);
        assert_eq!(cm.median, 500.0);
    }

    #[test]
    fn normal_draws_recover_threshold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let normal = rand_distr::Normal::new(573.7f64, 65.9).unwrap();
        let values: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng).max(0.0)).collect();
        let cm = fit_capacity_values(&values, None).unwrap();
        assert!((cm.threshold - 771.4).abs() / 771.4 < 0.02, "threshold {}", cm.threshold);
        // threshold inside the sample range for approximately normal data
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(cm.threshold >= min && cm.threshold <= max);
    }

    #[test]
    fn too_few_samples_rejected() {
        let values = vec![100.0; 29];
        assert!(matches!(
            fit_capacity_values(&values, None),
            Err(Error::TooFewSamples { needed: 30, got: 29 })
        ));
    }

    #[test]
    fn active_hours_filter() {
        // one sample per hour over three days, 8:00-20:00 filter keeps 36
        let samples: Vec<(i64, f64)> = (0..72).map(|h| (h * 3600, 500.0 + h as f64)).collect();
        let fitted = fit_capacity(&samples, Some((8, 20))).unwrap();
        assert_eq!(fitted.n_samples, 36);
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let normal = rand_distr::Normal::new(500.0f64, 40.0).unwrap();
        let values: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng).max(0.0)).collect();
        let mut rev = values.clone();
        rev.reverse();
        let a = fit_capacity_values(&values, None).unwrap();
        let b = fit_capacity_values(&rev, None).unwrap();
        assert!((a.threshold - b.threshold).abs() < 1e-9);
    }

    #[test]
    fn anomaly_trimming_drops_outlier() {
        let mut values = vec![500.0, 510.0, 490.0, 505.0, 495.0]
            .into_iter()
            .cycle()
            .take(60)
            .collect::<Vec<_>>();
        values.push(50_000.0);
        let cm = fit_capacity_values(&values, None).unwrap();
        assert_eq!(cm.n_samples, 60);
        assert!(cm.mu < 600.0);
    }

    #[test]
    fn demand_ceiling() {
        let cm = CapacityModel::from_params(573.7, 65.9).unwrap();
        assert!((cm.threshold - 771.4).abs() < 1e-9);
        assert_eq!(demand_to_replicas(&cm, 771.4).unwrap(), 1);
        assert_eq!(demand_to_replicas(&cm, 771.5).unwrap(), 2);
        // 1542.8 / 771.4 = 2.0 exactly
        assert_eq!(demand_to_replicas(&cm, 1542.8).unwrap(), 2);
        assert_eq!(demand_to_replicas(&cm, 0.0).unwrap(), 0);
    }

    #[test]
    fn demand_monotone_and_covering() {
        let cm = CapacityModel::from_params(700.0, 20.0).unwrap();
        let mut prev = 0;
        for i in 0..2000 {
            let q = i as f64 * 7.3;
            let r = demand_to_replicas(&cm, q).unwrap();
            assert!(r >= prev);
            assert!(r as f64 * cm.threshold >= q);
            prev = r;
        }
    }
}

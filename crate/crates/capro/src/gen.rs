//! Seeded synthetic workload generator: diurnal sinusoid with a
//! configurable peak:trough ratio, multiplicative uniform noise, and
//! optional injected spikes. Self-contained substitute for production
//! traces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::WorkloadTrace;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpikeSpec {
    /// Spike start, seconds from trace start.
    pub start: i64,
    /// Spike length, seconds.
    pub duration: u64,
    /// Multiplier applied to the base signal during the spike.
    pub factor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub app_id: String,
    pub sample_interval: u64,
    /// Total trace length, seconds.
    pub duration: u64,
    pub start_ts: i64,
    /// QPS at the diurnal peak (before noise).
    pub peak_qps: f64,
    /// Peak:trough ratio of the sinusoid, >= 1.
    pub peak_trough_ratio: f64,
    /// Sinusoid period, seconds.
    pub period: u64,
    /// Half-width of the multiplicative uniform noise, e.g. 0.05 for +/-5%.
    pub noise: f64,
    pub spikes: Vec<SpikeSpec>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            app_id: "synthetic".to_string(),
            sample_interval: 60,
            duration: 7 * 86_400,
            start_ts: 0,
            peak_qps: 9_000.0,
            peak_trough_ratio: 5.0,
            period: 86_400,
            noise: 0.05,
            spikes: Vec::new(),
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_interval == 0 || self.duration < self.sample_interval {
            return Err(Error::InvalidConfig(format!(
                "need sample_interval > 0 and duration >= sample_interval, got {} / {}",
                self.sample_interval, self.duration
            )));
        }
        if self.peak_qps <= 0.0 || self.peak_trough_ratio < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "need peak_qps > 0 and peak_trough_ratio >= 1, got {} / {}",
                self.peak_qps, self.peak_trough_ratio
            )));
        }
        if self.period == 0 {
            return Err(Error::InvalidConfig("period must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidConfig(format!("noise {} not in [0, 1)", self.noise)));
        }
        Ok(())
    }
}

/// Noise-free diurnal signal at offset `t` (seconds from trace start):
/// `peak * (m + a*sin(2*pi*t/period - pi/2))` with the mean level `m` and
/// amplitude `a` chosen so the signal spans [peak/ratio, peak], troughing
/// at t = 0.
pub fn base_signal(cfg: &GenConfig, t: i64) -> f64 {
    let r = cfg.peak_trough_ratio;
    let m = (1.0 + 1.0 / r) / 2.0;
    let a = (1.0 - 1.0 / r) / 2.0;
    let phase = 2.0 * std::f64::consts::PI * t as f64 / cfg.period as f64 - std::f64::consts::FRAC_PI_2;
    cfg.peak_qps * (m + a * phase.sin())
}

pub fn generate(cfg: &GenConfig) -> Result<WorkloadTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = (cfg.duration / cfg.sample_interval) as usize;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let offset = i as i64 * cfg.sample_interval as i64;
        let mut q = base_signal(cfg, offset);
        for spike in &cfg.spikes {
            if offset >= spike.start && offset < spike.start + spike.duration as i64 {
                q *= spike.factor;
            }
        }
        if cfg.noise > 0.0 {
            q *= 1.0 + rng.gen_range(-cfg.noise..cfg.noise);
        }
        samples.push((cfg.start_ts + offset, q.max(0.0)));
    }
    WorkloadTrace::new(cfg.app_id.clone(), cfg.sample_interval, samples)
}

/// `n` draws from Normal(mu, sigma), seeded; used to fabricate
/// per-instance QPS sample files for capacity fitting.
pub fn normal_samples(mu: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let normal = rand_distr::Normal::new(mu, sigma)
        .map_err(|e| Error::InvalidConfig(format!("bad normal params: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rand_distr::Distribution::sample(&normal, &mut rng)).collect())
}

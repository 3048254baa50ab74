//! Workload traces: ingestion, tumbling-window aggregation, summary
//! statistics, and periodicity classification.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamped sequence of offered QPS samples for one application.
///
/// Timestamps are strictly increasing with constant spacing equal to
/// `sample_interval`; all qps values are finite and nonnegative. The
/// constructor enforces these invariants, so holders can rely on them.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WorkloadTrace {
    app_id: String,
    sample_interval: u64,
    samples: Vec<(i64, f64)>,
}

impl WorkloadTrace {
    pub fn new(app_id: impl Into<String>, sample_interval: u64, samples: Vec<(i64, f64)>) -> Result<Self> {
        if sample_interval == 0 {
            return Err(Error::InvalidConfig("sample_interval must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        for (i, &(ts, qps)) in samples.iter().enumerate() {
            if !qps.is_finite() {
                return Err(Error::NonFiniteQps { line: i + 1 });
            }
            if qps < 0.0 {
                return Err(Error::NegativeQps { line: i + 1, value: qps });
            }
            if i > 0 {
                let prev = samples[i - 1].0;
                if ts <= prev {
                    return Err(Error::NonMonotoneTimestamps { line: i + 1, prev, next: ts });
                }
                let expected = prev + sample_interval as i64;
                if ts != expected {
                    return Err(Error::TimestampGap {
                        expected,
                        found: ts,
                        interval: sample_interval,
                    });
                }
            }
        }
        Ok(Self { app_id: app_id.into(), sample_interval, samples })
    }

    pub fn app_id(&self) -> &str {
        &self.app_id
    }

    pub fn sample_interval(&self) -> u64 {
        self.sample_interval
    }

    pub fn samples(&self) -> &[(i64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_ts(&self) -> i64 {
        self.samples[0].0
    }

    /// Exclusive end timestamp: last sample start plus one interval.
    pub fn end_ts(&self) -> i64 {
        self.samples[self.samples.len() - 1].0 + self.sample_interval as i64
    }

    pub fn span_seconds(&self) -> u64 {
        (self.end_ts() - self.start_ts()) as u64
    }

    /// Sub-trace covering `[from, to)`. Errors if no samples fall inside.
    pub fn slice(&self, from: i64, to: i64) -> Result<WorkloadTrace> {
        let samples: Vec<_> = self
            .samples
            .iter()
            .copied()
            .filter(|&(ts, _)| ts >= from && ts < to)
            .collect();
        WorkloadTrace::new(self.app_id.clone(), self.sample_interval, samples)
    }

    /// Parse CSV with columns `timestamp,qps` (a header row is optional).
    /// When `declared_interval` is given, the trace must conform to it;
    /// otherwise the interval is inferred from the first gap. Gaps are
    /// rejected, never interpolated.
    pub fn from_csv(reader: impl Read, app_id: impl Into<String>, declared_interval: Option<u64>) -> Result<Self> {
        let mut samples = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if idx == 0 && trimmed.starts_with("timestamp") {
                continue;
            }
            let mut parts = trimmed.split(',');
            let ts_field = parts.next().unwrap_or("");
            let qps_field = parts.next().ok_or_else(|| Error::MalformedRecord {
                line: idx + 1,
                msg: "expected two fields `timestamp,qps`".into(),
            })?;
            if parts.next().is_some() {
                return Err(Error::MalformedRecord {
                    line: idx + 1,
                    msg: "expected exactly two fields".into(),
                });
            }
            let ts: i64 = ts_field.trim().parse().map_err(|e| Error::MalformedRecord {
                line: idx + 1,
                msg: format!("bad timestamp `{}`: {}", ts_field, e),
            })?;
            let qps: f64 = qps_field.trim().parse().map_err(|e| Error::MalformedRecord {
                line: idx + 1,
                msg: format!("bad qps `{}`: {}", qps_field, e),
            })?;
            samples.push((ts, qps));
        }
        let interval = match declared_interval {
            Some(iv) => iv,
            None => {
                if samples.len() < 2 {
                    return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
                }
                let delta = samples[1].0 - samples[0].0;
                if delta <= 0 {
                    return Err(Error::NonMonotoneTimestamps {
                        line: 2,
                        prev: samples[0].0,
                        next: samples[1].0,
                    });
                }
                delta as u64
            }
        };
        Self::new(app_id, interval, samples)
    }

    /// Parse the JSON trace format
    /// `{"app_id": ..., "sample_interval": ..., "samples": [[ts, qps], ...]}`.
    pub fn from_json(reader: impl Read) -> Result<Self> {
        let raw: WorkloadTrace = serde_json::from_reader(reader)?;
        // Round-trip through the validating constructor.
        Self::new(raw.app_id, raw.sample_interval, raw.samples)
    }

    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "timestamp,qps")?;
        for &(ts, qps) in &self.samples {
            writeln!(w, "{},{}", ts, qps)?;
        }
        Ok(())
    }

    pub fn to_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowStatistic {
    Max,
    Mean,
    P95,
}

impl WindowStatistic {
    pub fn apply(self, values: &[f64]) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            WindowStatistic::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            WindowStatistic::Mean => values.iter().sum::<f64>() / values.len() as f64,
            WindowStatistic::P95 => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                // nearest-rank p95
                let rank = ((0.95 * sorted.len() as f64).ceil() as usize).max(1);
                sorted[rank - 1]
            }
        }
    }
}

/// Tumbling-window aggregate of a trace. Each window covers exactly
/// `window_size` seconds of source samples; a partial trailing window is
/// dropped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregatedTrace {
    pub windows: Vec<(i64, f64)>,
    pub window_size: u64,
    pub statistic: WindowStatistic,
}

impl AggregatedTrace {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.windows.iter().map(|&(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Tumbling-window aggregation. `window_size` must be a positive multiple
/// of the trace's sample interval.
pub fn aggregate(trace: &WorkloadTrace, window_size: u64, statistic: WindowStatistic) -> Result<AggregatedTrace> {
    let interval = trace.sample_interval();
    if window_size < interval || window_size % interval != 0 {
        return Err(Error::InvalidWindow { window: window_size, interval });
    }
    let per_window = (window_size / interval) as usize;
    let samples = trace.samples();
    let mut windows = Vec::with_capacity(samples.len() / per_window);
    for chunk in samples.chunks_exact(per_window) {
        let values: Vec<f64> = chunk.iter().map(|&(_, q)| q).collect();
        windows.push((chunk[0].0, statistic.apply(&values)));
    }
    Ok(AggregatedTrace { windows, window_size, statistic })
}

/// Order-free summary statistics of a trace. Skewness and kurtosis are the
/// standardized third and fourth sample moments; kurtosis uses the excess
/// convention (Normal data -> 0). Both are undefined (None) on zero
/// variance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

pub fn summarize(trace: &WorkloadTrace) -> Result<SummaryStats> {
    let values: Vec<f64> = trace.samples().iter().map(|&(_, q)| q).collect();
    summarize_values(&values)
}

pub fn summarize_values(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let sample_var = m2 * nf / (nf - 1.0);
    let std_error = sample_var.sqrt() / nf.sqrt();
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats { n, mean, std_error, min, max, skewness, kurtosis })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicityKind {
    Periodical,
    NonPeriodical,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicityLabel {
    pub kind: PeriodicityKind,
    /// Present iff `kind == Periodical`.
    pub period: Option<u64>,
    /// Best candidate autocorrelation, clamped to [0, 1].
    pub score: f64,
}

impl PeriodicityLabel {
    pub fn is_periodical(&self) -> bool {
        self.kind == PeriodicityKind::Periodical
    }
}

pub const PERIODICITY_THRESHOLD: f64 = 0.5;

/// Lag-autocorrelation classification against caller-supplied candidate
/// periods. Periodical when the best candidate autocorrelation reaches the
/// threshold (0.5). A candidate is only scored when the trace spans at
/// least two of its periods; errors if no candidate qualifies.
pub fn classify_periodicity(trace: &WorkloadTrace, candidate_periods: &[u64]) -> Result<PeriodicityLabel> {
    if candidate_periods.is_empty() {
        return Err(Error::InvalidConfig("candidate period list is empty".into()));
    }
    let interval = trace.sample_interval();
    let min_period = *candidate_periods.iter().min().unwrap();
    let span = trace.span_seconds();
    let values: Vec<f64> = trace.samples().iter().map(|&(_, q)| q).collect();
    let mut best: Option<(u64, f64)> = None;
    for &period in candidate_periods {
        if period == 0 || period % interval != 0 {
            return Err(Error::InvalidConfig(format!(
                "candidate period {}s is not a positive multiple of the sample interval {}s",
                period, interval
            )));
        }
        // a candidate needs at least two full periods of data to score
        if span < 2 * period {
            continue;
        }
        let lag = (period / interval) as usize;
        if lag >= values.len() {
            continue;
        }
        let r = autocorrelation(&values, lag);
        let better = match best {
            None => true,
            // strictly higher score wins; ties prefer the smaller period
            Some((bp, bs)) => r > bs || (r == bs && period < bp),
        };
        if better {
            best = Some((period, r));
        }
    }
    let (period, score) = best.ok_or(Error::TraceTooShort { span, needed: 2 * min_period })?;
    let score = score.clamp(0.0, 1.0);
    if score >= PERIODICITY_THRESHOLD {
        Ok(PeriodicityLabel { kind: PeriodicityKind::Periodical, period: Some(period), score })
    } else {
        Ok(PeriodicityLabel { kind: PeriodicityKind::NonPeriodical, period: None, score })
    }
}

/// Sample autocorrelation at `lag` (biased estimator, standard in ACF work).
pub fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    let n = values.len();
    if lag >= n || lag == 0 && n == 0 {
        return 0.0;
    }
    // Pearson correlation between the series and its lag-shifted copy over
    // the overlap, so an exactly periodic signal scores ~1 at its period
    let m = n - lag;
    let a = &values[..m];
    let b = &values[lag..];
    let mean_a = a.iter().sum::<f64>() / m as f64;
    let mean_b = b.iter().sum::<f64>() / m as f64;
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..m {
        let da = a[i] - mean_a;
        let db = b[i] - mean_b;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    num / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from(values: &[f64], interval: u64) -> WorkloadTrace {
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i64 * interval as i64, v))
            .collect();
        WorkloadTrace::new("test", interval, samples).unwrap()
    }

    #[test]
    fn csv_parse_three_samples() {
        let t = WorkloadTrace::from_csv("0,100\n60,110\n120,90".as_bytes(), "a", Some(60)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.samples()[2], (120, 90.0));
    }

    #[test]
    fn csv_gap_rejected() {
        let err = WorkloadTrace::from_csv("0,100\n120,90".as_bytes(), "a", Some(60)).unwrap_err();
        assert!(matches!(err, Error::TimestampGap { expected: 60, found: 120, .. }));
    }

    #[test]
    fn csv_header_and_errors() {
        let t = WorkloadTrace::from_csv("timestamp,qps\n0,1\n60,2".as_bytes(), "a", Some(60)).unwrap();
        assert_eq!(t.len(), 2);
        assert!(matches!(
            WorkloadTrace::from_csv("0,abc".as_bytes(), "a", Some(60)),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
        assert!(matches!(
            WorkloadTrace::from_csv("0,100\n60,-5".as_bytes(), "a", Some(60)),
            Err(Error::NegativeQps { line: 2, .. })
        ));
        assert!(matches!(
            WorkloadTrace::from_csv("0,100\n-60,90".as_bytes(), "a", Some(60)),
            Err(Error::NonMonotoneTimestamps { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_identity() {
        let samples: Vec<(i64, f64)> = (0..1440).map(|i| (i * 60, 100.0 + (i % 7) as f64)).collect();
        let t = WorkloadTrace::new("app", 60, samples).unwrap();
        let mut buf = Vec::new();
        t.to_json(&mut buf).unwrap();
        let back = WorkloadTrace::from_json(buf.as_slice()).unwrap();
        assert_eq!(t, back);

        let mut csv_buf = Vec::new();
        t.to_csv(&mut csv_buf).unwrap();
        let back = WorkloadTrace::from_csv(csv_buf.as_slice(), "app", Some(60)).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn aggregate_max_of_triples() {
        let t = trace_from(&[3.0, 7.0, 5.0, 2.0, 9.0, 4.0], 60);
        let agg = aggregate(&t, 180, WindowStatistic::Max).unwrap();
        assert_eq!(agg.windows, vec![(0, 7.0), (180, 9.0)]);
    }

    #[test]
    fn aggregate_drops_partial_window() {
        let t = trace_from(&[1.0, 2.0, 3.0, 4.0, 5.0], 60);
        let agg = aggregate(&t, 180, WindowStatistic::Mean).unwrap();
        assert_eq!(agg.len(), 1);
        assert_eq!(agg.windows[0].1, 2.0);
    }

    #[test]
    fn aggregate_constant_trace() {
        let t = trace_from(&[4.5; 12], 60);
        for stat in [WindowStatistic::Max, WindowStatistic::Mean, WindowStatistic::P95] {
            let agg = aggregate(&t, 240, stat).unwrap();
            assert!(agg.values().all(|v| v == 4.5));
        }
    }

    #[test]
    fn aggregate_window_errors() {
        let t = trace_from(&[1.0, 2.0], 60);
        assert!(matches!(aggregate(&t, 30, WindowStatistic::Max), Err(Error::InvalidWindow { .. })));
        assert!(matches!(aggregate(&t, 90, WindowStatistic::Max), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn max_aggregation_dominates_raw_samples() {
        let values: Vec<f64> = (0..600).map(|i| ((i * 37) % 101) as f64).collect();
        let t = trace_from(&values, 60);
        let agg = aggregate(&t, 300, WindowStatistic::Max).unwrap();
        // brute-force per-window scan
        for (w, &(start, v)) in agg.windows.iter().enumerate() {
            let window: Vec<f64> = values[w * 5..(w + 1) * 5].to_vec();
            assert!(window.iter().all(|&raw| v >= raw), "window {} at {}", w, start);
            assert_eq!(v, window.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }

    #[test]
    fn summarize_symmetric_set() {
        let t = trace_from(&[1.0, 2.0, 3.0, 4.0, 5.0], 60);
        let s = summarize(&t).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 5.0);
        assert!(s.skewness.unwrap().abs() < 1e-12);
    }

    #[test]
    fn summarize_degenerate_variance() {
        let t = trace_from(&[7.0; 10], 60);
        let s = summarize(&t).unwrap();
        assert_eq!(s.std_error, 0.0);
        assert!(s.skewness.is_none());
        assert!(s.kurtosis.is_none());
    }

    #[test]
    fn summarize_too_few_samples() {
        let t = trace_from(&[1.0, 2.0, 3.0], 60);
        assert!(matches!(summarize(&t), Err(Error::TooFewSamples { needed: 4, got: 3 })));
    }

    #[test]
    fn summarize_matches_two_pass_oracle_on_normal_draws() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let normal = rand_distr::Normal::new(573.7, 65.9).unwrap();
        let values: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let t = trace_from(&values, 60);
        let s = summarize(&t).unwrap();
        assert!((s.mean - 573.7).abs() / 573.7 < 0.01);
        assert!(s.skewness.unwrap().abs() < 0.1);

        // independent two-pass moment computation
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / values.len() as f64;
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / values.len() as f64;
        assert!((s.mean - mean).abs() < 1e-9);
        assert!((s.skewness.unwrap() - m3 / m2.powf(1.5)).abs() < 1e-9);
        assert!((s.kurtosis.unwrap() - (m4 / (m2 * m2) - 3.0)).abs() < 1e-9);
    }

    #[test]
    fn summarize_is_permutation_invariant() {
        let fwd = [5.0, 1.0, 9.0, 2.0, 8.0, 3.0];
        let mut rev = fwd;
        rev.reverse();
        let a = summarize(&trace_from(&fwd, 60)).unwrap();
        let b = summarize(&trace_from(&rev, 60)).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std_error, b.std_error);
        assert_eq!(a.min, b.min);
        assert_eq!(a.max, b.max);
    }

    fn sinusoid(n: usize, interval: u64, period: f64, noise: f64, seed: u64) -> Vec<f64> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let t = i as f64 * interval as f64;
                let base = 100.0 + 50.0 * (2.0 * std::f64::consts::PI * t / period).sin();
                base * (1.0 + rng.gen_range(-noise..=noise))
            })
            .collect()
    }

    #[test]
    fn pure_sinusoid_is_periodical() {
        let values = sinusoid(3 * 1440, 60, 86400.0, 0.0, 0);
        let t = trace_from(&values, 60);
        let label = classify_periodicity(&t, &[86400]).unwrap();
        assert!(label.is_periodical());
        assert_eq!(label.period, Some(86400));
        assert!(label.score > 0.99);
    }

    #[test]
    fn noisy_sinusoid_picks_true_period() {
        let values = sinusoid(3 * 1440, 60, 86400.0, 0.10, 1);
        let t = trace_from(&values, 60);
        let label = classify_periodicity(&t, &[43200, 86400]).unwrap();
        assert!(label.is_periodical());
        assert_eq!(label.period, Some(86400));
        // brute-force check: the 24h lag autocorrelation really wins
        let r12 = autocorrelation(&values, 43200 / 60);
        let r24 = autocorrelation(&values, 86400 / 60);
        assert!(r24 > r12);
    }

    #[test]
    fn white_noise_is_non_periodical() {
        use rand::Rng;
        use rand::SeedableRng;
        // empirical check across 100 generated traces
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..100.0)).collect();
            let t = trace_from(&values, 60);
            let label = classify_periodicity(&t, &[6000, 12000]).unwrap();
            assert_eq!(label.kind, PeriodicityKind::NonPeriodical, "seed {}", seed);
        }
    }

    #[test]
    fn shift_by_full_period_keeps_label() {
        let values = sinusoid(4 * 1440, 60, 86400.0, 0.05, 2);
        let t = trace_from(&values, 60);
        let shifted = trace_from(&values[1440..], 60);
        let a = classify_periodicity(&t, &[86400]).unwrap();
        let b = classify_periodicity(&shifted, &[86400]).unwrap();
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.period, b.period);
    }

    #[test]
    fn too_short_for_candidates() {
        let t = trace_from(&[1.0; 100], 60);
        assert!(matches!(classify_periodicity(&t, &[86400]), Err(Error::TraceTooShort { .. })));
    }
}

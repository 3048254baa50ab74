//! Reactive replica adjustment: trailing-window statistic against a
//! threshold, a safety dead band, min/max clamping, and a scale-down
//! cooldown.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::WindowStatistic;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReactiveConfig {
    /// Trailing statistic window W, seconds.
    pub window_w: u64,
    /// Target metric value t*; the metric samples and t* must share a unit.
    pub threshold_tstar: f64,
    /// Safety dead band around ratio 1, in [0, 1].
    pub safety_sp: f64,
    /// Minimum interval between committed scale-downs, seconds.
    pub cooldown_ct: u64,
    pub c_min: u32,
    pub c_max: u32,
    pub statistic: WindowStatistic,
    /// Decision lead time sigma, seconds; the decision applies this far
    /// ahead of `now`.
    pub decision_shift_sigma: u64,
}

impl ReactiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold_tstar <= 0.0 {
            return Err(Error::NonPositiveTarget(self.threshold_tstar));
        }
        if !(0.0..=1.0).contains(&self.safety_sp) {
            return Err(Error::InvalidConfig(format!("safety_sp {} not in [0,1]", self.safety_sp)));
        }
        if self.c_min == 0 || self.c_min > self.c_max {
            return Err(Error::InvalidConfig(format!(
                "replica bounds must satisfy 0 < c_min <= c_max, got [{}, {}]",
                self.c_min, self.c_max
            )));
        }
        if self.window_w == 0 {
            return Err(Error::InvalidConfig("window_w must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ReactiveConfig {
    fn default() -> Self {
        Self {
            window_w: 300,
            threshold_tstar: 1.0,
            safety_sp: 0.1,
            cooldown_ct: 600,
            c_min: 1,
            c_max: u32::MAX,
            statistic: WindowStatistic::P95,
            decision_shift_sigma: 60,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReactiveState {
    pub current_replicas: u32,
    pub last_scale_down_time: Option<i64>,
    pub config: ReactiveConfig,
}

impl ReactiveState {
    pub fn new(initial_replicas: u32, config: ReactiveConfig) -> Result<Self> {
        config.validate()?;
        if initial_replicas < config.c_min || initial_replicas > config.c_max {
            return Err(Error::InvalidConfig(format!(
                "initial replicas {} outside [{}, {}]",
                initial_replicas, config.c_min, config.c_max
            )));
        }
        Ok(Self { current_replicas: initial_replicas, last_scale_down_time: None, config })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingReason {
    WithinSafetyBand,
    ScaledUp,
    ScaledDown,
    ClampedMin,
    ClampedMax,
    CooldownBlocked,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScalingDecision {
    pub new_replicas: u32,
    pub reason: ScalingReason,
    pub metric_value: f64,
    pub ratio_nr: f64,
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// One controller transition. Pure in (state, samples, now): computes the
/// window statistic, the ratio n_r against t*, and the scaled target
/// n_r * C rounded half up; holds inside the safety band, clamps to the
/// replica bounds, and blocks decreases still inside the cooldown.
/// `last_scale_down_time` advances only on a committed decrease.
pub fn step(
    state: &ReactiveState,
    metric_samples: &[(i64, f64)],
    now: i64,
) -> Result<(ScalingDecision, ReactiveState)> {
    let cfg = &state.config;
    cfg.validate()?;
    if metric_samples.is_empty() {
        return Err(Error::EmptyMetricWindow);
    }
    let window_start = now - cfg.window_w as i64;
    let values: Vec<f64> = metric_samples
        .iter()
        .filter(|&&(ts, _)| ts >= window_start && ts <= now)
        .map(|&(_, v)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyMetricWindow);
    }
    let metric_value = cfg.statistic.apply(&values);
    let ratio_nr = metric_value / cfg.threshold_tstar;
    let current = state.current_replicas;

    let decide = |new_replicas: u32, reason: ScalingReason, scale_down: bool| {
        let mut next = state.clone();
        next.current_replicas = new_replicas;
        if scale_down {
            next.last_scale_down_time = Some(now);
        }
        (
            ScalingDecision { new_replicas, reason, metric_value, ratio_nr },
            next,
        )
    };

    if (ratio_nr - 1.0).abs() <= cfg.safety_sp {
        return Ok(decide(current, ScalingReason::WithinSafetyBand, false));
    }

    let raw_target = round_half_up(ratio_nr * current as f64);
    let (target, clamp_reason) = if raw_target <= cfg.c_min as i64 {
        (cfg.c_min, Some(ScalingReason::ClampedMin))
    } else if raw_target >= cfg.c_max as i64 {
        (cfg.c_max, Some(ScalingReason::ClampedMax))
    } else {
        (raw_target as u32, None)
    };

    if target < current {
        if let Some(last) = state.last_scale_down_time {
            if now - last < cfg.cooldown_ct as i64 {
                return Ok(decide(current, ScalingReason::CooldownBlocked, false));
            }
        }
        return Ok(decide(target, clamp_reason.unwrap_or(ScalingReason::ScaledDown), true));
    }
    if target > current {
        return Ok(decide(target, clamp_reason.unwrap_or(ScalingReason::ScaledUp), false));
    }
    // out-of-band ratio whose rounded/clamped target equals the current
    // count: report the clamp when one applied, otherwise a no-op
    Ok(decide(current, clamp_reason.unwrap_or(ScalingReason::WithinSafetyBand), false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ReactiveConfig {
        ReactiveConfig {
            window_w: 300,
            threshold_tstar: 100.0,
            safety_sp: 0.1,
            cooldown_ct: 600,
            c_min: 1,
            c_max: 8,
            statistic: WindowStatistic::Mean,
            decision_shift_sigma: 60,
        }
    }

    fn state(replicas: u32) -> ReactiveState {
        ReactiveState::new(replicas, cfg()).unwrap()
    }

    fn samples(value: f64, now: i64) -> Vec<(i64, f64)> {
        (0..5).map(|i| (now - 60 * i, value)).collect()
    }

    #[test]
    fn exact_target_is_within_band() {
        let (d, next) = step(&state(4), &samples(100.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::WithinSafetyBand);
        assert_eq!(d.new_replicas, 4);
        assert_eq!(d.ratio_nr, 1.0);
        assert_eq!(next.current_replicas, 4);
    }

    #[test]
    fn scale_up_from_ratio() {
        // rt 150, t* 100 -> n_r 1.5, C=4 -> 6
        let (d, next) = step(&state(4), &samples(150.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::ScaledUp);
        assert_eq!(d.new_replicas, 6);
        assert_eq!(next.last_scale_down_time, None);
    }

    #[test]
    fn cooldown_blocks_decrease() {
        // rt 50 -> target 2, last scale-down 120s ago, ct 600 -> blocked
        let mut st = state(4);
        st.last_scale_down_time = Some(880);
        let (d, next) = step(&st, &samples(50.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::CooldownBlocked);
        assert_eq!(d.new_replicas, 4);
        assert_eq!(next.last_scale_down_time, Some(880));
    }

    #[test]
    fn cooldown_expiry_allows_decrease() {
        let mut st = state(4);
        st.last_scale_down_time = Some(200);
        let (d, next) = step(&st, &samples(50.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::ScaledDown);
        assert_eq!(d.new_replicas, 2);
        assert_eq!(next.last_scale_down_time, Some(1000));
    }

    #[test]
    fn clamp_to_max() {
        let (d, _) = step(&state(4), &samples(1000.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::ClampedMax);
        assert_eq!(d.new_replicas, 8);
    }

    #[test]
    fn clamp_to_min() {
        let (d, next) = step(&state(4), &samples(10.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::ClampedMin);
        assert_eq!(d.new_replicas, 1);
        assert_eq!(next.last_scale_down_time, Some(1000));
    }

    #[test]
    fn round_half_up_edges() {
        // n_r = 1.125, C = 4 -> 4.5 -> rounds up to 5
        let (d, _) = step(&state(4), &samples(112.5, 1000), 1000).unwrap();
        assert_eq!(d.new_replicas, 5);
        // n_r = 1.115, C = 4 -> 4.46 -> rounds down to 4 (no-op)
        let (d, _) = step(&state(4), &samples(111.5, 1000), 1000).unwrap();
        assert_eq!(d.new_replicas, 4);
        assert_eq!(d.reason, ScalingReason::WithinSafetyBand);
    }

    #[test]
    fn window_filter_and_errors() {
        // sample outside W is ignored
        let mut s = samples(150.0, 1000);
        s.push((400, 10_000.0));
        let (d, _) = step(&state(4), &s, 1000).unwrap();
        assert_eq!(d.new_replicas, 6);
        assert!(matches!(step(&state(4), &[], 1000), Err(Error::EmptyMetricWindow)));
        let mut bad = cfg();
        bad.threshold_tstar = 0.0;
        let st = ReactiveState { current_replicas: 4, last_scale_down_time: None, config: bad };
        assert!(matches!(step(&st, &samples(1.0, 1000), 1000), Err(Error::NonPositiveTarget(_))));
    }

    #[test]
    fn increases_never_blocked_by_cooldown() {
        let mut st = state(4);
        st.last_scale_down_time = Some(999);
        let (d, _) = step(&st, &samples(200.0, 1000), 1000).unwrap();
        assert_eq!(d.reason, ScalingReason::ClampedMax);
        assert_eq!(d.new_replicas, 8);
    }

    #[test]
    fn ratio_homogeneity() {
        let mut c1 = cfg();
        c1.threshold_tstar = 100.0;
        let mut c2 = cfg();
        c2.threshold_tstar = 700.0;
        let s1 = ReactiveState::new(4, c1).unwrap();
        let s2 = ReactiveState::new(4, c2).unwrap();
        let (d1, _) = step(&s1, &samples(150.0, 1000), 1000).unwrap();
        let (d2, _) = step(&s2, &samples(1050.0, 1000), 1000).unwrap();
        assert_eq!(d1.new_replicas, d2.new_replicas);
        assert_eq!(d1.reason, d2.reason);
        assert!((d1.ratio_nr - d2.ratio_nr).abs() < 1e-12);
    }

    #[test]
    fn randomized_sequences_respect_bounds_and_cooldown() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut st = state(4);
        let mut last_committed_down: Option<i64> = None;
        for k in 0..10_000i64 {
            let now = k * 60;
            let value = rng.gen_range(0.0..400.0);
            let (d, next) = step(&st, &samples(value, now), now).unwrap();
            assert!(d.new_replicas >= 1 && d.new_replicas <= 8);
            if (d.ratio_nr - 1.0).abs() <= 0.1 {
                assert_eq!(d.new_replicas, st.current_replicas, "safety band changed replicas");
            }
            if d.new_replicas < st.current_replicas {
                if let Some(prev) = last_committed_down {
                    assert!(now - prev >= 600, "two scale-downs within cooldown");
                }
                last_committed_down = Some(now);
            }
            st = next;
        }
    }

    #[test]
    fn step_is_deterministic() {
        let s = samples(137.0, 5000);
        let (d1, n1) = step(&state(3), &s, 5000).unwrap();
        let (d2, n2) = step(&state(3), &s, 5000).unwrap();
        assert_eq!(d1.new_replicas, d2.new_replicas);
        assert_eq!(d1.reason, d2.reason);
        assert_eq!(n1.current_replicas, n2.current_replicas);
    }
}

//! Provisioning policies compared by the simulator. Each policy reduces to
//! either a precomputed replica plan, a reactive controller, or both.

use serde::{Deserialize, Serialize};

use crate::capacity::{demand_to_replicas, CapacityModel};
use crate::error::{Error, Result};
use crate::planner::{PlanEntry, ReplicaPlan};
use crate::reactive::ReactiveConfig;
use crate::trace::WindowStatistic;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Constant provisioning at a fixed replica count.
    OverPro { replicas: u32 },
    /// Pure reactive control from a target utilization.
    KubePro { config: ReactiveConfig },
    /// Hindsight plan built from the actual workload, one slot per
    /// control interval.
    OptimalPro { plan: ReplicaPlan },
    /// Base plan made conservative by a window-max over a time shift.
    ConservPro { plan: ReplicaPlan },
    /// Proactive plan with an increase-only reactive override.
    AliPro { plan: ReplicaPlan, reactive: ReactiveConfig },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::OverPro { .. } => "over_pro",
            Policy::KubePro { .. } => "kube_pro",
            Policy::OptimalPro { .. } => "optimal_pro",
            Policy::ConservPro { .. } => "conserv_pro",
            Policy::AliPro { .. } => "ali_pro",
        }
    }

    /// Plan carried by the policy, when it has one.
    pub fn plan(&self) -> Option<&ReplicaPlan> {
        match self {
            Policy::OptimalPro { plan }
            | Policy::ConservPro { plan }
            | Policy::AliPro { plan, .. } => Some(plan),
            _ => None,
        }
    }
}

pub fn over_pro(replicas: u32) -> Result<Policy> {
    if replicas == 0 {
        return Err(Error::ReplicasBelowOne(0));
    }
    Ok(Policy::OverPro { replicas })
}

/// Reactive-only policy: mean utilization over `window_w` against
/// `target_utilization`, no safety band, scale-down cooldown `cooldown_ct`.
pub fn kube_pro(
    target_utilization: f64,
    window_w: u64,
    cooldown_ct: u64,
    c_min: u32,
    c_max: u32,
) -> Result<Policy> {
    let config = ReactiveConfig {
        window_w,
        threshold_tstar: target_utilization,
        safety_sp: 0.0,
        cooldown_ct,
        c_min,
        c_max,
        statistic: WindowStatistic::Mean,
        decision_shift_sigma: 0,
    };
    config.validate()?;
    Ok(Policy::KubePro { config })
}

/// Hindsight-optimal plan: exact per-interval demand from the realized
/// workload, never below one replica.
pub fn optimal_pro(
    actual: &[(i64, f64)],
    capacity: &CapacityModel,
    interval: u64,
) -> Result<Policy> {
    if actual.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if interval == 0 {
        return Err(Error::InvalidWindow { window: 0, interval: 0 });
    }
    let mut entries = Vec::with_capacity(actual.len());
    for &(ts, qps) in actual {
        let replicas = demand_to_replicas(capacity, qps)?.max(1);
        entries.push(PlanEntry { slot_start: ts, duration: interval, replicas });
    }
    Ok(Policy::OptimalPro { plan: ReplicaPlan::new(entries)? })
}

/// Window-max of `base` over `[t - shift, t + shift]` for every t; covers
/// the base plan shifted either direction by up to `shift` seconds.
pub fn conservative_transform(base: &ReplicaPlan, shift: u64) -> Result<ReplicaPlan> {
    if shift == 0 {
        return ReplicaPlan::new(base.entries.clone());
    }
    let s = shift as i64;
    let start = base.start_ts();
    let end = base.end_ts();
    // replica counts change only where a base boundary crosses an edge of
    // the sliding window, i.e. at base boundaries shifted by +/- shift
    let mut breakpoints: Vec<i64> = Vec::new();
    for e in &base.entries {
        for b in [e.slot_start - s, e.slot_start + s] {
            if b > start && b < end {
                breakpoints.push(b);
            }
        }
    }
    breakpoints.push(start);
    breakpoints.push(end);
    breakpoints.sort_unstable();
    breakpoints.dedup();
    let mut entries = Vec::with_capacity(breakpoints.len() - 1);
    for pair in breakpoints.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mid = lo; // value is constant across the segment; sample its start
        let replicas = base.max_over(mid - s, mid + s).max(base.max_over(hi - 1 - s, hi - 1 + s));
        entries.push(PlanEntry {
            slot_start: lo,
            duration: (hi - lo) as u64,
            replicas,
        });
    }
    // merge adjacent equal-replica segments
    let mut merged: Vec<PlanEntry> = Vec::new();
    for e in entries {
        match merged.last_mut() {
            Some(last) if last.replicas == e.replicas => last.duration += e.duration,
            _ => merged.push(e),
        }
    }
    ReplicaPlan::new(merged)
}

pub fn conserv_pro(base: &ReplicaPlan, shift: u64) -> Result<Policy> {
    Ok(Policy::ConservPro { plan: conservative_transform(base, shift)? })
}

pub fn ali_pro(plan: ReplicaPlan, reactive: ReactiveConfig) -> Result<Policy> {
    reactive.validate()?;
    Ok(Policy::AliPro { plan, reactive })
}

//! Proactive replica planning: per-slot candidate replica levels form a
//! layered DAG and the cheapest schedule is a shortest source-to-sink
//! path, found with Dijkstra over a priority queue.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::capacity::{demand_to_replicas, CapacityModel};
use crate::error::{Error, Result};
use crate::forecast::Forecast;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlotSpec {
    pub start: i64,
    pub duration: u64,
}

/// Layered plan graph: slot i holds nodes (i, r) for every candidate
/// replica level r >= demand[i]; edges only connect consecutive slots, so
/// the graph is acyclic by construction.
#[derive(Clone, Debug)]
pub struct PlanGraph {
    pub slots: Vec<SlotSpec>,
    pub demand: Vec<u32>,
    /// Candidate replica levels per slot, ascending.
    pub levels: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightFn {
    /// Pure replica-hours: the Eq.-style resource objective.
    ReplicaHours,
    /// Replica-hours plus `lambda * |delta replicas|` per slot transition,
    /// penalizing scaling churn.
    ReplicaHoursWithChangePenalty { lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub slot_start: i64,
    pub duration: u64,
    pub replicas: u32,
}

/// Contiguous, non-overlapping per-slot replica assignments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaPlan {
    pub entries: Vec<PlanEntry>,
}

impl ReplicaPlan {
    pub fn new(entries: Vec<PlanEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for pair in entries.windows(2) {
            if pair[1].slot_start != pair[0].slot_start + pair[0].duration as i64 {
                return Err(Error::InvalidConfig(format!(
                    "plan slots not contiguous at {}",
                    pair[1].slot_start
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn start_ts(&self) -> i64 {
        self.entries[0].slot_start
    }

    pub fn end_ts(&self) -> i64 {
        let last = &self.entries[self.entries.len() - 1];
        last.slot_start + last.duration as i64
    }

    pub fn total_duration(&self) -> u64 {
        (self.end_ts() - self.start_ts()) as u64
    }

    /// Replica count in effect at time `t`; clamps to the first/last slot
    /// outside the planned range.
    pub fn replicas_at(&self, t: i64) -> u32 {
        if t < self.start_ts() {
            return self.entries[0].replicas;
        }
        for e in &self.entries {
            if t < e.slot_start + e.duration as i64 {
                return e.replicas;
            }
        }
        self.entries[self.entries.len() - 1].replicas
    }

    /// Maximum planned replicas over `[from, to]` (inclusive bounds).
    pub fn max_over(&self, from: i64, to: i64) -> u32 {
        self.entries
            .iter()
            .filter(|e| e.slot_start <= to && e.slot_start + e.duration as i64 > from)
            .map(|e| e.replicas)
            .max()
            .unwrap_or_else(|| self.replicas_at(from))
    }

    pub fn replica_hours(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.replicas as f64 * e.duration as f64 / 3600.0)
            .sum()
    }

    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "slot_start,duration_s,replicas")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.slot_start, e.duration, e.replicas)?;
        }
        Ok(())
    }

    pub fn to_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Per-slot demand is the replica count covering the peak forecast QPS in
/// the slot; candidate levels add `headroom_levels - 1` extra replicas,
/// capped at `max_replicas`.
pub fn build_graph(
    forecast: &Forecast,
    capacity: &CapacityModel,
    slot_duration: u64,
    headroom_levels: u32,
    max_replicas: u32,
) -> Result<PlanGraph> {
    if headroom_levels == 0 {
        return Err(Error::InvalidConfig("headroom_levels must be >= 1".into()));
    }
    if forecast.interval == 0 || slot_duration % forecast.interval != 0 {
        return Err(Error::InvalidConfig(format!(
            "slot duration {}s must be a multiple of the forecast interval {}s",
            slot_duration, forecast.interval
        )));
    }
    let per_slot = (slot_duration / forecast.interval) as usize;
    if forecast.horizon.is_empty() || forecast.horizon.len() % per_slot != 0 {
        return Err(Error::InvalidConfig(format!(
            "forecast of {} windows does not cover an integer number of {}s slots",
            forecast.horizon.len(),
            slot_duration
        )));
    }
    let mut slots = Vec::new();
    let mut demand = Vec::new();
    let mut levels = Vec::new();
    for (i, chunk) in forecast.horizon.chunks_exact(per_slot).enumerate() {
        let peak = chunk.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);
        let d = demand_to_replicas(capacity, peak)?;
        if d > max_replicas {
            return Err(Error::InfeasibleSlot { slot: i, demand: d, max: max_replicas });
        }
        slots.push(SlotSpec { start: chunk[0].0, duration: slot_duration });
        demand.push(d);
        levels.push((d..=(d + headroom_levels - 1).min(max_replicas)).collect());
    }
    Ok(PlanGraph { slots, demand, levels })
}

#[derive(Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest source-to-sink path through the plan graph. Edge weight into
/// node (i, r) is `r * T_i` replica-hours, plus the change penalty when
/// configured. Equal-cost ties prefer the lower replica count at the
/// earliest differing slot.
pub fn plan(graph: &PlanGraph, weight_fn: WeightFn) -> Result<ReplicaPlan> {
    if graph.slots.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let lambda = match weight_fn {
        WeightFn::ReplicaHours => 0.0,
        WeightFn::ReplicaHoursWithChangePenalty { lambda } => lambda,
    };
    // flat node indexing
    let mut offsets = Vec::with_capacity(graph.slots.len());
    let mut total = 0usize;
    for lv in &graph.levels {
        offsets.push(total);
        total += lv.len();
    }
    let node = |slot: usize, level_idx: usize| offsets[slot] + level_idx;
    let slot_hours = |slot: usize| graph.slots[slot].duration as f64 / 3600.0;

    let mut dist = vec![f64::INFINITY; total];
    let mut pre: Vec<Option<usize>> = vec![None; total];
    let mut settled = vec![false; total];
    let mut heap: BinaryHeap<Reverse<(Cost, usize)>> = BinaryHeap::new();

    // path of replica counts from slot 0 to `v`, for lexicographic ties
    let path_of = |pre: &[Option<usize>], v: usize, replica_of: &dyn Fn(usize) -> u32| -> Vec<u32> {
        let mut path = vec![replica_of(v)];
        let mut cur = v;
        while let Some(p) = pre[cur] {
            path.push(replica_of(p));
            cur = p;
        }
        path.reverse();
        path
    };
    let replica_of = |v: usize| -> u32 {
        let slot = match offsets.binary_search(&v) {
            Ok(s) => s,
            Err(s) => s - 1,
        };
        graph.levels[slot][v - offsets[slot]]
    };

    for (li, &r) in graph.levels[0].iter().enumerate() {
        let v = node(0, li);
        dist[v] = r as f64 * slot_hours(0);
        heap.push(Reverse((Cost(dist[v]), v)));
    }

    while let Some(Reverse((Cost(d), u))) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        let slot = match offsets.binary_search(&u) {
            Ok(s) => s,
            Err(s) => s - 1,
        };
        if slot + 1 >= graph.slots.len() {
            continue;
        }
        let r_u = graph.levels[slot][u - offsets[slot]];
        for (li, &r_v) in graph.levels[slot + 1].iter().enumerate() {
            let v = node(slot + 1, li);
            let w = r_v as f64 * slot_hours(slot + 1) + lambda * (r_v as f64 - r_u as f64).abs();
            let nd = dist[u] + w;
            if nd < dist[v] {
                dist[v] = nd;
                pre[v] = Some(u);
                heap.push(Reverse((Cost(nd), v)));
            } else if nd == dist[v] && pre[v] != Some(u) {
                // equal cost: keep the lexicographically smaller path
                let mut cand_pre = pre.clone();
                cand_pre[v] = Some(u);
                if path_of(&cand_pre, v, &replica_of) < path_of(&pre, v, &replica_of) {
                    pre[v] = Some(u);
                }
            }
        }
    }

    // sink: zero-weight edges from every last-slot node
    let last = graph.slots.len() - 1;
    let mut best: Option<usize> = None;
    for li in 0..graph.levels[last].len() {
        let v = node(last, li);
        if dist[v].is_infinite() {
            continue;
        }
        best = match best {
            None => Some(v),
            Some(b) => {
                if dist[v] < dist[b]
                    || (dist[v] == dist[b]
                        && path_of(&pre, v, &replica_of) < path_of(&pre, b, &replica_of))
                {
                    Some(v)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.ok_or(Error::UnreachableSink)?;
    let path = path_of(&pre, best, &replica_of);
    debug_assert_eq!(path.len(), graph.slots.len());
    let entries = graph
        .slots
        .iter()
        .zip(path)
        .map(|(s, r)| PlanEntry { slot_start: s.start, duration: s.duration, replicas: r })
        .collect();
    ReplicaPlan::new(entries)
}

/// Total path cost under a weight function; exposed so tests can compare
/// against brute-force enumeration.
pub fn plan_cost(graph: &PlanGraph, path: &[u32], weight_fn: WeightFn) -> f64 {
    let lambda = match weight_fn {
        WeightFn::ReplicaHours => 0.0,
        WeightFn::ReplicaHoursWithChangePenalty { lambda } => lambda,
    };
    let mut cost = 0.0;
    for (i, &r) in path.iter().enumerate() {
        cost += r as f64 * graph.slots[i].duration as f64 / 3600.0;
        if i > 0 {
            cost += lambda * (r as f64 - path[i - 1] as f64).abs();
        }
    }
    cost
}

/// Saved percentage: 1 minus the ratio of the plan's replica-hours to the
/// baseline's. Plans must cover the same total duration.
pub fn sp_metric(plan: &ReplicaPlan, baseline: &ReplicaPlan) -> Result<f64> {
    if plan.total_duration() != baseline.total_duration() {
        return Err(Error::DurationMismatch {
            left: plan.total_duration(),
            right: baseline.total_duration(),
        });
    }
    let base = baseline.replica_hours();
    if base == 0.0 {
        return Err(Error::BaselineZero);
    }
    Ok(1.0 - plan.replica_hours() / base)
}

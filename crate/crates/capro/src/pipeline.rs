//! End-to-end orchestration behind the CLI subcommands: trace ingestion,
//! train/eval split, forecasting, capacity fitting, planning, policy
//! construction, and the five-policy comparison run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::{demand_to_replicas, fit_capacity, fit_capacity_values, CapacityModel};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forecast::{
    build_features, evaluate, grid_search, predict_horizon, seasonal_naive, Forecast,
    ForecastEvaluation, GbdtHyperparams, GbdtModel,
};
use crate::gen::generate;
use crate::planner::{build_graph, plan, ReplicaPlan, WeightFn};
use crate::policy::{self, Policy};
use crate::reactive::ReactiveConfig;
use crate::sim::{kl_divergence, per_instance_qps_samples, simulate, SimConfig, SimulationReport};
use crate::trace::{aggregate, classify_periodicity, PeriodicityLabel, WorkloadTrace};

/// Load the workload trace named by the config: from `trace.path` when
/// set (CSV or JSON by extension), otherwise from the seeded generator.
pub fn load_trace(cfg: &RunConfig) -> Result<WorkloadTrace> {
    match &cfg.trace.path {
        Some(path) => read_trace_file(path, &cfg.trace.app_id, Some(cfg.trace.sample_interval)),
        None => generate(&cfg.generator),
    }
}

pub fn read_trace_file(path: &Path, app_id: &str, interval: Option<u64>) -> Result<WorkloadTrace> {
    let file = fs::File::open(path)
        .map_err(|e| Error::FileIo { path: path.display().to_string(), source: e })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        WorkloadTrace::from_json(file)
    } else {
        WorkloadTrace::from_csv(file, app_id, interval)
    }
}

/// Capacity model from the config: fitted from a sample file when given,
/// otherwise built directly from (mu, sigma).
pub fn capacity_from_config(cfg: &RunConfig) -> Result<CapacityModel> {
    match &cfg.capacity.samples_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::FileIo { path: path.display().to_string(), source: e })?;
            let mut timestamped: Vec<(i64, f64)> = Vec::new();
            let mut plain: Vec<f64> = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut parts = line.split(',');
                let first = parts.next().unwrap_or("");
                if first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                    continue; // header
                }
                match parts.next() {
                    Some(second) => {
                        let ts: i64 = first.trim().parse().map_err(|_| Error::MalformedRecord {
                            line: i + 1,
                            msg: line.to_string(),
                        })?;
                        let v: f64 = second.trim().parse().map_err(|_| Error::MalformedRecord {
                            line: i + 1,
                            msg: line.to_string(),
                        })?;
                        timestamped.push((ts, v));
                    }
                    None => {
                        let v: f64 = first.trim().parse().map_err(|_| Error::MalformedRecord {
                            line: i + 1,
                            msg: line.to_string(),
                        })?;
                        plain.push(v);
                    }
                }
            }
            if !timestamped.is_empty() {
                fit_capacity(&timestamped, cfg.capacity.active_hours)
            } else {
                fit_capacity_values(&plain, cfg.capacity.active_hours)
            }
        }
        None => CapacityModel::from_params(
            cfg.capacity.mu.expect("validated"),
            cfg.capacity.sigma.expect("validated"),
        ),
    }
}

/// Train/eval split: everything before the last `eval_seconds` trains,
/// the tail is replayed by the simulator.
pub fn split_trace(trace: &WorkloadTrace, eval_seconds: u64) -> Result<(WorkloadTrace, WorkloadTrace)> {
    let cut = trace.end_ts() - eval_seconds as i64;
    if cut <= trace.start_ts() {
        return Err(Error::TraceTooShort {
            span: trace.span_seconds(),
            needed: eval_seconds + trace.sample_interval(),
        });
    }
    let train = trace.slice(trace.start_ts(), cut)?;
    let eval = trace.slice(cut, trace.end_ts())?;
    Ok((train, eval))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForecastOutput {
    pub forecast: Forecast,
    pub model: GbdtModel,
    pub chosen: GbdtHyperparams,
    pub evaluation: ForecastEvaluation,
    pub baseline_evaluation: ForecastEvaluation,
}

/// Fit the forecaster on the training split and predict the evaluation
/// window, reporting accuracy against the realized values and the
/// seasonal-naive baseline.
pub fn run_forecast(cfg: &RunConfig, train: &WorkloadTrace, eval: &WorkloadTrace) -> Result<ForecastOutput> {
    let fc = &cfg.forecaster;
    let agg_train = aggregate(train, fc.aggregation_window, fc.aggregation_statistic)?;
    let features = build_features(&agg_train, &fc.lags)?;
    let (model, chosen) = grid_search(&features, &fc.grid.to_grid(), fc.n_trees, fc.folds, cfg.generator.seed)?;
    let horizon_windows = (cfg.trace.eval_seconds / fc.aggregation_window) as usize;
    let forecast = predict_horizon(&model, &agg_train, horizon_windows)?;

    let agg_eval = aggregate(eval, fc.aggregation_window, fc.aggregation_statistic)?;
    let actual: Vec<f64> = agg_eval.values().collect();
    let n = actual.len().min(forecast.horizon.len());
    let predicted: Vec<f64> = forecast.values().take(n).collect();
    let evaluation = evaluate(&actual[..n], &predicted)?;

    let period_windows = period_windows_for(cfg, fc.aggregation_window);
    let naive = seasonal_naive(&agg_train, period_windows, horizon_windows)?;
    let naive_vals: Vec<f64> = naive.values().take(n).collect();
    let baseline_evaluation = evaluate(&actual[..n], &naive_vals)?;

    Ok(ForecastOutput { forecast, model, chosen, evaluation, baseline_evaluation })
}

fn period_windows_for(cfg: &RunConfig, window: u64) -> usize {
    let period = cfg
        .forecaster
        .candidate_periods
        .first()
        .copied()
        .unwrap_or(86_400)
        .max(window);
    (period / window) as usize
}

/// Maximum per-interval replica demand seen in the training trace.
pub fn historical_max_demand(train: &WorkloadTrace, capacity: &CapacityModel) -> Result<u32> {
    let mut max_d = 1;
    for &(_, q) in train.samples() {
        max_d = max_d.max(demand_to_replicas(capacity, q)?);
    }
    Ok(max_d)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyResult {
    pub name: String,
    pub replica_hours: f64,
    pub sp: f64,
    pub mean_utilization: f64,
    pub sla_violation_rate: f64,
    /// KL divergence of this policy's response-time histogram from the
    /// baseline's.
    pub kl_rt_vs_baseline: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub app_id: String,
    pub baseline: String,
    pub capacity: CapacityModel,
    pub periodicity: PeriodicityLabel,
    pub forecast_evaluation: ForecastEvaluation,
    pub baseline_forecast_evaluation: ForecastEvaluation,
    pub chosen_hyperparams: GbdtHyperparams,
    pub policies: Vec<PolicyResult>,
}

pub struct CompareArtifacts {
    pub report: ComparisonReport,
    pub sim_reports: Vec<SimulationReport>,
    pub plan: ReplicaPlan,
    pub forecast: ForecastOutput,
}

/// Full comparison pipeline: ingest/generate, split, analyze, forecast,
/// fit capacity, plan, build every configured policy, and replay each one
/// on the evaluation tail. Over-Pro is the SP and KL baseline. Policies
/// are evaluated and reported in name order for deterministic output.
pub fn run_compare(cfg: &RunConfig) -> Result<CompareArtifacts> {
    let trace = load_trace(cfg)?;
    let (train, eval) = split_trace(&trace, cfg.trace.eval_seconds)?;
    let periodicity = classify_periodicity(&train, &cfg.forecaster.candidate_periods)?;
    let capacity = capacity_from_config(cfg)?;
    let forecast_out = run_forecast(cfg, &train, &eval)?;

    let hist_max = historical_max_demand(&train, &capacity)?;
    let max_replicas = if cfg.planner.max_replicas > 0 { cfg.planner.max_replicas } else { hist_max * 2 };
    let graph = build_graph(
        &forecast_out.forecast,
        &capacity,
        cfg.planner.slot_duration,
        cfg.planner.headroom_levels,
        max_replicas,
    )?;
    let weight = if cfg.planner.change_penalty_lambda > 0.0 {
        WeightFn::ReplicaHoursWithChangePenalty { lambda: cfg.planner.change_penalty_lambda }
    } else {
        WeightFn::ReplicaHours
    };
    let base_plan = plan(&graph, weight)?;

    let over_max = if cfg.policies.over_max > 0 { cfg.policies.over_max } else { hist_max };
    let reactive_c_max = if cfg.reactive.c_max > 0 { cfg.reactive.c_max } else { hist_max * 2 };
    let reactive = ReactiveConfig {
        window_w: cfg.reactive.window_w,
        threshold_tstar: cfg.reactive.threshold_tstar,
        safety_sp: cfg.reactive.safety_sp,
        cooldown_ct: cfg.reactive.cooldown_ct,
        c_min: cfg.reactive.c_min,
        c_max: reactive_c_max,
        statistic: cfg.reactive.statistic,
        decision_shift_sigma: cfg.reactive.decision_shift_sigma,
    };

    let mut names = cfg.policies.list.clone();
    names.sort_unstable();
    names.dedup();

    let mut policies: Vec<Policy> = Vec::new();
    for name in &names {
        let p = match name.as_str() {
            "over_pro" => policy::over_pro(over_max)?,
            "kube_pro" => policy::kube_pro(
                cfg.policies.kube_target_utilization,
                cfg.policies.kube_window_w,
                cfg.policies.kube_cooldown_ct,
                1,
                over_max,
            )?,
            "optimal_pro" => policy::optimal_pro(eval.samples(), &capacity, eval.sample_interval())?,
            "conserv_pro" => policy::conserv_pro(&base_plan, cfg.policies.conserv_shift)?,
            "ali_pro" => policy::ali_pro(base_plan.clone(), reactive)?,
            other => return Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
        };
        policies.push(p);
    }

    let sim_cfg = SimConfig {
        control_interval: cfg.simulator.control_interval,
        pod_startup_delay: cfg.simulator.pod_startup_delay,
        base_response_time: cfg.simulator.base_response_time,
        sla_threshold: cfg.simulator.sla_threshold,
        capacity: capacity.clone(),
        seed: cfg.generator.seed,
        overflow_penalty: cfg.simulator.overflow_penalty,
        histogram_bins: cfg.simulator.histogram_bins,
    };

    let mut sim_reports: Vec<SimulationReport> = Vec::new();
    for p in &policies {
        sim_reports.push(simulate(&eval, p, &sim_cfg)?);
    }

    // SP and KL against over_pro when present, else the first policy
    let baseline_idx = sim_reports
        .iter()
        .position(|r| r.policy == "over_pro")
        .unwrap_or(0);
    let baseline_rh = sim_reports[baseline_idx].replica_hours;
    if baseline_rh <= 0.0 {
        return Err(Error::BaselineZero);
    }
    let baseline_hist = sim_reports[baseline_idx].rt_histogram.clone();
    let baseline_name = sim_reports[baseline_idx].policy.clone();

    let mut results = Vec::new();
    for r in sim_reports.iter_mut() {
        let sp = 1.0 - r.replica_hours / baseline_rh;
        r.sp_vs_baseline = Some(sp);
        results.push(PolicyResult {
            name: r.policy.clone(),
            replica_hours: r.replica_hours,
            sp,
            mean_utilization: r.mean_utilization,
            sla_violation_rate: r.sla_violation_rate,
            kl_rt_vs_baseline: kl_divergence(&r.rt_histogram, &baseline_hist, cfg.simulator.kl_smoothing)?,
        });
    }

    let report = ComparisonReport {
        schema_version: crate::config::SCHEMA_VERSION,
        app_id: trace.app_id().to_string(),
        baseline: baseline_name,
        capacity,
        periodicity,
        forecast_evaluation: forecast_out.evaluation.clone(),
        baseline_forecast_evaluation: forecast_out.baseline_evaluation.clone(),
        chosen_hyperparams: forecast_out.chosen,
        policies: results,
    };
    Ok(CompareArtifacts { report, sim_reports, plan: base_plan, forecast: forecast_out })
}

/// Write the comparison artifacts under `out_dir`: `comparison.json`, the
/// base plan, the forecast, and a timeline CSV + decision log per policy.
pub fn write_compare_outputs(out_dir: &Path, artifacts: &CompareArtifacts) -> Result<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::FileIo { path: out_dir.display().to_string(), source: e })?;
    let write = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| Error::FileIo { path: path.display().to_string(), source: e })
    };

    let mut buf = Vec::new();
    serde_json::to_writer_pretty(&mut buf, &artifacts.report)?;
    buf.push(b'\n');
    write("comparison.json", &buf)?;

    let mut buf = Vec::new();
    artifacts.plan.to_csv(&mut buf)?;
    write("plan.csv", &buf)?;

    let mut buf = Vec::new();
    artifacts.forecast.forecast.to_csv(&mut buf)?;
    write("forecast.csv", &buf)?;

    for r in &artifacts.sim_reports {
        let mut buf = Vec::new();
        r.timeline_csv(&mut buf)?;
        write(&format!("timeline_{}.csv", r.policy), &buf)?;
        let mut buf = Vec::new();
        r.decisions_jsonl(&mut buf)?;
        write(&format!("decisions_{}.jsonl", r.policy), &buf)?;
        let mut buf = Vec::new();
        r.rt_histogram.to_csv(&mut buf)?;
        write(&format!("rt_histogram_{}.csv", r.policy), &buf)?;
    }
    Ok(())
}

/// Per-instance QPS samples from a simulation run, for closing the loop
/// back into capacity fitting.
pub fn instance_samples(report: &SimulationReport, active_hours: Option<(u8, u8)>) -> Result<Vec<f64>> {
    per_instance_qps_samples(report, active_hours)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        // 3 days of 1-minute samples, evaluate the last day
        cfg.generator.duration = 3 * 86_400;
        cfg.generator.seed = 7;
        cfg.trace.eval_seconds = 86_400;
        cfg.forecaster.folds = 2;
        cfg.forecaster.n_trees = 10;
        cfg.forecaster.grid.max_depth = Some(vec![4]);
        cfg.forecaster.grid.num_leaves = Some(vec![15]);
        cfg.forecaster.grid.learning_rate = Some(vec![0.3]);
        cfg
    }

    #[test]
    fn split_respects_eval_tail() {
        let cfg = small_config();
        let trace = load_trace(&cfg).unwrap();
        let (train, eval) = split_trace(&trace, 86_400).unwrap();
        assert_eq!(train.span_seconds(), 2 * 86_400);
        assert_eq!(eval.span_seconds(), 86_400);
        assert_eq!(eval.end_ts(), trace.end_ts());
    }

    #[test]
    fn split_too_short_errors() {
        let cfg = small_config();
        let trace = load_trace(&cfg).unwrap();
        assert!(split_trace(&trace, 5 * 86_400).is_err());
    }

    #[test]
    fn compare_end_to_end_small() {
        let cfg = small_config();
        let artifacts = run_compare(&cfg).unwrap();
        let report = &artifacts.report;
        assert_eq!(report.policies.len(), 5);
        // sorted by policy name
        let names: Vec<&str> = report.policies.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["ali_pro", "conserv_pro", "kube_pro", "optimal_pro", "over_pro"]);
        let by = |n: &str| report.policies.iter().find(|p| p.name == n).unwrap();
        assert_eq!(by("over_pro").sp, 0.0);
        assert_eq!(by("over_pro").kl_rt_vs_baseline, 0.0);
        assert!(by("optimal_pro").sp > 0.0);
        assert!(report.periodicity.is_periodical());
    }

    #[test]
    fn compare_is_deterministic() {
        let cfg = small_config();
        let a = run_compare(&cfg).unwrap();
        let b = run_compare(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }

    #[test]
    fn outputs_written(){
        let cfg = small_config();
        let artifacts = run_compare(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_compare_outputs(dir.path(), &artifacts).unwrap();
        for f in ["comparison.json", "plan.csv", "forecast.csv", "timeline_over_pro.csv", "decisions_kube_pro.jsonl"] {
            assert!(dir.path().join(f).exists(), "missing {f}");
        }
        // emitted JSON re-ingests
        let text = fs::read_to_string(dir.path().join("comparison.json")).unwrap();
        let parsed: ComparisonReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.policies.len(), 5);
    }
}

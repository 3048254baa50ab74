//! TOML run configuration shared by the CLI subcommands. Versioned with
//! `schema_version`; unknown fields are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::HyperparamGrid;
use crate::gen::GenConfig;
use crate::trace::WindowStatistic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Path to a workload trace (CSV `timestamp,qps` or the JSON trace
    /// format). When absent, the trace comes from `[generator]`.
    pub path: Option<PathBuf>,
    #[serde(default = "default_app_id")]
    pub app_id: String,
    /// Sample interval of a CSV trace, seconds (JSON traces carry their
    /// own).
    #[serde(default = "default_sample_interval")]
    pub sample_interval: u64,
    /// Evaluation tail reserved for policy comparison, seconds.
    #[serde(default = "default_eval_seconds")]
    pub eval_seconds: u64,
}

fn default_app_id() -> String {
    "app".to_string()
}
fn default_sample_interval() -> u64 {
    60
}
fn default_eval_seconds() -> u64 {
    86_400
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            path: None,
            app_id: default_app_id(),
            sample_interval: default_sample_interval(),
            eval_seconds: default_eval_seconds(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterConfig {
    /// Lag offsets in aggregation windows.
    #[serde(default = "default_lags")]
    pub lags: Vec<usize>,
    #[serde(default = "default_n_trees")]
    pub n_trees: u32,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Tumbling aggregation window fed to the forecaster, seconds.
    #[serde(default = "default_agg_window")]
    pub aggregation_window: u64,
    #[serde(default = "default_agg_statistic")]
    pub aggregation_statistic: WindowStatistic,
    /// Candidate periods for the periodicity check, seconds.
    #[serde(default = "default_periods")]
    pub candidate_periods: Vec<u64>,
    #[serde(default)]
    pub grid: GridConfig,
}

fn default_lags() -> Vec<usize> {
    vec![1, 2, 3, 287, 288, 289]
}
fn default_n_trees() -> u32 {
    50
}
fn default_folds() -> usize {
    3
}
fn default_agg_window() -> u64 {
    300
}
fn default_agg_statistic() -> WindowStatistic {
    WindowStatistic::Max
}
fn default_periods() -> Vec<u64> {
    vec![86_400, 43_200, 604_800]
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            lags: default_lags(),
            n_trees: default_n_trees(),
            folds: default_folds(),
            aggregation_window: default_agg_window(),
            aggregation_statistic: default_agg_statistic(),
            candidate_periods: default_periods(),
            grid: GridConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub max_depth: Option<Vec<u32>>,
    pub num_leaves: Option<Vec<u32>>,
    pub learning_rate: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn to_grid(&self) -> HyperparamGrid {
        let d = HyperparamGrid::default();
        HyperparamGrid {
            max_depth: self.max_depth.clone().unwrap_or(d.max_depth),
            num_leaves: self.num_leaves.clone().unwrap_or(d.num_leaves),
            learning_rate: self.learning_rate.clone().unwrap_or(d.learning_rate),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    /// Direct parameters; used when `samples_path` is absent.
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    /// Per-instance QPS sample file (CSV: one value per line, or
    /// `timestamp,value`).
    pub samples_path: Option<PathBuf>,
    /// Active-hours filter `[start, end)` applied to timestamped samples.
    pub active_hours: Option<(u8, u8)>,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { mu: Some(573.7), sigma: Some(65.9), samples_path: None, active_hours: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    #[serde(default = "default_slot_duration")]
    pub slot_duration: u64,
    #[serde(default = "default_headroom")]
    pub headroom_levels: u32,
    #[serde(default = "default_lambda")]
    pub change_penalty_lambda: f64,
    /// 0 means auto: twice the historical maximum demand.
    #[serde(default)]
    pub max_replicas: u32,
}

fn default_slot_duration() -> u64 {
    3_600
}
fn default_headroom() -> u32 {
    2
}
fn default_lambda() -> f64 {
    0.1
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            slot_duration: default_slot_duration(),
            headroom_levels: default_headroom(),
            change_penalty_lambda: default_lambda(),
            max_replicas: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactiveSection {
    #[serde(default = "default_window_w")]
    pub window_w: u64,
    #[serde(default = "default_tstar")]
    pub threshold_tstar: f64,
    #[serde(default = "default_sp")]
    pub safety_sp: f64,
    #[serde(default = "default_ct")]
    pub cooldown_ct: u64,
    #[serde(default = "default_c_min")]
    pub c_min: u32,
    /// 0 means auto: twice the historical maximum demand.
    #[serde(default)]
    pub c_max: u32,
    #[serde(default = "default_statistic")]
    pub statistic: WindowStatistic,
    #[serde(default)]
    pub decision_shift_sigma: u64,
}

fn default_window_w() -> u64 {
    300
}
fn default_tstar() -> f64 {
    0.9
}
fn default_sp() -> f64 {
    0.1
}
fn default_ct() -> u64 {
    600
}
fn default_c_min() -> u32 {
    1
}
fn default_statistic() -> WindowStatistic {
    WindowStatistic::P95
}

impl Default for ReactiveSection {
    fn default() -> Self {
        Self {
            window_w: default_window_w(),
            threshold_tstar: default_tstar(),
            safety_sp: default_sp(),
            cooldown_ct: default_ct(),
            c_min: default_c_min(),
            c_max: 0,
            statistic: default_statistic(),
            decision_shift_sigma: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoliciesConfig {
    #[serde(default = "default_policy_list")]
    pub list: Vec<String>,
    /// Over-Pro replica count; 0 means auto (historical maximum demand).
    #[serde(default)]
    pub over_max: u32,
    /// Kube-Pro target utilization in (0, 1].
    #[serde(default = "default_kube_target")]
    pub kube_target_utilization: f64,
    #[serde(default = "default_window_w")]
    pub kube_window_w: u64,
    #[serde(default = "default_ct")]
    pub kube_cooldown_ct: u64,
    /// Conserv-Pro time shift, seconds.
    #[serde(default = "default_conserv_shift")]
    pub conserv_shift: u64,
}

fn default_policy_list() -> Vec<String> {
    ["over_pro", "kube_pro", "optimal_pro", "conserv_pro", "ali_pro"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}
fn default_kube_target() -> f64 {
    0.6
}
fn default_conserv_shift() -> u64 {
    1_800
}

impl Default for PoliciesConfig {
    fn default() -> Self {
        Self {
            list: default_policy_list(),
            over_max: 0,
            kube_target_utilization: default_kube_target(),
            kube_window_w: default_window_w(),
            kube_cooldown_ct: default_ct(),
            conserv_shift: default_conserv_shift(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatorConfig {
    #[serde(default = "default_control_interval")]
    pub control_interval: u64,
    #[serde(default = "default_startup_delay")]
    pub pod_startup_delay: u64,
    #[serde(default = "default_base_rt")]
    pub base_response_time: f64,
    #[serde(default = "default_sla")]
    pub sla_threshold: f64,
    #[serde(default = "default_overflow")]
    pub overflow_penalty: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default = "default_kl_eps")]
    pub kl_smoothing: f64,
}

fn default_control_interval() -> u64 {
    60
}
fn default_startup_delay() -> u64 {
    120
}
fn default_base_rt() -> f64 {
    5.0
}
fn default_sla() -> f64 {
    1_000.0
}
fn default_overflow() -> f64 {
    1e5
}
fn default_bins() -> usize {
    10
}
fn default_kl_eps() -> f64 {
    1.0
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            control_interval: default_control_interval(),
            pod_startup_delay: default_startup_delay(),
            base_response_time: default_base_rt(),
            sla_threshold: default_sla(),
            overflow_penalty: default_overflow(),
            histogram_bins: default_bins(),
            kl_smoothing: default_kl_eps(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub generator: GenConfig,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
    #[serde(default)]
    pub capacity: CapacityConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub reactive: ReactiveSection,
    #[serde(default)]
    pub policies: PoliciesConfig,
    #[serde(default)]
    pub simulator: SimulatorConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            trace: TraceConfig::default(),
            generator: GenConfig::default(),
            forecaster: ForecasterConfig::default(),
            capacity: CapacityConfig::default(),
            planner: PlannerConfig::default(),
            reactive: ReactiveSection::default(),
            policies: PoliciesConfig::default(),
            simulator: SimulatorConfig::default(),
            out_dir: default_out_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(cfg.schema_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::FileIo { path: path.display().to_string(), source: e })?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trace.eval_seconds == 0 {
            return Err(Error::InvalidConfig("trace.eval_seconds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.policies.kube_target_utilization)
            || self.policies.kube_target_utilization == 0.0
        {
            return Err(Error::InvalidConfig(format!(
                "policies.kube_target_utilization {} not in (0, 1]",
                self.policies.kube_target_utilization
            )));
        }
        if self.forecaster.lags.is_empty() {
            return Err(Error::InvalidConfig("forecaster.lags must be non-empty".into()));
        }
        if self.capacity.samples_path.is_none()
            && (self.capacity.mu.is_none() || self.capacity.sigma.is_none())
        {
            return Err(Error::InvalidConfig(
                "capacity needs either samples_path or both mu and sigma".into(),
            ));
        }
        if self.simulator.kl_smoothing <= 0.0 {
            return Err(Error::NonPositiveSmoothing);
        }
        let known = ["over_pro", "kube_pro", "optimal_pro", "conserv_pro", "ali_pro"];
        for p in &self.policies.list {
            if !known.contains(&p.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown policy {p:?}")));
            }
        }
        Ok(())
    }
}

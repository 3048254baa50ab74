//! Workload forecasting: lag/time feature engineering, least-squares
//! gradient boosting with leaf-wise trees, contiguous-block grid search,
//! recursive multi-step horizons, a seasonal-naive baseline, and the
//! RMSE/MAPE accuracy metrics.

pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::AggregatedTrace;
use tree::RegressionTree;

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureRow {
    /// Trace values at the configured lag offsets (most recent first order
    /// follows the lag offset list).
    pub lags: Vec<f64>,
    /// Fraction of day in [0, 1).
    pub time_of_day: f64,
    /// 0 = Monday .. 6 = Sunday.
    pub day_of_week: u8,
    pub target: f64,
}

impl FeatureRow {
    fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.lags.len() + 2);
        v.extend_from_slice(&self.lags);
        v.push(self.time_of_day);
        v.push(self.day_of_week as f64);
        v
    }
}

/// Feature rows plus the lag layout they were built with; the layout is
/// what lets a trained model rebuild features during recursive forecasting.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    pub lag_offsets: Vec<usize>,
    pub rows: Vec<FeatureRow>,
}

fn time_features(ts: i64) -> (f64, u8) {
    let tod = ts.rem_euclid(SECONDS_PER_DAY) as f64 / SECONDS_PER_DAY as f64;
    // epoch day 0 (1970-01-01) was a Thursday
    let dow = ((ts.div_euclid(SECONDS_PER_DAY) + 4).rem_euclid(7)) as u8;
    (tod, dow)
}

/// One row per predictable window: the target at index `i` uses trace
/// values at `i - lag` for each configured lag offset.
pub fn build_features(trace: &AggregatedTrace, lag_offsets: &[usize]) -> Result<FeatureSet> {
    if lag_offsets.is_empty() {
        return Err(Error::EmptyLagSet);
    }
    if lag_offsets.contains(&0) {
        return Err(Error::InvalidConfig("lag offsets must be >= 1".into()));
    }
    let max_lag = *lag_offsets.iter().max().unwrap();
    if trace.len() <= max_lag {
        return Err(Error::TraceShorterThanLag { len: trace.len(), max_lag });
    }
    let mut rows = Vec::with_capacity(trace.len() - max_lag);
    for i in max_lag..trace.len() {
        let (ts, target) = trace.windows[i];
        let lags = lag_offsets.iter().map(|&l| trace.windows[i - l].1).collect();
        let (time_of_day, day_of_week) = time_features(ts);
        rows.push(FeatureRow { lags, time_of_day, day_of_week, target });
    }
    Ok(FeatureSet { lag_offsets: lag_offsets.to_vec(), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtHyperparams {
    pub max_depth: u32,
    pub num_leaves: u32,
    pub learning_rate: f64,
}

impl Default for GbdtHyperparams {
    fn default() -> Self {
        Self { max_depth: 6, num_leaves: 31, learning_rate: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbdtModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub base_prediction: f64,
    pub hyperparams: GbdtHyperparams,
    pub lag_offsets: Vec<usize>,
    /// Training RMSE after each boosting iteration.
    pub training_rmse: Vec<f64>,
}

impl GbdtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let boost: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        self.base_prediction + self.learning_rate * boost
    }

    pub fn to_json(&self, w: impl std::io::Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json(r: impl std::io::Read) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Least-squares boosting: tree k fits the residuals left by the first
/// k-1 trees. Deterministic given identical inputs; `seed` is accepted for
/// interface stability but the procedure has no random component.
pub fn fit_gbdt(
    features: &FeatureSet,
    hyperparams: GbdtHyperparams,
    n_trees: u32,
    _seed: u64,
) -> Result<GbdtModel> {
    if features.rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    if n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&hyperparams.learning_rate) || hyperparams.learning_rate == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "learning_rate must be in (0, 1], got {}",
            hyperparams.learning_rate
        )));
    }
    let matrix: Vec<Vec<f64>> = features.rows.iter().map(|r| r.to_vec()).collect();
    let targets: Vec<f64> = features.rows.iter().map(|r| r.target).collect();
    let n = targets.len() as f64;
    let base_prediction = targets.iter().sum::<f64>() / n;
    let mut predictions = vec![base_prediction; targets.len()];
    let mut trees = Vec::with_capacity(n_trees as usize);
    let mut training_rmse = Vec::with_capacity(n_trees as usize);
    for _ in 0..n_trees {
        let residuals: Vec<f64> = targets.iter().zip(&predictions).map(|(y, p)| y - p).collect();
        let tree = RegressionTree::fit(&matrix, &residuals, hyperparams.max_depth, hyperparams.num_leaves);
        for (pred, row) in predictions.iter_mut().zip(&matrix) {
            *pred += hyperparams.learning_rate * tree.predict(row);
        }
        let sse: f64 = targets.iter().zip(&predictions).map(|(y, p)| (y - p) * (y - p)).sum();
        training_rmse.push((sse / n).sqrt());
        trees.push(tree);
    }
    Ok(GbdtModel {
        trees,
        learning_rate: hyperparams.learning_rate,
        base_prediction,
        hyperparams,
        lag_offsets: features.lag_offsets.clone(),
        training_rmse,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperparamGrid {
    pub max_depth: Vec<u32>,
    pub num_leaves: Vec<u32>,
    pub learning_rate: Vec<f64>,
}

impl Default for HyperparamGrid {
    fn default() -> Self {
        Self {
            max_depth: vec![3, 6, 9],
            num_leaves: vec![7, 31],
            learning_rate: vec![0.05, 0.1, 0.3],
        }
    }
}

/// Contiguous-block time-series cross-validation: rows are split into
/// `folds` blocks in order; for each k >= 1, a model trained on blocks
/// 0..k is scored on block k. The tuple with minimum mean validation RMSE
/// wins; ties prefer the lexicographically smaller
/// (max_depth, num_leaves, learning_rate). The winner is refit on all rows.
pub fn grid_search(
    features: &FeatureSet,
    grid: &HyperparamGrid,
    n_trees: u32,
    folds: usize,
    seed: u64,
) -> Result<(GbdtModel, GbdtHyperparams)> {
    if grid.max_depth.is_empty() {
        return Err(Error::EmptyGrid { dim: "max_depth" });
    }
    if grid.num_leaves.is_empty() {
        return Err(Error::EmptyGrid { dim: "num_leaves" });
    }
    if grid.learning_rate.is_empty() {
        return Err(Error::EmptyGrid { dim: "learning_rate" });
    }
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be >= 2".into()));
    }
    let n = features.rows.len();
    if n < folds * 2 {
        return Err(Error::TooFewRowsForFolds { rows: n, folds });
    }
    let block = n / folds;
    let mut sorted_depth = grid.max_depth.clone();
    sorted_depth.sort_unstable();
    let mut sorted_leaves = grid.num_leaves.clone();
    sorted_leaves.sort_unstable();
    let mut sorted_lr = grid.learning_rate.clone();
    sorted_lr.sort_by(f64::total_cmp);

    let mut best: Option<(f64, GbdtHyperparams)> = None;
    for &max_depth in &sorted_depth {
        for &num_leaves in &sorted_leaves {
            for &learning_rate in &sorted_lr {
                let hp = GbdtHyperparams { max_depth, num_leaves, learning_rate };
                let mut rmse_sum = 0.0;
                let mut evals = 0;
                for k in 1..folds {
                    let train_end = k * block;
                    let val_end = if k == folds - 1 { n } else { (k + 1) * block };
                    let train = FeatureSet {
                        lag_offsets: features.lag_offsets.clone(),
                        rows: features.rows[..train_end].to_vec(),
                    };
                    let model = fit_gbdt(&train, hp, n_trees, seed)?;
                    let val = &features.rows[train_end..val_end];
                    let actual: Vec<f64> = val.iter().map(|r| r.target).collect();
                    let predicted: Vec<f64> = val.iter().map(|r| model.predict_row(&r.to_vec())).collect();
                    rmse_sum += evaluate(&actual, &predicted)?.rmse;
                    evals += 1;
                }
                let mean_rmse = rmse_sum / evals as f64;
                // strict < keeps the lexicographically first tuple on ties
                if best.as_ref().map_or(true, |(b, _)| mean_rmse < *b) {
                    best = Some((mean_rmse, hp));
                }
            }
        }
    }
    let (_, hp) = best.unwrap();
    let model = fit_gbdt(features, hp, n_trees, seed)?;
    Ok((model, hp))
}

/// Predicted QPS per future window; timestamps are contiguous at the
/// source interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Forecast {
    pub horizon: Vec<(i64, f64)>,
    pub interval: u64,
}

impl Forecast {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.horizon.iter().map(|&(_, v)| v)
    }

    pub fn to_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "timestamp,predicted_qps")?;
        for &(ts, qps) in &self.horizon {
            writeln!(w, "{},{}", ts, qps)?;
        }
        Ok(())
    }
}

/// Recursive multi-step forecast: predicted values feed later lags.
/// Predictions are clamped to >= 0.
pub fn predict_horizon(model: &GbdtModel, trace: &AggregatedTrace, horizon_windows: usize) -> Result<Forecast> {
    if horizon_windows == 0 {
        return Err(Error::InvalidHorizon);
    }
    let max_lag = *model.lag_offsets.iter().max().ok_or(Error::EmptyLagSet)?;
    if trace.len() < max_lag {
        return Err(Error::TraceShorterThanLag { len: trace.len(), max_lag });
    }
    let mut history: Vec<f64> = trace.values().collect();
    let last_ts = trace.windows[trace.len() - 1].0;
    let interval = trace.window_size as i64;
    let mut horizon = Vec::with_capacity(horizon_windows);
    for h in 0..horizon_windows {
        let ts = last_ts + (h as i64 + 1) * interval;
        let mut row: Vec<f64> = model
            .lag_offsets
            .iter()
            .map(|&l| history[history.len() - l])
            .collect();
        let (tod, dow) = time_features(ts);
        row.push(tod);
        row.push(dow as f64);
        let pred = model.predict_row(&row).max(0.0);
        history.push(pred);
        horizon.push((ts, pred));
    }
    Ok(Forecast { horizon, interval: trace.window_size })
}

/// forecast(t) = trace(t - period); horizons longer than one period repeat
/// the last observed period.
pub fn seasonal_naive(trace: &AggregatedTrace, period_windows: usize, horizon_windows: usize) -> Result<Forecast> {
    if period_windows == 0 {
        return Err(Error::InvalidConfig("period_windows must be >= 1".into()));
    }
    if horizon_windows == 0 {
        return Err(Error::InvalidHorizon);
    }
    let n = trace.len();
    if n < period_windows {
        return Err(Error::TraceShorterThanLag { len: n, max_lag: period_windows });
    }
    let last_ts = trace.windows[n - 1].0;
    let interval = trace.window_size as i64;
    let horizon = (0..horizon_windows)
        .map(|h| {
            let ts = last_ts + (h as i64 + 1) * interval;
            let value = trace.windows[n - period_windows + (h % period_windows)].1;
            (ts, value)
        })
        .collect();
    Ok(Forecast { horizon, interval: trace.window_size })
}

/// RMSE and MAPE of a prediction against actuals. Zero actuals are
/// excluded from the MAPE sum (with the exclusion count reported) since
/// the relative error divides by the actual value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForecastEvaluation {
    pub n: usize,
    pub rmse: f64,
    pub mape: f64,
    pub mape_excluded: usize,
}

pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<ForecastEvaluation> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
    }
    if actual.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let n = actual.len();
    let sq_sum: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    let rmse = (sq_sum / n as f64).sqrt();
    let mut ape_sum = 0.0;
    let mut included = 0usize;
    for (y, p) in actual.iter().zip(predicted) {
        if *y != 0.0 {
            ape_sum += ((y - p) / y).abs();
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::AllActualsZero);
    }
    Ok(ForecastEvaluation {
        n,
        rmse,
        mape: ape_sum / included as f64,
        mape_excluded: n - included,
    })
}

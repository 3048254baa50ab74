//! Command-line entry point. Exit codes: 0 success, 1 internal or
//! feasibility error, 2 usage/config error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use capro::config::RunConfig;
use capro::error::{Error, Result};
use capro::gen::generate;
use capro::pipeline::{
    self, capacity_from_config, load_trace, read_trace_file, run_compare, run_forecast,
    split_trace, write_compare_outputs,
};
use capro::planner::{build_graph, plan as plan_graph, WeightFn};
use capro::trace::{classify_periodicity, summarize};

#[derive(Parser)]
#[command(name = "capro", version, about = "Capacity provisioning toolkit: workload analysis, forecasting, planning, and policy simulation")]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Generator seed (overrides the config's generator.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for reports printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics and periodicity classification of a trace.
    Analyze {
        /// Trace file (CSV `timestamp,qps` or JSON); defaults to the
        /// config's trace (or the generator).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train the forecaster on the trace head and evaluate on the tail.
    Forecast,
    /// Fit the per-pod capacity model from per-instance QPS samples.
    FitCapacity {
        /// Sample file: one value per line, or `timestamp,value` rows.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Build the proactive replica plan from the forecast.
    Plan,
    /// Replay the evaluation window against a single policy.
    Simulate {
        /// Policy name: over_pro | kube_pro | optimal_pro | conserv_pro | ali_pro.
        #[arg(long)]
        policy: String,
    },
    /// Run every configured policy and compare them.
    Compare,
    /// Emit a seeded synthetic workload trace.
    GenTrace,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap returns success for --help/--version
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.generator.seed = seed;
    }
    Ok(cfg)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::FileIo { path: dir.display().to_string(), source: e })
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    ensure_out_dir(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::FileIo { path: path.display().to_string(), source: e })?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let out_dir = cfg.out_dir.clone();
    match &cli.command {
        Command::Analyze { trace } => {
            let t = match trace {
                Some(path) => read_trace_file(path, &cfg.trace.app_id, Some(cfg.trace.sample_interval))?,
                None => load_trace(&cfg)?,
            };
            let stats = summarize(&t)?;
            let label = classify_periodicity(&t, &cfg.forecaster.candidate_periods)?;
            let report = serde_json::json!({
                "app_id": t.app_id(),
                "samples": t.len(),
                "span_seconds": t.span_seconds(),
                "stats": stats,
                "periodicity": label,
            });
            let text = serde_json::to_string_pretty(&report)? + "\n";
            let path = write_out(&out_dir, "analysis.json", text.as_bytes())?;
            println!("{text}");
            eprintln!("wrote {}", path.display());
        }
        Command::Forecast => {
            let t = load_trace(&cfg)?;
            let (train, eval) = split_trace(&t, cfg.trace.eval_seconds)?;
            let fo = run_forecast(&cfg, &train, &eval)?;
            let mut buf = Vec::new();
            fo.forecast.to_csv(&mut buf)?;
            write_out(&out_dir, "forecast.csv", &buf)?;
            let mut buf = Vec::new();
            fo.model.to_json(&mut buf)?;
            write_out(&out_dir, "model.json", &buf)?;
            let eval_json = serde_json::json!({
                "chosen_hyperparams": fo.chosen,
                "gbdt": fo.evaluation,
                "seasonal_naive": fo.baseline_evaluation,
            });
            let text = serde_json::to_string_pretty(&eval_json)? + "\n";
            write_out(&out_dir, "forecast_eval.json", text.as_bytes())?;
            println!("{text}");
        }
        Command::FitCapacity { samples } => {
            let model = match samples {
                Some(path) => {
                    let mut c = cfg.clone();
                    c.capacity.samples_path = Some(path.clone());
                    capacity_from_config(&c)?
                }
                None => capacity_from_config(&cfg)?,
            };
            let mut buf = Vec::new();
            model.to_json(&mut buf)?;
            buf.push(b'\n');
            write_out(&out_dir, "capacity.json", &buf)?;
            println!("{}", String::from_utf8_lossy(&buf));
        }
        Command::Plan => {
            let t = load_trace(&cfg)?;
            let (train, eval) = split_trace(&t, cfg.trace.eval_seconds)?;
            let fo = run_forecast(&cfg, &train, &eval)?;
            let capacity = capacity_from_config(&cfg)?;
            let hist_max = pipeline::historical_max_demand(&train, &capacity)?;
            let max_replicas =
                if cfg.planner.max_replicas > 0 { cfg.planner.max_replicas } else { hist_max * 2 };
            let graph = build_graph(
                &fo.forecast,
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
            let p = plan_graph(&graph, weight)?;
            let mut buf = Vec::new();
            p.to_csv(&mut buf)?;
            write_out(&out_dir, "plan.csv", &buf)?;
            let mut jbuf = Vec::new();
            p.to_json(&mut jbuf)?;
            jbuf.push(b'\n');
            write_out(&out_dir, "plan.json", &jbuf)?;
            match cli.format {
                Format::Csv => println!("{}", String::from_utf8_lossy(&buf)),
                Format::Json => println!("{}", String::from_utf8_lossy(&jbuf)),
            }
        }
        Command::Simulate { policy } => {
            let mut c = cfg.clone();
            c.policies.list = vec![policy.clone()];
            c.validate()?;
            let artifacts = run_compare(&c)?;
            let report = &artifacts.sim_reports[0];
            let mut buf = Vec::new();
            report.timeline_csv(&mut buf)?;
            write_out(&out_dir, &format!("timeline_{policy}.csv"), &buf)?;
            let text = serde_json::to_string_pretty(&artifacts.report)? + "\n";
            write_out(&out_dir, "simulation.json", text.as_bytes())?;
            println!("{text}");
        }
        Command::Compare => {
            let artifacts = run_compare(&cfg)?;
            write_compare_outputs(&out_dir, &artifacts)?;
            match cli.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&artifacts.report)?);
                }
                Format::Csv => {
                    println!("policy,replica_hours,sp,mean_utilization,sla_violation_rate,kl_rt_vs_baseline");
                    for p in &artifacts.report.policies {
                        println!(
                            "{},{},{},{},{},{}",
                            p.name,
                            p.replica_hours,
                            p.sp,
                            p.mean_utilization,
                            p.sla_violation_rate,
                            p.kl_rt_vs_baseline
                        );
                    }
                }
            }
        }
        Command::GenTrace => {
            let t = generate(&cfg.generator)?;
            let (name, bytes) = match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    t.to_csv(&mut buf)?;
                    ("trace.csv", buf)
                }
                Format::Json => {
                    let mut buf = Vec::new();
                    t.to_json(&mut buf)?;
                    buf.push(b'\n');
                    ("trace.json", buf)
                }
            };
            let path = write_out(&out_dir, name, &bytes)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

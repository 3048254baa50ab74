//! Capacity provisioning toolkit for microservice clusters: workload
//! analysis, GBDT forecasting, per-pod capacity fitting, proactive replica
//! planning, reactive control, and a trace-driven policy simulator.

pub mod capacity;
pub mod config;
pub mod error;
pub mod forecast;
pub mod gen;
pub mod pipeline;
pub mod planner;
pub mod policy;
pub mod reactive;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};

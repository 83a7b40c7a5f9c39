//! Deployment-mode sweeps: the same scenario run under several modes with a
//! shared seed, reduced to one comparative row per mode.

use std::fmt;

use serde::Serialize;

use crate::metrics::{reduce_trace, MetricsBundle, ReduceError};
use crate::scenario::ScenarioConfig;
use crate::simnet::{run_scenario, BuildError, DeploymentMode};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("mode {mode}: {source}")]
    Run {
        mode: &'static str,
        #[source]
        source: BuildError,
    },
    #[error("mode {mode}: {source}")]
    Reduce {
        mode: &'static str,
        #[source]
        source: ReduceError,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub mode: String,
    pub success_rate: f64,
    pub per_client_success: Vec<(String, f64)>,
    pub server_responses_per_round: f64,
    pub median_retrieval_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

fn median_ms(bundle: &MetricsBundle) -> f64 {
    let mut samples: Vec<u64> = bundle
        .per_client
        .values()
        .flat_map(|c| c.samples_us.iter().copied())
        .collect();
    if samples.is_empty() {
        return 0.0;
    }
    samples.sort_unstable();
    samples[samples.len() / 2] as f64 / 1_000.0
}

/// Runs `base` once per mode, all with the scenario's seed, and collects
/// the comparative summary.
pub fn run_suite(
    base: &ScenarioConfig,
    modes: &[DeploymentMode],
) -> Result<(SuiteReport, Vec<MetricsBundle>), SuiteError> {
    let mut rows = Vec::with_capacity(modes.len());
    let mut bundles = Vec::with_capacity(modes.len());
    for &mode in modes {
        let mut config = base.clone();
        config.scenario.mode = mode;
        let trace = run_scenario(&config).map_err(|source| SuiteError::Run {
            mode: mode.as_str(),
            source,
        })?;
        let bundle = reduce_trace(&trace).map_err(|source| SuiteError::Reduce {
            mode: mode.as_str(),
            source,
        })?;
        rows.push(SuiteRow {
            mode: mode.as_str().to_string(),
            success_rate: if bundle.total_issued > 0 {
                bundle.total_delivered as f64 / bundle.total_issued as f64
            } else {
                0.0
            },
            per_client_success: bundle
                .per_client
                .iter()
                .map(|(k, v)| (k.clone(), v.success_rate))
                .collect(),
            server_responses_per_round: bundle.server_responses_per_round,
            median_retrieval_ms: median_ms(&bundle),
        });
        bundles.push(bundle);
    }
    Ok((SuiteReport { seed: base.scenario.seed, rows }, bundles))
}

impl SuiteReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("mode,success_rate,server_responses_per_round,median_retrieval_ms\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.4},{:.3}\n",
                row.mode, row.success_rate, row.server_responses_per_round, row.median_retrieval_ms
            ));
        }
        out
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>12} {:>14} {:>12}",
            "mode", "success", "server rsp/rnd", "median ms"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<20} {:>11.2}% {:>14.2} {:>12.2}",
                row.mode,
                row.success_rate * 100.0,
                row.server_responses_per_round,
                row.median_retrieval_ms
            )?;
        }
        Ok(())
    }
}

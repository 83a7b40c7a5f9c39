//! Trace reduction into the four metric families: content retrieval times
//! and success rates, server response rate, link stress along the shared
//! path, and cryptographic operations normalized per successful retrieval.

mod export;
mod suite;

pub use export::{export_bundle, ExportError};
pub use suite::{run_suite, SuiteError, SuiteReport, SuiteRow};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::security::CryptoCounters;
use crate::simnet::{FrameKind, RawTrace, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("trace has no run header record")]
    MissingHeader,
    #[error("content delivered for {client} round {round} without a matching request")]
    OrphanDelivery { client: String, round: u32 },
}

/// Outcome of one scheduled request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrieval {
    pub client: String,
    pub round: u32,
    pub issued_us: u64,
    /// None when the request never completed.
    pub elapsed_us: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClientSummary {
    pub issued: u64,
    pub delivered: u64,
    pub failed: u64,
    pub success_rate: f64,
    /// Retrieval-time samples of successful requests, microseconds,
    /// in issue order.
    pub samples_us: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinkStress {
    pub requests: u64,
    pub responses: u64,
    pub request_attempts: u64,
    pub response_attempts: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CryptoPerRetrieval {
    pub aead: f64,
    pub sign: f64,
    pub verify: f64,
    pub hmac: f64,
}

fn normalize(counters: &CryptoCounters, retrievals: u64) -> CryptoPerRetrieval {
    if retrievals == 0 {
        return CryptoPerRetrieval::default();
    }
    let d = retrievals as f64;
    CryptoPerRetrieval {
        aead: counters.aead_ops as f64 / d,
        sign: counters.sign_ops as f64 / d,
        verify: counters.verify_ops as f64 / d,
        hmac: counters.hmac_ops as f64 / d,
    }
}

/// All metric families computed from one run's trace.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsBundle {
    pub mode: String,
    pub seed: u64,
    pub rounds: u32,
    pub clients: u32,
    pub server: String,

    pub retrievals: Vec<Retrieval>,
    pub per_client: BTreeMap<String, ClientSummary>,
    pub total_issued: u64,
    pub total_delivered: u64,

    /// Outgoing response/Data transmissions at the server, bucketed per
    /// simulated second.
    pub server_tx_per_second: BTreeMap<u64, u64>,
    pub server_responses_total: u64,
    pub server_responses_per_round: f64,
    /// Mean rate over whole seconds, excluding the first and last ten
    /// simulated seconds of the run (startup and drain transients).
    pub server_rate_steady_mean: f64,

    pub link_stress: BTreeMap<(String, String), LinkStress>,

    pub node_crypto: BTreeMap<String, CryptoCounters>,
    pub client_crypto_per_retrieval: CryptoPerRetrieval,
    pub server_crypto_per_retrieval: CryptoPerRetrieval,
}

impl MetricsBundle {
    pub fn client_success_rate(&self, client: &str) -> f64 {
        self.per_client.get(client).map(|c| c.success_rate).unwrap_or(0.0)
    }

    /// Upstream request transmissions of one node (frames it sent toward
    /// the given neighbor).
    pub fn upstream_requests(&self, from: &str, to: &str) -> u64 {
        self.link_stress
            .get(&(from.to_string(), to.to_string()))
            .map(|l| l.requests)
            .unwrap_or(0)
    }
}

/// Deterministic reduction of a trace. Retrieval time runs from request
/// issue to application delivery, so retransmission delays are included.
pub fn reduce_trace(trace: &RawTrace) -> Result<MetricsBundle, ReduceError> {
    let Some(TraceRecord::Meta { mode, rounds, clients, server, seed, .. }) =
        trace.records.first()
    else {
        return Err(ReduceError::MissingHeader);
    };

    let mut issued: BTreeMap<(String, u32), u64> = BTreeMap::new();
    let mut per_client: BTreeMap<String, ClientSummary> = BTreeMap::new();
    let mut retrievals = Vec::new();
    let mut server_tx_per_second = BTreeMap::new();
    let mut server_responses_total = 0u64;
    let mut link_stress: BTreeMap<(String, String), LinkStress> = BTreeMap::new();
    let mut node_crypto: BTreeMap<String, CryptoCounters> = BTreeMap::new();
    let mut max_t = 0u64;

    for record in &trace.records {
        max_t = max_t.max(record.time());
        match record {
            TraceRecord::RequestIssued { t, client, round } => {
                issued.insert((client.clone(), *round), *t);
                per_client.entry(client.clone()).or_default().issued += 1;
            }
            TraceRecord::ContentDelivered { client, round, elapsed_us, .. } => {
                let issue_t = issued
                    .get(&(client.clone(), *round))
                    .copied()
                    .ok_or_else(|| ReduceError::OrphanDelivery {
                        client: client.clone(),
                        round: *round,
                    })?;
                let summary = per_client.entry(client.clone()).or_default();
                summary.delivered += 1;
                summary.samples_us.push(*elapsed_us);
                retrievals.push(Retrieval {
                    client: client.clone(),
                    round: *round,
                    issued_us: issue_t,
                    elapsed_us: Some(*elapsed_us),
                });
            }
            TraceRecord::RequestFailed { client, round, .. } => {
                let issue_t = issued.get(&(client.clone(), *round)).copied().unwrap_or(0);
                per_client.entry(client.clone()).or_default().failed += 1;
                retrievals.push(Retrieval {
                    client: client.clone(),
                    round: *round,
                    issued_us: issue_t,
                    elapsed_us: None,
                });
            }
            TraceRecord::FrameSent { t, from, to, kind, bytes, attempts, .. } => {
                let stress = link_stress
                    .entry((from.clone(), to.clone()))
                    .or_default();
                let attempt_total: u64 = attempts.iter().map(|a| *a as u64).sum();
                if kind.is_request_like() {
                    stress.requests += 1;
                    stress.request_attempts += attempt_total;
                } else {
                    stress.responses += 1;
                    stress.response_attempts += attempt_total;
                }
                stress.bytes += bytes;
                if from == server && matches!(kind, FrameKind::Response | FrameKind::Data) {
                    server_responses_total += 1;
                    *server_tx_per_second.entry(t / 1_000_000).or_insert(0) += 1;
                }
            }
            TraceRecord::CryptoOps { node, aead, sign, verify, hmac, .. } => {
                let c = node_crypto.entry(node.clone()).or_default();
                c.aead_ops += aead;
                c.sign_ops += sign;
                c.verify_ops += verify;
                c.hmac_ops += hmac;
            }
            _ => {}
        }
    }

    let mut total_issued = 0;
    let mut total_delivered = 0;
    for summary in per_client.values_mut() {
        summary.success_rate = if summary.issued > 0 {
            summary.delivered as f64 / summary.issued as f64
        } else {
            0.0
        };
        total_issued += summary.issued;
        total_delivered += summary.delivered;
    }

    // steady-state server rate over whole seconds in [10, end - 10)
    let end_second = max_t / 1_000_000;
    let steady: Vec<u64> = (10..end_second.saturating_sub(10))
        .map(|s| server_tx_per_second.get(&s).copied().unwrap_or(0))
        .collect();
    let server_rate_steady_mean = if steady.is_empty() {
        0.0
    } else {
        steady.iter().sum::<u64>() as f64 / steady.len() as f64
    };

    // normalized crypto: client rows aggregate over all client nodes per
    // successful retrieval of those clients; server rows divide by all
    // successful retrievals
    let mut client_crypto = CryptoCounters::default();
    for (node, counters) in &node_crypto {
        if per_client.contains_key(node) {
            client_crypto.add(counters);
        }
    }
    let server_crypto = node_crypto.get(server).copied().unwrap_or_default();

    Ok(MetricsBundle {
        mode: mode.clone(),
        seed: *seed,
        rounds: *rounds,
        clients: *clients,
        server: server.clone(),
        retrievals,
        per_client,
        total_issued,
        total_delivered,
        server_tx_per_second,
        server_responses_total,
        server_responses_per_round: if *rounds > 0 {
            server_responses_total as f64 / *rounds as f64
        } else {
            0.0
        },
        server_rate_steady_mean,
        link_stress,
        node_crypto,
        client_crypto_per_retrieval: normalize(&client_crypto, total_delivered),
        server_crypto_per_retrieval: normalize(&server_crypto, total_delivered),
    })
}

//! Hop-wise forward-proxy engine.
//!
//! The engine is a deterministic state machine: the surrounding event loop
//! feeds it one event at a time (an incoming request, an incoming response
//! or a timer expiry) and it answers with a list of [`Action`]s. It holds
//! the three per-hop tables of the data-centric deployment:
//!
//! * a [`Fib`] with multiple next-hops per prefix,
//! * the pending-request table that aggregates equal in-flight requests and
//!   records every downstream (client, token) pair for the fan-out,
//! * an LRU response cache.
//!
//! Responses consume pending state: the first one is cached and fanned out,
//! later ones for the same upstream token are deduplicated.

mod engine;
mod fib;
mod pending;
mod server;

pub use engine::{Action, EngineCounters, EngineEvent, ProxyEngine, Sender};
pub use fib::{Fib, FibEntry, FibError, NamePattern, NextHop};
pub use pending::{Downstream, PendingEntry};
pub use server::{serve_origin, ServerResources};

use serde::{Deserialize, Serialize};

/// Node role within a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Client,
    Forwarder,
    Server,
}

/// Per-node forwarding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyConfig {
    /// Message timeout before a pending request is retransmitted, in
    /// microseconds.
    pub request_timeout_us: u64,
    /// Upper bound on request retransmissions per pending entry.
    pub max_request_retries: u8,
    /// Response cache capacity in entries.
    pub cache_capacity: usize,
    pub role: Role,
}

impl ProxyConfig {
    pub fn new(role: Role) -> ProxyConfig {
        ProxyConfig {
            request_timeout_us: 2_000_000,
            max_request_retries: 3,
            cache_capacity: 40,
            role,
        }
    }
}

//! Trace records.
//!
//! A run emits one record per send, delivery milestone, state transition and
//! crypto operation, all carrying microsecond timestamps. The newline-
//! delimited JSON form is the stable external interface consumed by the
//! metrics reduction and by the replay oracles.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use crate::simnet::event::FrameKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum TraceRecord {
    /// Run header: deployment mode, workload shape, server name, seed.
    Meta {
        mode: String,
        rounds: u32,
        clients: u32,
        period_ms: u64,
        server: String,
        seed: u64,
    },
    RequestIssued {
        t: u64,
        client: String,
        round: u32,
    },
    ContentDelivered {
        t: u64,
        client: String,
        round: u32,
        elapsed_us: u64,
    },
    RequestFailed {
        t: u64,
        client: String,
        round: u32,
    },
    /// One link transmission (all MAC attempts of all fragments).
    FrameSent {
        t: u64,
        from: String,
        to: String,
        kind: FrameKind,
        bytes: u64,
        fragments: u32,
        attempts: Vec<u8>,
        delivered: bool,
        delivery_t: Option<u64>,
        key: String,
        token: String,
    },
    /// Crypto operation deltas accrued while processing one event.
    CryptoOps {
        t: u64,
        node: String,
        aead: u64,
        sign: u64,
        verify: u64,
        hmac: u64,
    },
    CacheHit { t: u64, node: String },
    CacheInsert { t: u64, node: String, evicted: u64 },
    Aggregated { t: u64, node: String, entry: u64 },
    PendingCreated { t: u64, node: String, entry: u64, key: String, token: String },
    DownstreamRecorded { t: u64, node: String, entry: u64, peer: String, token: String },
    EntryConsumed { t: u64, node: String, entry: u64, by_timeout: bool },
    TerminalSent { t: u64, node: String, entry: u64, peer: String, token: String, error: bool },
    ResponseDeduplicated { t: u64, node: String },
    UnmatchedDropped { t: u64, node: String },
    TamperedDropped { t: u64, node: String },
    FibMiss { t: u64, node: String },
    Retransmit { t: u64, node: String, entry: u64, retries_left: u8 },
}

impl TraceRecord {
    pub fn time(&self) -> u64 {
        match self {
            TraceRecord::Meta { .. } => 0,
            TraceRecord::RequestIssued { t, .. }
            | TraceRecord::ContentDelivered { t, .. }
            | TraceRecord::RequestFailed { t, .. }
            | TraceRecord::FrameSent { t, .. }
            | TraceRecord::CryptoOps { t, .. }
            | TraceRecord::CacheHit { t, .. }
            | TraceRecord::CacheInsert { t, .. }
            | TraceRecord::Aggregated { t, .. }
            | TraceRecord::PendingCreated { t, .. }
            | TraceRecord::DownstreamRecorded { t, .. }
            | TraceRecord::EntryConsumed { t, .. }
            | TraceRecord::TerminalSent { t, .. }
            | TraceRecord::ResponseDeduplicated { t, .. }
            | TraceRecord::UnmatchedDropped { t, .. }
            | TraceRecord::TamperedDropped { t, .. }
            | TraceRecord::FibMiss { t, .. }
            | TraceRecord::Retransmit { t, .. } => *t,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// The full event trace of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTrace {
    pub records: Vec<TraceRecord>,
}

impl RawTrace {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_ndjson().as_bytes())
    }

    pub fn from_ndjson<R: BufRead>(reader: R) -> Result<RawTrace, TraceError> {
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line)
                .map_err(|source| TraceError::Malformed { line: idx + 1, source })?;
            records.push(record);
        }
        Ok(RawTrace { records })
    }
}

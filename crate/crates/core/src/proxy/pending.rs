//! Pending-request state.
//!
//! One entry exists per cache key while a request is in flight. Tokens in
//! client requests identify transactions and are stored individually, so a
//! returning response can be re-addressed to every interested client.
//! Upstream tokens are local to the hop and never reuse a client token.

use crate::coap::{CacheKey, Message, Token};
use crate::proxy::engine::Sender;
use crate::simnet::{NodeId, SimTime};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Downstream {
    pub peer: Sender,
    pub token: Token,
}

#[derive(Debug, Clone)]
pub struct PendingEntry {
    /// Node-local identifier, used by traces and invariant checks.
    pub entry_id: u64,
    pub cache_key: CacheKey,
    pub downstream: Vec<Downstream>,
    pub upstream_token: Token,
    /// Next-hops the upstream request was sent to; retransmissions go to
    /// all of them.
    pub outstanding_next_hops: Vec<NodeId>,
    /// Prepared per-hop upstream messages, kept verbatim so retransmissions
    /// reuse the exact original bytes.
    pub upstream_messages: Vec<(NodeId, Message)>,
    pub retries_left: u8,
    pub timeout_at: SimTime,
}

impl PendingEntry {
    /// Records a downstream requester; duplicate (peer, token) pairs are
    /// retransmissions of the same transaction and collapse to one slot.
    /// Returns true when a new slot was added.
    pub fn record_downstream(&mut self, peer: Sender, token: Token) -> bool {
        let exists = self
            .downstream
            .iter()
            .any(|d| d.peer == peer && d.token == token);
        if exists {
            return false;
        }
        self.downstream.push(Downstream { peer, token });
        true
    }
}

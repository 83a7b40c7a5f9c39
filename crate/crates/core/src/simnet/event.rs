//! The event queue.
//!
//! Events are processed in nondecreasing time order; ties break by insertion
//! sequence, which makes every run a pure function of the inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::coap::CacheKey;
use crate::ndn::Name;
use crate::simnet::{NodeId, SimTime};

/// Identifies a pending-state timer on a node.
#[derive(Debug, Clone, PartialEq)]
pub enum TimerKind {
    CoapPending(CacheKey),
    NdnPending(Name),
}

/// What a frame carries; used for trace classification and link accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Request,
    Response,
    Interest,
    Data,
}

impl FrameKind {
    pub fn is_request_like(self) -> bool {
        matches!(self, FrameKind::Request | FrameKind::Interest)
    }
}

/// A frame in flight: hop addressing plus end-to-end addressing (they only
/// differ in the router deployment) and the encoded body.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub link_src: NodeId,
    pub net_src: NodeId,
    pub net_dst: NodeId,
    pub kind: FrameKind,
    pub body: Vec<u8>,
    /// Short content identifier (cache key prefix or name) for traces.
    pub key_hint: String,
    /// Correlation identifier (token hex or Interest nonce) for traces.
    pub token_hint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    FrameDelivery(Frame),
    Timer(TimerKind),
    /// A client application issues its request for `round`.
    AppTick { round: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: EventKind,
}

struct QueuedEvent {
    event: SimEvent,
    seq: u64,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.event.time == other.event.time && self.seq == other.seq
    }
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for the min-heap behavior on BinaryHeap
        other
            .event
            .time
            .cmp(&self.event.time)
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<QueuedEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> EventQueue {
        EventQueue::default()
    }

    pub fn push(&mut self, event: SimEvent) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(QueuedEvent { event, seq });
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|q| q.event)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

//! The forwarding state machine.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::coap::{
    compose_request, compute_cache_key, split_proxy_uri, CacheKey, Code, Message, Token,
};
use crate::lru::LruCache;
use crate::proxy::{Fib, PendingEntry, ProxyConfig, Role};
use crate::simnet::{NodeId, SimTime};

/// Where a request came from / where a response must go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sender {
    /// The node's own application.
    Local,
    Peer(NodeId),
}

/// What the engine wants the surrounding node to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    SendTo(NodeId, Message),
    DeliverLocal(Message),
    StartTimer { key: CacheKey, at: SimTime },
}

/// Observable engine events, consumed by the trace layer and by the
/// invariant test suites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineEvent {
    CacheHit,
    CacheInsert { evicted: usize },
    EntryCreated { entry: u64, key: CacheKey, upstream_token: Token },
    DownstreamRecorded { entry: u64, peer: Sender, token: Token },
    Aggregated { entry: u64 },
    EntryConsumed { entry: u64, by_timeout: bool },
    TerminalSent { entry: u64, peer: Sender, token: Token, error: bool },
    ResponseDeduplicated,
    UnmatchedResponseDropped,
    FibMiss,
    Retransmitted { entry: u64, retries_left: u8 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EngineCounters {
    pub requests_in: u64,
    pub cache_hits: u64,
    pub cache_inserts: u64,
    pub aggregated: u64,
    pub forwarded_requests: u64,
    pub responses_fanned_out: u64,
    pub dedup_responses: u64,
    pub unmatched_responses: u64,
    pub fib_misses: u64,
    pub retransmissions: u64,
    pub exhausted_entries: u64,
}

/// Deterministic hop-wise forwarding engine. See the module docs of
/// [`crate::proxy`] for the overall shape.
#[derive(Debug)]
pub struct ProxyEngine {
    config: ProxyConfig,
    fib: Fib,
    pending: HashMap<CacheKey, PendingEntry>,
    token_index: HashMap<Token, CacheKey>,
    consumed_tokens: HashSet<Token>,
    cache: LruCache<CacheKey, Message>,
    next_token: u64,
    next_message_id: u16,
    next_entry_id: u64,
    events: Vec<EngineEvent>,
    counters: EngineCounters,
}

impl ProxyEngine {
    pub fn new(config: ProxyConfig, fib: Fib) -> ProxyEngine {
        let cache = LruCache::new(config.cache_capacity);
        ProxyEngine {
            config,
            fib,
            pending: HashMap::new(),
            token_index: HashMap::new(),
            consumed_tokens: HashSet::new(),
            cache,
            next_token: 1,
            next_message_id: 1,
            next_entry_id: 1,
            events: Vec::new(),
            counters: EngineCounters::default(),
        }
    }

    pub fn role(&self) -> Role {
        self.config.role
    }

    pub fn counters(&self) -> &EngineCounters {
        &self.counters
    }

    /// Drains the event buffer accumulated since the last call.
    pub fn take_events(&mut self) -> Vec<EngineEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn live_entries(&self) -> impl Iterator<Item = &PendingEntry> {
        self.pending.values()
    }

    fn fresh_message_id(&mut self) -> u16 {
        let id = self.next_message_id;
        self.next_message_id = self.next_message_id.wrapping_add(1);
        id
    }

    /// Hop-local upstream token from a monotonic counter; never collides
    /// with another live upstream token of this node.
    fn fresh_upstream_token(&mut self) -> Token {
        let t = Token::from_counter(self.next_token);
        self.next_token += 1;
        t
    }

    fn respond(&mut self, to: Sender, response: Message) -> Action {
        match to {
            Sender::Local => Action::DeliverLocal(response),
            Sender::Peer(addr) => Action::SendTo(addr, response),
        }
    }

    fn error_response(&mut self, code: Code, token: Token) -> Message {
        let mut resp = Message::response(code);
        resp.token = token;
        resp.message_id = self.fresh_message_id();
        resp
    }

    /// Handles a request arriving from a client, a downstream hop or the
    /// local application.
    ///
    /// Order of business: answer from cache, else join live pending state,
    /// else create state and forward along the FIB — to every next-hop for
    /// safe methods, to exactly one for the rest.
    pub fn handle_request(&mut self, req: Message, from: Sender, now: SimTime) -> Vec<Action> {
        debug_assert!(req.is_request());
        self.counters.requests_in += 1;
        let key = match compute_cache_key(&req) {
            Ok(key) => key,
            Err(_) => return Vec::new(),
        };

        if let Some(cached) = self.cache.get(&key) {
            let cached = cached.clone();
            self.counters.cache_hits += 1;
            self.events.push(EngineEvent::CacheHit);
            let mid = self.fresh_message_id();
            let resp = cached.retokened(req.token.clone(), mid);
            return vec![self.respond(from, resp)];
        }

        if let Some(entry) = self.pending.get_mut(&key) {
            let entry_id = entry.entry_id;
            if entry.record_downstream(from, req.token.clone()) {
                self.events.push(EngineEvent::DownstreamRecorded {
                    entry: entry_id,
                    peer: from,
                    token: req.token.clone(),
                });
            }
            self.counters.aggregated += 1;
            self.events.push(EngineEvent::Aggregated { entry: entry_id });
            return Vec::new();
        }

        let parts = match split_proxy_uri(&req) {
            Ok(parts) => parts,
            Err(_) => {
                let resp = self.error_response(Code::BadRequest, req.token.clone());
                return vec![self.respond(from, resp)];
            }
        };
        let hops = self.fib.lookup(&parts).to_vec();
        if hops.is_empty() {
            self.counters.fib_misses += 1;
            self.events.push(EngineEvent::FibMiss);
            let resp = self.error_response(Code::BadGateway, req.token.clone());
            return vec![self.respond(from, resp)];
        }
        // Non-safe codes must take a single next-hop; the first listed wins.
        let hops = if req.code.is_safe_method() { hops } else { hops[..1].to_vec() };

        let upstream_token = self.fresh_upstream_token();
        let entry_id = self.next_entry_id;
        self.next_entry_id += 1;

        let mut upstream_messages = Vec::with_capacity(hops.len());
        let mut actions = Vec::with_capacity(hops.len() + 1);
        for hop in &hops {
            let mid = self.fresh_message_id();
            let base = req.retokened(upstream_token.clone(), mid);
            let upstream = compose_request(&parts, hop.send_host, &base);
            upstream_messages.push((hop.addr, upstream.clone()));
            actions.push(Action::SendTo(hop.addr, upstream));
            self.counters.forwarded_requests += 1;
        }

        let timeout_at = now.plus_us(self.config.request_timeout_us);
        let entry = PendingEntry {
            entry_id,
            cache_key: key,
            downstream: Vec::new(),
            upstream_token: upstream_token.clone(),
            outstanding_next_hops: hops.iter().map(|h| h.addr).collect(),
            upstream_messages,
            retries_left: self.config.max_request_retries,
            timeout_at,
        };
        self.events.push(EngineEvent::EntryCreated {
            entry: entry_id,
            key,
            upstream_token: upstream_token.clone(),
        });
        self.token_index.insert(upstream_token, key);
        self.pending.insert(key, entry);
        let entry = self.pending.get_mut(&key).expect("just inserted");
        entry.record_downstream(from, req.token.clone());
        self.events.push(EngineEvent::DownstreamRecorded {
            entry: entry_id,
            peer: from,
            token: req.token.clone(),
        });

        actions.push(Action::StartTimer { key, at: timeout_at });
        actions
    }

    /// Handles a response from an upstream hop. The first response for a
    /// live entry is cached (success classes only) and fanned out to every
    /// recorded downstream token; anything later on the same token is
    /// discarded and counted as deduplicated.
    pub fn handle_response(&mut self, resp: Message, _from: NodeId) -> Vec<Action> {
        debug_assert!(!resp.is_request());
        let Some(key) = self.token_index.get(&resp.token).copied() else {
            if self.consumed_tokens.contains(&resp.token) {
                self.counters.dedup_responses += 1;
                self.events.push(EngineEvent::ResponseDeduplicated);
            } else {
                self.counters.unmatched_responses += 1;
                self.events.push(EngineEvent::UnmatchedResponseDropped);
            }
            return Vec::new();
        };
        let entry = self.pending.remove(&key).expect("token index in sync");
        self.token_index.remove(&resp.token);
        self.consumed_tokens.insert(entry.upstream_token.clone());

        if resp.code.is_success() {
            // Stored under the request key with a neutral token; hits are
            // re-addressed per client.
            let evicted = self.cache.insert(key, resp.retokened(Token::empty(), 0));
            self.counters.cache_inserts += 1;
            self.events.push(EngineEvent::CacheInsert { evicted });
        }

        let mut actions = Vec::with_capacity(entry.downstream.len());
        for d in &entry.downstream {
            let mid = self.fresh_message_id();
            let out = resp.retokened(d.token.clone(), mid);
            self.counters.responses_fanned_out += 1;
            self.events.push(EngineEvent::TerminalSent {
                entry: entry.entry_id,
                peer: d.peer,
                token: d.token.clone(),
                error: !resp.code.is_success(),
            });
            actions.push(self.respond(d.peer, out));
        }
        self.events.push(EngineEvent::EntryConsumed {
            entry: entry.entry_id,
            by_timeout: false,
        });
        actions
    }

    /// Timer expiry for a pending entry. While retries remain the stored
    /// upstream messages are re-sent verbatim to all original next-hops;
    /// exhaustion fans a gateway-timeout error out to every recorded
    /// downstream token and consumes the entry.
    pub fn on_timeout(&mut self, key: CacheKey, now: SimTime) -> Vec<Action> {
        let Some(entry) = self.pending.get_mut(&key) else {
            return Vec::new(); // consumed in the meantime; stale timer
        };
        if now < entry.timeout_at {
            return Vec::new(); // re-armed; stale timer
        }
        if entry.retries_left > 0 {
            entry.retries_left -= 1;
            entry.timeout_at = now.plus_us(self.config.request_timeout_us);
            let retries_left = entry.retries_left;
            let entry_id = entry.entry_id;
            let timeout_at = entry.timeout_at;
            let mut actions: Vec<Action> = entry
                .upstream_messages
                .iter()
                .map(|(addr, m)| Action::SendTo(*addr, m.clone()))
                .collect();
            self.counters.retransmissions += 1;
            self.events.push(EngineEvent::Retransmitted {
                entry: entry_id,
                retries_left,
            });
            actions.push(Action::StartTimer { key, at: timeout_at });
            return actions;
        }

        let entry = self.pending.remove(&key).expect("checked above");
        self.token_index.remove(&entry.upstream_token);
        self.consumed_tokens.insert(entry.upstream_token.clone());
        self.counters.exhausted_entries += 1;
        let mut actions = Vec::with_capacity(entry.downstream.len());
        for d in &entry.downstream {
            let resp = self.error_response(Code::GatewayTimeout, d.token.clone());
            self.events.push(EngineEvent::TerminalSent {
                entry: entry.entry_id,
                peer: d.peer,
                token: d.token.clone(),
                error: true,
            });
            actions.push(self.respond(d.peer, resp));
        }
        self.events.push(EngineEvent::EntryConsumed {
            entry: entry.entry_id,
            by_timeout: true,
        });
        actions
    }

    /// Direct cache insert, used by tests and by endpoints that produce
    /// responses locally. Returns the number of evicted entries.
    pub fn cache_insert(&mut self, key: CacheKey, resp: Message) -> usize {
        debug_assert!(resp.code.is_success());
        self.cache.insert(key, resp)
    }

    pub fn cache_lookup(&mut self, key: &CacheKey) -> Option<Message> {
        self.cache.get(key).cloned()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

//! Per-node protocol stacks.
//!
//! Four deployments share the event loop:
//!
//! * `oscore` — end-to-end protection, forwarders are plain routers with no
//!   CoAP state; retransmissions happen at the client only.
//! * `oscore-proxy` — a forward proxy on every hop; caching and aggregation
//!   exist but, with per-client nonces altering every cache key, only help
//!   retransmissions of one and the same request.
//! * `det-oscore-proxy` — deterministic request protection; equal plaintext
//!   maps to equal bytes and equal cache keys, so caching and aggregation
//!   work across clients. Responses are signed, and signing occupies the
//!   server for the configured delay.
//! * `ndn` — the Interest/Data baseline with PIT, content store and name
//!   FIB on every hop.

use std::collections::HashMap;

use ed25519_dalek::SigningKey;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coap::{
    compute_cache_key, decode_message, encode_message, Code, Message, OptionNumber, Token,
};
use crate::ndn::{
    open_data_content, seal_data_content, DataPacket, Face, Interest, Name, NdnAction, NdnEvent,
    NdnForwarder, NdnGroupKeys, NdnPacket,
};
use crate::proxy::{serve_origin, Action, EngineEvent, ProxyEngine, Sender, ServerResources};
use crate::security::{CryptoCounters, RequestBinding, SecurityContext};
use crate::simnet::event::{EventKind, FrameKind, TimerKind};
use crate::simnet::trace::TraceRecord;
use crate::simnet::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentMode {
    Oscore,
    OscoreProxy,
    DetOscoreProxy,
    Ndn,
}

impl DeploymentMode {
    pub fn is_ndn(self) -> bool {
        self == DeploymentMode::Ndn
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeploymentMode::Oscore => "oscore",
            DeploymentMode::OscoreProxy => "oscore-proxy",
            DeploymentMode::DetOscoreProxy => "det-oscore-proxy",
            DeploymentMode::Ndn => "ndn",
        }
    }

    pub const ALL: [DeploymentMode; 4] = [
        DeploymentMode::Oscore,
        DeploymentMode::OscoreProxy,
        DeploymentMode::DetOscoreProxy,
        DeploymentMode::Ndn,
    ];
}

/// A frame the node wants transmitted.
#[derive(Debug, Clone)]
pub struct OutboundFrame {
    /// Transmission may not start before this time (signing occupancy).
    pub not_before: SimTime,
    pub net_src: NodeId,
    pub net_dst: NodeId,
    pub kind: FrameKind,
    pub body: Vec<u8>,
    pub key_hint: String,
    pub token_hint: String,
}

#[derive(Debug, Default)]
pub struct NodeOutput {
    pub sends: Vec<OutboundFrame>,
    pub timers: Vec<(SimTime, TimerKind)>,
    pub busy_until: Option<SimTime>,
}

/// Everything a stack needs from its hosting node while handling one event.
pub struct NodeEnv<'a> {
    pub now: SimTime,
    pub self_id: NodeId,
    pub self_name: &'a str,
    pub counters: &'a mut CryptoCounters,
    pub rng: &'a mut ChaCha8Rng,
    pub trace: &'a mut Vec<TraceRecord>,
}

impl NodeEnv<'_> {
    fn t(&self) -> u64 {
        self.now.as_us()
    }
}

fn sender_name(peer: &Sender, env: &NodeEnv<'_>) -> String {
    match peer {
        Sender::Local => format!("{}(app)", env.self_name),
        Sender::Peer(id) => format!("n{}", id.0),
    }
}

fn drain_engine_events(engine: &mut ProxyEngine, env: &mut NodeEnv<'_>) {
    let node = env.self_name.to_string();
    let t = env.t();
    for event in engine.take_events() {
        let record = match event {
            EngineEvent::CacheHit => TraceRecord::CacheHit { t, node: node.clone() },
            EngineEvent::CacheInsert { evicted } => TraceRecord::CacheInsert {
                t,
                node: node.clone(),
                evicted: evicted as u64,
            },
            EngineEvent::EntryCreated { entry, key, upstream_token } => {
                TraceRecord::PendingCreated {
                    t,
                    node: node.clone(),
                    entry,
                    key: key.short_hex(),
                    token: upstream_token.to_hex(),
                }
            }
            EngineEvent::DownstreamRecorded { entry, peer, token } => {
                TraceRecord::DownstreamRecorded {
                    t,
                    node: node.clone(),
                    entry,
                    peer: sender_name(&peer, env),
                    token: token.to_hex(),
                }
            }
            EngineEvent::Aggregated { entry } => {
                TraceRecord::Aggregated { t, node: node.clone(), entry }
            }
            EngineEvent::EntryConsumed { entry, by_timeout } => {
                TraceRecord::EntryConsumed { t, node: node.clone(), entry, by_timeout }
            }
            EngineEvent::TerminalSent { entry, peer, token, error } => TraceRecord::TerminalSent {
                t,
                node: node.clone(),
                entry,
                peer: sender_name(&peer, env),
                token: token.to_hex(),
                error,
            },
            EngineEvent::ResponseDeduplicated => {
                TraceRecord::ResponseDeduplicated { t, node: node.clone() }
            }
            EngineEvent::UnmatchedResponseDropped => {
                TraceRecord::UnmatchedDropped { t, node: node.clone() }
            }
            EngineEvent::FibMiss => TraceRecord::FibMiss { t, node: node.clone() },
            EngineEvent::Retransmitted { entry, retries_left } => {
                TraceRecord::Retransmit { t, node: node.clone(), entry, retries_left }
            }
        };
        env.trace.push(record);
    }
}

fn message_hints(m: &Message) -> (String, String) {
    let key = if m.is_request() {
        compute_cache_key(m).map(|k| k.short_hex()).unwrap_or_default()
    } else if m.code.is_success() {
        "ok".to_string()
    } else {
        "err".to_string()
    };
    (key, m.token.to_hex())
}

/// Converts proxy-engine actions into frames and timers; local deliveries
/// are handed to `on_local`.
fn convert_actions(
    actions: Vec<Action>,
    env: &mut NodeEnv<'_>,
    output: &mut NodeOutput,
    mut on_local: impl FnMut(Message, &mut NodeEnv<'_>, &mut NodeOutput),
) {
    for action in actions {
        match action {
            Action::SendTo(addr, message) => {
                let (key_hint, token_hint) = message_hints(&message);
                let kind = if message.is_request() { FrameKind::Request } else { FrameKind::Response };
                let body = encode_message(&message).expect("messages are well-formed");
                output.sends.push(OutboundFrame {
                    not_before: env.now,
                    net_src: env.self_id,
                    net_dst: addr,
                    kind,
                    body,
                    key_hint,
                    token_hint,
                });
            }
            Action::DeliverLocal(message) => on_local(message, env, output),
            Action::StartTimer { key, at } => {
                output.timers.push((at, TimerKind::CoapPending(key)));
            }
        }
    }
}

struct OutstandingRequest {
    round: u32,
    issued_at: SimTime,
    binding: RequestBinding,
}

/// A CoAP client: workload driver, security endpoint and its own hop-wise
/// retransmission state (the engine with a default route).
pub struct CoapClient {
    pub engine: ProxyEngine,
    security: SecurityContext,
    server_host: String,
    deterministic: bool,
    outstanding: HashMap<Token, OutstandingRequest>,
    next_app_token: u64,
}

impl CoapClient {
    pub fn new(
        engine: ProxyEngine,
        security: SecurityContext,
        server_host: &str,
        deterministic: bool,
    ) -> CoapClient {
        CoapClient {
            engine,
            security,
            server_host: server_host.to_string(),
            deterministic,
            outstanding: HashMap::new(),
            next_app_token: 1,
        }
    }

    fn issue(&mut self, round: u32, env: &mut NodeEnv<'_>, output: &mut NodeOutput) {
        let token = Token::from_counter(self.next_app_token);
        self.next_app_token += 1;

        let mut plain = Message::request(Code::Get);
        plain.token = token.clone();
        plain.add_option(
            OptionNumber::ProxyUri,
            format!("coap://{}/instruction?t={round}", self.server_host).into_bytes(),
        );
        let protected = if self.deterministic {
            self.security.deterministic_protect_request(&plain, env.counters)
        } else {
            self.security.protect_request(&plain, env.counters)
        };
        let (protected, binding) = protected.expect("workload requests are protectable");

        env.trace.push(TraceRecord::RequestIssued {
            t: env.t(),
            client: env.self_name.to_string(),
            round,
        });
        self.outstanding.insert(
            token,
            OutstandingRequest { round, issued_at: env.now, binding },
        );

        let now = env.now;
        let actions = self.engine.handle_request(protected, Sender::Local, now);
        drain_engine_events(&mut self.engine, env);
        let mut locals = Vec::new();
        convert_actions(actions, env, output, |message, _env, _out| {
            locals.push(message);
        });
        for message in locals {
            self.complete(message, env);
        }
    }

    fn complete(&mut self, response: Message, env: &mut NodeEnv<'_>) {
        let Some(outstanding) = self.outstanding.remove(&response.token) else {
            return;
        };
        let round = outstanding.round;
        let fail = |env: &mut NodeEnv<'_>| TraceRecord::RequestFailed {
            t: env.t(),
            client: env.self_name.to_string(),
            round,
        };
        if !response.code.is_success() {
            let record = fail(env);
            env.trace.push(record);
            return;
        }
        let verified = if self.deterministic {
            match self.security.verify_response(&response, env.counters) {
                Ok(stripped) => stripped,
                Err(_) => {
                    let t = env.t();
                    let node = env.self_name.to_string();
                    env.trace.push(TraceRecord::TamperedDropped { t, node });
                    let record = fail(env);
                    env.trace.push(record);
                    return;
                }
            }
        } else {
            response
        };
        match self
            .security
            .unprotect_response(&outstanding.binding, &verified, env.counters)
        {
            Ok(plain) if plain.code.is_success() => {
                let elapsed = env.now.as_us() - outstanding.issued_at.as_us();
                env.trace.push(TraceRecord::ContentDelivered {
                    t: env.t(),
                    client: env.self_name.to_string(),
                    round,
                    elapsed_us: elapsed,
                });
            }
            _ => {
                let record = fail(env);
                env.trace.push(record);
            }
        }
    }

    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        match kind {
            EventKind::AppTick { round } => self.issue(round, env, &mut output),
            EventKind::FrameDelivery(frame) => {
                let Ok(message) = decode_message(&frame.body) else {
                    return output;
                };
                let actions = if message.is_request() {
                    let now = env.now;
                    self.engine.handle_request(message, Sender::Peer(frame.link_src), now)
                } else {
                    self.engine.handle_response(message, frame.link_src)
                };
                drain_engine_events(&mut self.engine, env);
                let mut locals = Vec::new();
                convert_actions(actions, env, &mut output, |m, _env, _out| locals.push(m));
                for message in locals {
                    self.complete(message, env);
                }
            }
            EventKind::Timer(TimerKind::CoapPending(key)) => {
                let now = env.now;
                let actions = self.engine.on_timeout(key, now);
                drain_engine_events(&mut self.engine, env);
                let mut locals = Vec::new();
                convert_actions(actions, env, &mut output, |m, _env, _out| locals.push(m));
                for message in locals {
                    self.complete(message, env);
                }
            }
            EventKind::Timer(TimerKind::NdnPending(_)) => {}
        }
        output
    }
}

/// A pure forwarding hop.
pub struct CoapForwarder {
    pub engine: ProxyEngine,
}

impl CoapForwarder {
    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        match kind {
            EventKind::FrameDelivery(frame) => {
                let Ok(message) = decode_message(&frame.body) else {
                    return output;
                };
                let actions = if message.is_request() {
                    let now = env.now;
                    self.engine.handle_request(message, Sender::Peer(frame.link_src), now)
                } else {
                    self.engine.handle_response(message, frame.link_src)
                };
                drain_engine_events(&mut self.engine, env);
                convert_actions(actions, env, &mut output, |_m, _env, _out| {
                    debug_assert!(false, "forwarders have no local application");
                });
            }
            EventKind::Timer(TimerKind::CoapPending(key)) => {
                let now = env.now;
                let actions = self.engine.on_timeout(key, now);
                drain_engine_events(&mut self.engine, env);
                convert_actions(actions, env, &mut output, |_m, _env, _out| {});
            }
            _ => {}
        }
        output
    }
}

pub enum ServerSecurity {
    /// Pairwise contexts, looked up by the key id in the OSCORE option.
    Standard(HashMap<Vec<u8>, SecurityContext>),
    Group(Box<SecurityContext>),
}

/// The origin server: unprotect, serve, protect, sign (mode-dependent).
pub struct CoapServer {
    security: ServerSecurity,
    resources: ServerResources,
    signing_delay_us: u64,
}

impl CoapServer {
    pub fn new(security: ServerSecurity, resources: ServerResources, signing_delay_us: u64) -> CoapServer {
        CoapServer { security, resources, signing_delay_us }
    }

    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        let EventKind::FrameDelivery(frame) = kind else {
            return output;
        };
        let Ok(protected) = decode_message(&frame.body) else {
            return output;
        };
        if !protected.is_request() {
            return output;
        }

        let unprotected = match &mut self.security {
            ServerSecurity::Standard(contexts) => {
                let Some(kid) = protected
                    .first_option(OptionNumber::Oscore)
                    .and_then(parse_kid)
                else {
                    return output;
                };
                let Some(ctx) = contexts.get_mut(&kid) else {
                    return output;
                };
                ctx.unprotect_request(&protected, env.counters)
            }
            ServerSecurity::Group(ctx) => ctx.deterministic_unprotect_request(&protected, env.counters),
        };
        let (plain_request, binding) = match unprotected {
            Ok(ok) => ok,
            Err(_) => {
                let t = env.t();
                let node = env.self_name.to_string();
                env.trace.push(TraceRecord::TamperedDropped { t, node });
                return output;
            }
        };

        let plain_response = serve_origin(&plain_request, &self.resources);
        let (protected_response, busy_until) = match &mut self.security {
            ServerSecurity::Standard(contexts) => {
                let ctx = contexts.get_mut(&binding.kid).expect("context used above");
                let resp = ctx
                    .protect_response(&binding, &plain_response, env.counters)
                    .expect("response protection cannot fail");
                (resp, env.now)
            }
            ServerSecurity::Group(ctx) => {
                let resp = ctx
                    .protect_response(&binding, &plain_response, env.counters)
                    .expect("response protection cannot fail");
                let signed = ctx
                    .sign_response(&resp, env.counters)
                    .expect("server holds the signing key");
                // Signing occupies the node; the response leaves when done.
                (signed, env.now.plus_us(self.signing_delay_us))
            }
        };

        let body = encode_message(&protected_response).expect("well-formed");
        let (key_hint, token_hint) = message_hints(&protected_response);
        output.sends.push(OutboundFrame {
            not_before: busy_until,
            net_src: env.self_id,
            net_dst: frame.net_src,
            kind: FrameKind::Response,
            body,
            key_hint,
            token_hint,
        });
        if busy_until > env.now {
            output.busy_until = Some(busy_until);
        }
        output
    }
}

fn parse_kid(oscore_value: &[u8]) -> Option<Vec<u8>> {
    let piv_len = *oscore_value.first()? as usize;
    let kid_len = *oscore_value.get(1 + piv_len)? as usize;
    let kid = oscore_value.get(2 + piv_len..2 + piv_len + kid_len)?;
    Some(kid.to_vec())
}

/// Plain packet mover for the end-to-end deployment: no CoAP state, no
/// caches, no retransmissions; it just pushes frames toward their network
/// destination.
pub struct Router;

impl Router {
    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        let EventKind::FrameDelivery(frame) = kind else {
            return output;
        };
        if frame.net_dst == env.self_id {
            return output;
        }
        output.sends.push(OutboundFrame {
            not_before: env.now,
            net_src: frame.net_src,
            net_dst: frame.net_dst,
            kind: frame.kind,
            body: frame.body,
            key_hint: frame.key_hint,
            token_hint: frame.token_hint,
        });
        output
    }
}

/// NDN client or forwarder host.
pub struct NdnHost {
    pub fwd: NdnForwarder,
    keys: Option<NdnGroupKeys>,
    outstanding: HashMap<Name, (u32, SimTime)>,
}

impl NdnHost {
    pub fn new(fwd: NdnForwarder, keys: Option<NdnGroupKeys>) -> NdnHost {
        NdnHost { fwd, keys, outstanding: HashMap::new() }
    }

    fn drain_events(&mut self, env: &mut NodeEnv<'_>) {
        let node = env.self_name.to_string();
        let t = env.t();
        for event in self.fwd.take_events() {
            let record = match event {
                NdnEvent::CsHit => TraceRecord::CacheHit { t, node: node.clone() },
                NdnEvent::CsInsert { evicted } => {
                    TraceRecord::CacheInsert { t, node: node.clone(), evicted: evicted as u64 }
                }
                NdnEvent::PitCreated { entry, ref name } => TraceRecord::PendingCreated {
                    t,
                    node: node.clone(),
                    entry,
                    key: name.to_uri(),
                    token: String::new(),
                },
                NdnEvent::FaceRecorded { entry, face } => TraceRecord::DownstreamRecorded {
                    t,
                    node: node.clone(),
                    entry,
                    peer: face_name(face, &node),
                    token: String::new(),
                },
                NdnEvent::Aggregated { entry } => {
                    TraceRecord::Aggregated { t, node: node.clone(), entry }
                }
                NdnEvent::DuplicateNonceDropped => {
                    TraceRecord::ResponseDeduplicated { t, node: node.clone() }
                }
                NdnEvent::PitConsumed { entry, by_timeout, ref name } => {
                    if by_timeout {
                        if let Some((round, _)) = self.outstanding.remove(name) {
                            env.trace.push(TraceRecord::RequestFailed {
                                t,
                                client: node.clone(),
                                round,
                            });
                        }
                    }
                    TraceRecord::EntryConsumed { t, node: node.clone(), entry, by_timeout }
                }
                NdnEvent::DataDelivered { entry, face } => TraceRecord::TerminalSent {
                    t,
                    node: node.clone(),
                    entry,
                    peer: face_name(face, &node),
                    token: String::new(),
                    error: false,
                },
                NdnEvent::UnsolicitedDataDropped => {
                    TraceRecord::UnmatchedDropped { t, node: node.clone() }
                }
                NdnEvent::TamperedDataDropped => {
                    TraceRecord::TamperedDropped { t, node: node.clone() }
                }
                NdnEvent::NoRouteDropped => TraceRecord::FibMiss { t, node: node.clone() },
                NdnEvent::Retransmitted { entry, retries_left } => {
                    TraceRecord::Retransmit { t, node: node.clone(), entry, retries_left }
                }
            };
            env.trace.push(record);
        }
    }

    fn convert(&mut self, actions: Vec<NdnAction>, env: &mut NodeEnv<'_>, output: &mut NodeOutput) {
        for action in actions {
            match action {
                NdnAction::SendInterest(addr, interest) => {
                    let body = NdnPacket::Interest(interest.clone()).encode();
                    output.sends.push(OutboundFrame {
                        not_before: env.now,
                        net_src: env.self_id,
                        net_dst: addr,
                        kind: FrameKind::Interest,
                        body,
                        key_hint: interest.name.to_uri(),
                        token_hint: interest.nonce.to_string(),
                    });
                }
                NdnAction::SendData(addr, data) => {
                    let body = NdnPacket::Data(data.clone()).encode();
                    output.sends.push(OutboundFrame {
                        not_before: env.now,
                        net_src: env.self_id,
                        net_dst: addr,
                        kind: FrameKind::Data,
                        body,
                        key_hint: data.name.to_uri(),
                        token_hint: String::new(),
                    });
                }
                NdnAction::DeliverLocal(data) => self.deliver(data, env),
                NdnAction::StartTimer { name, at } => {
                    output.timers.push((at, TimerKind::NdnPending(name)));
                }
            }
        }
    }

    fn deliver(&mut self, data: DataPacket, env: &mut NodeEnv<'_>) {
        let Some((round, issued_at)) = self.outstanding.remove(&data.name) else {
            return;
        };
        let Some(keys) = &self.keys else { return };
        let opened = open_data_content(keys, &data.name.to_bytes(), &data.payload, env.counters);
        match opened {
            Some(_content) => {
                env.trace.push(TraceRecord::ContentDelivered {
                    t: env.t(),
                    client: env.self_name.to_string(),
                    round,
                    elapsed_us: env.now.as_us() - issued_at.as_us(),
                });
            }
            None => {
                env.trace.push(TraceRecord::RequestFailed {
                    t: env.t(),
                    client: env.self_name.to_string(),
                    round,
                });
            }
        }
    }

    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        match kind {
            EventKind::AppTick { round } => {
                let name = Name::new(&["instruction", &format!("t={round}")]);
                let nonce: u32 = env.rng.gen();
                env.trace.push(TraceRecord::RequestIssued {
                    t: env.t(),
                    client: env.self_name.to_string(),
                    round,
                });
                self.outstanding.insert(name.clone(), (round, env.now));
                let now = env.now;
                let actions = self.fwd.on_interest(Interest { name, nonce }, Face::Local, now);
                self.drain_events(env);
                self.convert(actions, env, &mut output);
            }
            EventKind::FrameDelivery(frame) => {
                let Ok(packet) = NdnPacket::decode(&frame.body) else {
                    return output;
                };
                let now = env.now;
                let actions = match packet {
                    NdnPacket::Interest(interest) => {
                        self.fwd.on_interest(interest, Face::Neighbor(frame.link_src), now)
                    }
                    NdnPacket::Data(data) => {
                        self.fwd.on_data(data, Face::Neighbor(frame.link_src), env.counters)
                    }
                };
                self.drain_events(env);
                self.convert(actions, env, &mut output);
            }
            EventKind::Timer(TimerKind::NdnPending(name)) => {
                let nonce: u32 = env.rng.gen();
                let now = env.now;
                let actions = self.fwd.on_pit_timeout(&name, now, nonce);
                self.drain_events(env);
                self.convert(actions, env, &mut output);
            }
            EventKind::Timer(TimerKind::CoapPending(_)) => {}
        }
        output
    }
}

fn face_name(face: Face, self_name: &str) -> String {
    match face {
        Face::Local => format!("{self_name}(app)"),
        Face::Neighbor(id) => format!("n{}", id.0),
    }
}

/// The NDN producer: answers Interests in its namespace with signed,
/// encrypted Data. Re-seals and re-signs per arriving Interest; signing
/// occupies the node.
pub struct NdnProducer {
    keys: NdnGroupKeys,
    signing: SigningKey,
    payload_len: usize,
    signing_delay_us: u64,
}

impl NdnProducer {
    pub fn new(keys: NdnGroupKeys, signing: SigningKey, payload_len: usize, signing_delay_us: u64) -> NdnProducer {
        NdnProducer { keys, signing, payload_len, signing_delay_us }
    }

    fn produce(&mut self, name: &Name, env: &mut NodeEnv<'_>) -> Option<DataPacket> {
        let offset = match name.0.as_slice() {
            [first, query] if first == "instruction" => {
                query.strip_prefix("t=")?.parse::<u64>().ok()?
            }
            _ => return None,
        };
        let content = ServerResources::instruction_payload(offset, self.payload_len);
        let payload = seal_data_content(&self.keys, &name.to_bytes(), &content, env.counters);
        let data = DataPacket {
            name: name.clone(),
            payload,
            encrypted: true,
            signature: Vec::new(),
        };
        Some(data.sign(&self.signing, env.counters))
    }

    fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        let mut output = NodeOutput::default();
        let EventKind::FrameDelivery(frame) = kind else {
            return output;
        };
        let Ok(NdnPacket::Interest(interest)) = NdnPacket::decode(&frame.body) else {
            return output;
        };
        let Some(data) = self.produce(&interest.name, env) else {
            return output; // outside the namespace: silent drop
        };
        let busy_until = env.now.plus_us(self.signing_delay_us);
        output.sends.push(OutboundFrame {
            not_before: busy_until,
            net_src: env.self_id,
            net_dst: frame.link_src,
            kind: FrameKind::Data,
            body: NdnPacket::Data(data.clone()).encode(),
            key_hint: data.name.to_uri(),
            token_hint: String::new(),
        });
        if busy_until > env.now {
            output.busy_until = Some(busy_until);
        }
        output
    }
}

/// One of the five runnable stacks.
pub enum NodeStack {
    CoapClient(Box<CoapClient>),
    CoapForwarder(Box<CoapForwarder>),
    CoapServer(Box<CoapServer>),
    Router(Router),
    NdnHost(Box<NdnHost>),
    NdnProducer(Box<NdnProducer>),
}

impl NodeStack {
    pub fn on_event(&mut self, env: &mut NodeEnv<'_>, kind: EventKind) -> NodeOutput {
        match self {
            NodeStack::CoapClient(c) => c.on_event(env, kind),
            NodeStack::CoapForwarder(f) => f.on_event(env, kind),
            NodeStack::CoapServer(s) => s.on_event(env, kind),
            NodeStack::Router(r) => r.on_event(env, kind),
            NodeStack::NdnHost(h) => h.on_event(env, kind),
            NodeStack::NdnProducer(p) => p.on_event(env, kind),
        }
    }
}

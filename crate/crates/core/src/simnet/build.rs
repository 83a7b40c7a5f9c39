//! Scenario instantiation and the run loop.

use std::collections::{BTreeMap, HashMap};

use ed25519_dalek::SigningKey;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::ndn::{Name, NdnConfig, NdnForwarder, NdnGroupKeys};
use crate::proxy::{
    Fib, NamePattern, NextHop, ProxyConfig, ProxyEngine, Role, ServerResources,
};
use crate::scenario::{ScenarioConfig, ScenarioError};
use crate::security::{CryptoCounters, SecurityContext};
use crate::simnet::event::{EventKind, EventQueue, Frame, SimEvent};
use crate::simnet::link::{LinkModel, LinkState, LossScript};
use crate::simnet::node::{
    CoapClient, CoapForwarder, CoapServer, DeploymentMode, NdnHost, NdnProducer, NodeEnv,
    NodeOutput, NodeStack, OutboundFrame, Router, ServerSecurity,
};
use crate::simnet::topology::{NodeRole, Topology};
use crate::simnet::trace::{RawTrace, TraceRecord};
use crate::simnet::{NodeId, SimTime};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("no route from n{0} to n{1}")]
    NoRoute(u32, u32),
    #[error("no link between n{0} and n{1}")]
    NoLink(u32, u32),
    #[error("event budget exhausted after {0} events; simulation diverged")]
    Runaway(u64),
}

struct Node {
    id: NodeId,
    name: String,
    stack: NodeStack,
    counters: CryptoCounters,
    rng: ChaCha8Rng,
    busy_until: SimTime,
}

/// A fully instantiated run: nodes, links, routes and the scheduled
/// workload. Deterministic given (config, seed).
pub struct Simulation {
    mode: DeploymentMode,
    topology: Topology,
    nodes: Vec<Node>,
    links: HashMap<(NodeId, NodeId), LinkState>,
    routes: HashMap<(NodeId, NodeId), NodeId>,
    queue: EventQueue,
    trace: Vec<TraceRecord>,
    now: SimTime,
    finished: bool,
}

fn stream_rng(seed: u64, purpose: &str, a: u32, b: u32) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_be_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update(a.to_be_bytes());
    hasher.update(b.to_be_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Instantiates nodes, FIBs, security contexts and the request workload
/// from a validated scenario.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Simulation, BuildError> {
    config.validate().map_err(BuildError::Scenario)?;
    let topology = config.build_topology().map_err(BuildError::Scenario)?;
    let routes = topology.routes();
    let seed = config.scenario.seed;
    let mode = config.scenario.mode;

    let server_id = topology
        .nodes
        .iter()
        .position(|n| n.role == NodeRole::Server)
        .map(|i| NodeId(i as u32))
        .expect("validated: exactly one server");
    let server_name = topology.name_of(server_id).to_string();

    // directed links
    let mut links = HashMap::new();
    for spec in &topology.links {
        let a = topology.node_id(&spec.a).expect("validated");
        let b = topology.node_id(&spec.b).expect("validated");
        let model = LinkModel {
            loss: spec.loss,
            latency_us: spec.latency_us,
            bitrate_bps: config.link.bitrate_bps,
            max_frame_bytes: config.link.max_frame_bytes,
            mac_retries: config.link.mac_retries,
            backoff_us: config.link.mac_backoff_ms.iter().map(|ms| ms * 1_000).collect(),
        };
        links.insert((a, b), LinkState::new(model.clone(), stream_rng(seed, "link", a.0, b.0)));
        links.insert((b, a), LinkState::new(model, stream_rng(seed, "link", b.0, a.0)));
    }

    let master_secret = hex::decode(&config.crypto.master_secret_hex).expect("validated");
    let group_secret = hex::decode(&config.crypto.group_secret_hex).expect("validated");
    let signing_seed = config.signing_seed();
    let group_id = b"wot-group";
    let signing_delay_us = config.crypto.signing_delay_ms * 1_000;

    let proxy_config = |role: Role| ProxyConfig {
        request_timeout_us: config.proxy.request_timeout_ms * 1_000,
        max_request_retries: config.proxy.max_request_retries,
        cache_capacity: config.proxy.cache_capacity,
        role,
    };

    let mut nodes = Vec::with_capacity(topology.nodes.len());
    for (idx, spec) in topology.nodes.iter().enumerate() {
        let id = NodeId(idx as u32);
        let next_to_server = routes.get(&(id, server_id)).copied();
        let stack = match (mode, spec.role) {
            (DeploymentMode::Ndn, NodeRole::Server) => {
                NodeStack::NdnProducer(Box::new(NdnProducer::new(
                    NdnGroupKeys::new(&group_secret),
                    SigningKey::from_bytes(&signing_seed),
                    config.workload.payload_len,
                    signing_delay_us,
                )))
            }
            (DeploymentMode::Ndn, role) => {
                let ndn_config = NdnConfig {
                    interest_timeout_us: config.proxy.request_timeout_ms * 1_000,
                    max_retries: config.proxy.max_request_retries,
                    content_store_capacity: config.proxy.cache_capacity,
                };
                let verifying = SigningKey::from_bytes(&signing_seed).verifying_key();
                let mut fwd = NdnForwarder::new(ndn_config, verifying);
                let next = next_to_server.expect("validated: connected");
                fwd.add_route(Name::new(&["instruction"]), vec![next]);
                let keys = (role == NodeRole::Client).then(|| NdnGroupKeys::new(&group_secret));
                NodeStack::NdnHost(Box::new(NdnHost::new(fwd, keys)))
            }
            (_, NodeRole::Server) => {
                let security = match mode {
                    DeploymentMode::DetOscoreProxy => ServerSecurity::Group(Box::new(
                        SecurityContext::deterministic_group(&group_secret, group_id, &signing_seed, true),
                    )),
                    _ => {
                        let mut contexts = HashMap::new();
                        for client in topology.nodes.iter().filter(|n| n.role == NodeRole::Client) {
                            contexts.insert(
                                client.name.clone().into_bytes(),
                                SecurityContext::standard(
                                    &master_secret,
                                    server_name.as_bytes(),
                                    client.name.as_bytes(),
                                ),
                            );
                        }
                        ServerSecurity::Standard(contexts)
                    }
                };
                let delay = if mode == DeploymentMode::DetOscoreProxy { signing_delay_us } else { 0 };
                NodeStack::CoapServer(Box::new(CoapServer::new(
                    security,
                    ServerResources::InstructionTemplate { payload_len: config.workload.payload_len },
                    delay,
                )))
            }
            (DeploymentMode::Oscore, NodeRole::Forwarder) => NodeStack::Router(Router),
            (_, NodeRole::Forwarder) => {
                let next = next_to_server.expect("validated: connected");
                let mut fib = Fib::new();
                fib.add(
                    NamePattern::host_only(&server_name),
                    vec![NextHop { addr: next, send_host: next != server_id }],
                )
                .expect("fresh fib");
                NodeStack::CoapForwarder(Box::new(CoapForwarder {
                    engine: ProxyEngine::new(proxy_config(Role::Forwarder), fib),
                }))
            }
            (_, NodeRole::Client) => {
                let security = match mode {
                    DeploymentMode::DetOscoreProxy => SecurityContext::deterministic_group(
                        &group_secret,
                        group_id,
                        &signing_seed,
                        false,
                    ),
                    _ => SecurityContext::standard(
                        &master_secret,
                        spec.name.as_bytes(),
                        server_name.as_bytes(),
                    ),
                };
                let fib = match mode {
                    // end-to-end: address the server itself, routers relay
                    DeploymentMode::Oscore => Fib::default_route(server_id, false),
                    _ => {
                        let next = next_to_server.expect("validated: connected");
                        Fib::default_route(next, next != server_id)
                    }
                };
                let engine = ProxyEngine::new(proxy_config(Role::Client), fib);
                NodeStack::CoapClient(Box::new(CoapClient::new(
                    engine,
                    security,
                    &server_name,
                    mode == DeploymentMode::DetOscoreProxy,
                )))
            }
        };
        nodes.push(Node {
            id,
            name: spec.name.clone(),
            stack,
            counters: CryptoCounters::default(),
            rng: stream_rng(seed, "node", id.0, 0),
            busy_until: SimTime::ZERO,
        });
    }

    // workload: every client issues `rounds` requests, one per period, with
    // uniform start jitter
    let mut queue = EventQueue::new();
    let clients: Vec<NodeId> = topology
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.role == NodeRole::Client)
        .map(|(i, _)| NodeId(i as u32))
        .collect();
    for &client in &clients {
        let mut jitter_rng = stream_rng(seed, "jitter", client.0, 0);
        for round in 0..config.workload.rounds {
            let jitter_us = if config.workload.jitter_ms > 0 {
                jitter_rng.gen_range(0..config.workload.jitter_ms * 1_000)
            } else {
                0
            };
            let time = SimTime::from_ms(round as u64 * config.workload.period_ms).plus_us(jitter_us);
            queue.push(SimEvent {
                time,
                node: client,
                kind: EventKind::AppTick { round },
            });
        }
    }

    let trace = vec![TraceRecord::Meta {
        mode: mode.as_str().to_string(),
        rounds: config.workload.rounds,
        clients: clients.len() as u32,
        period_ms: config.workload.period_ms,
        server: server_name.clone(),
        seed,
    }];

    Ok(Simulation {
        mode,
        topology,
        nodes,
        links,
        routes,
        queue,
        trace,
        now: SimTime::ZERO,
        finished: false,
    })
}

const EVENT_BUDGET: u64 = 200_000_000;

impl Simulation {
    pub fn mode(&self) -> DeploymentMode {
        self.mode
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Installs a scripted loss sequence on the directed link `from -> to`.
    /// Used by tests that need exact, enumerable loss patterns.
    pub fn set_link_script(&mut self, from: &str, to: &str, script: LossScript) {
        let a = self.topology.node_id(from).expect("known node");
        let b = self.topology.node_id(to).expect("known node");
        self.links
            .get_mut(&(a, b))
            .expect("link exists")
            .set_script(script);
    }

    /// Processes events until the queue drains. All workload ticks are
    /// scheduled up front, so an empty queue means the run is complete,
    /// including the retransmission tail.
    pub fn run(&mut self) -> Result<(), RunError> {
        assert!(!self.finished, "a simulation runs once");
        let mut processed: u64 = 0;
        while let Some(event) = self.queue.pop() {
            processed += 1;
            if processed > EVENT_BUDGET {
                return Err(RunError::Runaway(processed));
            }
            self.now = event.time;
            let node = &mut self.nodes[event.node.0 as usize];
            if node.busy_until > event.time {
                // the node is occupied (signing); defer, preserving order
                self.queue.push(SimEvent { time: node.busy_until, ..event });
                continue;
            }

            let counters_before = node.counters;
            let output = {
                let mut env = NodeEnv {
                    now: self.now,
                    self_id: node.id,
                    self_name: &node.name,
                    counters: &mut node.counters,
                    rng: &mut node.rng,
                    trace: &mut self.trace,
                };
                node.stack.on_event(&mut env, event.kind)
            };

            let after = node.counters;
            let delta = CryptoCounters {
                aead_ops: after.aead_ops - counters_before.aead_ops,
                sign_ops: after.sign_ops - counters_before.sign_ops,
                verify_ops: after.verify_ops - counters_before.verify_ops,
                hmac_ops: after.hmac_ops - counters_before.hmac_ops,
            };
            if delta != CryptoCounters::default() {
                self.trace.push(TraceRecord::CryptoOps {
                    t: self.now.as_us(),
                    node: node.name.clone(),
                    aead: delta.aead_ops,
                    sign: delta.sign_ops,
                    verify: delta.verify_ops,
                    hmac: delta.hmac_ops,
                });
            }
            if let Some(busy) = output.busy_until {
                node.busy_until = node.busy_until.max(busy);
            }

            self.apply_output(event.node, output)?;
        }
        self.finished = true;
        Ok(())
    }

    fn apply_output(&mut self, from: NodeId, output: NodeOutput) -> Result<(), RunError> {
        for (at, timer) in output.timers {
            self.queue.push(SimEvent {
                time: at,
                node: from,
                kind: EventKind::Timer(timer),
            });
        }
        for ob in output.sends {
            self.transmit(from, ob)?;
        }
        Ok(())
    }

    fn transmit(&mut self, from: NodeId, ob: OutboundFrame) -> Result<(), RunError> {
        let next = if ob.net_dst == from {
            return Ok(());
        } else {
            self.routes
                .get(&(from, ob.net_dst))
                .copied()
                .ok_or(RunError::NoRoute(from.0, ob.net_dst.0))?
        };
        let link = self
            .links
            .get_mut(&(from, next))
            .ok_or(RunError::NoLink(from.0, next.0))?;
        let start = self.now.max(ob.not_before);
        let outcome = link.transmit(start, ob.body.len());
        self.trace.push(TraceRecord::FrameSent {
            t: start.as_us(),
            from: self.topology.name_of(from).to_string(),
            to: self.topology.name_of(next).to_string(),
            kind: ob.kind,
            bytes: ob.body.len() as u64,
            fragments: outcome.fragments,
            attempts: outcome.attempts.clone(),
            delivered: outcome.delivered,
            delivery_t: outcome.delivered.then(|| outcome.delivery_time.as_us()),
            key: ob.key_hint.clone(),
            token: ob.token_hint.clone(),
        });
        if outcome.delivered {
            self.queue.push(SimEvent {
                time: outcome.delivery_time,
                node: next,
                kind: EventKind::FrameDelivery(Frame {
                    link_src: from,
                    net_src: ob.net_src,
                    net_dst: ob.net_dst,
                    kind: ob.kind,
                    body: ob.body,
                    key_hint: ob.key_hint,
                    token_hint: ob.token_hint,
                }),
            });
        }
        Ok(())
    }

    pub fn take_trace(&mut self) -> RawTrace {
        RawTrace { records: std::mem::take(&mut self.trace) }
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Final per-node crypto counters, keyed by node name.
    pub fn node_counters(&self) -> BTreeMap<String, CryptoCounters> {
        self.nodes
            .iter()
            .map(|n| (n.name.clone(), n.counters))
            .collect()
    }

    /// Live pending entries across all CoAP engines; zero after a drained
    /// run.
    pub fn live_pending_total(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match &n.stack {
                NodeStack::CoapClient(c) => c.engine.live_entries().count(),
                NodeStack::CoapForwarder(f) => f.engine.live_entries().count(),
                NodeStack::NdnHost(h) => h.fwd.live_entries().count(),
                _ => 0,
            })
            .sum()
    }
}

/// Builds and runs a scenario, returning the trace.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RawTrace, BuildError> {
    let mut sim = build_scenario(config)?;
    sim.run()?;
    Ok(sim.take_trace())
}

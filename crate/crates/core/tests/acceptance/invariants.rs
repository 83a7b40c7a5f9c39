//! Randomized-topology invariant harness for criterion 4.
//!
//! Each case builds a random explicit topology of at most five nodes,
//! installs scripted loss on every directed link, runs a short workload
//! and then checks the aggregation/fan-out/dedup invariants from the trace:
//!
//! (a) at most one live pending entry per cache key per node,
//! (b) exactly one terminal (response or timeout error) per recorded
//!     downstream (peer, token) slot of every consumed entry,
//! (c) at most one fan-out per entry — every created entry is consumed
//!     exactly once,
//! (d) the NDN analogs: Data fan-out hits every recorded face exactly once,
//!     while timed-out PIT entries vanish silently.

use std::collections::{BTreeMap, BTreeSet};

use dcwot_core::scenario::{ScenarioConfig, TopologyPreset};
use dcwot_core::simnet::{
    build_scenario, DeploymentMode, LinkSpec, LossScript, NodeRole, NodeSpec, TraceRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_case(case: u64, mode: DeploymentMode) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5500 + case);

    // random tree: server, up to two forwarders in a chain, clients attached
    // to random non-client nodes; at most five nodes total
    let forwarders = rng.gen_range(0..=2usize);
    let clients = rng.gen_range(1..=(4 - forwarders).min(3));
    let mut nodes = vec![NodeSpec { name: "server".into(), role: NodeRole::Server }];
    let mut links = Vec::new();
    let mut attach_points = vec!["server".to_string()];
    let mut previous = "server".to_string();
    for i in 1..=forwarders {
        let name = format!("f{i}");
        nodes.push(NodeSpec { name: name.clone(), role: NodeRole::Forwarder });
        links.push(LinkSpec { a: previous.clone(), b: name.clone(), loss: 0.0, latency_us: 1_000 });
        attach_points.push(name.clone());
        previous = name;
    }
    for i in 1..=clients {
        let name = format!("client{i}");
        let at = attach_points[rng.gen_range(0..attach_points.len())].clone();
        nodes.push(NodeSpec { name: name.clone(), role: NodeRole::Client });
        links.push(LinkSpec { a: at, b: name, loss: 0.0, latency_us: 1_000 });
    }

    let mut config = ScenarioConfig::preset("invariants", mode, TopologyPreset::Explicit);
    config.scenario.seed = case;
    config.topology.nodes = nodes;
    config.topology.links = links.clone();
    config.workload.rounds = rng.gen_range(1..=2);
    config.workload.period_ms = 3_000;
    config.workload.jitter_ms = 400;
    config.workload.drain_ms = 10_000;
    config.link.mac_retries = 0;

    let mut sim = build_scenario(&config).expect("valid random scenario");
    for link in &links {
        for (a, b) in [(&link.a, &link.b), (&link.b, &link.a)] {
            let bits: Vec<bool> = (0..24).map(|_| rng.gen_bool(0.7)).collect();
            sim.set_link_script(a, b, LossScript::new(bits));
        }
    }
    sim.run().expect("run completes");
    assert_eq!(sim.live_pending_total(), 0, "case {case}: drained run leaves pending state");
    let trace = sim.take_trace();
    check_invariants(&trace.records, mode, case);
}

#[derive(Default)]
struct EntryLog {
    key: String,
    downstream: Vec<(String, String)>,
    terminals: Vec<(String, String, bool)>,
    consumed: Vec<bool>, // by_timeout flags, in order
}

fn check_invariants(records: &[TraceRecord], mode: DeploymentMode, case: u64) {
    // (node, key) -> open entry id, for invariant (a)
    let mut open_by_key: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut key_of_entry: BTreeMap<(String, u64), String> = BTreeMap::new();
    let mut entries: BTreeMap<(String, u64), EntryLog> = BTreeMap::new();

    for record in records {
        match record {
            TraceRecord::PendingCreated { node, entry, key, .. } => {
                let slot = (node.clone(), key.clone());
                assert!(
                    !open_by_key.contains_key(&slot),
                    "case {case}: {node} opened a second live entry for key {key}"
                );
                open_by_key.insert(slot, *entry);
                key_of_entry.insert((node.clone(), *entry), key.clone());
                let log = entries.entry((node.clone(), *entry)).or_default();
                log.key = key.clone();
            }
            TraceRecord::DownstreamRecorded { node, entry, peer, token, .. } => {
                let log = entries.entry((node.clone(), *entry)).or_default();
                let slot = (peer.clone(), token.clone());
                assert!(
                    !log.downstream.contains(&slot),
                    "case {case}: {node} recorded duplicate downstream slot {slot:?}"
                );
                log.downstream.push(slot);
            }
            TraceRecord::TerminalSent { node, entry, peer, token, error, .. } => {
                entries
                    .entry((node.clone(), *entry))
                    .or_default()
                    .terminals
                    .push((peer.clone(), token.clone(), *error));
            }
            TraceRecord::EntryConsumed { node, entry, by_timeout, .. } => {
                let key = key_of_entry
                    .get(&(node.clone(), *entry))
                    .unwrap_or_else(|| panic!("case {case}: consumed unknown entry {entry} at {node}"));
                open_by_key.remove(&(node.clone(), key.clone()));
                entries
                    .entry((node.clone(), *entry))
                    .or_default()
                    .consumed
                    .push(*by_timeout);
            }
            _ => {}
        }
    }

    assert!(
        open_by_key.is_empty(),
        "case {case}: entries left unconsumed after drain: {:?}",
        open_by_key.keys().collect::<Vec<_>>()
    );

    for ((node, entry), log) in &entries {
        // (c): consumed exactly once, so at most one fan-out ever happens
        assert_eq!(
            log.consumed.len(),
            1,
            "case {case}: entry {entry} at {node} consumed {} times",
            log.consumed.len()
        );
        let by_timeout = log.consumed[0];
        assert!(
            !log.downstream.is_empty(),
            "case {case}: entry {entry} at {node} has no recorded downstream"
        );

        let terminal_slots: Vec<(String, String)> = log
            .terminals
            .iter()
            .map(|(peer, token, _)| (peer.clone(), token.clone()))
            .collect();
        let unique: BTreeSet<_> = terminal_slots.iter().cloned().collect();
        assert_eq!(
            unique.len(),
            terminal_slots.len(),
            "case {case}: duplicate terminal for one slot at {node} entry {entry}"
        );

        if mode.is_ndn() && by_timeout {
            // (d): NDN has no error packet; exhausted entries vanish silently
            assert!(
                log.terminals.is_empty(),
                "case {case}: NDN timeout at {node} must not emit terminals"
            );
        } else {
            // (b): every recorded slot receives exactly one terminal message
            let recorded: BTreeSet<_> = log.downstream.iter().cloned().collect();
            assert_eq!(
                unique, recorded,
                "case {case}: fan-out mismatch at {node} entry {entry}"
            );
            if by_timeout {
                assert!(
                    log.terminals.iter().all(|(_, _, error)| *error),
                    "case {case}: timeout terminals must be errors"
                );
            }
        }
    }
}

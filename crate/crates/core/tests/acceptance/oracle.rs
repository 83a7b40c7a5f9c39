//! Independent replay oracle for criterion 7.
//!
//! The oracle re-executes the hop-wise forwarding rules for the 3-node
//! chain (client1 — f1 — server) with its own tiny state machines, written
//! directly from the forwarding rules and sharing no code with the engine.
//! Link outcomes are taken from the trace: every time the oracle's model
//! decides a node must transmit, it pops the next `FrameSent` record for
//! that directed link, checks that the engine sent the same thing, and
//! schedules the arrival if the trace says the frame was delivered.
//!
//! At the end, the delivered and failed round sets computed by the oracle
//! must equal the engine's `ContentDelivered`/`RequestFailed` records
//! exactly, and every frame in the trace must have been consumed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dcwot_core::simnet::{FrameKind, RawTrace, TraceRecord};

const TIMEOUT_US: u64 = 2_000_000;
const RETRIES: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
struct WireFrame {
    t: u64,
    kind: FrameKind,
    key: String,
    token: String,
    delivered: bool,
    delivery_t: u64,
}

type Link = (String, String);

struct Cursors {
    frames: BTreeMap<Link, VecDeque<WireFrame>>,
    pattern: u16,
}

impl Cursors {
    fn pop(&mut self, from: &str, to: &str, why: &str) -> WireFrame {
        self.frames
            .get_mut(&(from.to_string(), to.to_string()))
            .and_then(VecDeque::pop_front)
            .unwrap_or_else(|| {
                panic!(
                    "pattern {:04x}: oracle expected a frame on {from}->{to} ({why}), trace has none",
                    self.pattern
                )
            })
    }
}

#[derive(Debug)]
struct OracleEntry {
    key: String,
    /// Cache key of the re-composed upstream message. Hop-local: the URI
    /// encoding changes when the host form is dropped toward the origin,
    /// so the upstream key differs from the downstream one. Learned from
    /// the first forward and held fixed across retransmissions.
    upstream_key: String,
    upstream_token: String,
    downstream: Vec<String>,
    retries_left: u8,
    timeout_at: u64,
}

#[derive(Debug)]
enum Ev {
    ClientIssue { round: u32 },
    Arrive { node: &'static str, kind: FrameKind, key: String, token: String },
    Timer { node: &'static str, key: String },
}

pub fn check_equivalence(trace: &RawTrace, pattern: u16) {
    // --- collect trace material -------------------------------------------
    let mut frames: BTreeMap<Link, VecDeque<WireFrame>> = BTreeMap::new();
    let mut issues: Vec<(u64, u32)> = Vec::new();
    let mut claimed_delivered: BTreeSet<u32> = BTreeSet::new();
    let mut claimed_failed: BTreeSet<u32> = BTreeSet::new();
    for record in &trace.records {
        match record {
            TraceRecord::FrameSent { t, from, to, kind, delivered, delivery_t, key, token, .. } => {
                frames
                    .entry((from.clone(), to.clone()))
                    .or_default()
                    .push_back(WireFrame {
                        t: *t,
                        kind: *kind,
                        key: key.clone(),
                        token: token.clone(),
                        delivered: *delivered,
                        delivery_t: delivery_t.unwrap_or(0),
                    });
            }
            TraceRecord::RequestIssued { t, round, .. } => issues.push((*t, *round)),
            TraceRecord::ContentDelivered { round, .. } => {
                claimed_delivered.insert(*round);
            }
            TraceRecord::RequestFailed { round, .. } => {
                claimed_failed.insert(*round);
            }
            _ => {}
        }
    }
    let mut cursors = Cursors { frames, pattern };

    // --- oracle event loop (time, insertion-sequence order) ---------------
    let mut queue: BTreeMap<(u64, u64), Ev> = BTreeMap::new();
    let mut seq = 0u64;
    let push = |queue: &mut BTreeMap<(u64, u64), Ev>, seq: &mut u64, t: u64, ev: Ev| {
        queue.insert((t, *seq), ev);
        *seq += 1;
    };
    for (t, round) in &issues {
        push(&mut queue, &mut seq, *t, Ev::ClientIssue { round: *round });
    }

    // client1 state
    let mut client_entries: BTreeMap<String, OracleEntry> = BTreeMap::new(); // key -> entry
    let mut client_round_of_key: BTreeMap<String, u32> = BTreeMap::new();
    let mut seen_keys: BTreeSet<String> = BTreeSet::new();
    // f1 state
    let mut f1_cache: BTreeSet<String> = BTreeSet::new();
    let mut f1_entries: BTreeMap<String, OracleEntry> = BTreeMap::new();
    let mut f1_upstream_key_of: BTreeMap<String, String> = BTreeMap::new();

    let mut delivered: BTreeSet<u32> = BTreeSet::new();
    let mut failed: BTreeSet<u32> = BTreeSet::new();

    while let Some((&(now, s), _)) = queue.iter().next() {
        let ev = queue.remove(&(now, s)).expect("present");
        match ev {
            Ev::ClientIssue { round } => {
                let frame = cursors.pop("client1", "f1", "fresh request");
                assert_eq!(frame.kind, FrameKind::Request, "pattern {pattern:04x}");
                assert_eq!(frame.t, now, "pattern {pattern:04x}: issue send time");
                assert!(
                    seen_keys.insert(frame.key.clone()),
                    "pattern {pattern:04x}: round {round} reused cache key {}",
                    frame.key
                );
                client_round_of_key.insert(frame.key.clone(), round);
                client_entries.insert(
                    frame.key.clone(),
                    OracleEntry {
                        key: frame.key.clone(),
                        upstream_key: frame.key.clone(),
                        upstream_token: frame.token.clone(),
                        downstream: vec!["local".into()],
                        retries_left: RETRIES,
                        timeout_at: now + TIMEOUT_US,
                    },
                );
                push(&mut queue, &mut seq, now + TIMEOUT_US, Ev::Timer {
                    node: "client1",
                    key: frame.key.clone(),
                });
                if frame.delivered {
                    push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                        node: "f1",
                        kind: FrameKind::Request,
                        key: frame.key.clone(),
                        token: frame.token.clone(),
                    });
                }
            }

            Ev::Timer { node: "client1", key } => {
                let Some(entry) = client_entries.get_mut(&key) else { continue };
                if now < entry.timeout_at {
                    continue; // stale timer: the entry was re-armed
                }
                if entry.retries_left > 0 {
                    entry.retries_left -= 1;
                    entry.timeout_at = now + TIMEOUT_US;
                    let frame = cursors.pop("client1", "f1", "client retransmission");
                    assert_eq!(frame.kind, FrameKind::Request, "pattern {pattern:04x}");
                    assert_eq!(frame.key, key, "pattern {pattern:04x}: retransmission key");
                    assert_eq!(
                        frame.token, entry.upstream_token,
                        "pattern {pattern:04x}: retransmissions reuse the stored message"
                    );
                    push(&mut queue, &mut seq, now + TIMEOUT_US, Ev::Timer {
                        node: "client1",
                        key: key.clone(),
                    });
                    if frame.delivered {
                        push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                            node: "f1",
                            kind: FrameKind::Request,
                            key,
                            token: frame.token,
                        });
                    }
                } else {
                    // exhaustion: the request fails at the application
                    let entry = client_entries.remove(&key).expect("live entry");
                    failed.insert(client_round_of_key[&entry.key]);
                }
            }

            Ev::Timer { node: "f1", key } => {
                let Some(entry) = f1_entries.get_mut(&key) else { continue };
                if now < entry.timeout_at {
                    continue;
                }
                if entry.retries_left > 0 {
                    entry.retries_left -= 1;
                    entry.timeout_at = now + TIMEOUT_US;
                    let frame = cursors.pop("f1", "server", "hop retransmission");
                    assert_eq!(frame.kind, FrameKind::Request, "pattern {pattern:04x}");
                    assert_eq!(frame.key, entry.upstream_key, "pattern {pattern:04x}");
                    assert_eq!(frame.token, entry.upstream_token, "pattern {pattern:04x}");
                    push(&mut queue, &mut seq, now + TIMEOUT_US, Ev::Timer { node: "f1", key: key.clone() });
                    if frame.delivered {
                        push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                            node: "server",
                            kind: FrameKind::Request,
                            key,
                            token: frame.token,
                        });
                    }
                } else {
                    let entry = f1_entries.remove(&key).expect("live entry");
                    for downstream_token in &entry.downstream {
                        let frame = cursors.pop("f1", "client1", "gateway-timeout error");
                        assert_eq!(frame.kind, FrameKind::Response, "pattern {pattern:04x}");
                        assert_eq!(frame.key, "err", "pattern {pattern:04x}: exhaustion sends errors");
                        assert_eq!(&frame.token, downstream_token, "pattern {pattern:04x}");
                        if frame.delivered {
                            push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                                node: "client1",
                                kind: FrameKind::Response,
                                key: frame.key.clone(),
                                token: frame.token.clone(),
                            });
                        }
                    }
                }
            }

            Ev::Arrive { node: "f1", kind: FrameKind::Request, key, token } => {
                if f1_cache.contains(&key) {
                    let frame = cursors.pop("f1", "client1", "cache hit response");
                    assert_eq!(frame.kind, FrameKind::Response, "pattern {pattern:04x}");
                    assert_eq!(frame.key, "ok", "pattern {pattern:04x}: cached responses are successes");
                    assert_eq!(frame.token, token, "pattern {pattern:04x}: re-addressed per client");
                    if frame.delivered {
                        push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                            node: "client1",
                            kind: FrameKind::Response,
                            key: frame.key.clone(),
                            token: frame.token.clone(),
                        });
                    }
                } else if let Some(entry) = f1_entries.get_mut(&key) {
                    if !entry.downstream.contains(&token) {
                        entry.downstream.push(token);
                    }
                    // aggregation: no upstream traffic
                } else {
                    let frame = cursors.pop("f1", "server", "first upstream forward");
                    assert_eq!(frame.kind, FrameKind::Request, "pattern {pattern:04x}");
                    // tokens are hop-local: the forwarded token comes from f1's
                    // own space and may collide with the client's by chance
                    // the upstream message is semantically equal but re-composed
                    // (host form dropped on the final hop), so its cache key is
                    // hop-local; hold it fixed for this downstream key
                    let expected_up = f1_upstream_key_of.entry(key.clone()).or_insert_with(|| frame.key.clone());
                    assert_eq!(
                        &frame.key, expected_up,
                        "pattern {pattern:04x}: equal downstream content must re-compose identically"
                    );
                    f1_entries.insert(
                        key.clone(),
                        OracleEntry {
                            key: key.clone(),
                            upstream_key: frame.key.clone(),
                            upstream_token: frame.token.clone(),
                            downstream: vec![token],
                            retries_left: RETRIES,
                            timeout_at: now + TIMEOUT_US,
                        },
                    );
                    push(&mut queue, &mut seq, now + TIMEOUT_US, Ev::Timer { node: "f1", key: key.clone() });
                    if frame.delivered {
                        push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                            node: "server",
                            kind: FrameKind::Request,
                            key,
                            token: frame.token,
                        });
                    }
                }
            }

            Ev::Arrive { node: "server", kind: FrameKind::Request, token, .. } => {
                // the origin serves every arriving request
                let frame = cursors.pop("server", "f1", "origin response");
                assert_eq!(frame.kind, FrameKind::Response, "pattern {pattern:04x}");
                assert_eq!(frame.key, "ok", "pattern {pattern:04x}");
                assert_eq!(frame.token, token, "pattern {pattern:04x}: response keeps the request token");
                if frame.delivered {
                    push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                        node: "f1",
                        kind: FrameKind::Response,
                        key: frame.key.clone(),
                        token: frame.token.clone(),
                    });
                }
            }

            Ev::Arrive { node: "f1", kind: FrameKind::Response, key: status, token } => {
                // first response consumes the entry; later ones deduplicate
                let Some(entry_key) = f1_entries
                    .iter()
                    .find(|(_, e)| e.upstream_token == token)
                    .map(|(k, _)| k.clone())
                else {
                    continue;
                };
                let entry = f1_entries.remove(&entry_key).expect("present");
                if status == "ok" {
                    f1_cache.insert(entry_key.clone());
                }
                for downstream_token in &entry.downstream {
                    let frame = cursors.pop("f1", "client1", "fan-out");
                    assert_eq!(frame.kind, FrameKind::Response, "pattern {pattern:04x}");
                    assert_eq!(frame.key, status, "pattern {pattern:04x}: status preserved");
                    assert_eq!(&frame.token, downstream_token, "pattern {pattern:04x}");
                    if frame.delivered {
                        push(&mut queue, &mut seq, frame.delivery_t, Ev::Arrive {
                            node: "client1",
                            kind: FrameKind::Response,
                            key: frame.key.clone(),
                            token: frame.token.clone(),
                        });
                    }
                }
            }

            Ev::Arrive { node: "client1", kind: FrameKind::Response, key: status, token } => {
                let Some(entry_key) = client_entries
                    .iter()
                    .find(|(_, e)| e.upstream_token == token)
                    .map(|(k, _)| k.clone())
                else {
                    continue; // already terminal: deduplicated
                };
                client_entries.remove(&entry_key);
                let round = client_round_of_key[&entry_key];
                if status == "ok" {
                    delivered.insert(round);
                } else {
                    failed.insert(round);
                }
            }

            other => panic!("pattern {pattern:04x}: unexpected oracle event {other:?}"),
        }
    }

    // --- verdict -----------------------------------------------------------
    assert_eq!(
        delivered, claimed_delivered,
        "pattern {pattern:04x}: delivered sets diverge"
    );
    assert_eq!(failed, claimed_failed, "pattern {pattern:04x}: failed sets diverge");
    for (link, remaining) in &cursors.frames {
        assert!(
            remaining.is_empty(),
            "pattern {pattern:04x}: {} unexplained frames on {}->{}",
            remaining.len(),
            link.0,
            link.1
        );
    }
    let total_rounds: BTreeSet<u32> = issues.iter().map(|(_, r)| *r).collect();
    let mut terminal = delivered.clone();
    terminal.extend(failed.iter());
    assert_eq!(
        terminal, total_rounds,
        "pattern {pattern:04x}: every round must end in exactly one terminal state"
    );
}

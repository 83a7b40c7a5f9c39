//! Minimal NDN-style forwarder used as the comparison baseline.
//!
//! Interests request content by hierarchical name; Data packets return on
//! the reverse path and consume the pending state that forwarded them. Each
//! hop keeps a Pending Interest Table, a content store and a name FIB. The
//! engine mirrors the proxy contract: externally driven, one event in, a
//! list of actions out.

mod crypto;

pub use crypto::{open_data_content, seal_data_content, NdnGroupKeys};

use std::collections::HashMap;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};

use crate::lru::LruCache;
use crate::security::CryptoCounters;
use crate::simnet::{NodeId, SimTime};

/// Hierarchical content name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Name(pub Vec<String>);

impl Name {
    pub fn new(components: &[&str]) -> Name {
        Name(components.iter().map(|c| c.to_string()).collect())
    }

    pub fn to_uri(&self) -> String {
        let mut s = String::new();
        for c in &self.0 {
            s.push('/');
            s.push_str(c);
        }
        s
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.0 {
            out.extend_from_slice(&(c.len() as u16).to_be_bytes());
            out.extend_from_slice(c.as_bytes());
        }
        out
    }

    fn is_prefix_of(&self, other: &Name) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a == b)
    }
}

/// A face is where packets come from and go to: either a link neighbor or
/// the node's own application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    Local,
    Neighbor(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interest {
    pub name: Name,
    pub nonce: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPacket {
    pub name: Name,
    /// AEAD-protected content when the encrypted flag is set.
    pub payload: Vec<u8>,
    pub encrypted: bool,
    pub signature: Vec<u8>,
}

impl DataPacket {
    fn signable(&self) -> Vec<u8> {
        let mut msg = Vec::new();
        msg.extend_from_slice(b"dcwot-ndn-sig-v1");
        msg.extend_from_slice(&self.name.to_bytes());
        msg.push(self.encrypted as u8);
        msg.extend_from_slice(&self.payload);
        msg
    }

    /// Producer-side signing; the 20 ms signing occupancy is modeled by the
    /// simulation layer, not here.
    pub fn sign(mut self, key: &SigningKey, counters: &mut CryptoCounters) -> DataPacket {
        let sig: Signature = key.sign(&self.signable());
        counters.sign_ops += 1;
        self.signature = sig.to_bytes().to_vec();
        self
    }

    pub fn verify(&self, key: &VerifyingKey, counters: &mut CryptoCounters) -> bool {
        counters.verify_ops += 1;
        let Ok(sig) = Signature::from_slice(&self.signature) else {
            return false;
        };
        key.verify(&self.signable(), &sig).is_ok()
    }
}

/// Pending Interest Table entry. One entry exists per name; incoming faces
/// of equal requests are cataloged for the fan-out, nonces are remembered
/// for loop suppression, and upstream faces that already produced a
/// response are excluded from retransmissions.
#[derive(Debug, Clone)]
pub struct PendingInterest {
    pub entry_id: u64,
    pub name: Name,
    pub in_faces: Vec<Face>,
    pub out_faces: Vec<(NodeId, bool)>, // (face, answered)
    pub seen_nonces: Vec<u32>,
    pub retries_left: u8,
    pub timeout_at: SimTime,
}

/// What the forwarder asks its host to do.
#[derive(Debug, Clone, PartialEq)]
pub enum NdnAction {
    SendInterest(NodeId, Interest),
    SendData(NodeId, DataPacket),
    DeliverLocal(DataPacket),
    StartTimer { name: Name, at: SimTime },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NdnEvent {
    CsHit,
    CsInsert { evicted: usize },
    PitCreated { entry: u64, name: Name },
    FaceRecorded { entry: u64, face: Face },
    Aggregated { entry: u64 },
    DuplicateNonceDropped,
    PitConsumed { entry: u64, name: Name, by_timeout: bool },
    DataDelivered { entry: u64, face: Face },
    UnsolicitedDataDropped,
    TamperedDataDropped,
    NoRouteDropped,
    Retransmitted { entry: u64, retries_left: u8 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NdnCounters {
    pub interests_in: u64,
    pub cs_hits: u64,
    pub aggregated: u64,
    pub forwarded_interests: u64,
    pub data_fanned_out: u64,
    pub duplicate_nonces: u64,
    pub unsolicited_data: u64,
    pub tampered_data: u64,
    pub no_route: u64,
    pub retransmissions: u64,
    pub exhausted_entries: u64,
}

#[derive(Debug, Clone)]
pub struct NdnConfig {
    /// Interest lifetime before hop-wise retransmission, in microseconds.
    pub interest_timeout_us: u64,
    pub max_retries: u8,
    pub content_store_capacity: usize,
}

impl Default for NdnConfig {
    fn default() -> NdnConfig {
        NdnConfig {
            interest_timeout_us: 2_000_000,
            max_retries: 3,
            content_store_capacity: 40,
        }
    }
}

/// The per-hop forwarder state machine.
#[derive(Debug)]
pub struct NdnForwarder {
    config: NdnConfig,
    fib: Vec<(Name, Vec<NodeId>)>,
    pit: HashMap<Name, PendingInterest>,
    content_store: LruCache<Name, DataPacket>,
    verifying_key: VerifyingKey,
    next_entry_id: u64,
    events: Vec<NdnEvent>,
    counters: NdnCounters,
}

impl NdnForwarder {
    pub fn new(config: NdnConfig, verifying_key: VerifyingKey) -> NdnForwarder {
        let content_store = LruCache::new(config.content_store_capacity);
        NdnForwarder {
            config,
            fib: Vec::new(),
            pit: HashMap::new(),
            content_store,
            verifying_key,
            next_entry_id: 1,
            events: Vec::new(),
            counters: NdnCounters::default(),
        }
    }

    pub fn add_route(&mut self, prefix: Name, faces: Vec<NodeId>) {
        debug_assert!(!faces.is_empty());
        self.fib.push((prefix, faces));
    }

    pub fn counters(&self) -> &NdnCounters {
        &self.counters
    }

    pub fn take_events(&mut self) -> Vec<NdnEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn live_entries(&self) -> impl Iterator<Item = &PendingInterest> {
        self.pit.values()
    }

    pub fn cs_insert(&mut self, data: DataPacket) -> usize {
        self.content_store.insert(data.name.clone(), data)
    }

    fn longest_prefix(&self, name: &Name) -> Option<&[NodeId]> {
        self.fib
            .iter()
            .filter(|(prefix, _)| prefix.is_prefix_of(name))
            .max_by_key(|(prefix, _)| prefix.0.len())
            .map(|(_, faces)| faces.as_slice())
    }

    /// Incoming Interest: content store first, then PIT aggregation, then
    /// FIB forwarding to every face of the longest matching prefix.
    pub fn on_interest(&mut self, interest: Interest, face: Face, now: SimTime) -> Vec<NdnAction> {
        self.counters.interests_in += 1;
        if let Some(data) = self.content_store.get(&interest.name) {
            let data = data.clone();
            self.counters.cs_hits += 1;
            self.events.push(NdnEvent::CsHit);
            return vec![match face {
                Face::Local => NdnAction::DeliverLocal(data),
                Face::Neighbor(n) => NdnAction::SendData(n, data),
            }];
        }

        if let Some(entry) = self.pit.get_mut(&interest.name) {
            // a nonce seen before marks a looped Interest, not a new requester
            if entry.seen_nonces.contains(&interest.nonce) {
                self.counters.duplicate_nonces += 1;
                self.events.push(NdnEvent::DuplicateNonceDropped);
                return Vec::new();
            }
            entry.seen_nonces.push(interest.nonce);
            let entry_id = entry.entry_id;
            if !entry.in_faces.contains(&face) {
                entry.in_faces.push(face);
                self.events.push(NdnEvent::FaceRecorded { entry: entry_id, face });
            }
            self.counters.aggregated += 1;
            self.events.push(NdnEvent::Aggregated { entry: entry_id });
            return Vec::new();
        }

        let Some(out_faces) = self.longest_prefix(&interest.name).map(<[NodeId]>::to_vec) else {
            self.counters.no_route += 1;
            self.events.push(NdnEvent::NoRouteDropped);
            return Vec::new();
        };

        let entry_id = self.next_entry_id;
        self.next_entry_id += 1;
        let timeout_at = now.plus_us(self.config.interest_timeout_us);
        self.pit.insert(
            interest.name.clone(),
            PendingInterest {
                entry_id,
                name: interest.name.clone(),
                in_faces: vec![face],
                out_faces: out_faces.iter().map(|f| (*f, false)).collect(),
                seen_nonces: vec![interest.nonce],
                retries_left: self.config.max_retries,
                timeout_at,
            },
        );
        self.events.push(NdnEvent::PitCreated { entry: entry_id, name: interest.name.clone() });
        self.events.push(NdnEvent::FaceRecorded { entry: entry_id, face });

        let mut actions: Vec<NdnAction> = out_faces
            .iter()
            .map(|f| {
                self.counters.forwarded_interests += 1;
                NdnAction::SendInterest(*f, interest.clone())
            })
            .collect();
        actions.push(NdnAction::StartTimer { name: interest.name, at: timeout_at });
        actions
    }

    /// Incoming Data: the signature is verified before anything else, so
    /// tampered Data is never cached and never forwarded; a matching PIT
    /// entry is consumed by inserting into the content store and fanning
    /// out to every recorded face.
    pub fn on_data(&mut self, data: DataPacket, face: Face, counters: &mut CryptoCounters) -> Vec<NdnAction> {
        if !data.verify(&self.verifying_key, counters) {
            self.counters.tampered_data += 1;
            self.events.push(NdnEvent::TamperedDataDropped);
            // The face responded, albeit unusably; retransmissions skip it.
            if let (Some(entry), Face::Neighbor(n)) = (self.pit.get_mut(&data.name), face) {
                for (f, answered) in &mut entry.out_faces {
                    if *f == n {
                        *answered = true;
                    }
                }
            }
            return Vec::new();
        }

        let Some(entry) = self.pit.remove(&data.name) else {
            self.counters.unsolicited_data += 1;
            self.events.push(NdnEvent::UnsolicitedDataDropped);
            return Vec::new();
        };

        let evicted = self.content_store.insert(data.name.clone(), data.clone());
        self.events.push(NdnEvent::CsInsert { evicted });

        let mut actions = Vec::with_capacity(entry.in_faces.len());
        for in_face in &entry.in_faces {
            self.counters.data_fanned_out += 1;
            self.events.push(NdnEvent::DataDelivered {
                entry: entry.entry_id,
                face: *in_face,
            });
            actions.push(match in_face {
                Face::Local => NdnAction::DeliverLocal(data.clone()),
                Face::Neighbor(n) => NdnAction::SendData(*n, data.clone()),
            });
        }
        self.events.push(NdnEvent::PitConsumed {
            entry: entry.entry_id,
            name: entry.name.clone(),
            by_timeout: false,
        });
        actions
    }

    /// PIT timer expiry: re-forward on faces that have not answered while
    /// retries remain; exhausted entries are dropped silently — NDN has no
    /// error packet.
    pub fn on_pit_timeout(&mut self, name: &Name, now: SimTime, nonce: u32) -> Vec<NdnAction> {
        let Some(entry) = self.pit.get_mut(name) else {
            return Vec::new();
        };
        if now < entry.timeout_at {
            return Vec::new();
        }
        if entry.retries_left > 0 {
            entry.retries_left -= 1;
            entry.timeout_at = now.plus_us(self.config.interest_timeout_us);
            entry.seen_nonces.push(nonce);
            let entry_id = entry.entry_id;
            let retries_left = entry.retries_left;
            let timeout_at = entry.timeout_at;
            let interest = Interest { name: name.clone(), nonce };
            let mut actions: Vec<NdnAction> = entry
                .out_faces
                .iter()
                .filter(|(_, answered)| !answered)
                .map(|(f, _)| {
                    self.counters.retransmissions += 1;
                    NdnAction::SendInterest(*f, interest.clone())
                })
                .collect();
            self.events.push(NdnEvent::Retransmitted { entry: entry_id, retries_left });
            actions.push(NdnAction::StartTimer { name: name.clone(), at: timeout_at });
            return actions;
        }
        let entry = self.pit.remove(name).expect("checked above");
        self.counters.exhausted_entries += 1;
        self.events.push(NdnEvent::PitConsumed {
            entry: entry.entry_id,
            name: entry.name.clone(),
            by_timeout: true,
        });
        Vec::new()
    }
}

/// Wire form of the two packet types. A compact length-prefixed layout, not
/// NDN TLV; the simulator only needs deterministic bytes with realistic
/// sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NdnPacket {
    Interest(Interest),
    Data(DataPacket),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed NDN packet at offset {0}")]
pub struct NdnDecodeError(pub usize);

impl NdnPacket {
    pub fn encode(&self) -> Vec<u8> {
        fn put_name(out: &mut Vec<u8>, name: &Name) {
            out.push(name.0.len() as u8);
            for c in &name.0 {
                out.extend_from_slice(&(c.len() as u16).to_be_bytes());
                out.extend_from_slice(c.as_bytes());
            }
        }
        let mut out = Vec::new();
        match self {
            NdnPacket::Interest(i) => {
                out.push(0x05);
                out.extend_from_slice(&i.nonce.to_be_bytes());
                put_name(&mut out, &i.name);
            }
            NdnPacket::Data(d) => {
                out.push(0x06);
                out.push(d.encrypted as u8);
                put_name(&mut out, &d.name);
                out.extend_from_slice(&(d.payload.len() as u16).to_be_bytes());
                out.extend_from_slice(&d.payload);
                out.push(d.signature.len() as u8);
                out.extend_from_slice(&d.signature);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<NdnPacket, NdnDecodeError> {
        struct R<'a>(&'a [u8], usize);
        impl<'a> R<'a> {
            fn take(&mut self, n: usize) -> Result<&'a [u8], NdnDecodeError> {
                if self.1 + n > self.0.len() {
                    return Err(NdnDecodeError(self.1));
                }
                let s = &self.0[self.1..self.1 + n];
                self.1 += n;
                Ok(s)
            }
            fn byte(&mut self) -> Result<u8, NdnDecodeError> {
                Ok(self.take(1)?[0])
            }
            fn name(&mut self) -> Result<Name, NdnDecodeError> {
                let count = self.byte()? as usize;
                let mut comps = Vec::with_capacity(count);
                for _ in 0..count {
                    let len = self.take(2)?;
                    let len = u16::from_be_bytes([len[0], len[1]]) as usize;
                    let at = self.1;
                    let bytes = self.take(len)?;
                    comps.push(String::from_utf8(bytes.to_vec()).map_err(|_| NdnDecodeError(at))?);
                }
                Ok(Name(comps))
            }
        }
        let mut r = R(bytes, 0);
        match r.byte()? {
            0x05 => {
                let nonce_bytes = r.take(4)?;
                let nonce = u32::from_be_bytes(nonce_bytes.try_into().expect("length"));
                Ok(NdnPacket::Interest(Interest { name: r.name()?, nonce }))
            }
            0x06 => {
                let encrypted = r.byte()? != 0;
                let name = r.name()?;
                let plen = r.take(2)?;
                let plen = u16::from_be_bytes([plen[0], plen[1]]) as usize;
                let payload = r.take(plen)?.to_vec();
                let slen = r.byte()? as usize;
                let signature = r.take(slen)?.to_vec();
                Ok(NdnPacket::Data(DataPacket { name, payload, encrypted, signature }))
            }
            _ => Err(NdnDecodeError(0)),
        }
    }
}

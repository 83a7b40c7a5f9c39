//! Data-centric Web-of-Things stack.
//!
//! The crate bundles everything needed to run multiparty content-retrieval
//! experiments over lossy multihop topologies:
//!
//! * [`coap`] — CoAP message model, binary codec, Proxy-Uri handling and
//!   cache-key computation.
//! * [`proxy`] — the hop-wise forward-proxy engine: FIB with multiple
//!   next-hops, request aggregation, response fan-out/deduplication,
//!   response caching and hop-wise retransmission.
//! * [`security`] — content-object security: standard and deterministic
//!   request protection, response signatures and per-node crypto counters.
//! * [`ndn`] — a minimal NDN-style forwarder (PIT, content store, name FIB)
//!   used as the comparison baseline.
//! * [`simnet`] — the deterministic discrete-event simulator with lossy
//!   links and the periodic-instruction workload.
//! * [`scenario`] — TOML scenario ingestion and validation.
//! * [`metrics`] — trace reduction to metric bundles plus CSV/JSON export.

pub mod coap;
pub mod lru;
pub mod metrics;
pub mod ndn;
pub mod proxy;
pub mod scenario;
pub mod security;
pub mod simnet;

pub use coap::{CacheKey, Code, Message, MsgType, OptionNumber, ProxyUriParts, Token};
pub use proxy::{Action, Fib, FibEntry, NextHop, ProxyConfig, ProxyEngine, Role};
pub use security::{CryptoCounters, SecurityContext, SecurityMode};
pub use simnet::{NodeId, SimTime, Simulation};

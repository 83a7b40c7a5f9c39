//! Deterministic discrete-event simulator.
//!
//! A simulation is a set of nodes (clients, forwarders/routers, one server)
//! wired by lossy directed links, driven by a single event loop. All state
//! transitions are functions of (configuration, seed): two runs with the
//! same inputs produce byte-identical traces.

mod build;
mod event;
mod link;
mod node;
mod topology;
mod trace;

pub use build::{build_scenario, run_scenario, BuildError, RunError, Simulation};
pub use event::{EventKind, EventQueue, Frame, SimEvent, TimerKind};
pub use link::{DeliveryOutcome, LinkModel, LinkState, LossScript};
pub use node::{DeploymentMode, NodeStack};
pub use topology::{LinkSpec, NodeRole, NodeSpec, Topology, TopologyError};
pub use trace::{FrameKind, RawTrace, TraceError, TraceRecord};

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Identifies a node within one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Simulation time in microseconds since run start.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_us(us: u64) -> SimTime {
        SimTime(us)
    }

    pub fn from_ms(ms: u64) -> SimTime {
        SimTime(ms * 1_000)
    }

    pub fn from_secs(s: u64) -> SimTime {
        SimTime(s * 1_000_000)
    }

    pub fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn plus_us(self, us: u64) -> SimTime {
        SimTime(self.0 + us)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, us: u64) -> SimTime {
        SimTime(self.0 + us)
    }
}

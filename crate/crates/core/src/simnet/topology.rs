//! Topology construction and the named layout presets.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::simnet::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Client,
    Forwarder,
    Server,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
}

/// An undirected link; the simulation expands it into two directed lanes
/// sharing the loss probability and latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub loss: f64,
    #[serde(default = "default_latency")]
    pub latency_us: u64,
}

fn default_latency() -> u64 {
    1_000
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("link references unknown node {0:?}")]
    UnknownNode(String),
    #[error("loss probability {0} outside [0, 1]")]
    BadLoss(String),
    #[error("topology must contain exactly one server, found {0}")]
    ServerCount(usize),
    #[error("topology is not connected: {0:?} unreachable from the server")]
    Disconnected(String),
    #[error("topology needs at least one client")]
    NoClients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

impl Topology {
    /// The evaluation tree: the server, a forwarder chain f1..f7 ending in
    /// client9, one client per forwarder rank (client2 at f1 up to client8
    /// at f7) and client1 attached directly to the server at rank zero, so
    /// the path between client9 and the server shows the most intersections.
    pub fn paper_tree(server_link_loss: f64, chain_loss: f64, access_loss: f64) -> Topology {
        let mut nodes = vec![NodeSpec { name: "server".into(), role: NodeRole::Server }];
        let mut links = Vec::new();
        for i in 1..=7 {
            nodes.push(NodeSpec { name: format!("f{i}"), role: NodeRole::Forwarder });
        }
        for i in 1..=9 {
            nodes.push(NodeSpec { name: format!("client{i}"), role: NodeRole::Client });
        }
        links.push(LinkSpec {
            a: "client1".into(),
            b: "server".into(),
            loss: access_loss,
            latency_us: default_latency(),
        });
        links.push(LinkSpec {
            a: "server".into(),
            b: "f1".into(),
            loss: server_link_loss,
            latency_us: default_latency(),
        });
        for i in 1..7 {
            links.push(LinkSpec {
                a: format!("f{i}"),
                b: format!("f{}", i + 1),
                loss: chain_loss,
                latency_us: default_latency(),
            });
        }
        for i in 1..=7 {
            links.push(LinkSpec {
                a: format!("f{i}"),
                b: format!("client{}", i + 1),
                loss: access_loss,
                latency_us: default_latency(),
            });
        }
        links.push(LinkSpec {
            a: "f7".into(),
            b: "client9".into(),
            loss: access_loss,
            latency_us: default_latency(),
        });
        Topology { nodes, links }
    }

    /// One client, one server, one link.
    pub fn single_link(loss: f64) -> Topology {
        Topology {
            nodes: vec![
                NodeSpec { name: "client1".into(), role: NodeRole::Client },
                NodeSpec { name: "server".into(), role: NodeRole::Server },
            ],
            links: vec![LinkSpec {
                a: "client1".into(),
                b: "server".into(),
                loss,
                latency_us: default_latency(),
            }],
        }
    }

    /// client1 — f1 — ... — fN — server.
    pub fn chain(forwarders: usize, loss: f64) -> Topology {
        let mut nodes = vec![NodeSpec { name: "client1".into(), role: NodeRole::Client }];
        let mut links = Vec::new();
        let mut previous = "client1".to_string();
        for i in 1..=forwarders {
            let name = format!("f{i}");
            nodes.push(NodeSpec { name: name.clone(), role: NodeRole::Forwarder });
            links.push(LinkSpec { a: previous.clone(), b: name.clone(), loss, latency_us: default_latency() });
            previous = name;
        }
        nodes.push(NodeSpec { name: "server".into(), role: NodeRole::Server });
        links.push(LinkSpec { a: previous, b: "server".into(), loss, latency_us: default_latency() });
        Topology { nodes, links }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let mut seen = BTreeMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if seen.insert(node.name.clone(), idx).is_some() {
                return Err(TopologyError::DuplicateNode(node.name.clone()));
            }
        }
        for link in &self.links {
            for end in [&link.a, &link.b] {
                if !seen.contains_key(end) {
                    return Err(TopologyError::UnknownNode(end.clone()));
                }
            }
            if !(0.0..=1.0).contains(&link.loss) {
                return Err(TopologyError::BadLoss(format!("{}-{}", link.a, link.b)));
            }
        }
        let servers = self.nodes.iter().filter(|n| n.role == NodeRole::Server).count();
        if servers != 1 {
            return Err(TopologyError::ServerCount(servers));
        }
        if !self.nodes.iter().any(|n| n.role == NodeRole::Client) {
            return Err(TopologyError::NoClients);
        }
        // connectivity from the server
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for link in &self.links {
            let a = index[link.a.as_str()];
            let b = index[link.b.as_str()];
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let server = self.nodes.iter().position(|n| n.role == NodeRole::Server).expect("checked");
        let mut visited = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([server]);
        visited[server] = true;
        while let Some(at) = queue.pop_front() {
            for &next in &adjacency[at] {
                if !visited[next] {
                    visited[next] = true;
                    queue.push_back(next);
                }
            }
        }
        if let Some(unreached) = visited.iter().position(|v| !v) {
            return Err(TopologyError::Disconnected(self.nodes[unreached].name.clone()));
        }
        Ok(())
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u32))
    }

    pub fn name_of(&self, id: NodeId) -> &str {
        &self.nodes[id.0 as usize].name
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let name = self.name_of(id);
        let mut out = Vec::new();
        for link in &self.links {
            if link.a == name {
                out.push(self.node_id(&link.b).expect("validated"));
            } else if link.b == name {
                out.push(self.node_id(&link.a).expect("validated"));
            }
        }
        out
    }

    /// All-pairs next-hop table via per-destination BFS. Deterministic:
    /// neighbor exploration follows link list order.
    pub fn routes(&self) -> HashMap<(NodeId, NodeId), NodeId> {
        let mut table = HashMap::new();
        let n = self.nodes.len();
        for dst_idx in 0..n {
            let dst = NodeId(dst_idx as u32);
            let mut parent: Vec<Option<NodeId>> = vec![None; n];
            let mut visited = vec![false; n];
            visited[dst_idx] = true;
            let mut queue = VecDeque::from([dst]);
            while let Some(at) = queue.pop_front() {
                for next in self.neighbors(at) {
                    if !visited[next.0 as usize] {
                        visited[next.0 as usize] = true;
                        parent[next.0 as usize] = Some(at);
                        queue.push_back(next);
                    }
                }
            }
            for (src_idx, towards) in parent.iter().enumerate() {
                if src_idx == dst_idx {
                    continue;
                }
                if let Some(towards) = towards {
                    table.insert((NodeId(src_idx as u32), dst), *towards);
                }
            }
        }
        table
    }

    /// Next hop from `from` toward the server.
    pub fn next_hop_to_server(&self, from: NodeId) -> Option<NodeId> {
        let server = self.node_id(
            &self
                .nodes
                .iter()
                .find(|n| n.role == NodeRole::Server)?
                .name
                .clone(),
        )?;
        self.routes().get(&(from, server)).copied()
    }
}

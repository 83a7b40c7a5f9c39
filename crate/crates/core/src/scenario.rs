//! Scenario files.
//!
//! A scenario is a single TOML document with nested sections; unknown keys
//! are rejected. The topology comes either from a named preset or from an
//! explicit node/link list. See `docs/scenario.md` for the full schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::simnet::{DeploymentMode, LinkSpec, NodeSpec, Topology};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid topology: {0}")]
    Topology(#[from] crate::simnet::TopologyError),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioMeta,
    pub topology: TopologySection,
    #[serde(default)]
    pub workload: WorkloadSection,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub proxy: ProxySection,
    #[serde(default)]
    pub crypto: CryptoSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub name: String,
    pub mode: DeploymentMode,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum TopologyPreset {
    PaperTree,
    SingleLink,
    Chain,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub preset: TopologyPreset,
    /// Loss on the f1..f7 inter-forwarder links (paper-tree).
    #[serde(default)]
    pub chain_loss: f64,
    /// Loss on client access links (paper-tree).
    #[serde(default)]
    pub access_loss: f64,
    /// Loss on the server–f1 link (paper-tree).
    #[serde(default)]
    pub server_link_loss: f64,
    /// Loss on every link (single-link, chain presets).
    #[serde(default)]
    pub loss: f64,
    /// Forwarder count for the chain preset.
    #[serde(default = "default_chain_forwarders")]
    pub forwarders: usize,
    /// Explicit node list (preset = "explicit").
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeSpec>,
    /// Explicit link list (preset = "explicit").
    #[serde(default, rename = "link")]
    pub links: Vec<LinkSpec>,
}

fn default_chain_forwarders() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    /// Scheduled request rounds per client.
    pub rounds: u32,
    /// Inter-request period per client, in milliseconds.
    pub period_ms: u64,
    /// Jitter applied per request, uniform in [0, jitter_ms).
    pub jitter_ms: u64,
    /// Instruction payload size in bytes.
    pub payload_len: usize,
    /// Drain time after the last scheduled request, in milliseconds.
    pub drain_ms: u64,
}

impl Default for WorkloadSection {
    fn default() -> WorkloadSection {
        WorkloadSection {
            rounds: 1000,
            period_ms: 1000,
            jitter_ms: 500,
            payload_len: 8,
            drain_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub bitrate_bps: u64,
    pub max_frame_bytes: usize,
    pub mac_retries: u8,
    pub mac_backoff_ms: Vec<u64>,
    pub latency_us: u64,
}

impl Default for LinkSection {
    fn default() -> LinkSection {
        LinkSection {
            bitrate_bps: 250_000,
            max_frame_bytes: 127,
            mac_retries: 3,
            mac_backoff_ms: vec![4, 8, 16],
            latency_us: 1_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxySection {
    pub request_timeout_ms: u64,
    pub max_request_retries: u8,
    pub cache_capacity: usize,
}

impl Default for ProxySection {
    fn default() -> ProxySection {
        ProxySection {
            request_timeout_ms: 2000,
            max_request_retries: 3,
            cache_capacity: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CryptoSection {
    /// Server-side signature derivation time, in milliseconds.
    pub signing_delay_ms: u64,
    /// Pairwise master secret (standard protection), hex.
    pub master_secret_hex: String,
    /// Group secret (deterministic protection and NDN content keys), hex.
    pub group_secret_hex: String,
    /// Ed25519 signing seed, exactly 32 bytes of hex.
    pub signing_seed_hex: String,
}

impl Default for CryptoSection {
    fn default() -> CryptoSection {
        CryptoSection {
            signing_delay_ms: 20,
            master_secret_hex: "000102030405060708090a0b0c0d0e0f".into(),
            group_secret_hex: "101112131415161718191a1b1c1d1e1f".into(),
            signing_seed_hex: "202122232425262728292a2b2c2d2e2f303132333435363738393a3b3c3d3e3f"
                .into(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory for CSV/JSON exports.
    pub dir: Option<String>,
    /// Also write the raw NDJSON trace.
    #[serde(default)]
    pub trace: bool,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ScenarioConfig::from_toml(&text)
    }

    /// Minimal programmatic scenario used by tests and the suite runner.
    pub fn preset(name: &str, mode: DeploymentMode, preset: TopologyPreset) -> ScenarioConfig {
        ScenarioConfig {
            scenario: ScenarioMeta { name: name.into(), mode, seed: default_seed() },
            topology: TopologySection {
                preset,
                chain_loss: 0.0,
                access_loss: 0.0,
                server_link_loss: 0.0,
                loss: 0.0,
                forwarders: default_chain_forwarders(),
                nodes: Vec::new(),
                links: Vec::new(),
            },
            workload: WorkloadSection::default(),
            link: LinkSection::default(),
            proxy: ProxySection::default(),
            crypto: CryptoSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn build_topology(&self) -> Result<Topology, ScenarioError> {
        let t = &self.topology;
        let topology = match t.preset {
            TopologyPreset::PaperTree => {
                Topology::paper_tree(t.server_link_loss, t.chain_loss, t.access_loss)
            }
            TopologyPreset::SingleLink => Topology::single_link(t.loss),
            TopologyPreset::Chain => Topology::chain(t.forwarders, t.loss),
            TopologyPreset::Explicit => Topology {
                nodes: t.nodes.clone(),
                links: t.links.clone(),
            },
        };
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in [
            ("topology.chain_loss", self.topology.chain_loss),
            ("topology.access_loss", self.topology.access_loss),
            ("topology.server_link_loss", self.topology.server_link_loss),
            ("topology.loss", self.topology.loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.workload.rounds == 0 {
            return Err(invalid("workload.rounds must be positive"));
        }
        if self.workload.period_ms == 0 {
            return Err(invalid("workload.period_ms must be positive"));
        }
        if self.link.bitrate_bps == 0 {
            return Err(invalid("link.bitrate_bps must be positive"));
        }
        if self.link.max_frame_bytes == 0 {
            return Err(invalid("link.max_frame_bytes must be positive"));
        }
        if self.proxy.request_timeout_ms == 0 {
            return Err(invalid("proxy.request_timeout_ms must be positive"));
        }
        if self.proxy.max_request_retries > 3 {
            return Err(invalid("proxy.max_request_retries must be at most 3"));
        }
        if self.proxy.cache_capacity == 0 {
            return Err(invalid("proxy.cache_capacity must be positive"));
        }
        hex::decode(&self.crypto.master_secret_hex)
            .map_err(|e| invalid(format!("crypto.master_secret_hex: {e}")))?;
        hex::decode(&self.crypto.group_secret_hex)
            .map_err(|e| invalid(format!("crypto.group_secret_hex: {e}")))?;
        let seed = hex::decode(&self.crypto.signing_seed_hex)
            .map_err(|e| invalid(format!("crypto.signing_seed_hex: {e}")))?;
        if seed.len() != 32 {
            return Err(invalid("crypto.signing_seed_hex must be 32 bytes"));
        }
        self.build_topology()?;
        Ok(())
    }

    pub fn signing_seed(&self) -> [u8; 32] {
        hex::decode(&self.crypto.signing_seed_hex)
            .expect("validated")
            .try_into()
            .expect("validated length")
    }
}

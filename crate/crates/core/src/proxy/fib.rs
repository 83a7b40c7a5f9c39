//! Application-level Forwarding Information Base.
//!
//! Each entry maps a name prefix (optional host plus leading path segments,
//! with an implied trailing wildcard) to one or more next-hops. Unlike an IP
//! FIB, several next-hops may exist for a single prefix; safe requests are
//! duplicated to all of them. The per-hop `send_host` flag records whether
//! that hop still needs the full Proxy-Uri including the host component.

use crate::coap::ProxyUriParts;
use crate::simnet::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NextHop {
    pub addr: NodeId,
    pub send_host: bool,
}

/// Name prefix pattern: a host gate plus a path-segment prefix.
///
/// A pattern without a host matches any request host (encrypted names carry
/// routable information in the host component only, so secured deployments
/// typically use host-only patterns with an empty path).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NamePattern {
    pub host: Option<String>,
    pub path: Vec<String>,
}

impl NamePattern {
    pub fn host_only(host: &str) -> NamePattern {
        NamePattern {
            host: Some(host.to_string()),
            path: Vec::new(),
        }
    }

    pub fn new(host: Option<&str>, path: &[&str]) -> NamePattern {
        NamePattern {
            host: host.map(str::to_string),
            path: path.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Match length in path segments, or `None` when the pattern does not
    /// apply. Host-specific patterns only match requests carrying that host.
    pub fn match_len(&self, parts: &ProxyUriParts) -> Option<usize> {
        if let Some(host) = &self.host {
            if parts.host.as_deref() != Some(host.as_str()) {
                return None;
            }
        }
        if self.path.len() > parts.path.len() {
            return None;
        }
        if self.path.iter().zip(&parts.path).any(|(a, b)| a != b) {
            return None;
        }
        Some(self.path.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FibError {
    #[error("duplicate prefix {0:?}")]
    DuplicatePrefix(String),
    #[error("entry for {0:?} has no next-hops")]
    NoNextHops(String),
}

#[derive(Debug, Clone)]
pub struct FibEntry {
    pub pattern: NamePattern,
    pub next_hops: Vec<NextHop>,
}

/// Ordered entry list; lookup picks the longest matching prefix, preferring
/// host-specific entries on equal path length.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: Vec<FibEntry>,
}

impl Fib {
    pub fn new() -> Fib {
        Fib::default()
    }

    pub fn add(&mut self, pattern: NamePattern, next_hops: Vec<NextHop>) -> Result<(), FibError> {
        let name = format!("{:?}/{:?}", pattern.host, pattern.path);
        if next_hops.is_empty() {
            return Err(FibError::NoNextHops(name));
        }
        if self.entries.iter().any(|e| e.pattern == pattern) {
            return Err(FibError::DuplicatePrefix(name));
        }
        self.entries.push(FibEntry { pattern, next_hops });
        Ok(())
    }

    /// Convenience for the common default-route case.
    pub fn default_route(next_hop: NodeId, send_host: bool) -> Fib {
        let mut fib = Fib::new();
        fib.add(
            NamePattern::default(),
            vec![NextHop { addr: next_hop, send_host }],
        )
        .expect("fresh fib");
        fib
    }

    pub fn entries(&self) -> &[FibEntry] {
        &self.entries
    }

    /// Longest-prefix lookup; a miss is the empty slice.
    pub fn lookup(&self, parts: &ProxyUriParts) -> &[NextHop] {
        let mut best: Option<(&FibEntry, usize, bool)> = None;
        for entry in &self.entries {
            if let Some(len) = entry.pattern.match_len(parts) {
                let hosted = entry.pattern.host.is_some();
                let better = match best {
                    None => true,
                    Some((_, best_len, best_hosted)) => {
                        len > best_len || (len == best_len && hosted && !best_hosted)
                    }
                };
                if better {
                    best = Some((entry, len, hosted));
                }
            }
        }
        best.map(|(e, _, _)| e.next_hops.as_slice()).unwrap_or(&[])
    }
}

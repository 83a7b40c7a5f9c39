//! Request cache keys.
//!
//! The cache key is a SHA-256 digest over a canonical serialization of the
//! request's cache-relevant fields: code, every option in the registry
//! (including OSCORE and Request-Hash) and the payload. Token, message id
//! and message type are deliberately excluded, so retransmissions and
//! re-tokened copies of one request share a key.

use sha2::{Digest, Sha256};

use super::Message;

const DOMAIN_TAG: &[u8] = b"dcwot-cache-key-v1";

/// Opaque digest identifying the equality class of a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Short hex prefix for traces and logs.
    pub fn short_hex(&self) -> String {
        hex::encode(&self.0[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cache keys are defined for requests only")]
pub struct NotARequest;

/// Computes the cache key of a request.
pub fn compute_cache_key(m: &Message) -> Result<CacheKey, NotARequest> {
    if !m.is_request() {
        return Err(NotARequest);
    }
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update([m.code.to_byte()]);
    for opt in m.options() {
        hasher.update(opt.number.number().to_be_bytes());
        hasher.update((opt.value.len() as u32).to_be_bytes());
        hasher.update(&opt.value);
    }
    hasher.update((m.payload.len() as u32).to_be_bytes());
    hasher.update(&m.payload);
    Ok(CacheKey(hasher.finalize().into()))
}

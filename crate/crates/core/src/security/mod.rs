//! Content-object security.
//!
//! Two protection modes cover the secured deployments:
//!
//! * **Standard** request protection: path/query options and the payload
//!   move into an AEAD ciphertext, the host stays outer, and the nonce is
//!   derived from the sender's monotonically increasing sequence number.
//!   Responses are bound to the exact request that elicited them by reusing
//!   the request nonce.
//! * **Deterministic group** protection: the request key is derived by
//!   keyed-hashing the request plaintext together with context data, the
//!   full hash travels in the Request-Hash option, and identical plaintext
//!   from any group member yields byte-identical protected requests — which
//!   is what lets protected requests share in-network cache entries.
//!   Responses bind to the request *content* (the hash), not to one client,
//!   and carry an Ed25519 signature so group members cannot forge server
//!   responses.
//!
//! AEAD is AES-CCM-16-64-128 (8-byte tag, 13-byte nonce), the MAC/KDF is
//! HMAC-SHA-256 and signatures are Ed25519. Every primitive invocation is
//! counted per node in [`CryptoCounters`].

mod context;
pub(crate) mod primitives;

pub use context::{
    RequestBinding, SecurityContext, SecurityError, SecurityMode, SIGNATURE_LEN,
};
pub use primitives::REQUEST_HASH_LEN;

use serde::{Deserialize, Serialize};

/// Per-node tally of cryptographic operations. Monotone non-decreasing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CryptoCounters {
    pub aead_ops: u64,
    pub sign_ops: u64,
    pub verify_ops: u64,
    pub hmac_ops: u64,
}

impl CryptoCounters {
    pub fn add(&mut self, other: &CryptoCounters) {
        self.aead_ops += other.aead_ops;
        self.sign_ops += other.sign_ops;
        self.verify_ops += other.verify_ops;
        self.hmac_ops += other.hmac_ops;
    }
}

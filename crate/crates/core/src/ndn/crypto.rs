//! Data-packet content protection.
//!
//! Interests travel in the clear; only responses are signed and carry
//! AEAD-encrypted content. Key and nonce derive from the content name with
//! a single keyed hash, so a consumer needs one MAC and one AEAD operation
//! per retrieval.

use crate::security::primitives::{aead_open, aead_seal, hmac, AEAD_KEY_LEN, NONCE_LEN};
use crate::security::CryptoCounters;

/// Group-shared content-encryption secret.
#[derive(Debug, Clone)]
pub struct NdnGroupKeys {
    secret: Vec<u8>,
}

impl NdnGroupKeys {
    pub fn new(secret: &[u8]) -> NdnGroupKeys {
        NdnGroupKeys { secret: secret.to_vec() }
    }

    fn key_nonce(&self, name_bytes: &[u8], counters: &mut CryptoCounters) -> ([u8; AEAD_KEY_LEN], [u8; NONCE_LEN]) {
        let okm = hmac(&self.secret, &[b"ndn-content-v1", name_bytes]);
        counters.hmac_ops += 1;
        let key = okm[..AEAD_KEY_LEN].try_into().expect("length");
        let nonce = okm[AEAD_KEY_LEN..AEAD_KEY_LEN + NONCE_LEN].try_into().expect("length");
        (key, nonce)
    }
}

pub fn seal_data_content(
    keys: &NdnGroupKeys,
    name_bytes: &[u8],
    content: &[u8],
    counters: &mut CryptoCounters,
) -> Vec<u8> {
    let (key, nonce) = keys.key_nonce(name_bytes, counters);
    counters.aead_ops += 1;
    aead_seal(&key, &nonce, name_bytes, content)
}

pub fn open_data_content(
    keys: &NdnGroupKeys,
    name_bytes: &[u8],
    ciphertext: &[u8],
    counters: &mut CryptoCounters,
) -> Option<Vec<u8>> {
    let (key, nonce) = keys.key_nonce(name_bytes, counters);
    counters.aead_ops += 1;
    aead_open(&key, &nonce, name_bytes, ciphertext)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_round_trip_costs_one_mac_one_aead_each_way() {
        let keys = NdnGroupKeys::new(b"group");
        let mut c = CryptoCounters::default();
        let name = b"\x00\x0binstruction";
        let ct = seal_data_content(&keys, name, b"cmd:1", &mut c);
        assert_eq!((c.hmac_ops, c.aead_ops), (1, 1));
        let pt = open_data_content(&keys, name, &ct, &mut c).unwrap();
        assert_eq!(pt, b"cmd:1");
        assert_eq!((c.hmac_ops, c.aead_ops), (2, 2));
    }

    #[test]
    fn wrong_name_fails_to_open() {
        let keys = NdnGroupKeys::new(b"group");
        let mut c = CryptoCounters::default();
        let ct = seal_data_content(&keys, b"name-a", b"cmd:1", &mut c);
        assert!(open_data_content(&keys, b"name-b", &ct, &mut c).is_none());
    }
}

//! Thin wrappers over the crypto primitives, with explicit op counting at
//! the call sites that use them.

use aes::Aes128;
use ccm::aead::{Aead, KeyInit, Payload};
use ccm::consts::{U13, U8};
use ccm::Ccm;
use hmac::{Hmac, Mac};
use sha2::Sha256;

/// AES-CCM-16-64-128: 128-bit key, 64-bit tag, 13-byte nonce.
pub type Ccm16_64_128 = Ccm<Aes128, U8, U13>;

pub const AEAD_KEY_LEN: usize = 16;
pub const NONCE_LEN: usize = 13;
pub const REQUEST_HASH_LEN: usize = 32;

pub fn aead_seal(key: &[u8; AEAD_KEY_LEN], nonce: &[u8; NONCE_LEN], aad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    let cipher = Ccm16_64_128::new(key.into());
    cipher
        .encrypt(nonce.into(), Payload { msg: plaintext, aad })
        .expect("CCM encryption is infallible for in-range lengths")
}

pub fn aead_open(
    key: &[u8; AEAD_KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    aad: &[u8],
    ciphertext: &[u8],
) -> Option<Vec<u8>> {
    let cipher = Ccm16_64_128::new(key.into());
    cipher.decrypt(nonce.into(), Payload { msg: ciphertext, aad }).ok()
}

/// One HMAC-SHA-256 invocation over length-prefixed parts.
pub fn hmac(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("any key length works");
    for part in parts {
        mac.update(&(part.len() as u32).to_be_bytes());
        mac.update(part);
    }
    mac.finalize().into_bytes().into()
}

//! Security contexts and the protect/unprotect operations.

use std::collections::BTreeMap;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};

use crate::coap::{
    decode_message, encode_message, split_proxy_uri, Code, Message, OptionNumber, ProxyUriParts,
};
use crate::security::primitives::{
    aead_open, aead_seal, hmac, AEAD_KEY_LEN, NONCE_LEN, REQUEST_HASH_LEN,
};
use crate::security::CryptoCounters;

pub const SIGNATURE_LEN: usize = 64;

/// Sequence numbers fit a five-byte partial IV.
const MAX_SEQUENCE: u64 = 1 << 40;
const REPLAY_WINDOW: u64 = 32;

/// Fixed key id of the fictitious deterministic client.
const DETERMINISTIC_CLIENT_ID: &[u8] = &[0xdc];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecurityMode {
    Standard,
    DeterministicGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SecurityError {
    #[error("authentication tag verification failed")]
    IntegrityFailure,
    #[error("replayed request (sequence {0})")]
    Replay(u64),
    #[error("sender sequence space exhausted")]
    SequenceExhausted,
    #[error("message carries no protection")]
    NotProtected,
    #[error("malformed OSCORE option")]
    MalformedOscoreOption,
    #[error("protected request lacks the Request-Hash option")]
    MissingRequestHash,
    #[error("request hash does not match the decrypted plaintext")]
    RequestHashMismatch,
    #[error("deterministic protection applies to safe methods only, got {0:?}")]
    NonSafeMethod(Code),
    #[error("key id does not match this context")]
    WrongSender,
    #[error("response signature invalid or missing")]
    SignatureInvalid,
    #[error("operation not supported in this mode")]
    WrongMode,
    #[error("inner message malformed after decryption")]
    MalformedInner,
    #[error("unusable request URI: {0}")]
    Uri(String),
}

/// Material correlating a response with the request it answers. In standard
/// mode this pins the exact request (its nonce); in deterministic mode it
/// pins the request content (its hash), so any group member holding the
/// same hash can use the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestBinding {
    pub kid: Vec<u8>,
    pub partial_iv: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub request_hash: Option<[u8; REQUEST_HASH_LEN]>,
}

#[derive(Debug, Clone)]
struct ReplayWindow {
    floor: u64,
    seen: BTreeMap<u64, Vec<u8>>,
}

impl ReplayWindow {
    fn new() -> ReplayWindow {
        ReplayWindow { floor: 0, seen: BTreeMap::new() }
    }

    /// Accepts a sequence number unless it fell out of the window or was
    /// already seen with different message bytes. Re-seeing the identical
    /// message is a retransmission of an idempotent request and passes.
    fn check(&mut self, sequence: u64, ciphertext: &[u8]) -> Result<(), SecurityError> {
        if sequence < self.floor {
            return Err(SecurityError::Replay(sequence));
        }
        if let Some(seen) = self.seen.get(&sequence) {
            if seen != ciphertext {
                return Err(SecurityError::Replay(sequence));
            }
            return Ok(());
        }
        self.seen.insert(sequence, ciphertext.to_vec());
        self.floor = self.floor.max((sequence + 1).saturating_sub(REPLAY_WINDOW));
        let floor = self.floor;
        self.seen.retain(|s, _| *s >= floor);
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct GroupMaterial {
    group_id: Vec<u8>,
    /// Secret of the fictitious deterministic client, shared group-wide.
    deterministic_client_secret: [u8; 32],
    /// Extract salt for the per-request key derivation.
    kdf_salt: [u8; 32],
    /// Static key protecting responses; pre-provisioned, so response
    /// handling costs no per-message key derivation.
    response_key: [u8; AEAD_KEY_LEN],
    signing_key: Option<SigningKey>,
    verifying_key: VerifyingKey,
}

#[derive(Debug, Clone)]
struct PairwiseMaterial {
    sender_id: Vec<u8>,
    recipient_id: Vec<u8>,
    sender_key: [u8; AEAD_KEY_LEN],
    recipient_key: [u8; AEAD_KEY_LEN],
    common_iv: [u8; NONCE_LEN],
    sender_sequence: u64,
    replay: ReplayWindow,
}

/// AEAD keys and sequence state for one endpoint.
///
/// Standard contexts are pairwise (one per client-server pair, mirrored on
/// both ends); deterministic-group contexts are shared by all members.
/// Contexts are single-owner mutable state and must not be used from two
/// places at once.
#[derive(Debug, Clone)]
pub struct SecurityContext {
    mode: SecurityMode,
    pairwise: Option<PairwiseMaterial>,
    group: Option<GroupMaterial>,
}

fn truncate16(bytes: [u8; 32]) -> [u8; 16] {
    bytes[..16].try_into().expect("length checked")
}

fn truncate13(bytes: [u8; 32]) -> [u8; 13] {
    bytes[..13].try_into().expect("length checked")
}

/// Minimal big-endian partial IV, at least one byte.
fn partial_iv(sequence: u64) -> Vec<u8> {
    let bytes = sequence.to_be_bytes();
    let first = bytes.iter().position(|&b| b != 0).unwrap_or(7);
    bytes[first..].to_vec()
}

fn sequence_from_piv(piv: &[u8]) -> u64 {
    piv.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64)
}

fn compute_nonce(common_iv: &[u8; NONCE_LEN], id: &[u8], piv: &[u8]) -> [u8; NONCE_LEN] {
    debug_assert!(id.len() <= 7 && piv.len() <= 5);
    let mut nonce = [0u8; NONCE_LEN];
    nonce[0] = id.len() as u8;
    nonce[8 - id.len()..8].copy_from_slice(id);
    nonce[NONCE_LEN - piv.len()..].copy_from_slice(piv);
    for (n, iv) in nonce.iter_mut().zip(common_iv) {
        *n ^= iv;
    }
    nonce
}

fn oscore_option_value(piv: &[u8], kid: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(2 + piv.len() + kid.len());
    v.push(piv.len() as u8);
    v.extend_from_slice(piv);
    v.push(kid.len() as u8);
    v.extend_from_slice(kid);
    v
}

fn parse_oscore_option(value: &[u8]) -> Result<(Vec<u8>, Vec<u8>), SecurityError> {
    let err = SecurityError::MalformedOscoreOption;
    let piv_len = *value.first().ok_or(err.clone())? as usize;
    if value.len() < 1 + piv_len + 1 {
        return Err(err);
    }
    let piv = value[1..1 + piv_len].to_vec();
    let kid_len = value[1 + piv_len] as usize;
    if value.len() != 2 + piv_len + kid_len {
        return Err(err);
    }
    let kid = value[2 + piv_len..].to_vec();
    Ok((piv, kid))
}

/// Splits a message into the encrypted inner part (code, path, query,
/// payload) and the outer URI parts (scheme and host, which stay visible
/// for routing).
fn split_for_protection(m: &Message) -> Result<(Message, ProxyUriParts), SecurityError> {
    let parts = split_proxy_uri(m).map_err(|e| SecurityError::Uri(e.to_string()))?;
    let mut inner = Message::new(m.code);
    for seg in &parts.path {
        inner.add_option(OptionNumber::UriPath, seg.clone().into_bytes());
    }
    for q in &parts.query {
        inner.add_option(OptionNumber::UriQuery, q.clone().into_bytes());
    }
    inner.payload = m.payload.clone();
    Ok((inner, parts))
}

/// Builds the protected outer message: host stays outer, everything else
/// travels in the ciphertext payload.
fn outer_message(m: &Message, parts: &ProxyUriParts, ciphertext: Vec<u8>) -> Message {
    let mut outer = Message::new(m.code);
    outer.msg_type = m.msg_type;
    outer.message_id = m.message_id;
    outer.token = m.token.clone();
    if parts.host.is_some() {
        let host_only = ProxyUriParts {
            scheme: parts.scheme.clone().or_else(|| Some("coap".into())),
            host: parts.host.clone(),
            path: Vec::new(),
            query: Vec::new(),
        };
        outer.add_option(OptionNumber::ProxyUri, host_only.to_uri_string().into_bytes());
    }
    outer.payload = ciphertext;
    outer
}

/// Reassembles the plaintext message from decrypted inner bytes plus the
/// outer envelope.
fn reassemble(outer: &Message, inner_bytes: &[u8]) -> Result<Message, SecurityError> {
    let inner = decode_message(inner_bytes).map_err(|_| SecurityError::MalformedInner)?;
    let outer_parts = split_proxy_uri(outer).map_err(|e| SecurityError::Uri(e.to_string()))?;
    let mut m = Message::new(inner.code);
    m.msg_type = outer.msg_type;
    m.message_id = outer.message_id;
    m.token = outer.token.clone();
    m.payload = inner.payload.clone();
    let inner_parts = split_proxy_uri(&inner).map_err(|e| SecurityError::Uri(e.to_string()))?;
    if outer_parts.host.is_some() {
        let full = ProxyUriParts {
            scheme: outer_parts.scheme,
            host: outer_parts.host,
            path: inner_parts.path,
            query: inner_parts.query,
        };
        m.add_option(OptionNumber::ProxyUri, full.to_uri_string().into_bytes());
    } else {
        for seg in &inner_parts.path {
            m.add_option(OptionNumber::UriPath, seg.clone().into_bytes());
        }
        for q in &inner_parts.query {
            m.add_option(OptionNumber::UriQuery, q.clone().into_bytes());
        }
    }
    Ok(m)
}

impl SecurityContext {
    /// Pairwise context with statically derived key material. `sender_id`
    /// is this endpoint; the mirror context swaps the ids.
    pub fn standard(master_secret: &[u8], sender_id: &[u8], recipient_id: &[u8]) -> SecurityContext {
        let derive_key = |id: &[u8]| truncate16(hmac(master_secret, &[b"key", id]));
        SecurityContext {
            mode: SecurityMode::Standard,
            pairwise: Some(PairwiseMaterial {
                sender_id: sender_id.to_vec(),
                recipient_id: recipient_id.to_vec(),
                sender_key: derive_key(sender_id),
                recipient_key: derive_key(recipient_id),
                common_iv: truncate13(hmac(master_secret, &[b"common-iv"])),
                sender_sequence: 0,
                replay: ReplayWindow::new(),
            }),
            group: None,
        }
    }

    /// Group context for deterministic requests. Only the server receives
    /// the signing key; members hold the verifying key.
    pub fn deterministic_group(
        group_secret: &[u8],
        group_id: &[u8],
        signing_seed: &[u8; 32],
        is_server: bool,
    ) -> SecurityContext {
        let signing_key = SigningKey::from_bytes(signing_seed);
        let verifying_key = signing_key.verifying_key();
        SecurityContext {
            mode: SecurityMode::DeterministicGroup,
            pairwise: None,
            group: Some(GroupMaterial {
                group_id: group_id.to_vec(),
                deterministic_client_secret: hmac(group_secret, &[b"det-client-secret", group_id]),
                kdf_salt: hmac(group_secret, &[b"det-kdf-salt", group_id]),
                response_key: truncate16(hmac(group_secret, &[b"response-key", group_id])),
                signing_key: is_server.then_some(signing_key),
                verifying_key,
            }),
        }
    }

    pub fn mode(&self) -> SecurityMode {
        self.mode
    }

    pub fn sender_sequence(&self) -> u64 {
        self.pairwise.as_ref().map(|p| p.sender_sequence).unwrap_or(0)
    }

    fn pairwise(&self) -> Result<&PairwiseMaterial, SecurityError> {
        self.pairwise.as_ref().ok_or(SecurityError::WrongMode)
    }

    fn group(&self) -> Result<&GroupMaterial, SecurityError> {
        self.group.as_ref().ok_or(SecurityError::WrongMode)
    }

    /// Standard-mode request protection. Path, query and payload move into
    /// the ciphertext; the OSCORE option carries the sender id and the
    /// sequence-derived partial IV; the sequence increases by one.
    pub fn protect_request(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<(Message, RequestBinding), SecurityError> {
        if self.mode == SecurityMode::DeterministicGroup {
            return self.deterministic_protect_request(m, counters);
        }
        let (inner, parts) = split_for_protection(m)?;
        let plaintext = encode_message(&inner).expect("inner message is well-formed");

        let pw = self.pairwise.as_mut().ok_or(SecurityError::WrongMode)?;
        if pw.sender_sequence >= MAX_SEQUENCE {
            return Err(SecurityError::SequenceExhausted);
        }
        let piv = partial_iv(pw.sender_sequence);
        pw.sender_sequence += 1;
        let nonce = compute_nonce(&pw.common_iv, &pw.sender_id, &piv);
        let aad = aad_bytes(&[b"dcwot-req-v1", &pw.sender_id, &piv]);
        let ciphertext = aead_seal(&pw.sender_key, &nonce, &aad, &plaintext);
        counters.aead_ops += 1;

        let mut outer = outer_message(m, &parts, ciphertext);
        outer.add_option(
            OptionNumber::Oscore,
            oscore_option_value(&piv, &pw.sender_id),
        );
        let binding = RequestBinding {
            kid: pw.sender_id.clone(),
            partial_iv: piv,
            nonce,
            request_hash: None,
        };
        Ok((outer, binding))
    }

    /// Standard-mode request unprotection with replay checking.
    pub fn unprotect_request(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<(Message, RequestBinding), SecurityError> {
        if self.mode == SecurityMode::DeterministicGroup {
            return self.deterministic_unprotect_request(m, counters);
        }
        let option = m
            .first_option(OptionNumber::Oscore)
            .ok_or(SecurityError::NotProtected)?;
        let (piv, kid) = parse_oscore_option(option)?;
        {
            let pw = self.pairwise()?;
            if kid != pw.recipient_id {
                return Err(SecurityError::WrongSender);
            }
        }
        let sequence = sequence_from_piv(&piv);
        self.pairwise
            .as_mut()
            .expect("checked above")
            .replay
            .check(sequence, &m.payload)?;

        let pw = self.pairwise()?;
        let nonce = compute_nonce(&pw.common_iv, &kid, &piv);
        let aad = aad_bytes(&[b"dcwot-req-v1", &kid, &piv]);
        let plaintext = aead_open(&pw.recipient_key, &nonce, &aad, &m.payload)
            .ok_or(SecurityError::IntegrityFailure)?;
        counters.aead_ops += 1;

        let request = reassemble(m, &plaintext)?;
        let binding = RequestBinding {
            kid,
            partial_iv: piv,
            nonce,
            request_hash: None,
        };
        Ok((request, binding))
    }

    /// Deterministic request protection: the request key is derived by
    /// hashing the plaintext and context data, the full hash travels in the
    /// Request-Hash option, and identical plaintext from any member gives
    /// byte-identical output. Costs exactly three MAC invocations.
    pub fn deterministic_protect_request(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<(Message, RequestBinding), SecurityError> {
        if !m.code.is_safe_method() {
            return Err(SecurityError::NonSafeMethod(m.code));
        }
        let group = self.group()?;
        let (inner, parts) = split_for_protection(m)?;
        let plaintext = encode_message(&inner).expect("inner message is well-formed");

        let hash = hmac(
            &group.deterministic_client_secret,
            &[b"det-request-hash", &group.group_id, b"ccm-16-64-128", &plaintext],
        );
        let prk = hmac(&group.kdf_salt, &[&hash]);
        let key = truncate16(hmac(&prk, &[b"det-request-key"]));
        counters.hmac_ops += 3;

        let nonce = truncate13(hash);
        let aad = aad_bytes(&[b"dcwot-det-req-v1", &group.group_id, &hash]);
        let ciphertext = aead_seal(&key, &nonce, &aad, &plaintext);
        counters.aead_ops += 1;

        let mut outer = outer_message(m, &parts, ciphertext);
        outer.add_option(
            OptionNumber::Oscore,
            oscore_option_value(&[], DETERMINISTIC_CLIENT_ID),
        );
        outer.add_option(OptionNumber::RequestHash, hash.to_vec());
        let binding = RequestBinding {
            kid: DETERMINISTIC_CLIENT_ID.to_vec(),
            partial_iv: Vec::new(),
            nonce,
            request_hash: Some(hash),
        };
        Ok((outer, binding))
    }

    /// Server-side deterministic unprotection: derive the key from the
    /// carried hash, decrypt, then verify the hash against the plaintext.
    /// Replay protection is bypassed by design; only safe methods pass.
    pub fn deterministic_unprotect_request(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<(Message, RequestBinding), SecurityError> {
        let group = self.group()?;
        let option = m
            .first_option(OptionNumber::Oscore)
            .ok_or(SecurityError::NotProtected)?;
        let (_piv, kid) = parse_oscore_option(option)?;
        if kid != DETERMINISTIC_CLIENT_ID {
            return Err(SecurityError::WrongSender);
        }
        let hash: [u8; REQUEST_HASH_LEN] = m
            .first_option(OptionNumber::RequestHash)
            .ok_or(SecurityError::MissingRequestHash)?
            .try_into()
            .map_err(|_| SecurityError::MissingRequestHash)?;

        let prk = hmac(&group.kdf_salt, &[&hash]);
        let key = truncate16(hmac(&prk, &[b"det-request-key"]));
        counters.hmac_ops += 2;

        let nonce = truncate13(hash);
        let aad = aad_bytes(&[b"dcwot-det-req-v1", &group.group_id, &hash]);
        let plaintext = aead_open(&key, &nonce, &aad, &m.payload)
            .ok_or(SecurityError::IntegrityFailure)?;
        counters.aead_ops += 1;

        let recomputed = hmac(
            &group.deterministic_client_secret,
            &[b"det-request-hash", &group.group_id, b"ccm-16-64-128", &plaintext],
        );
        counters.hmac_ops += 1;
        if recomputed != hash {
            return Err(SecurityError::RequestHashMismatch);
        }

        let request = reassemble(m, &plaintext)?;
        if !request.code.is_safe_method() {
            return Err(SecurityError::NonSafeMethod(request.code));
        }
        let binding = RequestBinding {
            kid,
            partial_iv: Vec::new(),
            nonce,
            request_hash: Some(hash),
        };
        Ok((request, binding))
    }

    /// Protects a response. Standard mode binds it to the exact request by
    /// reusing the request nonce; deterministic mode binds it to the request
    /// hash so the response is usable by any member holding that hash.
    pub fn protect_response(
        &mut self,
        binding: &RequestBinding,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<Message, SecurityError> {
        let mut inner = Message::new(m.code);
        inner.payload = m.payload.clone();
        let plaintext = encode_message(&inner).expect("inner message is well-formed");
        let ciphertext = match self.mode {
            SecurityMode::Standard => {
                let pw = self.pairwise()?;
                let aad = aad_bytes(&[b"dcwot-rsp-v1", &binding.kid, &binding.partial_iv]);
                aead_seal(&pw.sender_key, &binding.nonce, &aad, &plaintext)
            }
            SecurityMode::DeterministicGroup => {
                let group = self.group()?;
                let hash = binding.request_hash.ok_or(SecurityError::MissingRequestHash)?;
                let nonce: [u8; NONCE_LEN] = hash[13..13 + NONCE_LEN].try_into().expect("length");
                let aad = aad_bytes(&[b"dcwot-det-rsp-v1", &group.group_id, &hash]);
                aead_seal(&group.response_key, &nonce, &aad, &plaintext)
            }
        };
        counters.aead_ops += 1;

        let mut outer = Message::new(m.code);
        outer.msg_type = m.msg_type;
        outer.message_id = m.message_id;
        outer.token = m.token.clone();
        outer.add_option(OptionNumber::Oscore, oscore_option_value(&[], &[]));
        outer.payload = ciphertext;
        Ok(outer)
    }

    /// Unprotects a response against the binding of the request awaiting it.
    pub fn unprotect_response(
        &mut self,
        binding: &RequestBinding,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<Message, SecurityError> {
        if !m.has_option(OptionNumber::Oscore) {
            return Err(SecurityError::NotProtected);
        }
        let plaintext = match self.mode {
            SecurityMode::Standard => {
                let pw = self.pairwise()?;
                let aad = aad_bytes(&[b"dcwot-rsp-v1", &binding.kid, &binding.partial_iv]);
                aead_open(&pw.recipient_key, &binding.nonce, &aad, &m.payload)
            }
            SecurityMode::DeterministicGroup => {
                let group = self.group()?;
                let hash = binding.request_hash.ok_or(SecurityError::MissingRequestHash)?;
                let nonce: [u8; NONCE_LEN] = hash[13..13 + NONCE_LEN].try_into().expect("length");
                let aad = aad_bytes(&[b"dcwot-det-rsp-v1", &group.group_id, &hash]);
                aead_open(&group.response_key, &nonce, &aad, &m.payload)
            }
        }
        .ok_or(SecurityError::IntegrityFailure)?;
        counters.aead_ops += 1;

        let inner = decode_message(&plaintext).map_err(|_| SecurityError::MalformedInner)?;
        let mut out = Message::new(inner.code);
        out.msg_type = m.msg_type;
        out.message_id = m.message_id;
        out.token = m.token.clone();
        out.payload = inner.payload;
        Ok(out)
    }

    /// Appends an Ed25519 signature over the response ciphertext inside the
    /// payload. Deterministic-group servers only.
    pub fn sign_response(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<Message, SecurityError> {
        let group = self.group()?;
        let signer = group.signing_key.as_ref().ok_or(SecurityError::WrongMode)?;
        let msg = sig_message(&group.group_id, &m.payload);
        let sig = signer.sign(&msg);
        counters.sign_ops += 1;
        let mut signed = m.clone();
        signed.payload.extend_from_slice(&sig.to_bytes());
        Ok(signed)
    }

    /// Verifies and strips the payload signature; returns the message with
    /// the bare ciphertext payload.
    pub fn verify_response(
        &mut self,
        m: &Message,
        counters: &mut CryptoCounters,
    ) -> Result<Message, SecurityError> {
        let group = self.group()?;
        if m.payload.len() < SIGNATURE_LEN {
            return Err(SecurityError::SignatureInvalid);
        }
        let (ciphertext, sig_bytes) = m.payload.split_at(m.payload.len() - SIGNATURE_LEN);
        let sig = Signature::from_slice(sig_bytes).map_err(|_| SecurityError::SignatureInvalid)?;
        let msg = sig_message(&group.group_id, ciphertext);
        counters.verify_ops += 1;
        group
            .verifying_key
            .verify(&msg, &sig)
            .map_err(|_| SecurityError::SignatureInvalid)?;
        let mut out = m.clone();
        out.payload = ciphertext.to_vec();
        Ok(out)
    }
}

fn sig_message(group_id: &[u8], ciphertext: &[u8]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(16 + group_id.len() + ciphertext.len());
    msg.extend_from_slice(b"dcwot-rsp-sig-v1");
    msg.extend_from_slice(&(group_id.len() as u32).to_be_bytes());
    msg.extend_from_slice(group_id);
    msg.extend_from_slice(ciphertext);
    msg
}

/// Length-prefixed concatenation used as AEAD associated data.
fn aad_bytes(parts: &[&[u8]]) -> Vec<u8> {
    let mut aad = Vec::new();
    for part in parts {
        aad.extend_from_slice(&(part.len() as u32).to_be_bytes());
        aad.extend_from_slice(part);
    }
    aad
}

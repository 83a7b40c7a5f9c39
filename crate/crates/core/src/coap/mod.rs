//! CoAP message model shared by proxies, clients and servers.
//!
//! The model covers the subset of RFC 7252 needed for hop-wise forward
//! proxying of protected requests: a small fixed option registry, tokens of
//! up to eight bytes, and an ordered option list. Messages are plain values;
//! every operation on them is a pure function.

mod cache_key;
mod codec;
mod uri;

pub use cache_key::{compute_cache_key, CacheKey};
pub use codec::{decode_message, encode_message, DecodeError, EncodeError};
pub use uri::{compose_request, split_proxy_uri, ProxyUriParts, UriError};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Request and response codes, stored as CoAP `class.detail` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Code {
    Get,
    Post,
    Put,
    Patch,
    Delete,
    /// 2.04 Changed
    Changed,
    /// 2.05 Content
    Content,
    /// 4.00 Bad Request
    BadRequest,
    /// 4.04 Not Found
    NotFound,
    /// 5.00 Internal Server Error
    InternalServerError,
    /// 5.02 Bad Gateway
    BadGateway,
    /// 5.04 Gateway Timeout
    GatewayTimeout,
}

impl Code {
    pub fn is_request(self) -> bool {
        matches!(
            self,
            Code::Get | Code::Post | Code::Put | Code::Patch | Code::Delete
        )
    }

    pub fn is_response(self) -> bool {
        !self.is_request()
    }

    pub fn is_success(self) -> bool {
        matches!(self, Code::Changed | Code::Content)
    }

    /// Safe methods may be cached, aggregated and fanned out to several
    /// next-hops; the rest must take a single path.
    pub fn is_safe_method(self) -> bool {
        matches!(self, Code::Get)
    }

    pub fn to_byte(self) -> u8 {
        let (class, detail) = match self {
            Code::Get => (0, 1),
            Code::Post => (0, 2),
            Code::Put => (0, 3),
            Code::Patch => (0, 7),
            Code::Delete => (0, 4),
            Code::Changed => (2, 4),
            Code::Content => (2, 5),
            Code::BadRequest => (4, 0),
            Code::NotFound => (4, 4),
            Code::InternalServerError => (5, 0),
            Code::BadGateway => (5, 2),
            Code::GatewayTimeout => (5, 4),
        };
        (class << 5) | detail
    }

    pub fn from_byte(b: u8) -> Option<Code> {
        let code = match (b >> 5, b & 0x1f) {
            (0, 1) => Code::Get,
            (0, 2) => Code::Post,
            (0, 3) => Code::Put,
            (0, 7) => Code::Patch,
            (0, 4) => Code::Delete,
            (2, 4) => Code::Changed,
            (2, 5) => Code::Content,
            (4, 0) => Code::BadRequest,
            (4, 4) => Code::NotFound,
            (5, 0) => Code::InternalServerError,
            (5, 2) => Code::BadGateway,
            (5, 4) => Code::GatewayTimeout,
            _ => return None,
        };
        Some(code)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.to_byte();
        write!(f, "{}.{:02}", b >> 5, b & 0x1f)
    }
}

/// CoAP message types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MsgType {
    Con,
    Non,
    Ack,
    Rst,
}

impl MsgType {
    pub fn to_bits(self) -> u8 {
        match self {
            MsgType::Con => 0,
            MsgType::Non => 1,
            MsgType::Ack => 2,
            MsgType::Rst => 3,
        }
    }

    pub fn from_bits(b: u8) -> MsgType {
        match b & 0x3 {
            0 => MsgType::Con,
            1 => MsgType::Non,
            2 => MsgType::Ack,
            _ => MsgType::Rst,
        }
    }
}

/// The supported option registry.
///
/// The numbers follow RFC 7252 / RFC 8613 where an assignment exists;
/// `RequestHash` uses an even (elective, safe-to-forward) number from the
/// experimental range and is part of the cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptionNumber {
    UriHost,
    Oscore,
    UriPath,
    UriQuery,
    ProxyUri,
    RequestHash,
}

impl OptionNumber {
    pub const ALL: [OptionNumber; 6] = [
        OptionNumber::UriHost,
        OptionNumber::Oscore,
        OptionNumber::UriPath,
        OptionNumber::UriQuery,
        OptionNumber::ProxyUri,
        OptionNumber::RequestHash,
    ];

    pub fn number(self) -> u16 {
        match self {
            OptionNumber::UriHost => 3,
            OptionNumber::Oscore => 9,
            OptionNumber::UriPath => 11,
            OptionNumber::UriQuery => 15,
            OptionNumber::ProxyUri => 35,
            OptionNumber::RequestHash => 65000,
        }
    }

    pub fn from_number(n: u16) -> Option<OptionNumber> {
        OptionNumber::ALL.iter().copied().find(|o| o.number() == n)
    }

    /// Critical options must be understood by the receiver (odd numbers).
    pub fn is_critical(n: u16) -> bool {
        n & 1 == 1
    }

    /// Only Uri-Path and Uri-Query may repeat.
    pub fn repeatable(self) -> bool {
        matches!(self, OptionNumber::UriPath | OptionNumber::UriQuery)
    }
}

/// One option instance: registry number plus opaque value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptionEntry {
    pub number: OptionNumber,
    pub value: Vec<u8>,
}

/// Message token, at most eight bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token(Vec<u8>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("token length {0} exceeds 8 bytes")]
pub struct TokenTooLong(pub usize);

impl Token {
    pub const MAX_LEN: usize = 8;

    pub fn new(bytes: &[u8]) -> Result<Token, TokenTooLong> {
        if bytes.len() > Token::MAX_LEN {
            return Err(TokenTooLong(bytes.len()));
        }
        Ok(Token(bytes.to_vec()))
    }

    pub fn empty() -> Token {
        Token(Vec::new())
    }

    /// Minimal big-endian encoding of a counter value; used for hop-local
    /// upstream tokens.
    pub fn from_counter(v: u64) -> Token {
        let bytes = v.to_be_bytes();
        let first = bytes.iter().position(|&b| b != 0).unwrap_or(7);
        Token(bytes[first..].to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl TryFrom<&[u8]> for Token {
    type Error = TokenTooLong;

    fn try_from(bytes: &[u8]) -> Result<Token, TokenTooLong> {
        Token::new(bytes)
    }
}

/// A CoAP message.
///
/// Options are kept sorted by option number; within one number values keep
/// insertion order, which matters for repeated Uri-Path segments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub code: Code,
    pub msg_type: MsgType,
    pub message_id: u16,
    pub token: Token,
    options: Vec<OptionEntry>,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(code: Code) -> Message {
        Message {
            code,
            msg_type: MsgType::Con,
            message_id: 0,
            token: Token::empty(),
            options: Vec::new(),
            payload: Vec::new(),
        }
    }

    pub fn request(code: Code) -> Message {
        debug_assert!(code.is_request());
        Message::new(code)
    }

    pub fn response(code: Code) -> Message {
        debug_assert!(code.is_response());
        let mut m = Message::new(code);
        m.msg_type = MsgType::Non;
        m
    }

    pub fn is_request(&self) -> bool {
        self.code.is_request()
    }

    /// Inserts an option, keeping the list sorted by number. Non-repeatable
    /// options replace an existing instance.
    pub fn add_option(&mut self, number: OptionNumber, value: Vec<u8>) {
        debug_assert!(
            !(self.code.is_response() && number == OptionNumber::ProxyUri),
            "responses never carry Proxy-Uri"
        );
        if !number.repeatable() {
            self.options.retain(|o| o.number != number);
        }
        let idx = self
            .options
            .iter()
            .position(|o| o.number.number() > number.number())
            .unwrap_or(self.options.len());
        self.options.insert(idx, OptionEntry { number, value });
    }

    pub fn with_option(mut self, number: OptionNumber, value: Vec<u8>) -> Message {
        self.add_option(number, value);
        self
    }

    pub fn remove_options(&mut self, number: OptionNumber) {
        self.options.retain(|o| o.number != number);
    }

    pub fn options(&self) -> &[OptionEntry] {
        &self.options
    }

    pub fn option_values(&self, number: OptionNumber) -> impl Iterator<Item = &[u8]> {
        self.options
            .iter()
            .filter(move |o| o.number == number)
            .map(|o| o.value.as_slice())
    }

    pub fn first_option(&self, number: OptionNumber) -> Option<&[u8]> {
        self.option_values(number).next()
    }

    pub fn has_option(&self, number: OptionNumber) -> bool {
        self.first_option(number).is_some()
    }

    /// Replaces token and message id; everything else is kept. Used when a
    /// hop re-addresses a message for the next hop or a recorded client.
    pub fn retokened(&self, token: Token, message_id: u16) -> Message {
        let mut m = self.clone();
        m.token = token;
        m.message_id = message_id;
        m
    }
}

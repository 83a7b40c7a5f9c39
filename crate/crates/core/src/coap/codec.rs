//! Binary message framing.
//!
//! The layout follows RFC 7252: a 4-byte header, the token, delta-encoded
//! options in ascending number order and an optional `0xFF`-marked payload.
//! Encoding is deterministic, so structurally equal messages always produce
//! identical bytes; this is what makes deterministic request protection and
//! byte-level link accounting meaningful.
//!
//! ```text
//!  0                   1                   2                   3
//!  0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |Ver| T |  TKL  |      Code     |          Message ID           |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |   Token (TKL bytes) ...
//! +-+-+-+-+-+-+-+-+   Options (delta encoded) ...  |1 1 1 1 1 1 1 1|
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |   Payload ...
//! ```

use super::{Code, Message, MsgType, OptionNumber, Token};

pub const VERSION: u8 = 1;
const PAYLOAD_MARKER: u8 = 0xff;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("options not sorted ascending at index {0}")]
    UnsortedOptions(usize),
    #[error("option value length {0} exceeds the encodable maximum")]
    OptionTooLong(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("truncated frame at offset {offset}: {context}")]
    Truncated { offset: usize, context: &'static str },
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown code 0x{0:02x}")]
    UnknownCode(u8),
    #[error("token length {0} exceeds 8")]
    BadTokenLength(u8),
    #[error("reserved option nibble 15 at offset {0}")]
    ReservedOptionNibble(usize),
    #[error("unknown {} option {number} at offset {offset}", if *.critical { "critical" } else { "elective" })]
    UnknownOption {
        number: u16,
        critical: bool,
        offset: usize,
    },
    #[error("zero-length payload after marker at offset {0}")]
    EmptyPayload(usize),
}

fn nibble_parts(value: u32) -> (u8, Vec<u8>) {
    if value < 13 {
        (value as u8, Vec::new())
    } else if value < 269 {
        (13, vec![(value - 13) as u8])
    } else {
        let ext = (value - 269) as u16;
        (14, ext.to_be_bytes().to_vec())
    }
}

/// Serializes a message into its wire frame.
pub fn encode_message(m: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::with_capacity(16 + m.payload.len());
    out.push((VERSION << 6) | (m.msg_type.to_bits() << 4) | m.token.len() as u8);
    out.push(m.code.to_byte());
    out.extend_from_slice(&m.message_id.to_be_bytes());
    out.extend_from_slice(m.token.as_bytes());

    let mut previous: u32 = 0;
    for (idx, opt) in m.options().iter().enumerate() {
        let number = opt.number.number() as u32;
        if number < previous {
            return Err(EncodeError::UnsortedOptions(idx));
        }
        if opt.value.len() > 269 + u16::MAX as usize {
            return Err(EncodeError::OptionTooLong(opt.value.len()));
        }
        let (delta_nibble, delta_ext) = nibble_parts(number - previous);
        let (len_nibble, len_ext) = nibble_parts(opt.value.len() as u32);
        out.push((delta_nibble << 4) | len_nibble);
        out.extend_from_slice(&delta_ext);
        out.extend_from_slice(&len_ext);
        out.extend_from_slice(&opt.value);
        previous = number;
    }

    if !m.payload.is_empty() {
        out.push(PAYLOAD_MARKER);
        out.extend_from_slice(&m.payload);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], DecodeError> {
        if self.pos + n > self.bytes.len() {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                context,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn byte(&mut self, context: &'static str) -> Result<u8, DecodeError> {
        Ok(self.take(1, context)?[0])
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn read_extended(r: &mut Reader<'_>, nibble: u8, offset: usize) -> Result<u32, DecodeError> {
    match nibble {
        0..=12 => Ok(nibble as u32),
        13 => Ok(r.byte("option extension")? as u32 + 13),
        14 => {
            let ext = r.take(2, "option extension")?;
            Ok(u16::from_be_bytes([ext[0], ext[1]]) as u32 + 269)
        }
        _ => Err(DecodeError::ReservedOptionNibble(offset)),
    }
}

/// Parses a wire frame back into a message; inverse of [`encode_message`]
/// on its image.
pub fn decode_message(bytes: &[u8]) -> Result<Message, DecodeError> {
    let mut r = Reader { bytes, pos: 0 };
    let first = r.byte("header")?;
    let version = first >> 6;
    if version != VERSION {
        return Err(DecodeError::BadVersion(version));
    }
    let msg_type = MsgType::from_bits((first >> 4) & 0x3);
    let token_len = first & 0x0f;
    if token_len > 8 {
        return Err(DecodeError::BadTokenLength(token_len));
    }
    let code_byte = r.byte("header")?;
    let code = Code::from_byte(code_byte).ok_or(DecodeError::UnknownCode(code_byte))?;
    let mid = r.take(2, "header")?;
    let message_id = u16::from_be_bytes([mid[0], mid[1]]);
    let token = Token::new(r.take(token_len as usize, "token")?).expect("checked above");

    let mut message = Message {
        code,
        msg_type,
        message_id,
        token,
        payload: Vec::new(),
        ..Message::new(code)
    };

    let mut number: u32 = 0;
    while r.remaining() > 0 {
        let offset = r.pos;
        let b = r.byte("option header")?;
        if b == PAYLOAD_MARKER {
            if r.remaining() == 0 {
                return Err(DecodeError::EmptyPayload(offset));
            }
            message.payload = r.take(r.remaining(), "payload")?.to_vec();
            break;
        }
        let delta = read_extended(&mut r, b >> 4, offset)?;
        let len = read_extended(&mut r, b & 0x0f, offset)?;
        number += delta;
        let value = r.take(len as usize, "option value")?.to_vec();
        let opt_number = u16::try_from(number).ok().and_then(OptionNumber::from_number);
        match opt_number {
            Some(n) => message.add_option(n, value),
            None => {
                return Err(DecodeError::UnknownOption {
                    number: number.min(u16::MAX as u32) as u16,
                    critical: number & 1 == 1,
                    offset,
                })
            }
        }
    }
    Ok(message)
}

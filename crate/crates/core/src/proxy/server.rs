//! Origin-server resource handling.

use std::collections::BTreeMap;

use crate::coap::{split_proxy_uri, Code, Message};

/// What the origin serves.
#[derive(Debug, Clone)]
pub enum ServerResources {
    /// Exact path?query string to payload.
    Static(BTreeMap<String, Vec<u8>>),
    /// The periodic-instruction resource: `/instruction?t=x` is valid for
    /// any non-negative offset x and serves a deterministic payload derived
    /// from x. The server refreshes the instruction once per period, and
    /// content for a given offset never changes afterwards.
    InstructionTemplate { payload_len: usize },
}

impl ServerResources {
    pub fn instruction_payload(offset: u64, payload_len: usize) -> Vec<u8> {
        let mut payload = format!("cmd:{offset:08}").into_bytes();
        payload.resize(payload_len.max(4), b'.');
        payload
    }

    fn lookup(&self, path: &[String], query: &[String]) -> Option<Vec<u8>> {
        match self {
            ServerResources::Static(map) => {
                let mut key = String::new();
                for seg in path {
                    key.push('/');
                    key.push_str(seg);
                }
                if !query.is_empty() {
                    key.push('?');
                    key.push_str(&query.join("&"));
                }
                map.get(&key).cloned()
            }
            ServerResources::InstructionTemplate { payload_len } => {
                if path.len() != 1 || path[0] != "instruction" || query.len() != 1 {
                    return None;
                }
                let offset = query[0].strip_prefix("t=")?.parse::<u64>().ok()?;
                Some(ServerResources::instruction_payload(offset, *payload_len))
            }
        }
    }
}

/// Serves a request against the resource set: 2.05 with the payload on an
/// exact path+query match, 4.04 otherwise. The response keeps the request
/// token; the origin is deterministic, so repeated identical requests give
/// byte-identical responses.
pub fn serve_origin(req: &Message, resources: &ServerResources) -> Message {
    debug_assert!(req.is_request());
    let parts = match split_proxy_uri(req) {
        Ok(parts) => parts,
        Err(_) => {
            let mut resp = Message::response(Code::BadRequest);
            resp.token = req.token.clone();
            return resp;
        }
    };
    let mut resp = match (req.code == Code::Get, resources.lookup(&parts.path, &parts.query)) {
        (true, Some(payload)) => {
            let mut r = Message::response(Code::Content);
            r.payload = payload;
            r
        }
        _ => Message::response(Code::NotFound),
    };
    resp.token = req.token.clone();
    resp
}

//! Proxy-Uri composition and splitting.
//!
//! A request URI can travel either as a single Proxy-Uri option
//! (`coap://host/path?query`) or as individual Uri-Host/Uri-Path/Uri-Query
//! options. Both encodings map onto the same [`ProxyUriParts`] value; the
//! `send_host` flag of a FIB entry decides which encoding the next hop
//! receives, and the host form is dropped on the final hop.

use super::{Message, OptionNumber};

/// Decomposed request URI. The host component names a lookup key rather
/// than a network address; any locally defined resolution system may be
/// behind it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ProxyUriParts {
    pub scheme: Option<String>,
    pub host: Option<String>,
    pub path: Vec<String>,
    pub query: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UriError {
    #[error("both Proxy-Uri and individual URI options present")]
    AmbiguousEncoding,
    #[error("option value is not valid UTF-8")]
    NotUtf8,
    #[error("malformed Proxy-Uri: {0}")]
    Malformed(String),
}

impl ProxyUriParts {
    pub fn new(host: &str, path: &[&str], query: &[&str]) -> ProxyUriParts {
        ProxyUriParts {
            scheme: Some("coap".to_string()),
            host: Some(host.to_string()),
            path: path.iter().map(|s| s.to_string()).collect(),
            query: query.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.scheme.is_none() && self.host.is_none() && self.path.is_empty() && self.query.is_empty()
    }

    /// Renders the `scheme://host/path?query` form.
    pub fn to_uri_string(&self) -> String {
        let mut s = String::new();
        if let (Some(scheme), Some(host)) = (&self.scheme, &self.host) {
            s.push_str(scheme);
            s.push_str("://");
            s.push_str(host);
        }
        for seg in &self.path {
            s.push('/');
            s.push_str(seg);
        }
        if !self.query.is_empty() {
            s.push('?');
            s.push_str(&self.query.join("&"));
        }
        s
    }

    pub fn parse_uri(uri: &str) -> Result<ProxyUriParts, UriError> {
        let (scheme, rest) = uri
            .split_once("://")
            .ok_or_else(|| UriError::Malformed(format!("missing scheme in {uri:?}")))?;
        if scheme.is_empty() {
            return Err(UriError::Malformed("empty scheme".into()));
        }
        let (authority_and_path, query) = match rest.split_once('?') {
            Some((a, q)) => (a, Some(q)),
            None => (rest, None),
        };
        let mut segments = authority_and_path.split('/');
        let host = segments.next().unwrap_or_default();
        if host.is_empty() {
            return Err(UriError::Malformed(format!("missing host in {uri:?}")));
        }
        Ok(ProxyUriParts {
            scheme: Some(scheme.to_string()),
            host: Some(host.to_string()),
            path: segments.filter(|s| !s.is_empty()).map(str::to_string).collect(),
            query: query
                .map(|q| q.split('&').filter(|s| !s.is_empty()).map(str::to_string).collect())
                .unwrap_or_default(),
        })
    }
}

fn utf8(bytes: &[u8]) -> Result<String, UriError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| UriError::NotUtf8)
}

/// Extracts the unified URI parts from a request, whichever encoding it
/// carries. A request with neither encoding yields empty parts.
pub fn split_proxy_uri(m: &Message) -> Result<ProxyUriParts, UriError> {
    let has_proxy_uri = m.has_option(OptionNumber::ProxyUri);
    let has_individual = m.has_option(OptionNumber::UriHost)
        || m.has_option(OptionNumber::UriPath)
        || m.has_option(OptionNumber::UriQuery);
    if has_proxy_uri && has_individual {
        return Err(UriError::AmbiguousEncoding);
    }
    if let Some(value) = m.first_option(OptionNumber::ProxyUri) {
        return ProxyUriParts::parse_uri(&utf8(value)?);
    }
    let mut parts = ProxyUriParts::default();
    if let Some(host) = m.first_option(OptionNumber::UriHost) {
        parts.host = Some(utf8(host)?);
    }
    for seg in m.option_values(OptionNumber::UriPath) {
        parts.path.push(utf8(seg)?);
    }
    for q in m.option_values(OptionNumber::UriQuery) {
        parts.query.push(utf8(q)?);
    }
    Ok(parts)
}

/// Rebuilds the URI options of `base` from `parts`.
///
/// With `send_host` set (and a host available) the full Proxy-Uri option is
/// emitted; otherwise scheme and host are discarded and the compact
/// Uri-Path/Uri-Query options are used, as on the final hop.
pub fn compose_request(parts: &ProxyUriParts, send_host: bool, base: &Message) -> Message {
    let mut m = base.clone();
    m.remove_options(OptionNumber::ProxyUri);
    m.remove_options(OptionNumber::UriHost);
    m.remove_options(OptionNumber::UriPath);
    m.remove_options(OptionNumber::UriQuery);
    if send_host && parts.host.is_some() {
        m.add_option(OptionNumber::ProxyUri, parts.to_uri_string().into_bytes());
    } else {
        for seg in &parts.path {
            m.add_option(OptionNumber::UriPath, seg.clone().into_bytes());
        }
        for q in &parts.query {
            m.add_option(OptionNumber::UriQuery, q.clone().into_bytes());
        }
    }
    m
}

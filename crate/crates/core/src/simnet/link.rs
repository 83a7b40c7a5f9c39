//! Lossy link model with MAC-layer retransmissions.
//!
//! Each directed link carries one frame at a time. A frame larger than the
//! maximum frame size is sent as multiple fragments, each doing its own
//! attempt sequence: up to `1 + mac_retries` transmissions, every attempt an
//! independent Bernoulli draw. A missing acknowledgment (the ACK path is
//! just as lossy) burns attempts without preventing delivery — the receiver
//! deduplicates — so the per-fragment delivery probability is
//! `1 - loss^(1 + mac_retries)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::simnet::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    /// Per-attempt frame loss probability.
    pub loss: f64,
    pub latency_us: u64,
    pub bitrate_bps: u64,
    /// Frames above this size are fragmented and each fragment is counted
    /// individually.
    pub max_frame_bytes: usize,
    pub mac_retries: u8,
    /// Backoff before the 1st, 2nd, ... retry.
    pub backoff_us: Vec<u64>,
}

impl Default for LinkModel {
    fn default() -> LinkModel {
        LinkModel {
            loss: 0.0,
            latency_us: 1_000,
            bitrate_bps: 250_000,
            max_frame_bytes: 127,
            mac_retries: 3,
            backoff_us: vec![4_000, 8_000, 16_000],
        }
    }
}

/// Scripted per-attempt outcomes for reproducible loss patterns: `true`
/// means the attempt crosses. Once the script is exhausted every attempt
/// succeeds. Scripted links model the ACK path as lossless so one script
/// bit maps to exactly one crossing decision.
#[derive(Debug, Clone, Default)]
pub struct LossScript {
    outcomes: Vec<bool>,
    cursor: usize,
}

impl LossScript {
    pub fn new(outcomes: Vec<bool>) -> LossScript {
        LossScript { outcomes, cursor: 0 }
    }

    fn next(&mut self) -> bool {
        let out = self.outcomes.get(self.cursor).copied().unwrap_or(true);
        self.cursor += 1;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryOutcome {
    pub delivered: bool,
    /// Arrival time of the last fragment's first successful crossing plus
    /// link latency; meaningless unless delivered.
    pub delivery_time: SimTime,
    /// Attempts spent per fragment, each between 1 and 1 + mac_retries.
    pub attempts: Vec<u8>,
    pub fragments: u32,
    /// The sender occupies the link until this time.
    pub busy_until: SimTime,
}

/// Mutable per-directed-link state: the medium occupancy cursor plus the
/// loss source (seeded RNG or explicit script).
#[derive(Debug)]
pub struct LinkState {
    pub model: LinkModel,
    free_at: SimTime,
    rng: ChaCha8Rng,
    script: Option<LossScript>,
}

impl LinkState {
    pub fn new(model: LinkModel, rng: ChaCha8Rng) -> LinkState {
        LinkState {
            model,
            free_at: SimTime::ZERO,
            rng,
            script: None,
        }
    }

    pub fn with_script(model: LinkModel, rng: ChaCha8Rng, script: LossScript) -> LinkState {
        LinkState {
            model,
            free_at: SimTime::ZERO,
            rng,
            script: Some(script),
        }
    }

    pub fn set_script(&mut self, script: LossScript) {
        self.script = Some(script);
    }

    fn crossing(&mut self) -> bool {
        match &mut self.script {
            Some(script) => script.next(),
            None => self.rng.gen::<f64>() >= self.model.loss,
        }
    }

    fn ack_ok(&mut self) -> bool {
        match &self.script {
            Some(_) => true,
            None => self.rng.gen::<f64>() >= self.model.loss,
        }
    }

    fn tx_time_us(&self, bytes: usize) -> u64 {
        (bytes as u64 * 8 * 1_000_000) / self.model.bitrate_bps
    }

    /// Puts a frame of `frame_len` bytes on the link at `now` (or when the
    /// link frees up, whichever is later).
    pub fn transmit(&mut self, now: SimTime, frame_len: usize) -> DeliveryOutcome {
        let max_attempts = 1 + self.model.mac_retries as u32;
        let mut cursor = self.free_at.max(now);
        let mut attempts = Vec::new();
        let mut last_crossing = SimTime::ZERO;
        let mut delivered = true;

        let fragments: Vec<usize> = if frame_len == 0 {
            vec![0]
        } else {
            let full = frame_len / self.model.max_frame_bytes;
            let rest = frame_len % self.model.max_frame_bytes;
            let mut v = vec![self.model.max_frame_bytes; full];
            if rest > 0 {
                v.push(rest);
            }
            v
        };

        for &frag_len in &fragments {
            let tx = self.tx_time_us(frag_len.max(1));
            let mut frag_attempts = 0u8;
            let mut crossed_at = None;
            loop {
                frag_attempts += 1;
                cursor = cursor.plus_us(tx);
                let crossed = self.crossing();
                if crossed && crossed_at.is_none() {
                    crossed_at = Some(cursor);
                }
                let acked = crossed && self.ack_ok();
                if acked || frag_attempts as u32 == max_attempts {
                    break;
                }
                let backoff = self
                    .model
                    .backoff_us
                    .get((frag_attempts - 1) as usize)
                    .or(self.model.backoff_us.last())
                    .copied()
                    .unwrap_or(0);
                cursor = cursor.plus_us(backoff);
            }
            attempts.push(frag_attempts);
            match crossed_at {
                Some(t) => last_crossing = last_crossing.max(t),
                None => {
                    delivered = false;
                    break; // MAC gives up on the whole frame
                }
            }
        }

        self.free_at = cursor;
        DeliveryOutcome {
            delivered,
            delivery_time: last_crossing.plus_us(self.model.latency_us),
            fragments: attempts.len() as u32,
            attempts,
            busy_until: cursor,
        }
    }
}

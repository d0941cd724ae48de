//! Open-loop offered load.

use std::hash::{DefaultHasher, Hasher};

use serde::{Deserialize, Serialize};

/// Bytes at the start of every SDU payload that carry its id.
pub const ID_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateStep {
    pub t_s: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficProfile {
    Cbr {
        rate_bps: f64,
    },
    /// `start_bps + step_bps * floor(t / period_s)`, optionally capped.
    Ramp {
        start_bps: f64,
        step_bps: f64,
        period_s: f64,
        #[serde(default)]
        max_bps: Option<f64>,
    },
    /// Piecewise constant; zero before the first step.
    Schedule {
        steps: Vec<RateStep>,
    },
}

impl TrafficProfile {
    pub fn rate_at_ms(&self, t_ms: u64) -> f64 {
        let t_s = t_ms as f64 / 1000.0;
        match self {
            TrafficProfile::Cbr { rate_bps } => *rate_bps,
            TrafficProfile::Ramp { start_bps, step_bps, period_s, max_bps } => {
                // Integer step count so boundaries land exactly on whole milliseconds.
                let period_ms = (period_s * 1000.0).round() as u64;
                let r = start_bps + step_bps * (t_ms / period_ms) as f64;
                max_bps.map_or(r, |m| r.min(m))
            }
            TrafficProfile::Schedule { steps } => steps.iter().take_while(|s| s.t_s <= t_s + 1e-9).last().map_or(0.0, |s| s.rate_bps),
        }
    }
}

/// An upper-layer packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sdu {
    pub id: u64,
    pub payload: Vec<u8>,
    pub created_at_ns: u64,
}

impl Sdu {
    /// Payload: big-endian id followed by bytes derived from the id.
    pub fn new(id: u64, size: usize, created_at_ns: u64) -> Sdu {
        assert!(size >= ID_LEN);
        let mut payload = Vec::with_capacity(size);
        payload.extend_from_slice(&id.to_be_bytes());
        let mut state = id;
        while payload.len() < size {
            state = splitmix64(state);
            let take = (size - payload.len()).min(8);
            payload.extend_from_slice(&state.to_le_bytes()[..take]);
        }
        Sdu { id, payload, created_at_ns }
    }

    pub fn id_of(payload: &[u8]) -> Option<u64> {
        payload.get(..ID_LEN).map(|b| u64::from_be_bytes(b.try_into().unwrap()))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn content_digest(bytes: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    h.write(bytes);
    h.finish()
}

/// Emits fixed-size SDUs at the profile rate. The rate is integrated exactly in
/// milli-bits per millisecond, so a constant rate never drifts.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    profile: TrafficProfile,
    sdu_size: usize,
    credit_millibits: u64,
    next_id: u64,
    emitted_bytes: u64,
}

impl TrafficGenerator {
    pub fn new(profile: TrafficProfile, sdu_size: usize) -> Self {
        TrafficGenerator { profile, sdu_size, credit_millibits: 0, next_id: 0, emitted_bytes: 0 }
    }

    pub fn emitted(&self) -> u64 {
        self.next_id
    }

    pub fn emitted_bytes(&self) -> u64 {
        self.emitted_bytes
    }

    /// SDUs due in millisecond `t_ms`.
    pub fn tick(&mut self, t_ms: u64) -> Vec<Sdu> {
        let rate = self.profile.rate_at_ms(t_ms).max(0.0).round() as u64;
        // rate bits/s over 1 ms = rate milli-bits.
        self.credit_millibits += rate;
        let sdu_millibits = self.sdu_size as u64 * 8 * 1000;
        let mut out = Vec::new();
        while self.credit_millibits >= sdu_millibits {
            self.credit_millibits -= sdu_millibits;
            out.push(Sdu::new(self.next_id, self.sdu_size, t_ms * 1_000_000));
            self.next_id += 1;
            self.emitted_bytes += self.sdu_size as u64;
        }
        out
    }
}

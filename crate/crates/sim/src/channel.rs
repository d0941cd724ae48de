//! Link models: a TTI-scheduled LTE downlink that delivers in order, and a
//! datagram WiFi link whose per-frame delays are independent.
//!
//! Times are in nanoseconds of simulated time.

use std::collections::VecDeque;

use lwa_core::eth::{self, ETHERTYPE_LWA, MacAddr};
use lwa_core::framing::{DEFAULT_MAX_CONCAT, FramedPdu, Segmenter};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal, Triangular};
use serde::{Deserialize, Serialize};

pub use lwa_core::eth::{ETH_HLEN, EthFrame, decap as decap_eth, encap as encap_eth};

pub const NS_PER_MS: u64 = 1_000_000;
pub const SUBFRAMES_PER_FRAME: u32 = 10;

pub const ENB_MAC: MacAddr = [0x02, 0x00, 0x00, 0x00, 0x00, 0x01];
pub const UE_MAC: MacAddr = [0x02, 0x00, 0x00, 0x00, 0x00, 0x02];

fn ms_to_ns(ms: f64) -> u64 {
    (ms * NS_PER_MS as f64).round() as u64
}

/// Triangular one-way delay, `mean ± jitter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LteDelay {
    pub mean_ms: f64,
    pub jitter_ms: f64,
}

impl Default for LteDelay {
    fn default() -> Self {
        LteDelay { mean_ms: 2.73, jitter_ms: 0.7 }
    }
}

impl LteDelay {
    pub fn sample_ms<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.jitter_ms <= 0.0 {
            return self.mean_ms;
        }
        let lo = self.mean_ms - self.jitter_ms;
        let hi = self.mean_ms + self.jitter_ms;
        Triangular::new(lo, hi, self.mean_ms).expect("validated delay bounds").sample(rng)
    }
}

/// Shifted log-normal one-way delay, truncated at `tail_max_ms`.
///
/// `min_ms + exp(mu + sigma * Z)` with `mu` chosen so the density peaks at `mode_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WifiDelay {
    pub min_ms: f64,
    pub mode_ms: f64,
    pub sigma: f64,
    pub tail_max_ms: f64,
}

impl Default for WifiDelay {
    fn default() -> Self {
        WifiDelay { min_ms: 0.43, mode_ms: 1.6, sigma: 0.6, tail_max_ms: 15.2 }
    }
}

impl WifiDelay {
    /// Location parameter of the underlying normal.
    pub fn mu(&self) -> f64 {
        (self.mode_ms - self.min_ms).ln() + self.sigma * self.sigma
    }

    pub fn sample_ms<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mu = self.mu();
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let d = self.min_ms + (mu + self.sigma * z).exp();
            if d <= self.tail_max_ms {
                return d;
            }
        }
    }
}

/// Capacity degradation: during `[start_s, end_s)` only `scale` of the
/// scheduled subframes carry data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LteLinkConfig {
    /// Informational only.
    pub bandwidth_label: String,
    pub used_subframes_per_frame: u32,
    pub tb_bytes_per_tti: usize,
    pub max_concat: usize,
    pub delay: LteDelay,
    pub capacity_schedule: Vec<CapacityWindow>,
    /// PDCP PDUs the transmit buffer holds before new ones are dropped.
    pub queue_limit_pkts: usize,
}

impl Default for LteLinkConfig {
    fn default() -> Self {
        LteLinkConfig {
            bandwidth_label: "5 MHz".into(),
            used_subframes_per_frame: 8,
            tb_bytes_per_tti: 2188,
            max_concat: DEFAULT_MAX_CONCAT,
            delay: LteDelay::default(),
            capacity_schedule: Vec::new(),
            queue_limit_pkts: 50,
        }
    }
}

impl LteLinkConfig {
    /// Gross rate with every scheduled subframe used.
    pub fn ceiling_bps(&self) -> f64 {
        (self.tb_bytes_per_tti * 8) as f64 * f64::from(self.used_subframes_per_frame) * 100.0
    }

    pub fn scale_at(&self, t_ms: u64) -> f64 {
        let t_s = t_ms as f64 / 1000.0;
        self.capacity_schedule.iter().filter(|w| t_s >= w.start_s && t_s < w.end_s).map(|w| w.scale).fold(1.0, f64::min)
    }

    /// Whether subframe `idx` (0..10) is one of the scheduled ones. The used
    /// subframes are spread evenly over the frame.
    pub fn subframe_used(&self, idx: u32) -> bool {
        let k = self.used_subframes_per_frame;
        (idx + 1) * k / SUBFRAMES_PER_FRAME > idx * k / SUBFRAMES_PER_FRAME
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WifiLinkConfig {
    pub rate_bps: f64,
    pub delay: WifiDelay,
    pub loss_p: f64,
    pub queue_limit_pkts: usize,
    pub ethertype: u16,
}

impl Default for WifiLinkConfig {
    fn default() -> Self {
        WifiLinkConfig { rate_bps: 20e6, delay: WifiDelay::default(), loss_p: 0.0, queue_limit_pkts: 50, ethertype: ETHERTYPE_LWA }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub enqueued: u64,
    /// Rejected because the transmit buffer was full.
    pub buffer_drops: u64,
    pub sent: u64,
    /// Bytes of PDCP PDUs put on the link.
    pub payload_bytes: u64,
    /// Lost in the air.
    pub air_losses: u64,
}

/// One transport block on its way to the UE.
#[derive(Debug, Clone)]
pub struct LteTransmission {
    pub arrival_ns: u64,
    pub bytes: Vec<u8>,
    /// SDUs whose final segment is in this block.
    pub sdus_completed: usize,
}

#[derive(Debug, Clone)]
pub struct LteLink {
    config: LteLinkConfig,
    segmenter: Segmenter,
    credit: f64,
    last_arrival_ns: u64,
    stats: LinkStats,
}

impl LteLink {
    pub fn new(config: LteLinkConfig) -> Self {
        let segmenter = Segmenter::new(config.max_concat);
        LteLink { config, segmenter, credit: 0.0, last_arrival_ns: 0, stats: LinkStats::default() }
    }

    pub fn config(&self) -> &LteLinkConfig {
        &self.config
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// PDCP PDUs waiting, including one partly sent.
    pub fn queue_len(&self) -> usize {
        self.segmenter.queued_sdus()
    }

    pub fn queued_bytes(&self) -> usize {
        self.segmenter.queued_bytes()
    }

    /// Returns false if the buffer was full and the PDU was dropped.
    pub fn enqueue(&mut self, pdcp_pdu: Vec<u8>) -> bool {
        if self.segmenter.queued_sdus() >= self.config.queue_limit_pkts {
            self.stats.buffer_drops += 1;
            return false;
        }
        self.stats.enqueued += 1;
        self.segmenter.push(pdcp_pdu);
        true
    }

    /// Serve subframe `t_ms`. Under a capacity scale below 1 a scheduled
    /// subframe carries data only when enough fractional credit has built up;
    /// unused opportunities are not saved for later.
    pub fn tick<R: rand::Rng + ?Sized>(&mut self, t_ms: u64, rng: &mut R) -> Option<LteTransmission> {
        let idx = (t_ms % u64::from(SUBFRAMES_PER_FRAME)) as u32;
        if !self.config.subframe_used(idx) {
            return None;
        }
        self.credit += self.config.scale_at(t_ms);
        if self.credit < 1.0 {
            return None;
        }
        self.credit -= 1.0;
        let pdu = self.segmenter.build_pdu(self.config.tb_bytes_per_tti)?;
        Some(self.transmit(pdu, t_ms, rng))
    }

    fn transmit<R: rand::Rng + ?Sized>(&mut self, pdu: FramedPdu, t_ms: u64, rng: &mut R) -> LteTransmission {
        let n = pdu.header.lis.len();
        let sdus_completed = if pdu.header.end_frag { n - 1 } else { n };
        self.stats.sent += 1;
        self.stats.payload_bytes += pdu.payload.len() as u64;
        let delay = ms_to_ns(self.config.delay.sample_ms(rng));
        // In-order delivery.
        let arrival_ns = (t_ms * NS_PER_MS + delay).max(self.last_arrival_ns);
        self.last_arrival_ns = arrival_ns;
        LteTransmission { arrival_ns, bytes: pdu.encode(), sdus_completed }
    }
}

#[derive(Debug, Clone)]
pub struct WifiTransmission {
    pub arrival_ns: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct WifiLink {
    config: WifiLinkConfig,
    queue: VecDeque<Vec<u8>>,
    busy_until_ns: u64,
    stats: LinkStats,
}

impl WifiLink {
    pub fn new(config: WifiLinkConfig) -> Self {
        WifiLink { config, queue: VecDeque::new(), busy_until_ns: 0, stats: LinkStats::default() }
    }

    pub fn config(&self) -> &WifiLinkConfig {
        &self.config
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Wrap a PDCP PDU and queue it. Never blocks: a full buffer drops it.
    pub fn enqueue(&mut self, pdcp_pdu: &[u8]) -> bool {
        if self.queue.len() >= self.config.queue_limit_pkts {
            self.stats.buffer_drops += 1;
            return false;
        }
        self.stats.enqueued += 1;
        self.queue.push_back(eth::encap(pdcp_pdu, UE_MAC, ENB_MAC, self.config.ethertype));
        true
    }

    pub fn serialization_ns(&self, frame_len: usize) -> u64 {
        ((frame_len * 8) as f64 / self.config.rate_bps * 1e9).round() as u64
    }

    /// Send one frame at `now_ns` on an idle link.
    pub fn send<R: rand::Rng + ?Sized>(&mut self, frame: Vec<u8>, now_ns: u64, rng: &mut R) -> Option<WifiTransmission> {
        let start = now_ns.max(self.busy_until_ns);
        let done = start + self.serialization_ns(frame.len());
        self.busy_until_ns = done;
        self.stats.sent += 1;
        self.stats.payload_bytes += (frame.len() - ETH_HLEN) as u64;
        if self.config.loss_p > 0.0 && rng.random_bool(self.config.loss_p) {
            self.stats.air_losses += 1;
            return None;
        }
        let delay = ms_to_ns(self.config.delay.sample_ms(rng));
        Some(WifiTransmission { arrival_ns: done + delay, bytes: frame })
    }

    /// Start every queued frame whose transmission begins within this
    /// millisecond. Arrivals are not reordered to FIFO.
    pub fn tick<R: rand::Rng + ?Sized>(&mut self, t_ms: u64, rng: &mut R) -> Vec<WifiTransmission> {
        let now = t_ms * NS_PER_MS;
        let end = now + NS_PER_MS;
        let mut out = Vec::new();
        while self.busy_until_ns.max(now) < end {
            let Some(frame) = self.queue.pop_front() else { break };
            out.extend(self.send(frame, now, rng));
        }
        out
    }
}

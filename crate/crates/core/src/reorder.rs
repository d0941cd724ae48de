//! UE-side merge and reorder of PDCP PDUs arriving over both links.
//!
//! PDUs are released strictly in SN order. A missing SN is given up on when
//! more than `window_size` PDUs are held behind it, or when the oldest held PDU
//! has waited `hold_timer`. Anything that shows up behind the expected SN is
//! dropped, never delivered out of order.

use alloc::collections::BTreeMap;
use alloc::collections::btree_map::Entry;
use alloc::vec::Vec;

use crate::pdcp::{PdcpPdu, SN_MODULUS, sn_distance};

const HALF_RANGE: u16 = SN_MODULUS / 2;

/// True iff `b` lies in the forward half-range after `a`.
#[inline]
pub fn sn_after(a: u16, b: u16) -> bool {
    let d = sn_distance(a, b);
    d > 0 && d < HALF_RANGE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReorderConfig {
    pub window_size: usize,
    /// Same time unit as the `now` arguments.
    pub hold_timer: u64,
}

impl Default for ReorderConfig {
    fn default() -> Self {
        ReorderConfig { window_size: 64, hold_timer: 20 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReorderStats {
    pub received: u64,
    pub delivered: u64,
    /// SNs given up on when the window advanced.
    pub skipped_lost: u64,
    pub late_dropped: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone)]
struct Held {
    pdu: PdcpPdu,
    arrived: u64,
}

#[derive(Debug, Clone)]
pub struct ReorderBuffer {
    config: ReorderConfig,
    expected_sn: Option<u16>,
    held: BTreeMap<u16, Held>,
    stats: ReorderStats,
}

impl ReorderBuffer {
    pub fn new(config: ReorderConfig) -> Self {
        assert!(config.window_size >= 1);
        assert!(config.window_size < usize::from(HALF_RANGE));
        ReorderBuffer { config, expected_sn: None, held: BTreeMap::new(), stats: ReorderStats::default() }
    }

    /// Buffer that already expects `sn`, as if everything before it was delivered.
    pub fn starting_at(config: ReorderConfig, sn: u16) -> Self {
        let mut buf = Self::new(config);
        buf.expected_sn = Some(sn % SN_MODULUS);
        buf
    }

    pub fn config(&self) -> ReorderConfig {
        self.config
    }

    pub fn expected_sn(&self) -> Option<u16> {
        self.expected_sn
    }

    pub fn stats(&self) -> ReorderStats {
        self.stats
    }

    /// Number of PDUs currently held.
    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    /// SNs currently held, in release order.
    pub fn held_sns(&self) -> Vec<u16> {
        let Some(expected) = self.expected_sn else { return Vec::new() };
        self.held.range(expected..).chain(self.held.range(..expected)).map(|(&sn, _)| sn).collect()
    }

    pub fn feed(&mut self, pdu: PdcpPdu, now: u64) -> Vec<PdcpPdu> {
        self.stats.received += 1;
        let expected = *self.expected_sn.get_or_insert(pdu.sn);
        let mut out = Vec::new();
        let sn = pdu.sn;

        if sn == expected {
            self.release(pdu, &mut out);
            self.release_run(&mut out);
        } else if !sn_after(expected, sn) {
            self.stats.late_dropped += 1;
        } else if let Entry::Vacant(slot) = self.held.entry(sn) {
            slot.insert(Held { pdu, arrived: now });
        } else {
            self.stats.duplicates += 1;
        }
        self.advance_while_stale(now, &mut out);
        out
    }

    /// Apply the hold timer with no new arrival.
    pub fn flush(&mut self, now: u64) -> Vec<PdcpPdu> {
        let mut out = Vec::new();
        self.advance_while_stale(now, &mut out);
        out
    }

    /// Release everything still held in SN order, counting the gaps as lost.
    pub fn drain(&mut self) -> Vec<PdcpPdu> {
        let mut out = Vec::new();
        while !self.held.is_empty() {
            self.skip_to_oldest(&mut out);
        }
        out
    }

    fn release(&mut self, pdu: PdcpPdu, out: &mut Vec<PdcpPdu>) {
        let sn = pdu.sn;
        out.push(pdu);
        self.stats.delivered += 1;
        self.expected_sn = Some((sn + 1) % SN_MODULUS);
    }

    fn release_run(&mut self, out: &mut Vec<PdcpPdu>) {
        while let Some(expected) = self.expected_sn {
            let Some(held) = self.held.remove(&expected) else { break };
            self.release(held.pdu, out);
        }
    }

    fn is_stale(&self, now: u64) -> bool {
        if self.held.len() > self.config.window_size {
            return true;
        }
        self.held.values().map(|h| h.arrived).min().is_some_and(|t| now.saturating_sub(t) >= self.config.hold_timer)
    }

    fn advance_while_stale(&mut self, now: u64, out: &mut Vec<PdcpPdu>) {
        while self.is_stale(now) {
            self.skip_to_oldest(out);
        }
    }

    /// Move the expected SN up to the first held SN and release from there.
    fn skip_to_oldest(&mut self, out: &mut Vec<PdcpPdu>) {
        let Some(expected) = self.expected_sn else { return };
        let next = self.held.range(expected..).chain(self.held.range(..expected)).map(|(&sn, _)| sn).next();
        let Some(next) = next else { return };
        self.stats.skipped_lost += u64::from(sn_distance(expected, next));
        self.expected_sn = Some(next);
        self.release_run(out);
    }
}

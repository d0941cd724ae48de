//! The simulation loop.
//!
//! One iteration per 1 ms subframe. The eNB side runs first (controller,
//! traffic, PDCP, routing, link transmit); then every arrival due before the end
//! of the subframe is handed to the UE side in arrival order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use lwa_core::flowctl::{FlowController, Link, Mode};
use lwa_core::framing::{FramedPdu, Reassembler};
use lwa_core::pdcp::{PdcpPdu, PdcpTx};
use lwa_core::reorder::ReorderBuffer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::SimError;
use crate::channel::{LteLink, NS_PER_MS, SUBFRAMES_PER_FRAME, WifiLink, decap_eth};
use crate::metrics::{MetricsRecord, MetricsReport, ModeChange, Summary};
use crate::scenario::{RatioPolicyChoice, Scenario};
use crate::traffic::{Sdu, TrafficGenerator, content_digest};

/// Subframes per metrics record.
pub const INTERVAL_MS: u64 = 100;

const LTE_STREAM: u64 = 1;
const WIFI_STREAM: u64 = 2;

enum Payload {
    Lte { bytes: Vec<u8>, sdus_completed: usize },
    Wifi(Vec<u8>),
}

struct Arrival {
    at_ns: u64,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Arrival {
    fn eq(&self, other: &Self) -> bool {
        (self.at_ns, self.seq) == (other.at_ns, other.seq)
    }
}

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    // Reversed: BinaryHeap pops the earliest arrival first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at_ns, other.seq).cmp(&(self.at_ns, self.seq))
    }
}

#[derive(Default, Clone, Copy)]
struct Counters {
    offered_bytes: u64,
    delivered_bytes: u64,
    raw_arrivals: u64,
    raw_ooo: u64,
    sink_arrivals: u64,
    sink_ooo: u64,
}

impl Counters {
    fn minus(self, o: Counters) -> Counters {
        Counters {
            offered_bytes: self.offered_bytes - o.offered_bytes,
            delivered_bytes: self.delivered_bytes - o.delivered_bytes,
            raw_arrivals: self.raw_arrivals - o.raw_arrivals,
            raw_ooo: self.raw_ooo - o.raw_ooo,
            sink_arrivals: self.sink_arrivals - o.sink_arrivals,
            sink_ooo: self.sink_ooo - o.sink_ooo,
        }
    }
}

fn fraction(n: u64, d: u64) -> f64 {
    if d == 0 { 0.0 } else { n as f64 / d as f64 }
}

/// UE receive side: reassembly, merge, reorder and the integrity-checking sink.
struct Ue {
    reassembler: Reassembler,
    reorder: Option<ReorderBuffer>,
    expected: HashMap<u64, u64>,
    max_raw_id: Option<u64>,
    max_sink_id: Option<u64>,
    undecodable: u64,
    lte_sdus_received: u64,
    delivered: u64,
    integrity_failures: u64,
    first_failure: Option<u64>,
    c: Counters,
}

impl Ue {
    fn on_lte(&mut self, bytes: &[u8], now: u64) {
        let Ok(tb) = FramedPdu::decode(bytes) else {
            self.undecodable += 1;
            return;
        };
        for sdu in self.reassembler.push(&tb) {
            self.lte_sdus_received += 1;
            self.on_pdcp(&sdu, now);
        }
    }

    fn on_wifi(&mut self, frame: &[u8], ethertype: u16, now: u64) {
        match decap_eth(frame, ethertype) {
            Ok(f) => self.on_pdcp(&f.payload, now),
            Err(_) => self.undecodable += 1,
        }
    }

    fn on_pdcp(&mut self, bytes: &[u8], now: u64) {
        let Ok(pdu) = PdcpPdu::decode(bytes) else {
            self.undecodable += 1;
            return;
        };
        let id = Sdu::id_of(&pdu.payload).unwrap_or(u64::MAX);
        self.c.raw_arrivals += 1;
        match self.max_raw_id {
            Some(m) if id < m => self.c.raw_ooo += 1,
            _ => self.max_raw_id = Some(id),
        }
        match self.reorder.as_mut() {
            Some(r) => {
                for p in r.feed(pdu, now) {
                    self.sink(p);
                }
            }
            None => self.sink(pdu),
        }
    }

    fn flush(&mut self, now: u64) {
        if let Some(r) = self.reorder.as_mut() {
            for p in r.flush(now) {
                self.sink(p);
            }
        }
    }

    fn sink(&mut self, pdu: PdcpPdu) {
        let id = Sdu::id_of(&pdu.payload).unwrap_or(u64::MAX);
        match self.expected.remove(&id) {
            Some(digest) if digest == content_digest(&pdu.payload) => {}
            _ => {
                self.integrity_failures += 1;
                self.first_failure.get_or_insert(id);
                return;
            }
        }
        self.delivered += 1;
        self.c.delivered_bytes += pdu.payload.len() as u64;
        self.c.sink_arrivals += 1;
        match self.max_sink_id {
            Some(m) if id < m => self.c.sink_ooo += 1,
            _ => self.max_sink_id = Some(id),
        }
    }
}

fn make_controller(s: &Scenario) -> Result<FlowController<RatioPolicyChoice>, SimError> {
    Ok(FlowController::with_policy(s.controller.controller_config()?, s.controller.policy))
}

fn link_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run a scenario to completion.
pub fn run(s: &Scenario) -> Result<MetricsReport, SimError> {
    s.validate()?;
    let mut fc = make_controller(s)?;
    let mut traffic = TrafficGenerator::new(s.traffic.clone(), s.sdu_size_bytes);
    let mut pdcp = PdcpTx::new();
    let mut lte = LteLink::new(s.lte.clone());
    let mut wifi = WifiLink::new(s.wifi.clone());
    let mut lte_rng = link_rng(s.seed, LTE_STREAM);
    let mut wifi_rng = link_rng(s.seed, WIFI_STREAM);
    let ethertype = s.wifi.ethertype;

    let mut ue = Ue {
        reassembler: Reassembler::new(),
        reorder: s.reorder.enabled.then(|| ReorderBuffer::new(s.reorder.reorder_config())),
        expected: HashMap::new(),
        max_raw_id: None,
        max_sink_id: None,
        undecodable: 0,
        lte_sdus_received: 0,
        delivered: 0,
        integrity_failures: 0,
        first_failure: None,
        c: Counters::default(),
    };

    let mut events = BinaryHeap::new();
    let mut seq = 0u64;
    let mut lte_sdus_sent = 0u64;
    let mut lte_in_transit = 0u64;
    let mut wifi_in_transit = 0u64;

    let mut records = Vec::new();
    let mut mode_changes = Vec::new();
    let mut mode = fc.mode();
    let mut prev = Counters::default();
    let mut prev_lte_bytes = 0u64;
    let mut prev_wifi_bytes = 0u64;
    let mut prev_skipped = 0u64;
    let mut prev_late = 0u64;

    let duration_ms = s.duration_ms();
    for t in 0..duration_ms {
        let now = t * NS_PER_MS;
        let frame = t / u64::from(SUBFRAMES_PER_FRAME);

        fc.accumulate_load(0, frame);
        if fc.mode() != mode {
            mode = fc.mode();
            mode_changes.push(ModeChange { t_s: t as f64 / 1000.0, mode });
        }
        // Buffer drops count as backlog: the controller sees the length an
        // unbounded queue would have, so a full buffer does not hide overload.
        let q_lte = lte.queue_len() as u64 + lte.stats().buffer_drops;
        let q_wifi = wifi.queue_len() as u64 + wifi.stats().buffer_drops;
        if let Some(delta) = fc.sense_links(q_lte, q_wifi, frame) {
            fc.update_ratio(delta);
        }

        for sdu in traffic.tick(t) {
            let len = sdu.payload.len() as u64;
            ue.c.offered_bytes += len;
            fc.accumulate_load(len, frame);
            ue.expected.insert(sdu.id, content_digest(&sdu.payload));
            let pdu = pdcp.send(sdu.payload, now).encode();
            match fc.route() {
                Link::Lte => lte.enqueue(pdu),
                Link::Wifi => wifi.enqueue(&pdu),
            };
        }

        if let Some(tx) = lte.tick(t, &mut lte_rng) {
            lte_sdus_sent += tx.sdus_completed as u64;
            lte_in_transit += tx.sdus_completed as u64;
            events.push(Arrival {
                at_ns: tx.arrival_ns,
                seq,
                payload: Payload::Lte { bytes: tx.bytes, sdus_completed: tx.sdus_completed },
            });
            seq += 1;
        }
        for tx in wifi.tick(t, &mut wifi_rng) {
            wifi_in_transit += 1;
            events.push(Arrival { at_ns: tx.arrival_ns, seq, payload: Payload::Wifi(tx.bytes) });
            seq += 1;
        }

        let tick_end = now + NS_PER_MS;
        while events.peek().is_some_and(|e| e.at_ns < tick_end) {
            let e = events.pop().expect("peeked");
            match e.payload {
                Payload::Lte { bytes, sdus_completed } => {
                    lte_in_transit -= sdus_completed as u64;
                    ue.on_lte(&bytes, e.at_ns);
                }
                Payload::Wifi(frame) => {
                    wifi_in_transit -= 1;
                    ue.on_wifi(&frame, ethertype, e.at_ns);
                }
            }
        }
        ue.flush(tick_end - 1);

        if (t + 1) % INTERVAL_MS == 0 || t + 1 == duration_ms {
            let span_ms = (t + 1) - records.len() as u64 * INTERVAL_MS;
            let secs = span_ms as f64 / 1000.0;
            let d = ue.c.minus(prev);
            prev = ue.c;
            let lte_bytes = lte.stats().payload_bytes;
            let wifi_bytes = wifi.stats().payload_bytes;
            let rs = ue.reorder.as_ref().map(|r| r.stats()).unwrap_or_default();
            records.push(MetricsRecord {
                t_s: (t + 1) as f64 / 1000.0,
                offered_bps: d.offered_bytes as f64 * 8.0 / secs,
                lte_tx_bps: (lte_bytes - prev_lte_bytes) as f64 * 8.0 / secs,
                wifi_tx_bps: (wifi_bytes - prev_wifi_bytes) as f64 * 8.0 / secs,
                sink_goodput_bps: d.delivered_bytes as f64 * 8.0 / secs,
                ooo_raw_fraction: fraction(d.raw_ooo, d.raw_arrivals),
                ooo_sink_fraction: fraction(d.sink_ooo, d.sink_arrivals),
                reorder_skipped: rs.skipped_lost - prev_skipped,
                reorder_late: rs.late_dropped - prev_late,
                q_lte_pkts: lte.queue_len() as u64,
                q_wifi_pkts: wifi.queue_len() as u64,
                mode: fc.mode(),
                share_wifi: fc.share_wifi(),
                l_i_bytes: fc.window_load(),
            });
            prev_lte_bytes = lte_bytes;
            prev_wifi_bytes = wifi_bytes;
            prev_skipped = rs.skipped_lost;
            prev_late = rs.late_dropped;
        }
    }

    if let Some(id) = ue.first_failure {
        return Err(SimError::Integrity { id, failures: ue.integrity_failures });
    }

    let rs = ue.reorder.as_ref().map(|r| r.stats()).unwrap_or_default();
    let held = ue.reorder.as_ref().map_or(0, |r| r.len() as u64);
    let lte_stats = lte.stats();
    let wifi_stats = wifi.stats();
    let summary = Summary {
        duration_s: duration_ms as f64 / 1000.0,
        sdus_sourced: traffic.emitted(),
        sdus_delivered: ue.delivered,
        bytes_delivered: ue.c.delivered_bytes,
        lte_buffer_drops: lte_stats.buffer_drops,
        wifi_buffer_drops: wifi_stats.buffer_drops,
        wifi_air_losses: wifi_stats.air_losses,
        framing_discards: (lte_sdus_sent - lte_in_transit - ue.lte_sdus_received) + ue.undecodable,
        reorder_skipped: rs.skipped_lost,
        reorder_late: rs.late_dropped,
        reorder_duplicates: rs.duplicates,
        in_flight: lte.queue_len() as u64 + lte_in_transit + wifi.queue_len() as u64 + wifi_in_transit + held,
        integrity_failures: ue.integrity_failures,
        raw_arrivals: ue.c.raw_arrivals,
        raw_out_of_order: ue.c.raw_ooo,
        sink_out_of_order: ue.c.sink_ooo,
    };
    if !summary.conserved() {
        return Err(SimError::Accounting(Box::new(summary)));
    }
    Ok(MetricsReport { records, mode_changes, summary })
}

/// Mode in effect at `t_s`, from the change log.
pub fn mode_at(report: &MetricsReport, t_s: f64) -> Mode {
    report.mode_changes.iter().take_while(|c| c.t_s <= t_s).last().map_or(Mode::Switch, |c| c.mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::TrafficProfile;

    fn scenario(rate_bps: f64, duration_s: f64) -> Scenario {
        let mut s = Scenario::preset("fig4_4_ramp").unwrap();
        s.traffic = TrafficProfile::Cbr { rate_bps };
        s.duration_s = duration_s;
        s
    }

    #[test]
    fn record_per_interval() {
        let r = run(&scenario(1e6, 1.05)).unwrap();
        assert_eq!(r.records.len(), 11);
        assert!((r.records[10].t_s - 1.05).abs() < 1e-12);
    }

    #[test]
    fn light_load_stays_on_lte() {
        let r = run(&scenario(5e6, 3.0)).unwrap();
        assert!(r.mode_changes.is_empty());
        assert!(r.records.iter().all(|x| x.wifi_tx_bps == 0.0 && x.mode == Mode::Switch));
        assert_eq!(r.summary.raw_out_of_order, 0);
        let s = &r.summary;
        assert!(s.conserved());
        assert!(s.sdus_delivered + 10 >= s.sdus_sourced);
    }

    #[test]
    fn heavy_load_splits() {
        let r = run(&scenario(20e6, 3.0)).unwrap();
        assert_eq!(r.mode_changes.len(), 1);
        assert_eq!(r.mode_changes[0].mode, Mode::Lwa);
        assert_eq!(r.mode_changes[0].t_s, 1.0);
        assert_eq!(mode_at(&r, 0.5), Mode::Switch);
        assert_eq!(mode_at(&r, 2.0), Mode::Lwa);
        assert!(r.records.last().unwrap().wifi_tx_bps > 0.0);
    }
}

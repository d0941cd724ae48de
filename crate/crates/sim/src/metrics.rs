//! Per-interval metrics and the CSV writer.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use lwa_core::Mode;

/// One 100 ms interval. `t_s` is the end of the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub t_s: f64,
    pub offered_bps: f64,
    pub lte_tx_bps: f64,
    pub wifi_tx_bps: f64,
    pub sink_goodput_bps: f64,
    /// Merged arrivals behind the highest SDU id seen so far.
    pub ooo_raw_fraction: f64,
    /// Same metric after the reorder stage.
    pub ooo_sink_fraction: f64,
    pub reorder_skipped: u64,
    pub reorder_late: u64,
    pub q_lte_pkts: u64,
    pub q_wifi_pkts: u64,
    pub mode: Mode,
    pub share_wifi: f64,
    pub l_i_bytes: u64,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "t_s",
    "offered_bps",
    "lte_tx_bps",
    "wifi_tx_bps",
    "sink_goodput_bps",
    "ooo_raw_fraction",
    "ooo_sink_fraction",
    "reorder_skipped",
    "reorder_late",
    "q_lte_pkts",
    "q_wifi_pkts",
    "mode",
    "share_wifi",
    "l_i_bytes",
];

/// End-of-run totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub duration_s: f64,
    pub sdus_sourced: u64,
    pub sdus_delivered: u64,
    pub bytes_delivered: u64,
    pub lte_buffer_drops: u64,
    pub wifi_buffer_drops: u64,
    pub wifi_air_losses: u64,
    /// SDUs lost to LTE reassembly (SN gaps or undecodable blocks).
    pub framing_discards: u64,
    pub reorder_skipped: u64,
    pub reorder_late: u64,
    pub reorder_duplicates: u64,
    /// Still queued, on the air, or held for reordering when the run ended.
    pub in_flight: u64,
    pub integrity_failures: u64,
    pub raw_arrivals: u64,
    pub raw_out_of_order: u64,
    pub sink_out_of_order: u64,
}

impl Summary {
    pub fn mean_goodput_bps(&self) -> f64 {
        if self.duration_s > 0.0 { self.bytes_delivered as f64 * 8.0 / self.duration_s } else { 0.0 }
    }

    /// Every sourced SDU is delivered, dropped somewhere identifiable, or still in flight.
    pub fn conserved(&self) -> bool {
        self.sdus_sourced
            == self.sdus_delivered
                + self.lte_buffer_drops
                + self.wifi_buffer_drops
                + self.wifi_air_losses
                + self.framing_discards
                + self.reorder_late
                + self.reorder_duplicates
                + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeChange {
    pub t_s: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub records: Vec<MetricsRecord>,
    pub mode_changes: Vec<ModeChange>,
    pub summary: Summary,
}

impl MetricsReport {
    /// Records whose interval lies within `[from_s, to_s)`.
    pub fn window(&self, from_s: f64, to_s: f64) -> impl Iterator<Item = &MetricsRecord> {
        const EPS: f64 = 1e-9;
        self.records.iter().filter(move |r| r.t_s > from_s + EPS && r.t_s <= to_s + EPS)
    }

    pub fn mean_of(&self, from_s: f64, to_s: f64, f: impl Fn(&MetricsRecord) -> f64) -> f64 {
        let (sum, n) = self.window(from_s, to_s).fold((0.0, 0usize), |(s, n), r| (s + f(r), n + 1));
        if n == 0 { 0.0 } else { sum / n as f64 }
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sig6(r.t_s),
                sig6(r.offered_bps),
                sig6(r.lte_tx_bps),
                sig6(r.wifi_tx_bps),
                sig6(r.sink_goodput_bps),
                sig6(r.ooo_raw_fraction),
                sig6(r.ooo_sink_fraction),
                r.reorder_skipped,
                r.reorder_late,
                r.q_lte_pkts,
                r.q_wifi_pkts,
                r.mode,
                sig6(r.share_wifi),
                r.l_i_bytes,
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        if self.records.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty report"));
        }
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_csv().as_bytes())?;
        f.flush()
    }
}

/// Six significant digits, `%g` style: plain notation for exponents in
/// `-4..6`, scientific otherwise, trailing zeros removed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;

use lwa_core::Mode;
use lwa_core::framing::{FramedPdu, MIN_TB_SIZE, Reassembler, Segmenter};
use lwa_core::pdcp::{PdcpPdu, SN_MODULUS};
use lwa_core::reorder::{ReorderBuffer, ReorderConfig};
use lwa_sim::scenario::PRESETS;
use lwa_sim::sim::mode_at;
use lwa_sim::{MetricsReport, Scenario, run};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MBPS: f64 = 1e6;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn preset_run(name: &str, tweak: impl FnOnce(&mut Scenario)) -> MetricsReport {
    let mut s = Scenario::preset(name).expect("preset");
    tweak(&mut s);
    run(&s).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn goodput(r: &MetricsReport, from: f64, to: f64) -> f64 {
    r.mean_of(from, to, |m| m.sink_goodput_bps)
}

fn lte_ceiling() -> Outcome {
    let r = preset_run("fig3_9_lte", |_| {});
    let g = goodput(&r, 15.0, 20.0) / MBPS;
    outcome((g - 11.0).abs() <= 1.1, format!("LTE-only goodput over [15, 20) s = {g:.2} Mbps (want 11 ± 1.1)"))
}

fn wifi_ceiling() -> Outcome {
    let r = preset_run("fig3_9_wifi", |_| {});
    let g = goodput(&r, 15.0, 20.0) / MBPS;
    outcome((g - 20.0).abs() <= 2.0, format!("WiFi-only goodput over [15, 20) s = {g:.2} Mbps (want 20 ± 2)"))
}

fn additivity() -> Outcome {
    let lte = goodput(&preset_run("fig3_9_lte", |_| {}), 15.0, 20.0);
    let r = preset_run("fig3_10_lwa", |_| {});
    let offered = r.mean_of(20.0, 25.0, |m| m.offered_bps);
    let wifi = r.mean_of(20.0, 25.0, |m| m.wifi_tx_bps);
    let g = goodput(&r, 20.0, 25.0);
    let bound = 0.9 * (lte + wifi);
    let split = mode_at(&r, 20.0) == Mode::Lwa && mode_at(&r, 25.0 - 1e-9) == Mode::Lwa;
    outcome(
        split && g >= bound,
        format!(
            "offered {:.1} Mbps, aggregate {:.2} Mbps >= 0.9 x ({:.2} LTE-only + {:.2} WiFi) = {:.2}, split mode {split}",
            offered / MBPS,
            g / MBPS,
            lte / MBPS,
            wifi / MBPS,
            bound / MBPS
        ),
    )
}

fn ooo_table() -> Outcome {
    let steps = [0.0, 5.0, 10.0, 15.0];
    let raw_run = preset_run("table3_3_sweep", |s| s.reorder.enabled = false);
    let sink_run = preset_run("table3_3_sweep", |_| {});
    // Skip the first second of each step so queues settle.
    let raw: Vec<f64> = steps.iter().map(|&t| raw_run.mean_of(t + 1.0, t + 5.0, |m| m.ooo_raw_fraction)).collect();
    let sink: Vec<f64> = steps.iter().map(|&t| sink_run.mean_of(t + 1.0, t + 5.0, |m| m.ooo_sink_fraction)).collect();
    let monotone = raw.windows(2).all(|w| w[1] >= w[0]);
    let pass = monotone && raw[3] >= 0.20 && sink.iter().all(|&f| f <= 0.02);
    let fmt = |v: &[f64]| v.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join(" ");
    outcome(pass, format!("10/12/14/16 Mbps raw [{}] (monotone {monotone}), reordered [{}] (want <= 0.02)", fmt(&raw), fmt(&sink)))
}

fn mode_switching() -> Outcome {
    const THRESHOLD_BPS: f64 = 11.2e6;
    let r = preset_run("fig4_4_ramp", |_| {});
    let below = r.records.iter().filter(|m| m.offered_bps < THRESHOLD_BPS);
    let mut violations = 0;
    for m in below {
        if m.mode != Mode::Switch || m.wifi_tx_bps != 0.0 {
            violations += 1;
        }
    }
    let Some(cross) = r.records.iter().find(|m| m.offered_bps >= THRESHOLD_BPS) else {
        return outcome(false, "ramp never reached 11.2 Mbps".into());
    };
    let cross_s = cross.t_s - 0.1;
    let entered = r.mode_changes.iter().find(|c| c.mode == Mode::Lwa && c.t_s >= cross_s).map(|c| c.t_s);
    // Interval start of the first record carrying WiFi traffic.
    let wifi_from = r.records.iter().find(|m| m.wifi_tx_bps > 0.0).map(|m| m.t_s - 0.1);
    let deadline = cross_s + 1.0 + 1e-9;
    let pass = violations == 0 && entered.is_some_and(|t| t <= deadline) && wifi_from.is_some_and(|t| t <= deadline);
    outcome(
        pass,
        format!(
            "offered >= 11.2 Mbps from {cross_s:.1} s, split mode at {} s, WiFi traffic from {} s, {violations} sub-threshold intervals off LTE",
            entered.map_or("never".into(), |t| format!("{t:.1}")),
            wifi_from.map_or("never".into(), |t| format!("{t:.1}")),
        ),
    )
}

fn lte_limited() -> Outcome {
    let r = preset_run("fig4_5_lte_limited", |_| {});
    let pre = goodput(&r, 2.0, 6.0);
    // Every 1 s window inside the limited interval, sliding by one record.
    let mut worst = f64::INFINITY;
    let mut worst_at = 0.0;
    for k in 0..=60 {
        let from = 6.0 + k as f64 / 10.0;
        let g = goodput(&r, from, from + 1.0);
        if g < worst {
            worst = g;
            worst_at = from;
        }
    }
    let ratio = worst / pre;
    let shares: Vec<f64> = r.window(6.0, 6.4).map(|m| m.share_wifi).collect();
    let rising = shares.len() == 4 && shares.windows(2).all(|w| w[1] > w[0]);
    let fmt = shares.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        rising && (ratio - 1.0).abs() <= 0.10,
        format!(
            "pre-event {:.2} Mbps, worst 1 s window [{worst_at:.1}, {:.1}) = {:.2} Mbps ({:.1}%), WiFi share {fmt}",
            pre / MBPS,
            worst_at + 1.0,
            worst / MBPS,
            ratio * 100.0
        ),
    )
}

/// Checks one case against the byte-stream model: FI bits follow SDU
/// boundaries and the reassembled output equals the input.
fn codec_case(rng: &mut ChaCha8Rng) -> bool {
    let count = rng.random_range(0..16usize);
    let sdus: Vec<Vec<u8>> = (0..count)
        .map(|_| {
            let len = rng.random_range(1..1600usize);
            (0..len).map(|_| rng.random::<u8>()).collect()
        })
        .collect();
    let tb = rng.random_range(MIN_TB_SIZE..4000);
    let max_concat = rng.random_range(1..20usize);

    let mut boundaries = vec![0usize];
    for s in &sdus {
        boundaries.push(boundaries.last().unwrap() + s.len());
    }
    let mut seg = Segmenter::new(max_concat);
    for s in &sdus {
        seg.push(s.clone());
    }
    let mut rx = Reassembler::new();
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(pdu) = seg.build_pdu(tb) {
        let wire = pdu.encode();
        if wire.len() != tb {
            return false;
        }
        let Ok(back) = FramedPdu::decode(&wire) else { return false };
        let end = pos + back.payload.len();
        if back.header.start_frag == boundaries.contains(&pos) || back.header.end_frag == boundaries.contains(&end) {
            return false;
        }
        pos = end;
        out.extend(rx.push(&back));
    }
    out == sdus && pos == *boundaries.last().unwrap()
}

fn codec_oracle() -> Outcome {
    const CASES: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let failures = (0..CASES).filter(|_| !codec_case(&mut rng)).count();
    outcome(failures == 0, format!("{CASES} random streams, {failures} mismatches"))
}

fn pdu(n: u64) -> PdcpPdu {
    PdcpPdu { sn: (n % u64::from(SN_MODULUS)) as u16, payload: n.to_le_bytes().to_vec(), enqueue_time: 0 }
}

fn tag(p: &PdcpPdu) -> u64 {
    u64::from_le_bytes(p.payload[..8].try_into().unwrap())
}

/// Arrival order for `0..n` shifted by `start`: packet `i` lands at key
/// `i + U[0, disp)`, optionally dropped or duplicated.
fn interleave(rng: &mut ChaCha8Rng, start: u64, n: u64, disp: f64, loss: f64, dup: f64) -> Vec<u64> {
    let mut keyed = Vec::new();
    for i in 0..n {
        if rng.random_bool(loss) {
            continue;
        }
        let key = i as f64 + rng.random::<f64>() * disp;
        keyed.push((key, start + i));
        if rng.random_bool(dup) {
            keyed.push((key + rng.random::<f64>() * disp, start + i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, n)| n).collect()
}

fn reorder_oracle() -> Outcome {
    const TRACES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut order_failures, mut accounting_failures) = (0, 0);
    for k in 0..TRACES {
        let window = rng.random_range(2..=128usize);
        let start = rng.random_range(0..1u64 << 20);
        let n = rng.random_range(1..600u64);
        let disp = rng.random_range(1.0..window as f64);

        // Clean permutation, no timer: send order must come back exactly.
        let arrivals = interleave(&mut rng, start, n, disp, 0.0, 0.0);
        let mut buf =
            ReorderBuffer::starting_at(ReorderConfig { window_size: window, hold_timer: u64::MAX }, (start % u64::from(SN_MODULUS)) as u16);
        let mut got = Vec::new();
        for &a in &arrivals {
            got.extend(buf.feed(pdu(a), 0).iter().map(tag));
        }
        if got != (start..start + n).collect::<Vec<_>>() || buf.stats().skipped_lost != 0 || !buf.is_empty() {
            order_failures += 1;
        }

        // Loss, duplicates and a hold timer: every arrival is accounted for.
        let loss = if k % 2 == 0 { rng.random_range(0.0..0.3) } else { 0.0 };
        let arrivals = interleave(&mut rng, start, n, disp, loss, 0.03);
        let hold = rng.random_range(1..50u64);
        let mut buf = ReorderBuffer::new(ReorderConfig { window_size: window, hold_timer: hold });
        let mut got = Vec::new();
        let mut ok = true;
        for (t, &a) in arrivals.iter().enumerate() {
            got.extend(buf.feed(pdu(a), t as u64).iter().map(tag));
            let s = buf.stats();
            ok &= buf.len() <= window && s.received == s.delivered + s.late_dropped + s.duplicates + buf.len() as u64;
        }
        got.extend(buf.drain().iter().map(tag));
        let s = buf.stats();
        ok &= s.received == arrivals.len() as u64 && s.received == s.delivered + s.late_dropped + s.duplicates;
        ok &= got.windows(2).all(|w| w[0] < w[1]);
        if let (Some(&first), Some(&last)) = (arrivals.first(), got.last()) {
            ok &= s.delivered + s.skipped_lost == last - first + 1;
        }
        if !ok {
            accounting_failures += 1;
        }
    }
    outcome(
        order_failures == 0 && accounting_failures == 0,
        format!(
            "{TRACES} bounded-displacement traces, {order_failures} order mismatches; {TRACES} lossy traces, {accounting_failures} accounting failures"
        ),
    )
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    for &(name, _) in PRESETS {
        let a = preset_run(name, |_| {}).to_csv();
        let b = preset_run(name, |_| {}).to_csv();
        if a != b {
            differing.push(name);
        }
    }
    outcome(differing.is_empty(), format!("{} presets run twice, differing: {:?}", PRESETS.len(), differing))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("LTE ceiling", lte_ceiling),
        ("WiFi ceiling", wifi_ceiling),
        ("aggregation additivity", additivity),
        ("out-of-order table", ooo_table),
        ("mode switching", mode_switching),
        ("LTE-limited compensation", lte_limited),
        ("codec oracle", codec_oracle),
        ("reorder oracle", reorder_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

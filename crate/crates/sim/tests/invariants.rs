//! Whole-run invariants over every preset and over small random scenarios.

use lwa_sim::scenario::PRESETS;
use lwa_sim::traffic::TrafficProfile;
use lwa_sim::{MetricsReport, Scenario, run};
use proptest::prelude::*;

fn preset(name: &str) -> Scenario {
    Scenario::preset(name).unwrap()
}

/// LTE plus WiFi bit rate averaged over `[from_s, to_s)`.
fn capacity_bps(s: &Scenario, from_s: f64, to_s: f64) -> f64 {
    let nominal = s.lte.tb_bytes_per_tti as f64 * 8.0 * f64::from(s.lte.used_subframes_per_frame) * 100.0;
    let ms = ((to_s - from_s) * 1000.0).round() as u64;
    let scaled: f64 = (0..ms)
        .map(|k| {
            let t = from_s + k as f64 / 1000.0;
            s.lte.capacity_schedule.iter().find(|w| t >= w.start_s && t < w.end_s).map_or(1.0, |w| w.scale)
        })
        .sum();
    nominal * scaled / ms as f64 + s.wifi.rate_bps
}

fn check_report(s: &Scenario, report: &MetricsReport) {
    let expected_records = (s.duration_s * 10.0 - 1e-9).ceil() as usize;
    assert_eq!(report.records.len(), expected_records, "{}", s.name);
    for r in &report.records {
        for f in [r.ooo_raw_fraction, r.ooo_sink_fraction, r.share_wifi] {
            assert!((0.0..=1.0).contains(&f), "{} at {}: {f}", s.name, r.t_s);
        }
        assert!(r.offered_bps >= 0.0 && r.sink_goodput_bps >= 0.0);
    }
    let sum = &report.summary;
    assert_eq!(sum.integrity_failures, 0);
    assert!(sum.conserved(), "{sum:?}");
    assert!(sum.sdus_delivered <= sum.sdus_sourced);
}

#[test]
fn presets_hold_invariants_and_throughput_sanity() {
    for &(name, _) in PRESETS {
        let s = preset(name);
        let report = run(&s).unwrap();
        check_report(&s, &report);

        // Every 1 s window, sliding by one record.
        let recs = &report.records;
        for w in recs.windows(10) {
            let from = w[0].t_s - 0.1;
            let to = w[9].t_s;
            let goodput = w.iter().map(|r| r.sink_goodput_bps).sum::<f64>() / 10.0;
            let offered = w.iter().map(|r| r.offered_bps).sum::<f64>() / 10.0;
            let bound = offered.min(capacity_bps(&s, from, to)) * 1.05;
            assert!(goodput <= bound, "{name} [{from:.1}, {to:.1}): goodput {goodput} > {bound}");
        }
    }
}

#[test]
fn presets_deliver_nearly_everything_under_light_load() {
    let mut s = preset("fig4_4_ramp");
    s.traffic = TrafficProfile::Cbr { rate_bps: 5e6 };
    s.duration_s = 5.0;
    let sum = run(&s).unwrap().summary;
    assert_eq!(sum.lte_buffer_drops + sum.wifi_buffer_drops + sum.reorder_late, 0);
    assert!(sum.in_flight < 10, "{sum:?}");
}

#[test]
fn seed_changes_realization_not_totals() {
    let mut s = preset("table3_3_sweep");
    s.duration_s = 6.0;
    let a = run(&s).unwrap();
    s.seed += 1;
    let b = run(&s).unwrap();
    assert_ne!(a.to_csv(), b.to_csv());
    assert_eq!(a.summary.sdus_sourced, b.summary.sdus_sourced);
}

fn small_scenario() -> impl Strategy<Value = Scenario> {
    (0.0f64..30e6, 1u32..30, any::<u64>(), any::<bool>(), any::<bool>(), 0.2f64..1.0, 200usize..3000, 0.0f64..0.1).prop_map(
        |(rate, tenths, seed, reorder, lwa, factor, sdu, loss)| {
            let mut s = preset("fig4_4_ramp");
            s.traffic = TrafficProfile::Cbr { rate_bps: rate };
            s.duration_s = f64::from(tenths) / 10.0 + 0.05;
            s.seed = seed;
            s.reorder.enabled = reorder;
            s.controller.lwa_enabled = lwa;
            s.controller.factor = factor;
            s.controller.load_frames = 20;
            s.sdu_size_bytes = sdu;
            s.wifi.loss_p = loss;
            s
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_scenarios_conserve_and_repeat(s in small_scenario()) {
        let a = run(&s).unwrap();
        check_report(&s, &a);
        let b = run(&s).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert_eq!(a.summary, b.summary);
    }
}

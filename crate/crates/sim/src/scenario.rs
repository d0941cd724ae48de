//! Scenario files.
//!
//! A scenario is TOML (or the equivalent JSON) with nested tables mirroring
//! [`Scenario`]. Every table except `traffic` may be omitted and falls back to
//! defaults. See `scenarios/` for one commented file per built-in preset.

use std::fmt;
use std::path::Path;

use lwa_core::flowctl::{AdditiveStep, BacklogDelta, ControllerConfig, Link, ProportionalStep, RatioPolicy, compute_threshold};
use lwa_core::reorder::ReorderConfig;
use serde::{Deserialize, Serialize};

use crate::channel::{LteLinkConfig, NS_PER_MS, WifiLinkConfig};
use crate::traffic::{ID_LEN, TrafficProfile};

pub const PRESET_PREFIX: &str = "presets:";

/// Built-in scenarios: `(name, file contents)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig3_9_lte", include_str!("../scenarios/fig3_9_lte.toml")),
    ("fig3_9_wifi", include_str!("../scenarios/fig3_9_wifi.toml")),
    ("fig3_10_lwa", include_str!("../scenarios/fig3_10_lwa.toml")),
    ("table3_3_sweep", include_str!("../scenarios/table3_3_sweep.toml")),
    ("fig4_4_ramp", include_str!("../scenarios/fig4_4_ramp.toml")),
    ("fig4_5_lte_limited", include_str!("../scenarios/fig4_5_lte_limited.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinkChoice {
    #[default]
    Lte,
    Wifi,
}

impl From<LinkChoice> for Link {
    fn from(l: LinkChoice) -> Link {
        match l {
            LinkChoice::Lte => Link::Lte,
            LinkChoice::Wifi => Link::Wifi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatioPolicyChoice {
    /// Shift the share by the normalized backlog growth.
    #[default]
    Additive,
    /// Scale the share by one plus the normalized backlog growth.
    Proportional,
}

impl RatioPolicy for RatioPolicyChoice {
    fn next_share(&self, share: f64, delta: BacklogDelta, base: f64, max_step: f64) -> f64 {
        match self {
            RatioPolicyChoice::Additive => AdditiveStep.next_share(share, delta, base, max_step),
            RatioPolicyChoice::Proportional => ProportionalStep.next_share(share, delta, base, max_step),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSettings {
    pub peak_lte_bps: f64,
    pub factor: f64,
    pub base_b: f64,
    pub max_step: f64,
    pub sensing_frames: u64,
    pub load_frames: u64,
    pub switch_link: LinkChoice,
    pub lwa_enabled: bool,
    pub hysteresis_bytes: u64,
    pub policy: RatioPolicyChoice,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        ControllerSettings {
            peak_lte_bps: 14e6,
            factor: 0.8,
            base_b: 1000.0,
            max_step: 0.25,
            sensing_frames: 10,
            load_frames: 100,
            switch_link: LinkChoice::Lte,
            lwa_enabled: true,
            hysteresis_bytes: 0,
            policy: RatioPolicyChoice::Additive,
        }
    }
}

impl ControllerSettings {
    /// Threshold scaled to the load window length.
    pub fn controller_config(&self) -> Result<ControllerConfig, ConfigError> {
        let per_second = compute_threshold(self.peak_lte_bps, self.factor).map_err(|e| ConfigError::new("controller", e.to_string()))?;
        let threshold_bytes = per_second * self.load_frames / 100;
        Ok(ControllerConfig {
            threshold_bytes: threshold_bytes.max(1),
            hysteresis_bytes: self.hysteresis_bytes,
            base_packets: self.base_b,
            max_step: self.max_step,
            sensing_frames: self.sensing_frames,
            load_frames: self.load_frames,
            switch_link: self.switch_link.into(),
            lwa_enabled: self.lwa_enabled,
            initial_share: 0.5,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReorderSettings {
    pub enabled: bool,
    pub window_size: usize,
    pub hold_timer_ms: f64,
}

impl Default for ReorderSettings {
    fn default() -> Self {
        ReorderSettings { enabled: true, window_size: 64, hold_timer_ms: 20.0 }
    }
}

impl ReorderSettings {
    /// Config with the hold timer in nanoseconds.
    pub fn reorder_config(&self) -> ReorderConfig {
        ReorderConfig { window_size: self.window_size, hold_timer: (self.hold_timer_ms * NS_PER_MS as f64).round() as u64 }
    }
}

fn default_sdu_size() -> usize {
    1400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sdu_size")]
    pub sdu_size_bytes: usize,
    pub traffic: TrafficProfile,
    #[serde(default)]
    pub lte: LteLinkConfig,
    #[serde(default)]
    pub wifi: WifiLinkConfig,
    #[serde(default)]
    pub controller: ControllerSettings,
    #[serde(default)]
    pub reorder: ReorderSettings,
}

/// An invalid or unreadable scenario, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() { write!(f, "{}", self.message) } else { write!(f, "{}: {}", self.path, self.message) }
    }
}

impl std::error::Error for ConfigError {}

fn path_of(p: &serde_path_to_error::Path) -> String {
    let s = p.to_string();
    if s == "." { String::new() } else { s }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Scenario, ConfigError> {
        let de = toml::de::Deserializer::parse(s).map_err(|e| ConfigError::new("", e.to_string()))?;
        let scenario: Scenario =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::new(path_of(e.path()), e.inner().message().to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_json_str(s: &str) -> Result<Scenario, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let scenario: Scenario =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::new(path_of(e.path()), e.inner().to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn preset(name: &str) -> Result<Scenario, ConfigError> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| ConfigError::new("", format!("unknown preset `{name}`")))?;
        Scenario::from_toml_str(text)
    }

    /// `presets:<name>` or a path to a `.toml` / `.json` file.
    pub fn load(spec: &str) -> Result<Scenario, ConfigError> {
        if let Some(name) = spec.strip_prefix(PRESET_PREFIX) {
            return Scenario::preset(name);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{spec}: {e}")))?;
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if json { Scenario::from_json_str(&text) } else { Scenario::from_toml_str(&text) }
    }

    pub fn duration_ms(&self) -> u64 {
        (self.duration_s * 1000.0).round() as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, path: &str, msg: &str) -> Result<(), ConfigError> {
            if ok { Ok(()) } else { Err(ConfigError::new(path, msg)) }
        }
        fn finite_nonneg(x: f64) -> bool {
            x.is_finite() && x >= 0.0
        }

        check(self.duration_s.is_finite() && self.duration_s > 0.0, "duration_s", "must be positive")?;
        check(self.duration_ms() >= 1, "duration_s", "must be at least 1 ms")?;
        check(
            (ID_LEN..=usize::from(lwa_core::framing::MAX_LI) - 2).contains(&self.sdu_size_bytes),
            "sdu_size_bytes",
            "must lie in 8..=32765",
        )?;

        match &self.traffic {
            TrafficProfile::Cbr { rate_bps } => check(finite_nonneg(*rate_bps), "traffic.rate_bps", "must be >= 0")?,
            TrafficProfile::Ramp { start_bps, step_bps, period_s, max_bps } => {
                check(finite_nonneg(*start_bps), "traffic.start_bps", "must be >= 0")?;
                check(step_bps.is_finite(), "traffic.step_bps", "must be finite")?;
                check(period_s.is_finite() && *period_s >= 0.001, "traffic.period_s", "must be at least 0.001")?;
                if let Some(m) = max_bps {
                    check(finite_nonneg(*m), "traffic.max_bps", "must be >= 0")?;
                }
            }
            TrafficProfile::Schedule { steps } => {
                check(!steps.is_empty(), "traffic.steps", "must not be empty")?;
                for (i, s) in steps.iter().enumerate() {
                    check(finite_nonneg(s.t_s), &format!("traffic.steps[{i}].t_s"), "must be >= 0")?;
                    check(finite_nonneg(s.rate_bps), &format!("traffic.steps[{i}].rate_bps"), "must be >= 0")?;
                    if i > 0 {
                        check(s.t_s > steps[i - 1].t_s, &format!("traffic.steps[{i}].t_s"), "steps must be in increasing time order")?;
                    }
                }
            }
        }

        let lte = &self.lte;
        check((1..=10).contains(&lte.used_subframes_per_frame), "lte.used_subframes_per_frame", "must lie in 1..=10")?;
        check(lte.tb_bytes_per_tti >= lwa_core::framing::MIN_TB_SIZE, "lte.tb_bytes_per_tti", "must be at least 5")?;
        check(lte.max_concat >= 1, "lte.max_concat", "must be at least 1")?;
        check(lte.queue_limit_pkts >= 1, "lte.queue_limit_pkts", "must be at least 1")?;
        check(lte.delay.mean_ms.is_finite() && lte.delay.mean_ms >= 0.0, "lte.delay.mean_ms", "must be >= 0")?;
        check(
            finite_nonneg(lte.delay.jitter_ms) && lte.delay.jitter_ms <= lte.delay.mean_ms,
            "lte.delay.jitter_ms",
            "must lie in 0..=mean_ms",
        )?;
        for (i, w) in lte.capacity_schedule.iter().enumerate() {
            let p = format!("lte.capacity_schedule[{i}]");
            check(finite_nonneg(w.start_s) && w.end_s.is_finite() && w.end_s > w.start_s, &p, "needs 0 <= start_s < end_s")?;
            check((0.0..=1.0).contains(&w.scale), &format!("{p}.scale"), "must lie in [0, 1]")?;
        }

        let wifi = &self.wifi;
        check(wifi.rate_bps.is_finite() && wifi.rate_bps > 0.0, "wifi.rate_bps", "must be positive")?;
        check((0.0..1.0).contains(&wifi.loss_p), "wifi.loss_p", "must lie in [0, 1)")?;
        check(wifi.queue_limit_pkts >= 1, "wifi.queue_limit_pkts", "must be at least 1")?;
        let d = &wifi.delay;
        check(finite_nonneg(d.min_ms), "wifi.delay.min_ms", "must be >= 0")?;
        check(d.mode_ms.is_finite() && d.mode_ms > d.min_ms, "wifi.delay.mode_ms", "must exceed min_ms")?;
        check(d.sigma.is_finite() && d.sigma > 0.0, "wifi.delay.sigma", "must be positive")?;
        check(d.tail_max_ms.is_finite() && d.tail_max_ms > d.mode_ms, "wifi.delay.tail_max_ms", "must exceed mode_ms")?;

        let c = &self.controller;
        check(c.peak_lte_bps.is_finite() && c.peak_lte_bps > 0.0, "controller.peak_lte_bps", "must be positive")?;
        check(c.factor > 0.0 && c.factor <= 1.0, "controller.factor", "must lie in (0, 1]")?;
        check(c.base_b.is_finite() && c.base_b > 0.0, "controller.base_b", "must be positive")?;
        check((0.0..=1.0).contains(&c.max_step), "controller.max_step", "must lie in [0, 1]")?;
        check(c.sensing_frames >= 1, "controller.sensing_frames", "must be at least 1")?;
        check(c.load_frames >= 1, "controller.load_frames", "must be at least 1")?;
        let cfg = c.controller_config()?;
        check(cfg.hysteresis_bytes < cfg.threshold_bytes, "controller.hysteresis_bytes", "must be below the threshold")?;

        let r = &self.reorder;
        check((1..2048).contains(&r.window_size), "reorder.window_size", "must lie in 1..2048")?;
        check(finite_nonneg(r.hold_timer_ms), "reorder.hold_timer_ms", "must be >= 0")?;
        Ok(())
    }
}

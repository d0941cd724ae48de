//! eNB flow controller.
//!
//! Offered load is summed over a load window (100 frames = 1 s). Below the
//! threshold the bearer is switched onto a single link; at or above it the
//! bearer is split. While split, the per-link transmit queues are sampled every
//! sensing period (10 frames) and a link whose queue grew has traffic shifted
//! away from it, by an amount proportional to the growth.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Switch,
    Lwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Lte,
    Wifi,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Switch => "switch",
            Mode::Lwa => "lwa",
        })
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Lte => "lte",
            Link::Wifi => "wifi",
        })
    }
}

/// `Switch` iff `load < threshold`.
pub fn select_mode(load: u64, threshold: u64) -> Mode {
    if load < threshold { Mode::Switch } else { Mode::Lwa }
}

/// Load threshold in bytes per one-second window: `peak_bps * factor / 8`.
pub fn compute_threshold(peak_lte_bps: f64, factor: f64) -> Result<u64, FlowError> {
    if !(peak_lte_bps > 0.0 && peak_lte_bps.is_finite()) {
        return Err(FlowError::InvalidPeak);
    }
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(FlowError::InvalidFactor);
    }
    let bytes = peak_lte_bps * factor / 8.0;
    Ok((bytes + 0.5) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowError {
    InvalidPeak,
    InvalidFactor,
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::InvalidPeak => f.write_str("peak LTE rate must be positive"),
            FlowError::InvalidFactor => f.write_str("threshold factor must lie in (0, 1]"),
        }
    }
}

impl core::error::Error for FlowError {}

/// Queue growth over one sensing period, in packets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BacklogDelta {
    pub d_lte: i64,
    pub d_wifi: i64,
}

/// How a backlog delta moves the WiFi share.
pub trait RatioPolicy {
    fn next_share(&self, share_wifi: f64, delta: BacklogDelta, base: f64, max_step: f64) -> f64;
}

fn step(growth: i64, base: f64, max_step: f64) -> f64 {
    (growth as f64 / base).clamp(0.0, max_step)
}

/// `share ± clamp(d / base, 0, max_step)` toward the link that is keeping up.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveStep;

impl RatioPolicy for AdditiveStep {
    fn next_share(&self, share: f64, d: BacklogDelta, base: f64, max_step: f64) -> f64 {
        if d.d_lte > 0 && d.d_wifi <= 0 {
            (share + step(d.d_lte, base, max_step)).min(1.0)
        } else if d.d_wifi > 0 && d.d_lte <= 0 {
            (share - step(d.d_wifi, base, max_step)).max(0.0)
        } else {
            share
        }
    }
}

/// Scales the current share by `1 ± step` instead of shifting it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProportionalStep;

impl RatioPolicy for ProportionalStep {
    fn next_share(&self, share: f64, d: BacklogDelta, base: f64, max_step: f64) -> f64 {
        if d.d_lte > 0 && d.d_wifi <= 0 {
            // An all-LTE split has nothing to scale.
            let from = share.max(f64::EPSILON);
            (from * (1.0 + step(d.d_lte, base, max_step))).min(1.0)
        } else if d.d_wifi > 0 && d.d_lte <= 0 {
            (share * (1.0 - step(d.d_wifi, base, max_step))).max(0.0)
        } else {
            share
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Bytes per load window at or above which the bearer is split.
    pub threshold_bytes: u64,
    /// Split mode is left only when the window load drops below
    /// `threshold_bytes - hysteresis_bytes`.
    pub hysteresis_bytes: u64,
    /// Packets of queue growth that move the share by 1.0.
    pub base_packets: f64,
    pub max_step: f64,
    pub sensing_frames: u64,
    pub load_frames: u64,
    pub switch_link: Link,
    /// When false the controller never leaves switch mode.
    pub lwa_enabled: bool,
    /// WiFi share on every entry into split mode.
    pub initial_share: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            threshold_bytes: 1_400_000,
            hysteresis_bytes: 0,
            base_packets: 1000.0,
            max_step: 0.25,
            sensing_frames: 10,
            load_frames: 100,
            switch_link: Link::Lte,
            lwa_enabled: true,
            initial_share: 0.5,
        }
    }
}

/// Snapshot of the controller's decision state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub mode: Mode,
    pub l_i: u64,
    pub l_th: u64,
    pub share_wifi: f64,
    pub wrr_credit: f64,
    pub q_lte_prev: Option<u64>,
    pub q_wifi_prev: Option<u64>,
    pub frame_clock: u64,
    pub base_b: f64,
    pub switch_link: Link,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    q_lte: u64,
    q_wifi: u64,
    frame: u64,
}

#[derive(Debug, Clone)]
pub struct FlowController<P = AdditiveStep> {
    config: ControllerConfig,
    policy: P,
    mode: Mode,
    load: u64,
    window_start: u64,
    last_window_load: Option<u64>,
    frame_clock: u64,
    share_wifi: f64,
    wrr_credit: f64,
    snapshot: Option<Snapshot>,
}

impl FlowController<AdditiveStep> {
    pub fn new(config: ControllerConfig) -> Self {
        Self::with_policy(config, AdditiveStep)
    }
}

impl<P: RatioPolicy> FlowController<P> {
    pub fn with_policy(config: ControllerConfig, policy: P) -> Self {
        assert!(config.threshold_bytes > 0);
        assert!(config.load_frames > 0 && config.sensing_frames > 0);
        assert!((0.0..=1.0).contains(&config.initial_share));
        FlowController {
            config,
            policy,
            mode: Mode::Switch,
            load: 0,
            window_start: 0,
            last_window_load: None,
            frame_clock: 0,
            share_wifi: config.initial_share,
            wrr_credit: 0.0,
            snapshot: None,
        }
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn share_wifi(&self) -> f64 {
        self.share_wifi
    }

    /// Bytes accumulated in the current load window.
    pub fn window_load(&self) -> u64 {
        self.load
    }

    /// Total of the last completed load window.
    pub fn last_window_load(&self) -> Option<u64> {
        self.last_window_load
    }

    pub fn state(&self) -> ControllerState {
        ControllerState {
            mode: self.mode,
            l_i: self.load,
            l_th: self.config.threshold_bytes,
            share_wifi: self.share_wifi,
            wrr_credit: self.wrr_credit,
            q_lte_prev: self.snapshot.map(|s| s.q_lte),
            q_wifi_prev: self.snapshot.map(|s| s.q_wifi),
            frame_clock: self.frame_clock,
            base_b: self.config.base_packets,
            switch_link: self.config.switch_link,
        }
    }

    /// Add offered bytes seen at `frame`. When `frame` has crossed into a new
    /// load window the finished window is evaluated first, and the resulting
    /// mode is returned.
    pub fn accumulate_load(&mut self, bytes: u64, frame: u64) -> Option<Mode> {
        debug_assert!(frame >= self.frame_clock, "frame clock went backwards");
        self.frame_clock = frame;
        let mut decision = None;
        while frame >= self.window_start + self.config.load_frames {
            let load = core::mem::take(&mut self.load);
            self.last_window_load = Some(load);
            decision = Some(self.evaluate(load));
            self.window_start += self.config.load_frames;
        }
        self.load += bytes;
        decision
    }

    fn evaluate(&mut self, load: u64) -> Mode {
        let th = self.config.threshold_bytes;
        let next = if !self.config.lwa_enabled {
            Mode::Switch
        } else if self.mode == Mode::Lwa {
            select_mode(load, th.saturating_sub(self.config.hysteresis_bytes))
        } else {
            select_mode(load, th)
        };
        if next != self.mode {
            self.enter(next);
        }
        next
    }

    fn enter(&mut self, mode: Mode) {
        self.mode = mode;
        self.snapshot = None;
        if mode == Mode::Lwa {
            self.share_wifi = self.config.initial_share;
            self.wrr_credit = 0.5;
        }
    }

    /// Sample the queue lengths. Returns the growth since the previous sample
    /// once per sensing period; the first call after entering split mode only
    /// records the baseline.
    pub fn sense_links(&mut self, q_lte: u64, q_wifi: u64, frame: u64) -> Option<BacklogDelta> {
        if self.mode != Mode::Lwa {
            return None;
        }
        let Some(prev) = self.snapshot else {
            self.snapshot = Some(Snapshot { q_lte, q_wifi, frame });
            return None;
        };
        if frame < prev.frame + self.config.sensing_frames {
            return None;
        }
        self.snapshot = Some(Snapshot { q_lte, q_wifi, frame });
        Some(BacklogDelta { d_lte: q_lte as i64 - prev.q_lte as i64, d_wifi: q_wifi as i64 - prev.q_wifi as i64 })
    }

    /// Apply one backlog delta to the WiFi share. No effect outside split mode.
    pub fn update_ratio(&mut self, delta: BacklogDelta) -> f64 {
        if self.mode == Mode::Lwa {
            let next = self.policy.next_share(self.share_wifi, delta, self.config.base_packets, self.config.max_step);
            self.share_wifi = next.clamp(0.0, 1.0);
        }
        self.share_wifi
    }

    /// Pick the link for the next packet. In split mode the WiFi share is
    /// quantized by error diffusion.
    pub fn route(&mut self) -> Link {
        match self.mode {
            Mode::Switch => self.config.switch_link,
            Mode::Lwa => {
                self.wrr_credit += self.share_wifi;
                if self.wrr_credit >= 1.0 {
                    self.wrr_credit -= 1.0;
                    Link::Wifi
                } else {
                    Link::Lte
                }
            }
        }
    }
}

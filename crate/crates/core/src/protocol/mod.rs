//! AP-side phone tracking: per-MAC Δt windows, active/inactive
//! classification, RTS scheduling and routing of each window to a
//! localizer.

mod dispatch;
mod monitor;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::airsim::{FrameEvent, FrameKind, Mac};
use crate::error::{Error, Result};
use crate::fingerprint::{ApId, FingerprintVector, Location};

pub use dispatch::{
    dispatch, window_csi, window_fingerprint, Algorithm, DispatchOutcome, Fix, FixSource, Localizers,
};
pub use monitor::{CommandLog, LogAction, LogEntry, Monitor, MonitorOutput};

/// Default localization interval, seconds.
pub const DEFAULT_DELTA_T: f64 = 1.0;
/// Fingerprints kept per track for sequence localizers.
pub const HISTORY_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Unknown,
    Inactive,
    Active,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Unknown => "unknown",
            Classification::Inactive => "inactive",
            Classification::Active => "active",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtsSchedule {
    /// Seconds between ticks of one AP.
    pub interval: f64,
    /// RTS frames per tick.
    pub burst: usize,
}

impl Default for RtsSchedule {
    fn default() -> Self {
        Self { interval: 0.2, burst: 1 }
    }
}

impl RtsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval > 0.0) || self.burst == 0 {
            return Err(Error::Config(format!(
                "RTS schedule needs interval > 0 and burst >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RtsCommand {
    pub t: f64,
    pub ap: ApId,
    pub mac: Mac,
    pub burst: usize,
}

/// A closed Δt window that held at least one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Trigger {
    pub mac: Mac,
    pub window_start: f64,
    pub window_end: f64,
    pub frames: Vec<FrameEvent>,
    pub classification: Classification,
}

#[derive(Clone, Debug)]
pub struct TrackState {
    pub mac: Mac,
    pub classification: Classification,
    pub last_frame_t: f64,
    pub frames_in_window: usize,
    pub rts_enabled: bool,
    pub prev_estimate: Option<Location>,
    pub delta_t: f64,
    /// Windows are `[origin + kΔt, origin + (k+1)Δt)`.
    pub origin: f64,
    window_index: u64,
    window_frames: Vec<FrameEvent>,
    /// Data-frame times inside the classification horizon.
    data_times: VecDeque<f64>,
    next_tick: u64,
    /// Most recent window fingerprints, oldest first.
    pub history: VecDeque<FingerprintVector>,
}

impl TrackState {
    /// Track opened by a probe request from `mac` at `t`.
    pub fn new(mac: Mac, t: f64, delta_t: f64, rts_enabled: bool) -> Result<Self> {
        if !(delta_t > 0.0) {
            return Err(Error::Config(format!("Δt must be positive, got {delta_t}")));
        }
        Ok(Self {
            mac,
            classification: Classification::Unknown,
            last_frame_t: t,
            frames_in_window: 0,
            rts_enabled,
            prev_estimate: None,
            delta_t,
            origin: t,
            window_index: 0,
            window_frames: Vec::new(),
            data_times: VecDeque::new(),
            next_tick: 0,
            history: VecDeque::new(),
        })
    }

    /// Classification horizon, two windows.
    pub fn horizon(&self) -> f64 {
        2.0 * self.delta_t
    }

    fn bound(&self, k: u64) -> f64 {
        self.origin + k as f64 * self.delta_t
    }

    pub fn window_start(&self) -> f64 {
        self.bound(self.window_index)
    }

    pub fn window_end(&self) -> f64 {
        self.bound(self.window_index + 1)
    }

    fn index_of(&self, t: f64) -> u64 {
        let mut k = ((t - self.origin) / self.delta_t).floor().max(0.0) as u64;
        // keep the index consistent with `bound` under rounding
        while self.bound(k + 1) <= t {
            k += 1;
        }
        while k > 0 && self.bound(k) > t {
            k -= 1;
        }
        k
    }

    /// Close every window that ends at or before `t`. Only the current
    /// window can hold frames, so at most one trigger results.
    pub fn advance_to(&mut self, t: f64) -> Option<Trigger> {
        let k = self.index_of(t);
        if k <= self.window_index {
            return None;
        }
        let end = self.window_end();
        self.prune(end);
        let horizon = self.horizon();
        let class = classify(self.data_times.make_contiguous(), end, horizon);
        let frames = std::mem::take(&mut self.window_frames);
        let trigger = (!frames.is_empty()).then(|| Trigger {
            mac: self.mac,
            window_start: self.window_start(),
            window_end: end,
            frames,
            classification: class,
        });
        self.window_index = k;
        self.frames_in_window = 0;
        let start = self.window_start();
        self.prune(start);
        self.classification = classify(self.data_times.make_contiguous(), start, horizon);
        trigger
    }

    fn prune(&mut self, now: f64) {
        let lo = now - self.horizon();
        while self.data_times.front().is_some_and(|&d| d < lo) {
            self.data_times.pop_front();
        }
    }

    pub fn push_history(&mut self, fp: FingerprintVector) {
        if self.history.len() == HISTORY_LEN {
            self.history.pop_front();
        }
        self.history.push_back(fp);
    }
}

/// Active iff a data frame arrived in `[now - horizon, now)`.
pub fn classify(data_times: &[f64], now: f64, horizon: f64) -> Classification {
    if data_times.iter().any(|&d| d >= now - horizon && d < now) {
        Classification::Active
    } else {
        Classification::Inactive
    }
}

/// Feed one frame of this track. Returns the trigger of the window the
/// frame's arrival closed, if that window held frames.
pub fn on_frame(state: &mut TrackState, event: &FrameEvent) -> Result<Option<Trigger>> {
    if event.mac != state.mac {
        return Err(Error::MacMismatch {
            expected: state.mac.to_string(),
            got: event.mac.to_string(),
        });
    }
    if event.t < state.last_frame_t {
        return Err(Error::OutOfOrder {
            t: event.t,
            last: state.last_frame_t,
        });
    }
    let trigger = state.advance_to(event.t);
    state.last_frame_t = event.t;
    state.frames_in_window += 1;
    if event.kind == FrameKind::Data {
        state.data_times.push_back(event.t);
        state.classification = Classification::Active;
    }
    state.window_frames.push(event.clone());
    Ok(trigger)
}

/// RTS commands due before `until`. Ticks are spread evenly across the
/// `aps`, one AP per tick in turn, so each AP fires every
/// `schedule.interval`. Ticks falling while the track is active are
/// consumed without a command.
pub fn rts_controller(state: &mut TrackState, schedule: &RtsSchedule, aps: &[ApId], until: f64) -> Vec<RtsCommand> {
    let mut out = Vec::new();
    if !state.rts_enabled || aps.is_empty() {
        return out;
    }
    let s = aps.len();
    let step = schedule.interval / s as f64;
    loop {
        let t = state.origin + state.next_tick as f64 * step;
        if t >= until {
            break;
        }
        if state.classification != Classification::Active {
            out.push(RtsCommand {
                t,
                ap: aps[state.next_tick as usize % s],
                mac: state.mac,
                burst: schedule.burst,
            });
        }
        state.next_tick += 1;
    }
    out
}

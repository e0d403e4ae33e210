use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{on_frame, rts_controller, RtsCommand, RtsSchedule, TrackState, Trigger};
use crate::airsim::{FrameEvent, FrameKind, Mac};
use crate::error::Result;
use crate::fingerprint::{ApId, Environment};
use crate::textio::sig9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogAction {
    TrackCreated,
    Rts,
    Trigger,
    Classify,
    Fix,
    NoFix,
}

impl LogAction {
    pub fn as_str(self) -> &'static str {
        match self {
            LogAction::TrackCreated => "track_created",
            LogAction::Rts => "rts",
            LogAction::Trigger => "trigger",
            LogAction::Classify => "classify",
            LogAction::Fix => "fix",
            LogAction::NoFix => "no_fix",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub t: f64,
    pub mac: Mac,
    pub action: LogAction,
    pub detail: String,
}

/// Replayable trigger/command log, rendered as `t,mac,action,detail`.
#[derive(Clone, Debug, Default)]
pub struct CommandLog {
    pub entries: Vec<LogEntry>,
}

impl CommandLog {
    pub fn record(&mut self, t: f64, mac: Mac, action: LogAction, detail: impl Into<String>) {
        self.entries.push(LogEntry {
            t,
            mac,
            action,
            detail: detail.into(),
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mac,action,detail\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", sig9(e.t), e.mac, e.action.as_str(), e.detail);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MonitorOutput {
    Rts(RtsCommand),
    Trigger(Trigger),
}

/// All tracks seen by the AP group. Tracks open on a probe request; other
/// frames from unknown MACs are dropped.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub delta_t: f64,
    pub schedule: RtsSchedule,
    pub rts_enabled: bool,
    rts_aps: Vec<ApId>,
    tracks: BTreeMap<Mac, TrackState>,
    log: CommandLog,
}

impl Monitor {
    pub fn new(env: &Environment, delta_t: f64, schedule: RtsSchedule, rts_enabled: bool) -> Result<Self> {
        schedule.validate()?;
        TrackState::new(Mac([0; 6]), 0.0, delta_t, false)?;
        Ok(Self {
            delta_t,
            schedule,
            rts_enabled,
            rts_aps: env.rts_capable_aps().map(|a| a.id).collect(),
            tracks: BTreeMap::new(),
            log: CommandLog::default(),
        })
    }

    pub fn track(&self, mac: &Mac) -> Option<&TrackState> {
        self.tracks.get(mac)
    }

    pub fn track_mut(&mut self, mac: &Mac) -> Option<&mut TrackState> {
        self.tracks.get_mut(mac)
    }

    pub fn tracks(&self) -> impl Iterator<Item = &TrackState> {
        self.tracks.values()
    }

    pub fn log(&self) -> &CommandLog {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut CommandLog {
        &mut self.log
    }

    /// Run the track's clock to `t` one boundary at a time: RTS before each
    /// boundary under the classification in force, then close the window.
    fn advance(&mut self, mac: Mac, t: f64, out: &mut Vec<MonitorOutput>) {
        let st = self.tracks.get_mut(&mac).expect("caller checked");
        while t >= st.window_end() {
            let end = st.window_end();
            let before = st.classification;
            let cmds = rts_controller(st, &self.schedule, &self.rts_aps, end);
            let trig = st.advance_to(end);
            Self::emit(&mut self.log, cmds, out);
            if let Some(tr) = trig {
                self.log.record(
                    tr.window_end,
                    mac,
                    LogAction::Trigger,
                    format!("frames={} class={}", tr.frames.len(), tr.classification.as_str()),
                );
                out.push(MonitorOutput::Trigger(tr));
            }
            if st.classification != before {
                self.log.record(end, mac, LogAction::Classify, st.classification.as_str());
            }
        }
        let cmds = rts_controller(st, &self.schedule, &self.rts_aps, t);
        Self::emit(&mut self.log, cmds, out);
    }

    fn emit(log: &mut CommandLog, cmds: Vec<RtsCommand>, out: &mut Vec<MonitorOutput>) {
        for c in cmds {
            log.record(c.t, c.mac, LogAction::Rts, format!("ap={} burst={}", c.ap, c.burst));
            out.push(MonitorOutput::Rts(c));
        }
    }

    /// Process one frame in global time order.
    pub fn process(&mut self, ev: &FrameEvent) -> Result<Vec<MonitorOutput>> {
        let mut out = Vec::new();
        if !self.tracks.contains_key(&ev.mac) {
            if ev.kind != FrameKind::ProbeRequest {
                return Ok(out);
            }
            let st = TrackState::new(ev.mac, ev.t, self.delta_t, self.rts_enabled)?;
            self.tracks.insert(ev.mac, st);
            self.log.record(ev.t, ev.mac, LogAction::TrackCreated, "probe_request");
        }
        self.advance(ev.mac, ev.t, &mut out);
        let st = self.tracks.get_mut(&ev.mac).expect("track exists");
        let before = st.classification;
        on_frame(st, ev)?;
        if st.classification != before {
            let class = st.classification;
            self.log.record(ev.t, ev.mac, LogAction::Classify, class.as_str());
        }
        Ok(out)
    }

    /// Advance every track to `t`, closing the windows that end by then.
    pub fn finish(&mut self, t: f64) -> Vec<MonitorOutput> {
        let mut out = Vec::new();
        let macs: Vec<Mac> = self.tracks.keys().copied().collect();
        for mac in macs {
            if self.tracks[&mac].last_frame_t <= t {
                self.advance(mac, t, &mut out);
            }
        }
        out
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Classification, TrackState, Trigger};
use crate::airsim::FrameEvent;
use crate::csi::{refine, CsiObservation, CsiScan, CsiTemplates, RefineConfig};
use crate::error::{Error, Result};
use crate::fingerprint::{ApId, FingerprintDatabase, FingerprintVector, Location};
use crate::rnn::LstmLocalizer;
use crate::ssp::{estimate, top_k, SspLocalizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// RSSI-only SSP for every window.
    Ssp,
    /// LSTM over the track's recent fingerprints for every window.
    PmimoLstm,
    /// SSP for inactive windows; SSP top-K refined by CSI for active ones.
    TwoStep,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ssp => "ssp",
            Algorithm::PmimoLstm => "pmimo_lstm",
            Algorithm::TwoStep => "two_step",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssp" => Ok(Algorithm::Ssp),
            "pmimo_lstm" | "lstm" => Ok(Algorithm::PmimoLstm),
            "two_step" => Ok(Algorithm::TwoStep),
            _ => Err(Error::Config(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Everything a window may be routed to.
#[derive(Clone, Copy, Debug)]
pub struct Localizers<'a> {
    pub db: &'a FingerprintDatabase,
    pub ssp: &'a SspLocalizer,
    pub templates: Option<&'a CsiTemplates>,
    pub refine: RefineConfig,
    pub lstm: Option<&'a LstmLocalizer>,
    pub algorithm: Algorithm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixSource {
    Ssp,
    TwoStep,
    /// Two-step was requested but the window lacked usable CSI.
    CsiFallback,
    Lstm,
}

impl FixSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FixSource::Ssp => "ssp",
            FixSource::TwoStep => "two_step",
            FixSource::CsiFallback => "csi_fallback",
            FixSource::Lstm => "lstm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fix {
    pub t: f64,
    pub location: Location,
    pub source: FixSource,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DispatchOutcome {
    Fix(Fix),
    NoFix { t: f64, reason: String },
}

/// Mean RSSI per AP over the window's frames; APs that heard nothing are
/// missing.
pub fn window_fingerprint(frames: &[FrameEvent], ap_count: usize) -> Result<FingerprintVector> {
    let mut sum = vec![0.0; ap_count];
    let mut n = vec![0usize; ap_count];
    for ev in frames {
        for (&ap, obs) in &ev.ap_observations {
            if ap >= ap_count {
                return Err(Error::UnknownAp(ap));
            }
            sum[ap] += obs.rssi;
            n[ap] += 1;
        }
    }
    FingerprintVector::rssi(
        sum.into_iter()
            .zip(n)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect(),
    )
}

/// CSI scans of the window's frames, per AP in arrival order.
pub fn window_csi(frames: &[FrameEvent]) -> BTreeMap<ApId, Vec<CsiScan>> {
    let mut out: BTreeMap<ApId, Vec<CsiScan>> = BTreeMap::new();
    for ev in frames {
        for (&ap, obs) in &ev.ap_observations {
            if let Some(scan) = &obs.csi {
                out.entry(ap).or_default().push(scan.clone());
            }
        }
    }
    out
}

/// Localize one closed window and record the estimate on the track.
pub fn dispatch(state: &mut TrackState, trigger: &Trigger, loc: &Localizers<'_>) -> Result<DispatchOutcome> {
    let t = trigger.window_end;
    if trigger.frames.is_empty() {
        return Ok(DispatchOutcome::NoFix {
            t,
            reason: "empty window".into(),
        });
    }
    let fp = window_fingerprint(&trigger.frames, loc.db.env().ap_count())?;
    if fp.observed().next().is_none() {
        return Ok(DispatchOutcome::NoFix {
            t,
            reason: "no AP observed the window".into(),
        });
    }
    state.push_history(fp.clone());
    let prev = state.prev_estimate;

    let (location, source) = match loc.algorithm {
        Algorithm::PmimoLstm => {
            let lstm = loc
                .lstm
                .ok_or_else(|| Error::Config("pmimo_lstm needs a trained model".into()))?;
            let history: Vec<FingerprintVector> = state.history.iter().cloned().collect();
            (lstm.locate(&history)?, FixSource::Lstm)
        }
        Algorithm::TwoStep if trigger.classification == Classification::Active => {
            let templates = loc
                .templates
                .ok_or_else(|| Error::Config("two_step needs CSI templates".into()))?;
            let post = loc.ssp.posterior(loc.db, &fp, prev.as_ref())?;
            let candidates = top_k(&post, loc.ssp.k);
            let obs_csi = CsiObservation::from_scans(&window_csi(&trigger.frames));
            match refine(&candidates, &fp, &obs_csi, loc.db, templates, &loc.refine) {
                Ok((_, l)) => (l, FixSource::TwoStep),
                Err(Error::CsiFallback) => (estimate(&post, loc.db, loc.ssp.k), FixSource::CsiFallback),
                Err(e) => return Err(e),
            }
        }
        Algorithm::Ssp | Algorithm::TwoStep => {
            let (_, l) = loc.ssp.locate(loc.db, &fp, prev.as_ref())?;
            (l, FixSource::Ssp)
        }
    };
    state.prev_estimate = Some(location);
    Ok(DispatchOutcome::Fix(Fix { t, location, source }))
}

//! Event-stream dump.
//!
//! The main file has one row per (frame, AP): `t,kind,mac,ap_id,rssi[,csi_ref]`.
//! CSI lives in a sidecar with rows `csi_ref,ap_id,timestamp,a0..a50,p0..p50`.
//! Rows of one frame are adjacent; a new frame starts whenever `(t, kind, mac)`
//! changes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::frames::{ApObservation, FrameEvent, Mac};
use crate::csi::{CsiScan, SUBCARRIERS};
use crate::error::{Error, Result};
use crate::textio::{parse_f64, sig9};

pub const EVENTS_HEADER: &str = "t,kind,mac,ap_id,rssi,csi_ref";
pub const CSI_HEADER_PREFIX: &str = "csi_ref,ap_id,timestamp";

/// Render events and their CSI sidecar.
pub fn write_events(events: &[FrameEvent]) -> (String, String) {
    let mut main = format!("{EVENTS_HEADER}\n");
    let mut side = String::from(CSI_HEADER_PREFIX);
    for k in 0..SUBCARRIERS {
        let _ = write!(side, ",a{k}");
    }
    for k in 0..SUBCARRIERS {
        let _ = write!(side, ",p{k}");
    }
    side.push('\n');
    let mut next_ref = 0usize;
    for ev in events {
        for (ap, obs) in &ev.ap_observations {
            let _ = write!(main, "{},{},{},{ap},{}", sig9(ev.t), ev.kind, ev.mac, sig9(obs.rssi));
            if let Some(scan) = &obs.csi {
                let _ = write!(main, ",{next_ref}");
                let _ = write!(side, "{next_ref},{},{}", scan.ap, sig9(scan.timestamp));
                for v in scan.amplitudes.iter().chain(&scan.phases) {
                    let _ = write!(side, ",{}", sig9(*v));
                }
                side.push('\n');
                next_ref += 1;
            }
            main.push('\n');
        }
    }
    (main, side)
}

fn parse_sidecar(text: &str, origin: &Path) -> Result<BTreeMap<usize, CsiScan>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 + 2 * SUBCARRIERS {
            return Err(Error::parse(origin, n, format!("expected {} fields, found {}", 3 + 2 * SUBCARRIERS, f.len())));
        }
        let id: usize = f[0].parse().map_err(|_| Error::parse(origin, n, "bad csi_ref"))?;
        let ap: usize = f[1].parse().map_err(|_| Error::parse(origin, n, "bad ap_id"))?;
        let vals = f[2..]
            .iter()
            .map(|v| parse_f64(v).ok_or_else(|| Error::parse(origin, n, format!("bad number `{v}`"))))
            .collect::<Result<Vec<f64>>>()?;
        let scan = CsiScan::from_slices(ap, vals[0], &vals[1..1 + SUBCARRIERS], &vals[1 + SUBCARRIERS..])
            .map_err(|e| Error::parse(origin, n, e.to_string()))?;
        out.insert(id, scan);
    }
    Ok(out)
}

pub fn read_events(main: &str, sidecar: &str, origin: &Path) -> Result<Vec<FrameEvent>> {
    let csi = parse_sidecar(sidecar, origin)?;
    let mut events: Vec<FrameEvent> = Vec::new();
    let mut lines = main.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVENTS_HEADER => {}
        _ => return Err(Error::parse(origin, 1, format!("expected header `{EVENTS_HEADER}`"))),
    }
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if !(5..=6).contains(&f.len()) {
            return Err(Error::parse(origin, n, format!("expected 5 or 6 fields, found {}", f.len())));
        }
        let t = parse_f64(f[0]).ok_or_else(|| Error::parse(origin, n, "bad t"))?;
        let kind = f[1].parse().map_err(|e: Error| Error::parse(origin, n, e.to_string()))?;
        let mac: Mac = f[2].parse().map_err(|e: Error| Error::parse(origin, n, e.to_string()))?;
        let ap: usize = f[3].parse().map_err(|_| Error::parse(origin, n, "bad ap_id"))?;
        let rssi = parse_f64(f[4]).ok_or_else(|| Error::parse(origin, n, "bad rssi"))?;
        let scan = match f.get(5).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            Some(r) => {
                let id: usize = r.parse().map_err(|_| Error::parse(origin, n, "bad csi_ref"))?;
                Some(
                    csi.get(&id)
                        .cloned()
                        .ok_or_else(|| Error::parse(origin, n, format!("dangling csi_ref {id}")))?,
                )
            }
            None => None,
        };
        let obs = ApObservation { rssi, csi: scan };
        match events.last_mut() {
            Some(ev) if ev.t == t && ev.kind == kind && ev.mac == mac && !ev.ap_observations.contains_key(&ap) => {
                ev.ap_observations.insert(ap, obs);
            }
            _ => events.push(FrameEvent {
                t,
                kind,
                mac,
                ap_observations: BTreeMap::from([(ap, obs)]),
            }),
        }
    }
    Ok(events)
}

/// Write `<stem>.csv` and `<stem>.csi.csv` under `dir`.
pub fn save_events(events: &[FrameEvent], dir: &Path, stem: &str) -> Result<()> {
    let (main, side) = write_events(events);
    let mp = dir.join(format!("{stem}.csv"));
    let sp = dir.join(format!("{stem}.csi.csv"));
    std::fs::write(&mp, main).map_err(|e| Error::io(&mp, e))?;
    std::fs::write(&sp, side).map_err(|e| Error::io(&sp, e))
}

pub fn load_events(dir: &Path, stem: &str) -> Result<Vec<FrameEvent>> {
    let mp = dir.join(format!("{stem}.csv"));
    let sp = dir.join(format!("{stem}.csi.csv"));
    let main = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let side = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    read_events(&main, &side, &mp)
}

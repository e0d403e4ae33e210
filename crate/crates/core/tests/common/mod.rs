//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use wifiloc::airsim::{FrameEvent, FrameKind, Mac};
use wifiloc::fingerprint::{
    build_database, AccessPoint, Environment, FingerprintDatabase, Location, ObservationBatch, ReferencePoint,
    RssiSample,
};
use wifiloc::protocol::{Classification, Monitor, MonitorOutput};
use wifiloc::rnn::PmimoLstm;

/// Gaussian KDE by direct summation, written out from the textbook form.
pub fn kde_direct(samples: &[f64], h: f64, v: f64) -> f64 {
    let n = samples.len() as f64;
    let mut acc = 0.0;
    for s in samples {
        let u = (v - s) / h;
        acc += (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    }
    acc / (n * h)
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Linear-domain SSP posterior: window weight times per-AP densities, each
/// factor floored at 1e-12, normalised by the plain sum.
pub fn ssp_linear(
    rps: &[Location],
    samples: &[Vec<Vec<f64>>],
    h: f64,
    obs: &[Option<f64>],
    prev: Option<Location>,
    sigma: f64,
) -> Vec<f64> {
    let floor = 1e-12;
    let raw: Vec<f64> = rps
        .iter()
        .enumerate()
        .map(|(r, loc)| {
            let w = match prev {
                None => 1.0,
                Some(p) => {
                    let d2 = (loc.x - p.x).powi(2) + (loc.y - p.y).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                }
            };
            let mut prod = f64::max(w, floor);
            for (ap, v) in obs.iter().enumerate() {
                if let Some(v) = v {
                    let s = &samples[r][ap];
                    let p = if s.is_empty() { 0.0 } else { kde_direct(s, h, *v) };
                    prod *= p.max(floor);
                }
            }
            prod
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|p| p / total).collect()
}

/// Pearson correlation as the mean product of z-scores.
pub fn pearson_z(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let stats = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        (m, sd)
    };
    let (ma, sa) = stats(a);
    let (mb, sb) = stats(b);
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - ma) / sa) * ((y - mb) / sb))
        .sum::<f64>()
        / n
}

/// Shortest angular distance between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Environment with explicit RP locations and APs at the given positions.
pub fn custom_env(width: f64, height: f64, rps: &[Location], aps: &[(f64, f64, bool)]) -> Environment {
    Environment::new(
        width,
        height,
        1.0,
        aps.iter()
            .enumerate()
            .map(|(id, &(x, y, rts))| AccessPoint {
                id,
                location: Location::new(x, y),
                rts_capable: rts,
            })
            .collect(),
        rps.iter()
            .enumerate()
            .map(|(id, &location)| ReferencePoint { id, location })
            .collect(),
    )
    .expect("valid test environment")
}

/// Database whose RSSI samples are `samples[rp][ap]`, all from one device.
pub fn rssi_database(env: &Environment, samples: &[Vec<Vec<f64>>]) -> FingerprintDatabase {
    let batches = samples.iter().enumerate().map(|(rp, per_ap)| ObservationBatch {
        rp_id: rp,
        device: "test".into(),
        rssi: per_ap
            .iter()
            .enumerate()
            .flat_map(|(ap, vals)| {
                vals.iter()
                    .enumerate()
                    .map(move |(i, &rssi)| (ap, RssiSample { t: i as f64, rssi }))
            })
            .collect(),
        csi: vec![],
    });
    build_database(env, batches).expect("valid test database")
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// LSTM forward pass with explicit per-unit loops; gates are read from the
/// stacked blocks in input, forget, candidate, output order.
pub fn lstm_forward_loops(model: &PmimoLstm, window: &ndarray::Array2<f64>) -> Vec<[f64; 2]> {
    let mut h: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.u.ncols()]).collect();
    let mut c = h.clone();
    let mut out = Vec::new();
    for t in 0..window.nrows() {
        let mut x: Vec<f64> = window.row(t).to_vec();
        for (l, layer) in model.layers.iter().enumerate() {
            let hd = layer.u.ncols();
            let pre = |row: usize| {
                let mut z = layer.b[row];
                for (j, xj) in x.iter().enumerate() {
                    z += layer.w[[row, j]] * xj;
                }
                for (j, hj) in h[l].iter().enumerate() {
                    z += layer.u[[row, j]] * hj;
                }
                z
            };
            let mut h_new = vec![0.0; hd];
            let mut c_new = vec![0.0; hd];
            for k in 0..hd {
                let i = sigmoid(pre(k));
                let f = sigmoid(pre(hd + k));
                let g = pre(2 * hd + k).tanh();
                let o = sigmoid(pre(3 * hd + k));
                c_new[k] = f * c[l][k] + i * g;
                h_new[k] = o * c_new[k].tanh();
            }
            c[l] = c_new;
            h[l] = h_new.clone();
            x = h_new;
        }
        let mut y = [0.0; 2];
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = model.b_out[r] + x.iter().enumerate().map(|(j, v)| model.w_out[[r, j]] * v).sum::<f64>();
        }
        out.push(y);
    }
    out
}

pub fn event(t: f64, kind: FrameKind, mac: Mac) -> FrameEvent {
    FrameEvent {
        t,
        kind,
        mac,
        ap_observations: BTreeMap::new(),
    }
}

/// Random multi-MAC schedule: bursts of mixed frames separated by silences
/// of up to several windows. Some MACs never send a probe request.
pub fn random_schedule<R: Rng>(rng: &mut R, macs: &[Mac], horizon: f64) -> Vec<FrameEvent> {
    let kinds = [FrameKind::ProbeRequest, FrameKind::Data, FrameKind::Cts, FrameKind::Ack];
    let mut out = Vec::new();
    for &mac in macs {
        let probes = rng.random_bool(0.8);
        let mut t = rng.random_range(0.0..2.0);
        while t < horizon {
            let kind = kinds[rng.random_range(0..kinds.len())];
            if kind != FrameKind::ProbeRequest || probes {
                out.push(event(t, kind, mac));
            }
            t += if rng.random_bool(0.85) {
                rng.random_range(0.001..0.4)
            } else {
                rng.random_range(1.0..7.0)
            };
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedTrigger {
    pub start: f64,
    pub end: f64,
    pub frame_times: Vec<f64>,
    pub active: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpectedTrack {
    pub triggers: Vec<ExpectedTrigger>,
    /// `(t, ap)` of every RTS command.
    pub rts: Vec<(f64, usize)>,
}

/// What the AP group must do with `events` when the run is closed at
/// `finish`, computed per MAC straight from the frame list.
///
/// A MAC is tracked from its first probe request at `o`; windows are
/// `[o + kΔt, o + (k+1)Δt)`. A closed non-empty window yields a trigger,
/// active iff a data frame lies in `[end - 2Δt, end)`. RTS tick `j` sits at
/// `o + j·interval/S` on AP `j mod S` and is sent unless, at that instant, a
/// data frame arrived in `[start - 2Δt, start)` or in `[start, τ]`, with
/// `start` the beginning of the tick's window.
pub fn replay_oracle(
    events: &[FrameEvent],
    delta_t: f64,
    rts_enabled: bool,
    rts_aps: &[usize],
    interval: f64,
    finish: f64,
) -> BTreeMap<Mac, ExpectedTrack> {
    let macs: BTreeSet<Mac> = events.iter().map(|e| e.mac).collect();
    let mut out = BTreeMap::new();
    for mac in macs {
        let Some(first) = events
            .iter()
            .position(|e| e.mac == mac && e.kind == FrameKind::ProbeRequest)
        else {
            continue;
        };
        let o = events[first].t;
        let mine: Vec<&FrameEvent> = events[first..].iter().filter(|e| e.mac == mac).collect();
        let data: Vec<f64> = mine.iter().filter(|e| e.kind == FrameKind::Data).map(|e| e.t).collect();
        let bound = |k: u64| o + k as f64 * delta_t;
        let window_of = |t: f64| {
            let mut k = 0u64;
            while bound(k + 1) <= t {
                k += 1;
            }
            k
        };

        let mut buckets: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for e in &mine {
            buckets.entry(window_of(e.t)).or_default().push(e.t);
        }
        let mut track = ExpectedTrack::default();
        for (k, times) in buckets {
            let end = bound(k + 1);
            if end > finish {
                continue;
            }
            let active = data.iter().any(|&d| d >= end - 2.0 * delta_t && d < end);
            track.triggers.push(ExpectedTrigger {
                start: bound(k),
                end,
                frame_times: times,
                active,
            });
        }

        if rts_enabled && !rts_aps.is_empty() {
            let s = rts_aps.len();
            let step = interval / s as f64;
            let mut j = 0u64;
            loop {
                let tau = o + j as f64 * step;
                if tau >= finish {
                    break;
                }
                let start = bound(window_of(tau));
                let active = data
                    .iter()
                    .any(|&d| (d >= start - 2.0 * delta_t && d < start) || (d >= start && d <= tau));
                if !active {
                    track.rts.push((tau, rts_aps[j as usize % s]));
                }
                j += 1;
            }
        }
        out.insert(mac, track);
    }
    out
}

/// Run a schedule through a monitor and regroup its outputs per MAC.
pub fn observe(monitor: &mut Monitor, events: &[FrameEvent], finish: f64) -> BTreeMap<Mac, ExpectedTrack> {
    let mut outs = Vec::new();
    for ev in events {
        outs.extend(monitor.process(ev).unwrap());
    }
    outs.extend(monitor.finish(finish));
    let mut got: BTreeMap<Mac, ExpectedTrack> = BTreeMap::new();
    for o in outs {
        match o {
            MonitorOutput::Rts(c) => got.entry(c.mac).or_default().rts.push((c.t, c.ap)),
            MonitorOutput::Trigger(tr) => got.entry(tr.mac).or_default().triggers.push(ExpectedTrigger {
                start: tr.window_start,
                end: tr.window_end,
                frame_times: tr.frames.iter().map(|f| f.t).collect(),
                active: tr.classification == Classification::Active,
            }),
        }
    }
    for t in got.values_mut() {
        t.triggers.sort_by(|a, b| a.end.total_cmp(&b.end));
    }
    got
}

/// 10 m × 10 m site with four corner APs, the first `count` RTS-capable.
pub fn env_with_rts(count: usize) -> Environment {
    let aps = [(1.0, 1.0), (9.0, 1.0), (9.0, 9.0), (1.0, 9.0)]
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| AccessPoint {
            id,
            location: Location::new(x, y),
            rts_capable: id < count,
        })
        .collect();
    Environment::with_grid(10.0, 10.0, 2.0, aps).unwrap()
}

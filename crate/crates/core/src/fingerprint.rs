//! Shared domain model: locations, environment geometry, fingerprint records
//! and the immutable fingerprint database built during the training phase.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::csi::{CsiImage, CsiScan, PhaseDiffVector, IMAGE_SCANS};
use crate::error::{Error, Result};

pub type RpId = usize;
pub type ApId = usize;

/// Lowest and highest RSSI accepted as a feature value.
pub const RSSI_FLOOR_DBM: f64 = -100.0;
pub const RSSI_CEIL_DBM: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Location, frac: f64) -> Location {
        Location::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub id: ApId,
    pub location: Location,
    pub rts_capable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub id: RpId,
    pub location: Location,
}

/// Single-floor rectangular site `[0, width] × [0, height]` with its APs and
/// surveyed reference points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub width: f64,
    pub height: f64,
    pub grid_spacing: f64,
    pub aps: Vec<AccessPoint>,
    pub rps: Vec<ReferencePoint>,
}

impl Environment {
    pub fn new(
        width: f64,
        height: f64,
        grid_spacing: f64,
        aps: Vec<AccessPoint>,
        rps: Vec<ReferencePoint>,
    ) -> Result<Self> {
        let env = Self {
            width,
            height,
            grid_spacing,
            aps,
            rps,
        };
        env.validate()?;
        Ok(env)
    }

    /// Regular grid of RPs at cell centres, ids dense and row-major
    /// (row = y index, column = x index).
    pub fn with_grid(
        width: f64,
        height: f64,
        grid_spacing: f64,
        aps: Vec<AccessPoint>,
    ) -> Result<Self> {
        if !(grid_spacing > 0.0) {
            return Err(Error::InvalidEnvironment(format!(
                "grid spacing {grid_spacing} must be positive"
            )));
        }
        let cols = (width / grid_spacing).round().max(1.0) as usize;
        let rows = (height / grid_spacing).round().max(1.0) as usize;
        let dx = width / cols as f64;
        let dy = height / rows as f64;
        let rps = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .enumerate()
            .map(|(id, (r, c))| ReferencePoint {
                id,
                location: Location::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy),
            })
            .collect();
        Self::new(width, height, grid_spacing, aps, rps)
    }

    /// 20 m × 15 m site, 1 m grid (300 RPs), 4 APs of which 2 can send RTS.
    pub fn desk() -> Self {
        let aps = vec![
            ap(0, 2.0, 2.5, true),
            ap(1, 18.0, 2.0, false),
            ap(2, 17.5, 13.0, true),
            ap(3, 2.5, 12.5, false),
        ];
        Self::with_grid(20.0, 15.0, 1.0, aps).expect("desk environment is valid")
    }

    /// 21 m × 16 m office with 5 APs, 3 RTS-capable; the grid spacing is a
    /// free parameter.
    pub fn office(grid_spacing: f64) -> Result<Self> {
        let aps = vec![
            ap(0, 1.5, 1.5, true),
            ap(1, 19.5, 1.5, true),
            ap(2, 10.5, 8.0, false),
            ap(3, 1.5, 14.5, false),
            ap(4, 19.5, 14.5, true),
        ];
        Self::with_grid(21.0, 16.0, grid_spacing, aps)
    }

    /// 15 m × 8 m home with 4 APs, 2 RTS-capable.
    pub fn home(grid_spacing: f64) -> Result<Self> {
        let aps = vec![
            ap(0, 1.0, 1.0, true),
            ap(1, 14.0, 1.0, false),
            ap(2, 14.0, 7.0, true),
            ap(3, 1.0, 7.0, false),
        ];
        Self::with_grid(15.0, 8.0, grid_spacing, aps)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidEnvironment(msg));
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad(format!("bounds {}×{} must be positive", self.width, self.height));
        }
        if self.aps.is_empty() {
            return bad("at least one AP is required".into());
        }
        if self.rps.is_empty() {
            return bad("at least one RP is required".into());
        }
        for (i, ap) in self.aps.iter().enumerate() {
            if ap.id != i {
                return bad(format!("AP ids must be dense 0..P-1, found {} at {i}", ap.id));
            }
            if !ap.location.is_finite() {
                return bad(format!("AP {} has a non-finite location", ap.id));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (i, rp) in self.rps.iter().enumerate() {
            if rp.id != i {
                return bad(format!("RP ids must be dense 0..M-1, found {} at {i}", rp.id));
            }
            if !self.contains(&rp.location) {
                return bad(format!("RP {} lies outside the bounds", rp.id));
            }
            if !seen.insert((rp.location.x.to_bits(), rp.location.y.to_bits())) {
                return bad(format!("RP {} duplicates another RP location", rp.id));
            }
        }
        Ok(())
    }

    pub fn contains(&self, loc: &Location) -> bool {
        loc.is_finite()
            && (0.0..=self.width).contains(&loc.x)
            && (0.0..=self.height).contains(&loc.y)
    }

    pub fn ap_count(&self) -> usize {
        self.aps.len()
    }

    pub fn rp_count(&self) -> usize {
        self.rps.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn rts_capable_aps(&self) -> impl Iterator<Item = &AccessPoint> {
        self.aps.iter().filter(|a| a.rts_capable)
    }
}

fn ap(id: ApId, x: f64, y: f64, rts_capable: bool) -> AccessPoint {
    AccessPoint {
        id,
        location: Location::new(x, y),
        rts_capable,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    RssiDbm,
    CsiDerived,
}

/// One fingerprint observation: a value per feature, `None` when the AP
/// heard nothing in the scan window.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintVector {
    pub features: Vec<Option<f64>>,
    pub kind: FeatureKind,
}

impl FingerprintVector {
    pub fn rssi(features: Vec<Option<f64>>) -> Result<Self> {
        for (i, f) in features.iter().enumerate() {
            if let Some(v) = f {
                if !(RSSI_FLOOR_DBM..=RSSI_CEIL_DBM).contains(v) {
                    return Err(Error::Config(format!(
                        "RSSI feature {i} = {v} dBm outside [{RSSI_FLOOR_DBM}, {RSSI_CEIL_DBM}]"
                    )));
                }
            }
        }
        Ok(Self {
            features,
            kind: FeatureKind::RssiDbm,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn observed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.map(|v| (i, v)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RssiSample {
    pub t: f64,
    pub rssi: f64,
}

/// Everything stored for one RP.
///
/// RSSI samples are keyed AP → device model. CSI is stored as raw scans per
/// AP; amplitude images are consecutive groups of [`IMAGE_SCANS`] scans.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintRecord {
    pub rp_id: RpId,
    pub location: Location,
    pub rssi: BTreeMap<ApId, BTreeMap<String, Vec<RssiSample>>>,
    pub csi: BTreeMap<ApId, Vec<CsiScan>>,
}

impl FingerprintRecord {
    pub fn new(rp_id: RpId, location: Location) -> Self {
        Self {
            rp_id,
            location,
            rssi: BTreeMap::new(),
            csi: BTreeMap::new(),
        }
    }

    /// All devices' samples for `ap`, concatenated in device-name order.
    pub fn pooled_rssi(&self, ap: ApId) -> Vec<f64> {
        self.rssi
            .get(&ap)
            .map(|devs| {
                devs.values()
                    .flat_map(|s| s.iter().map(|x| x.rssi))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn sample_count(&self, ap: ApId) -> usize {
        self.rssi
            .get(&ap)
            .map(|d| d.values().map(Vec::len).sum())
            .unwrap_or(0)
    }

    pub fn csi_images(&self, ap: ApId) -> Vec<CsiImage> {
        self.csi
            .get(&ap)
            .map(|scans| {
                scans
                    .chunks_exact(IMAGE_SCANS)
                    .filter_map(|c| CsiImage::from_scans(c).ok())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn csi_phase(&self, ap: ApId) -> Vec<PhaseDiffVector> {
        self.csi
            .get(&ap)
            .map(|scans| scans.iter().map(PhaseDiffVector::from_scan).collect())
            .unwrap_or_default()
    }

    fn sort_samples(&mut self) {
        for devs in self.rssi.values_mut() {
            for samples in devs.values_mut() {
                samples.sort_by(|a, b| a.t.total_cmp(&b.t));
            }
        }
        for scans in self.csi.values_mut() {
            scans.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        }
    }
}

/// A labelled chunk of training data: what one device produced at one RP in
/// one collection session.
#[derive(Clone, Debug, Default)]
pub struct ObservationBatch {
    pub rp_id: RpId,
    pub device: String,
    pub rssi: Vec<(ApId, RssiSample)>,
    pub csi: Vec<CsiScan>,
}

/// Immutable fingerprint database.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintDatabase {
    env: Environment,
    records: BTreeMap<RpId, FingerprintRecord>,
}

impl FingerprintDatabase {
    pub(crate) fn from_parts(env: Environment, records: BTreeMap<RpId, FingerprintRecord>) -> Self {
        Self { env, records }
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn records(&self) -> impl Iterator<Item = &FingerprintRecord> {
        self.records.values()
    }

    pub fn record(&self, rp: RpId) -> Option<&FingerprintRecord> {
        self.records.get(&rp)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn location(&self, rp: RpId) -> Option<Location> {
        self.records.get(&rp).map(|r| r.location)
    }
}

/// Merge labelled batches into one record per RP that received data.
pub fn build_database(
    env: &Environment,
    batches: impl IntoIterator<Item = ObservationBatch>,
) -> Result<FingerprintDatabase> {
    env.validate()?;
    let mut records: BTreeMap<RpId, FingerprintRecord> = BTreeMap::new();
    let mut any = false;
    for batch in batches {
        any = true;
        let rp = env
            .rps
            .get(batch.rp_id)
            .ok_or(Error::UnknownRp(batch.rp_id))?;
        let rec = records
            .entry(rp.id)
            .or_insert_with(|| FingerprintRecord::new(rp.id, rp.location));
        for (ap, sample) in batch.rssi {
            if ap >= env.ap_count() {
                return Err(Error::UnknownAp(ap));
            }
            rec.rssi
                .entry(ap)
                .or_default()
                .entry(batch.device.clone())
                .or_default()
                .push(sample);
        }
        for scan in batch.csi {
            if scan.ap >= env.ap_count() {
                return Err(Error::UnknownAp(scan.ap));
            }
            rec.csi.entry(scan.ap).or_default().push(scan);
        }
    }
    if !any {
        return Err(Error::EmptyInput);
    }
    for rec in records.values_mut() {
        rec.sort_samples();
    }
    Ok(FingerprintDatabase::from_parts(env.clone(), records))
}

/// RP with the smallest Euclidean distance to `loc`; ties go to the lowest id.
pub fn nearest_rp(db: &FingerprintDatabase, loc: &Location) -> Result<RpId> {
    let mut best: Option<(RpId, f64)> = None;
    for rec in db.records() {
        let d = rec.location.distance(loc);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((rec.rp_id, d));
        }
    }
    best.map(|(id, _)| id).ok_or(Error::EmptyDatabase)
}

/// Piecewise-linear path through time-stamped waypoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<(f64, Location)>,
    pub speed_range: (f64, f64),
}

impl Trajectory {
    pub fn new(waypoints: Vec<(f64, Location)>, speed_range: (f64, f64)) -> Result<Self> {
        let traj = Self {
            waypoints,
            speed_range,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn stationary(at: Location, duration: f64) -> Result<Self> {
        Self::new(vec![(0.0, at), (duration, at)], (0.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTrajectory(m));
        if self.waypoints.is_empty() {
            return bad("no waypoints".into());
        }
        let (vmin, vmax) = self.speed_range;
        if !(vmin >= 0.0 && vmax >= vmin) {
            return bad(format!("bad speed range ({vmin}, {vmax})"));
        }
        for w in self.waypoints.windows(2) {
            let ((t0, a), (t1, b)) = (w[0], w[1]);
            if !(t1 > t0) {
                return bad(format!("timestamps not strictly increasing at t={t1}"));
            }
            // small slack for waypoints that were rounded when written
            if a.distance(&b) > vmax * (t1 - t0) + 1e-9 {
                return bad(format!(
                    "displacement {:.3} m in {:.3} s exceeds v_max {vmax} m/s",
                    a.distance(&b),
                    t1 - t0
                ));
            }
        }
        Ok(())
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].0
    }

    /// Position at `t`, clamped to the first/last waypoint outside the span.
    pub fn position_at(&self, t: f64) -> Location {
        let wps = &self.waypoints;
        if t <= wps[0].0 {
            return wps[0].1;
        }
        let idx = wps.partition_point(|(wt, _)| *wt <= t);
        if idx >= wps.len() {
            return wps[wps.len() - 1].1;
        }
        let (t0, a) = wps[idx - 1];
        let (t1, b) = wps[idx];
        a.lerp(&b, (t - t0) / (t1 - t0))
    }
}

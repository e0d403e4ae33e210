//! CSI features and the second (CSI) step of active-phone localization.
//!
//! Amplitudes of 20 consecutive scans form a time × subcarrier image; raw
//! phases are reduced to adjacent-subcarrier differences, which cancels any
//! phase offset common to all subcarriers. Candidates proposed by the RSSI
//! step are re-ranked by Pearson correlation of both features.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fingerprint::{ApId, FingerprintDatabase, FingerprintVector, Location, RpId};

pub const SUBCARRIERS: usize = 51;
pub const PHASE_DIFFS: usize = SUBCARRIERS - 1;
pub const IMAGE_SCANS: usize = 20;

/// Wrap an angle into (-π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsiScan {
    pub ap: ApId,
    pub timestamp: f64,
    pub amplitudes: [f64; SUBCARRIERS],
    pub phases: [f64; SUBCARRIERS],
}

impl CsiScan {
    /// Validates amplitudes and wraps phases.
    pub fn new(
        ap: ApId,
        timestamp: f64,
        amplitudes: [f64; SUBCARRIERS],
        phases: [f64; SUBCARRIERS],
    ) -> Result<Self> {
        if let Some(i) = amplitudes.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidCsi(format!(
                "amplitude {} at subcarrier {i} must be finite and >= 0",
                amplitudes[i]
            )));
        }
        if let Some(i) = phases.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCsi(format!("non-finite phase at subcarrier {i}")));
        }
        Ok(Self {
            ap,
            timestamp,
            amplitudes,
            phases: phases.map(wrap_phase),
        })
    }

    pub fn from_slices(ap: ApId, timestamp: f64, amplitudes: &[f64], phases: &[f64]) -> Result<Self> {
        let amps: [f64; SUBCARRIERS] = amplitudes.try_into().map_err(|_| Error::DimensionMismatch {
            expected: SUBCARRIERS,
            got: amplitudes.len(),
        })?;
        let ph: [f64; SUBCARRIERS] = phases.try_into().map_err(|_| Error::DimensionMismatch {
            expected: SUBCARRIERS,
            got: phases.len(),
        })?;
        Self::new(ap, timestamp, amps, ph)
    }
}

/// Time × frequency amplitude matrix of [`IMAGE_SCANS`] scans.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiImage {
    rows: Vec<[f64; SUBCARRIERS]>,
}

impl CsiImage {
    /// The most recent [`IMAGE_SCANS`] scans, oldest row first. Input must
    /// be in time order and from a single AP.
    pub fn from_scans(scans: &[CsiScan]) -> Result<Self> {
        if scans.len() < IMAGE_SCANS {
            return Err(Error::InsufficientCsi {
                have: scans.len(),
                need: IMAGE_SCANS,
            });
        }
        let ap = scans[0].ap;
        if scans.iter().any(|s| s.ap != ap) {
            return Err(Error::InvalidCsi("image scans come from more than one AP".into()));
        }
        let rows = scans[scans.len() - IMAGE_SCANS..]
            .iter()
            .map(|s| s.amplitudes)
            .collect();
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[f64; SUBCARRIERS]] {
        &self.rows
    }

    /// Row-major flattening (1020 values).
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.iter().copied()).collect()
    }

    /// Element-wise mean of several images.
    pub fn mean(images: &[CsiImage]) -> Option<CsiImage> {
        let first = images.first()?;
        let mut rows = first.rows.clone();
        for img in &images[1..] {
            for (acc, r) in rows.iter_mut().zip(&img.rows) {
                for (a, v) in acc.iter_mut().zip(r) {
                    *a += v;
                }
            }
        }
        let n = images.len() as f64;
        for row in &mut rows {
            for a in row.iter_mut() {
                *a /= n;
            }
        }
        Some(CsiImage { rows })
    }
}

pub fn build_image(scans: &[CsiScan]) -> Result<CsiImage> {
    CsiImage::from_scans(scans)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiffVector {
    pub values: [f64; PHASE_DIFFS],
}

impl PhaseDiffVector {
    pub fn from_scan(scan: &CsiScan) -> Self {
        let mut values = [0.0; PHASE_DIFFS];
        for (j, v) in values.iter_mut().enumerate() {
            *v = wrap_phase(scan.phases[j + 1] - scan.phases[j]);
        }
        Self { values }
    }

    /// Element-wise circular mean.
    pub fn circular_mean(vectors: &[PhaseDiffVector]) -> Option<PhaseDiffVector> {
        if vectors.is_empty() {
            return None;
        }
        let mut values = [0.0; PHASE_DIFFS];
        for (j, v) in values.iter_mut().enumerate() {
            let (s, c) = vectors
                .iter()
                .fold((0.0, 0.0), |(s, c), p| (s + p.values[j].sin(), c + p.values[j].cos()));
            *v = if s == 0.0 && c == 0.0 { 0.0 } else { wrap_phase(s.atan2(c)) };
        }
        Some(Self { values })
    }
}

pub fn phase_difference(scan: &CsiScan) -> PhaseDiffVector {
    PhaseDiffVector::from_scan(scan)
}

/// Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Observed CSI features for one Δt window, per AP.
#[derive(Clone, Debug, Default)]
pub struct CsiObservation {
    pub per_ap: BTreeMap<ApId, (CsiImage, PhaseDiffVector)>,
}

impl CsiObservation {
    /// Keeps APs with at least [`IMAGE_SCANS`] scans; the image and the
    /// circular-mean phase difference both use the most recent 20.
    pub fn from_scans(scans: &BTreeMap<ApId, Vec<CsiScan>>) -> Self {
        let per_ap = scans
            .iter()
            .filter_map(|(&ap, s)| {
                let img = CsiImage::from_scans(s).ok()?;
                let recent = &s[s.len() - IMAGE_SCANS..];
                let diffs: Vec<_> = recent.iter().map(PhaseDiffVector::from_scan).collect();
                Some((ap, (img, PhaseDiffVector::circular_mean(&diffs)?)))
            })
            .collect();
        Self { per_ap }
    }

    pub fn is_empty(&self) -> bool {
        self.per_ap.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CsiTemplate {
    pub image: Vec<f64>,
    pub phase: PhaseDiffVector,
}

/// Stored CSI reference per (RP, AP): the mean of all stored images and the
/// circular mean of all stored phase differences.
#[derive(Clone, Debug, Default)]
pub struct CsiTemplates {
    map: BTreeMap<(RpId, ApId), CsiTemplate>,
}

impl CsiTemplates {
    pub fn from_database(db: &FingerprintDatabase) -> Self {
        let mut map = BTreeMap::new();
        for rec in db.records() {
            for &ap in rec.csi.keys() {
                let images = rec.csi_images(ap);
                let Some(mean) = CsiImage::mean(&images) else {
                    continue;
                };
                let phase = PhaseDiffVector::circular_mean(&rec.csi_phase(ap))
                    .expect("an image implies at least one scan");
                map.insert(
                    (rec.rp_id, ap),
                    CsiTemplate {
                        image: mean.flatten(),
                        phase,
                    },
                );
            }
        }
        Self { map }
    }

    pub fn insert(&mut self, rp: RpId, ap: ApId, image: &CsiImage, phase: PhaseDiffVector) {
        self.map.insert(
            (rp, ap),
            CsiTemplate {
                image: image.flatten(),
                phase,
            },
        );
    }

    pub fn get(&self, rp: RpId, ap: ApId) -> Option<&CsiTemplate> {
        self.map.get(&(rp, ap))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Number of strongest APs (by observed RSSI) whose CSI is used.
    pub strongest_aps: usize,
    pub w_amp: f64,
    pub w_phase: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            strongest_aps: 2,
            w_amp: 0.5,
            w_phase: 0.5,
        }
    }
}

/// APs used by [`refine`]: the `l` strongest observed APs that also carry
/// observed CSI.
pub fn select_aps(obs_rssi: &FingerprintVector, obs_csi: &CsiObservation, l: usize) -> Vec<ApId> {
    let mut ranked: Vec<(usize, f64)> = obs_rssi.observed().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(l)
        .map(|(ap, _)| ap)
        .filter(|ap| obs_csi.per_ap.contains_key(ap))
        .collect()
}

/// Similarity of one candidate; `-inf` when it shares no CSI with the
/// observation on the selected APs.
pub fn candidate_similarity(
    rp: RpId,
    aps: &[ApId],
    obs_csi: &CsiObservation,
    templates: &CsiTemplates,
    cfg: &RefineConfig,
) -> f64 {
    let mut sum = 0.0;
    let mut used = 0usize;
    for &ap in aps {
        let (Some((img, phase)), Some(tpl)) = (obs_csi.per_ap.get(&ap), templates.get(rp, ap)) else {
            continue;
        };
        let amp_r = pearson(&img.flatten(), &tpl.image).unwrap_or(0.0);
        let phase_r = pearson(&phase.values, &tpl.phase.values).unwrap_or(0.0);
        sum += cfg.w_amp * amp_r + cfg.w_phase * phase_r;
        used += 1;
    }
    if used == 0 {
        f64::NEG_INFINITY
    } else {
        sum / used as f64
    }
}

/// Pick the candidate whose stored CSI best matches the observation.
///
/// `candidates` must be in SSP rank order (descending posterior, then RP
/// id); equal similarities keep the earlier candidate.
pub fn refine(
    candidates: &[RpId],
    obs_rssi: &FingerprintVector,
    obs_csi: &CsiObservation,
    db: &FingerprintDatabase,
    templates: &CsiTemplates,
    cfg: &RefineConfig,
) -> Result<(RpId, Location)> {
    let loc = |rp: RpId| db.location(rp).ok_or(Error::EmptyDatabase);
    match candidates {
        [] => return Err(Error::Config("refine needs at least one candidate".into())),
        [only] => return Ok((*only, loc(*only)?)),
        _ => {}
    }
    let aps = select_aps(obs_rssi, obs_csi, cfg.strongest_aps);
    if aps.is_empty() {
        return Err(Error::CsiFallback);
    }
    let mut best: Option<(RpId, f64)> = None;
    for &rp in candidates {
        let s = candidate_similarity(rp, &aps, obs_csi, templates, cfg);
        if s == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((rp, s));
        }
    }
    let (rp, _) = best.ok_or(Error::CsiFallback)?;
    Ok((rp, loc(rp)?))
}

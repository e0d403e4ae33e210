//! Semi-sequential probabilistic (SSP) localizer.
//!
//! The posterior over RPs is the product of per-AP kernel densities of the
//! observed RSSI, gated by a soft-range window centred on the previous
//! estimate. Scores are accumulated in the log domain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{FingerprintDatabase, FingerprintVector, Location, RpId};
use crate::kde::DensityMap;

/// Lower bound applied to every factor of the posterior product.
pub const DENSITY_FLOOR: f64 = 1e-12;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    Gaussian,
    Hann,
    Tukey,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SspWindow {
    pub shape: WindowShape,
    /// Gaussian spread σ in metres.
    pub spread: f64,
    /// Maximum travel between fixes; the Hann/Tukey support radius.
    pub d_max: f64,
    pub tukey_alpha: f64,
}

impl Default for SspWindow {
    /// Gaussian with σ = d_max = 4 m (v_max 4 m/s, Δt 1 s).
    fn default() -> Self {
        Self {
            shape: WindowShape::Gaussian,
            spread: 4.0,
            d_max: 4.0,
            tukey_alpha: 0.5,
        }
    }
}

impl SspWindow {
    pub fn gaussian(spread: f64) -> Self {
        Self {
            spread,
            d_max: spread,
            ..Self::default()
        }
    }

    pub fn hann(d_max: f64) -> Self {
        Self {
            shape: WindowShape::Hann,
            d_max,
            ..Self::default()
        }
    }

    pub fn tukey(d_max: f64, alpha: f64) -> Self {
        Self {
            shape: WindowShape::Tukey,
            d_max,
            tukey_alpha: alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread > 0.0) || !(self.d_max > 0.0) {
            return Err(Error::InvalidWindow(format!(
                "spread {} and d_max {} must be positive",
                self.spread, self.d_max
            )));
        }
        if !(0.0..=1.0).contains(&self.tukey_alpha) {
            return Err(Error::InvalidWindow(format!(
                "tukey alpha {} outside [0, 1]",
                self.tukey_alpha
            )));
        }
        Ok(())
    }
}

/// Prior weight of an RP given the previous estimate; 1 everywhere when
/// there is no previous estimate.
pub fn window_weight(win: &SspWindow, rp: &Location, prev: Option<&Location>) -> f64 {
    let Some(prev) = prev else {
        return 1.0;
    };
    let d = rp.distance(prev);
    match win.shape {
        WindowShape::Gaussian => (-d * d / (2.0 * win.spread * win.spread)).exp(),
        WindowShape::Hann => {
            let r = d / win.d_max;
            if r >= 1.0 {
                0.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * r).cos())
            }
        }
        WindowShape::Tukey => tukey(d / win.d_max, win.tukey_alpha),
    }
}

/// One-sided Tukey profile on r ∈ [0, 1]: flat up to 1-α, cosine taper to 0.
fn tukey(r: f64, alpha: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else if alpha <= 0.0 || r <= 1.0 - alpha {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - (1.0 - alpha)) / alpha).cos())
    }
}

/// Normalised posterior over RPs, ordered by RP id.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    weights: Vec<(RpId, f64)>,
}

impl Posterior {
    pub fn from_weights(mut weights: Vec<(RpId, f64)>) -> Self {
        weights.sort_by_key(|(id, _)| *id);
        Self { weights }
    }

    pub fn weights(&self) -> &[(RpId, f64)] {
        &self.weights
    }

    pub fn weight(&self, rp: RpId) -> f64 {
        self.weights
            .binary_search_by_key(&rp, |(id, _)| *id)
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    pub fn as_map(&self) -> BTreeMap<RpId, f64> {
        self.weights.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Posterior over every RP in `db` for one fingerprint observation.
pub fn posterior(
    db: &FingerprintDatabase,
    pdfs: &DensityMap,
    obs: &FingerprintVector,
    prev: Option<&Location>,
    win: &SspWindow,
) -> Result<Posterior> {
    let p = db.env().ap_count();
    if obs.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: obs.len(),
        });
    }
    let observed: Vec<(usize, f64)> = obs.observed().collect();
    if observed.is_empty() {
        return Err(Error::NoObservableAps);
    }
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let log_floor = DENSITY_FLOOR.ln();
    let scores: Vec<(RpId, f64)> = db
        .records()
        .map(|rec| {
            let w = window_weight(win, &rec.location, prev);
            let mut s = if w > DENSITY_FLOOR { w.ln() } else { log_floor };
            for &(ap, v) in &observed {
                s += match pdfs.get(rec.rp_id, ap) {
                    Some(pdf) => pdf.evaluate(v).max(DENSITY_FLOOR).ln(),
                    None => log_floor,
                };
            }
            (rec.rp_id, s)
        })
        .collect();
    Ok(normalize_log(scores))
}

fn normalize_log(scores: Vec<(RpId, f64)>) -> Posterior {
    let max = scores
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<(RpId, f64)> = scores.into_iter().map(|(id, s)| (id, (s - max).exp())).collect();
    let total: f64 = exp.iter().map(|(_, w)| w).sum();
    Posterior::from_weights(exp.into_iter().map(|(id, w)| (id, w / total)).collect())
}

/// The `k` most probable RPs, highest first; ties go to the lower id.
pub fn top_k(post: &Posterior, k: usize) -> Vec<RpId> {
    let mut ranked: Vec<(RpId, f64)> = post.weights.clone();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k.max(1)).map(|(id, _)| id).collect()
}

/// Probability-weighted centroid of the top-`k` RP locations.
pub fn estimate(post: &Posterior, db: &FingerprintDatabase, k: usize) -> Location {
    let top = top_k(post, k);
    let mut total = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for rp in &top {
        let w = post.weight(*rp);
        let loc = db.location(*rp).expect("posterior RPs come from the database");
        x += w * loc.x;
        y += w * loc.y;
        total += w;
    }
    if total > 0.0 {
        Location::new(x / total, y / total)
    } else {
        db.location(top[0]).expect("posterior RPs come from the database")
    }
}

/// Bundles the fitted densities with the window and centroid size.
#[derive(Clone, Debug)]
pub struct SspLocalizer {
    pub pdfs: DensityMap,
    pub window: SspWindow,
    pub k: usize,
}

impl SspLocalizer {
    pub fn new(pdfs: DensityMap, window: SspWindow, k: usize) -> Result<Self> {
        window.validate()?;
        Ok(Self { pdfs, window, k })
    }

    pub fn posterior(
        &self,
        db: &FingerprintDatabase,
        obs: &FingerprintVector,
        prev: Option<&Location>,
    ) -> Result<Posterior> {
        posterior(db, &self.pdfs, obs, prev, &self.window)
    }

    pub fn locate(
        &self,
        db: &FingerprintDatabase,
        obs: &FingerprintVector,
        prev: Option<&Location>,
    ) -> Result<(Posterior, Location)> {
        let post = self.posterior(db, obs, prev)?;
        let loc = estimate(&post, db, self.k);
        Ok((post, loc))
    }
}

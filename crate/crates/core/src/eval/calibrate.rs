//! Frame-arrival calibration: gap quantiles and per-minute frame yield of
//! the device profiles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::airsim::{frame_stream, inter_frame_gaps, DeviceProfile, PhoneState, RtsDrive};
use crate::error::{Error, Result};

/// Gap statistics of one (device, state, RTS) arrival process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCalibration {
    pub device: String,
    pub state: PhoneState,
    /// RTS interval in seconds, or none.
    pub rts_interval: Option<f64>,
    pub gaps: usize,
    pub mean_gap: f64,
    /// `(threshold, P(gap <= threshold))` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

impl GapCalibration {
    pub fn fraction_within(&self, threshold: f64) -> Option<f64> {
        self.quantiles.iter().find(|(t, _)| *t == threshold).map(|&(_, p)| p)
    }
}

/// Simulate single-source streams in chunks of `chunk` seconds until at least
/// `min_gaps` inter-frame gaps are collected, then evaluate the empirical
/// CDF at each threshold.
pub fn gap_calibration(
    dev: &DeviceProfile,
    state: PhoneState,
    rts_interval: Option<f64>,
    thresholds: &[f64],
    min_gaps: usize,
    seed: u64,
) -> Result<GapCalibration> {
    if min_gaps == 0 {
        return Err(Error::Config("need at least one gap".into()));
    }
    let drive = rts_interval.map(|interval| RtsDrive { interval, sources: 1 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chunk = 3600.0;
    let mut gaps = Vec::with_capacity(min_gaps);
    // Chunks are independent sessions; a gap never spans two of them.
    for _ in 0..100_000 {
        let frames = frame_stream(dev, state, drive, chunk, &mut rng)?;
        gaps.extend(inter_frame_gaps(&frames));
        if gaps.len() >= min_gaps {
            break;
        }
    }
    if gaps.len() < min_gaps {
        return Err(Error::Config(format!("only {} gaps after the chunk budget", gaps.len())));
    }
    let n = gaps.len() as f64;
    let quantiles = thresholds
        .iter()
        .map(|&t| (t, gaps.iter().filter(|&&g| g <= t).count() as f64 / n))
        .collect();
    Ok(GapCalibration {
        device: dev.model_name.clone(),
        state,
        rts_interval,
        gaps: gaps.len(),
        mean_gap: gaps.iter().sum::<f64>() / n,
        quantiles,
    })
}

/// Mean frames per minute of an inactive, screen-on phone answering one RTS
/// source, over `runs` independent 60 s simulations.
pub fn frames_per_minute(dev: &DeviceProfile, rts_interval: f64, runs: usize, seed: u64) -> Result<f64> {
    if runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drive = RtsDrive {
        interval: rts_interval,
        sources: 1,
    };
    let mut total = 0usize;
    for _ in 0..runs {
        total += frame_stream(dev, PhoneState::InactiveScreenOn, Some(drive), 60.0, &mut rng)?.len();
    }
    Ok(total as f64 / runs as f64)
}

//! Phone-model profiles: RSSI offset and reporting range, and the frame
//! arrival processes with and without RTS elicitation.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaps between spontaneous frames of an inactive phone: a log-normal
/// mixture of short bursts and long silences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InactiveArrival {
    /// Probability a gap is drawn from the burst component.
    pub burst_fraction: f64,
    pub burst_median: f64,
    pub burst_sigma: f64,
    pub silence_median: f64,
    pub silence_sigma: f64,
}

impl InactiveArrival {
    pub fn screen_on() -> Self {
        Self {
            burst_fraction: 0.2,
            burst_median: 0.5,
            burst_sigma: 1.0,
            silence_median: 80.0,
            silence_sigma: 0.8,
        }
    }

    /// Screen-off phones stretch every gap.
    pub fn screen_off() -> Self {
        Self::screen_on().scaled(2.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            burst_median: self.burst_median * factor,
            silence_median: self.silence_median * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.burst_fraction)
            && self.burst_median > 0.0
            && self.silence_median > 0.0
            && self.burst_sigma >= 0.0
            && self.silence_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid arrival process {self:?}")))
        }
    }

    pub fn sample_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (median, sigma) = if rng.random::<f64>() < self.burst_fraction {
            (self.burst_median, self.burst_sigma)
        } else {
            (self.silence_median, self.silence_sigma)
        };
        LogNormal::new(median.ln(), sigma)
            .expect("validated parameters")
            .sample(rng)
    }

    /// Exact `P(gap <= x)` of the mixture.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let comp = |median: f64, sigma: f64| {
            if sigma == 0.0 {
                return if x >= median { 1.0 } else { 0.0 };
            }
            normal_cdf((x / median).ln() / sigma)
        };
        self.burst_fraction * comp(self.burst_median, self.burst_sigma)
            + (1.0 - self.burst_fraction) * comp(self.silence_median, self.silence_sigma)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub model_name: String,
    /// Mean transmit-power/antenna offset added to every reading, dB.
    pub tx_offset_mean: f64,
    /// Per-frame spread of that offset, dB.
    pub tx_offset_sigma: f64,
    /// Reported RSSI is clamped to this range, dBm.
    pub rssi_range: (f64, f64),
    pub screen_on: InactiveArrival,
    pub screen_off: InactiveArrival,
    /// Probability an RTS tick is answered.
    pub cts_response_prob: f64,
    /// An answered tick yields `1 + Poisson(cts_burst_extra)` CTS frames.
    pub cts_burst_extra: f64,
    /// Data frames per second while active.
    pub data_frame_rate: f64,
}

impl DeviceProfile {
    fn base(name: &str) -> Self {
        Self {
            model_name: name.into(),
            tx_offset_mean: 0.0,
            tx_offset_sigma: 2.0,
            rssi_range: (-100.0, -18.0),
            screen_on: InactiveArrival::screen_on(),
            screen_off: InactiveArrival::screen_off(),
            cts_response_prob: 0.9,
            cts_burst_extra: 1.0,
            data_frame_rate: 45.0,
        }
    }

    pub fn samsung_s6() -> Self {
        Self {
            tx_offset_mean: 1.0,
            tx_offset_sigma: 2.0,
            cts_response_prob: 0.95,
            cts_burst_extra: 2.6,
            data_frame_rate: 50.0,
            ..Self::base("samsung_s6")
        }
    }

    pub fn nexus5() -> Self {
        Self {
            tx_offset_mean: 1.0,
            tx_offset_sigma: 2.9,
            rssi_range: (-100.0, -16.0),
            cts_response_prob: 0.9,
            cts_burst_extra: 2.0,
            data_frame_rate: 48.0,
            ..Self::base("nexus5")
        }
    }

    pub fn iphone_x() -> Self {
        Self {
            tx_offset_mean: -3.5,
            tx_offset_sigma: 4.6,
            cts_response_prob: 0.6,
            cts_burst_extra: 0.4,
            data_frame_rate: 46.0,
            ..Self::base("iphone_x")
        }
    }

    pub fn htc_one_x() -> Self {
        Self {
            tx_offset_mean: 4.0,
            tx_offset_sigma: 1.3,
            cts_response_prob: 0.3,
            cts_burst_extra: 0.1,
            data_frame_rate: 44.0,
            ..Self::base("htc_one_x")
        }
    }

    /// The four calibrated phone models, in descending CTS yield.
    pub fn all() -> Vec<Self> {
        vec![
            Self::samsung_s6(),
            Self::nexus5(),
            Self::iphone_x(),
            Self::htc_one_x(),
        ]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|d| d.model_name == name)
            .ok_or_else(|| Error::Config(format!("unknown device model `{name}`")))
    }

    /// Mean CTS frames per minute for one RTS source at `interval` seconds.
    pub fn expected_cts_per_minute(&self, interval: f64) -> f64 {
        60.0 / interval * self.cts_response_prob * (1.0 + self.cts_burst_extra)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.model_name)));
        if !(self.rssi_range.0 < self.rssi_range.1) {
            return bad(format!("rssi range {:?} is empty", self.rssi_range));
        }
        if !(0.0..=1.0).contains(&self.cts_response_prob) {
            return bad(format!("cts response prob {}", self.cts_response_prob));
        }
        if !(self.tx_offset_sigma >= 0.0) || !(self.cts_burst_extra >= 0.0) || !(self.data_frame_rate > 0.0) {
            return bad("negative spread, burst or rate".into());
        }
        self.screen_on.validate()?;
        self.screen_off.validate()
    }
}

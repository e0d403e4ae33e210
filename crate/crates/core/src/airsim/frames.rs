use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::device::DeviceProfile;
use crate::csi::CsiScan;
use crate::error::{Error, Result};
use crate::fingerprint::ApId;

/// Short interframe space between an RTS and its CTS, seconds.
pub const SIFS: f64 = 16e-6;
/// Spacing of consecutive CTS frames in one reply burst, seconds.
pub const CTS_BURST_SPACING: f64 = 5e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    ProbeRequest,
    Data,
    Cts,
    Ack,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::ProbeRequest => "probe_request",
            FrameKind::Data => "data",
            FrameKind::Cts => "cts",
            FrameKind::Ack => "ack",
        }
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probe_request" => Ok(FrameKind::ProbeRequest),
            "data" => Ok(FrameKind::Data),
            "cts" => Ok(FrameKind::Cts),
            "ack" => Ok(FrameKind::Ack),
            _ => Err(Error::Config(format!("unknown frame kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mac(pub [u8; 6]);

impl Mac {
    /// Locally administered unicast address derived from `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let b = seed.to_le_bytes();
        Mac([0x02, b[0] ^ b[5], b[1] ^ b[6], b[2] ^ b[7], b[3], b[4]])
    }
}

impl fmt::Display for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

impl FromStr for Mac {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 6 {
            return Err(Error::Config(format!("bad MAC `{s}`")));
        }
        let mut out = [0u8; 6];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = u8::from_str_radix(p, 16).map_err(|_| Error::Config(format!("bad MAC `{s}`")))?;
        }
        Ok(Mac(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhoneState {
    Active,
    InactiveScreenOn,
    InactiveScreenOff,
}

impl PhoneState {
    pub fn is_active(self) -> bool {
        self == PhoneState::Active
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhoneState::Active => "active",
            PhoneState::InactiveScreenOn => "inactive_screen_on",
            PhoneState::InactiveScreenOff => "inactive_screen_off",
        }
    }
}

impl fmt::Display for PhoneState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts `inactive` as shorthand for the screen-on state.
impl FromStr for PhoneState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(PhoneState::Active),
            "inactive" | "inactive_screen_on" => Ok(PhoneState::InactiveScreenOn),
            "inactive_screen_off" => Ok(PhoneState::InactiveScreenOff),
            _ => Err(Error::Config(format!("unknown phone state `{s}`"))),
        }
    }
}

/// RTS frames addressed to the phone: every `interval` seconds from each of
/// `sources` APs, with the sources' ticks evenly phase-shifted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RtsDrive {
    pub interval: f64,
    pub sources: usize,
}

/// Timing and type of one frame, before any AP has observed it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTiming {
    pub t: f64,
    pub kind: FrameKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApObservation {
    pub rssi: f64,
    pub csi: Option<CsiScan>,
}

/// One transmitted frame as seen by every AP that heard it.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameEvent {
    pub t: f64,
    pub kind: FrameKind,
    pub mac: Mac,
    pub ap_observations: BTreeMap<ApId, ApObservation>,
}

fn renewal<R: Rng + ?Sized>(
    until: f64,
    kind: FrameKind,
    mut gap: impl FnMut(&mut R) -> f64,
    rng: &mut R,
    out: &mut Vec<FrameTiming>,
) {
    let mut t = gap(rng);
    while t < until {
        out.push(FrameTiming { t, kind });
        t += gap(rng);
    }
}

/// Frame times a phone emits over `[0, duration)`.
///
/// Inactive phones send sparse probe requests with heavy-tailed gaps and,
/// under `rts`, CTS bursts answering each RTS tick. Active phones add
/// Poisson data frames and ACKs at half the data rate.
pub fn frame_stream<R: Rng + ?Sized>(
    dev: &DeviceProfile,
    state: PhoneState,
    rts: Option<RtsDrive>,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<FrameTiming>> {
    if !(duration > 0.0) {
        return Err(Error::Config(format!("duration must be positive, got {duration}")));
    }
    dev.validate()?;
    let mut out = Vec::new();

    let arrival = match state {
        PhoneState::InactiveScreenOff => dev.screen_off,
        _ => dev.screen_on,
    };
    renewal(duration, FrameKind::ProbeRequest, |r| arrival.sample_gap(r), rng, &mut out);

    if state.is_active() {
        let data = Exp::new(dev.data_frame_rate).expect("validated rate");
        renewal(duration, FrameKind::Data, |r| data.sample(r), rng, &mut out);
        let ack = Exp::new(dev.data_frame_rate / 2.0).expect("validated rate");
        renewal(duration, FrameKind::Ack, |r| ack.sample(r), rng, &mut out);
    }

    if let Some(drive) = rts.filter(|d| d.sources > 0) {
        if !(drive.interval > 0.0) {
            return Err(Error::Config(format!("RTS interval must be positive, got {}", drive.interval)));
        }
        let extra = (dev.cts_burst_extra > 0.0)
            .then(|| Poisson::new(dev.cts_burst_extra).expect("validated burst mean"));
        let ticks = (duration / drive.interval).ceil() as usize;
        for k in 0..ticks {
            for s in 0..drive.sources {
                let tick = (k as f64 + s as f64 / drive.sources as f64) * drive.interval;
                if tick >= duration {
                    continue;
                }
                if !rng.random_bool(dev.cts_response_prob) {
                    continue;
                }
                let n = 1 + extra.as_ref().map_or(0, |p| p.sample(rng) as usize);
                for j in 0..n {
                    let t = tick + SIFS + j as f64 * CTS_BURST_SPACING;
                    if t < duration {
                        out.push(FrameTiming { t, kind: FrameKind::Cts });
                    }
                }
            }
        }
    }

    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.kind.cmp(&b.kind)));
    Ok(out)
}

/// Gaps between consecutive frame times.
pub fn inter_frame_gaps(frames: &[FrameTiming]) -> Vec<f64> {
    frames.windows(2).map(|w| w[1].t - w[0].t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mac_round_trip() {
        let m = Mac::from_seed(0xdead_beef);
        assert_eq!(m.to_string().parse::<Mac>().unwrap(), m);
        assert_eq!(m.0[0] & 0x03, 0x02);
    }

    #[test]
    fn kind_round_trip() {
        for k in [FrameKind::ProbeRequest, FrameKind::Data, FrameKind::Cts, FrameKind::Ack] {
            assert_eq!(k.as_str().parse::<FrameKind>().unwrap(), k);
        }
    }

    #[test]
    fn certain_single_replies_tick_at_interval() {
        let dev = DeviceProfile {
            cts_response_prob: 1.0,
            cts_burst_extra: 0.0,
            screen_on: crate::airsim::InactiveArrival {
                burst_fraction: 0.0,
                silence_median: 1e9,
                silence_sigma: 0.0,
                ..crate::airsim::InactiveArrival::screen_on()
            },
            ..DeviceProfile::samsung_s6()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let drive = RtsDrive { interval: 0.05, sources: 1 };
        let frames = frame_stream(&dev, PhoneState::InactiveScreenOn, Some(drive), 10.0, &mut rng).unwrap();
        assert_eq!(frames.len(), 200);
        for g in inter_frame_gaps(&frames) {
            assert!((g - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn active_phone_sends_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dev = DeviceProfile::samsung_s6();
        let frames = frame_stream(&dev, PhoneState::Active, None, 10.0, &mut rng).unwrap();
        let data = frames.iter().filter(|f| f.kind == FrameKind::Data).count();
        assert!((420..580).contains(&data), "{data}");
        assert!(frames.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn rejects_empty_duration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(frame_stream(&DeviceProfile::nexus5(), PhoneState::Active, None, 0.0, &mut rng).is_err());
    }
}

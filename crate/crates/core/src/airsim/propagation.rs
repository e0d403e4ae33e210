//! Log-distance path loss with a frozen shadowing field, and a multipath
//! CSI generator.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::device::DeviceProfile;
use crate::csi::{wrap_phase, CsiScan, SUBCARRIERS};
use crate::fingerprint::{ApId, Location};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const MIN_DISTANCE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsiChannelModel {
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    /// Wavelength used for the per-path carrier phase. The physical value
    /// (about 12.5 cm at 2.4 GHz) decorrelates the multipath pattern far
    /// below any practical RP spacing; a longer effective wavelength sets
    /// the spatial coherence length of the simulated pattern.
    pub coherence_wavelength: f64,
    /// Amplitude reflection coefficient of the four bounding walls; 0 gives
    /// a single line-of-sight path.
    pub wall_reflection: f64,
    /// Fixed point scatterers (furniture) at seeded positions inside the
    /// room, each adding a path `ap -> scatterer -> phone`.
    pub scatterers: usize,
    pub scatterer_gain: f64,
    /// Per-subcarrier noise std relative to the direct-path amplitude,
    /// `noise_floor + noise_per_meter * d`.
    pub noise_floor: f64,
    pub noise_per_meter: f64,
    /// Random scatterer (people moving) whose relative amplitude grows
    /// with distance.
    pub interference_per_meter: f64,
    /// Uniform random phase common to all subcarriers of a scan.
    pub random_common_phase: bool,
    /// Std of the per-scan timing offset in nanoseconds (linear phase).
    pub timing_jitter_ns: f64,
}

impl Default for CsiChannelModel {
    fn default() -> Self {
        Self {
            carrier_hz: 2.412e9,
            subcarrier_spacing_hz: 312.5e3,
            coherence_wavelength: 12.0,
            wall_reflection: 0.6,
            scatterers: 12,
            scatterer_gain: 1.0,
            noise_floor: 0.02,
            noise_per_meter: 0.02,
            interference_per_meter: 0.03,
            random_common_phase: true,
            timing_jitter_ns: 5.0,
        }
    }
}

impl CsiChannelModel {
    pub fn noiseless(&self) -> Self {
        Self {
            noise_floor: 0.0,
            noise_per_meter: 0.0,
            interference_per_meter: 0.0,
            random_common_phase: false,
            timing_jitter_ns: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationModel {
    /// Received power at 1 m, dBm.
    pub pl0: f64,
    pub pathloss_exponent: f64,
    pub shadowing_sigma: f64,
    /// Lattice pitch of the shadowing field, metres.
    pub shadow_cell: f64,
    pub fast_fading_sigma: f64,
    /// Frames below this level are not heard by the AP.
    pub sensitivity: f64,
    /// Seed of the frozen shadowing field.
    pub seed: u64,
    /// Room extent used for wall reflections of the CSI model.
    pub bounds: (f64, f64),
    pub csi: CsiChannelModel,
}

impl Default for PropagationModel {
    fn default() -> Self {
        Self {
            pl0: -30.0,
            pathloss_exponent: 3.5,
            shadowing_sigma: 3.0,
            shadow_cell: 3.0,
            fast_fading_sigma: 2.0,
            sensitivity: -95.0,
            seed: 7,
            bounds: (20.0, 15.0),
            csi: CsiChannelModel::default(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal value attached to one lattice node.
fn lattice_normal(seed: u64, ap: ApId, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(ap as u64 ^ splitmix64((ix as u64) ^ splitmix64(iy as u64))));
    let h2 = splitmix64(h);
    let u1 = ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = (h2 >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl PropagationModel {
    pub fn validate(&self) -> crate::Result<()> {
        if !(1.5..=6.0).contains(&self.pathloss_exponent) {
            return Err(crate::Error::Config(format!(
                "path-loss exponent {} outside [1.5, 6]",
                self.pathloss_exponent
            )));
        }
        if self.shadowing_sigma < 0.0 || self.fast_fading_sigma < 0.0 {
            return Err(crate::Error::Config("sigmas must be non-negative".into()));
        }
        if !(self.shadow_cell > 0.0) {
            return Err(crate::Error::Config("shadow cell must be positive".into()));
        }
        Ok(())
    }

    /// Mean received power before shadowing and device effects.
    pub fn mean_path_rssi(&self, ap: &Location, phone: &Location) -> f64 {
        let d = ap.distance(phone).max(MIN_DISTANCE);
        self.pl0 - 10.0 * self.pathloss_exponent * d.log10()
    }

    /// Frozen shadowing in dB. Bilinear blend of per-node normals, rescaled
    /// so the marginal std is `shadowing_sigma` everywhere.
    pub fn shadow(&self, ap: ApId, phone: &Location) -> f64 {
        if self.shadowing_sigma == 0.0 {
            return 0.0;
        }
        let gx = phone.x / self.shadow_cell;
        let gy = phone.y / self.shadow_cell;
        let (ix, iy) = (gx.floor() as i64, gy.floor() as i64);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        let w = [
            (1.0 - fx) * (1.0 - fy),
            fx * (1.0 - fy),
            (1.0 - fx) * fy,
            fx * fy,
        ];
        let z = [
            lattice_normal(self.seed, ap, ix, iy),
            lattice_normal(self.seed, ap, ix + 1, iy),
            lattice_normal(self.seed, ap, ix, iy + 1),
            lattice_normal(self.seed, ap, ix + 1, iy + 1),
        ];
        let num: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
        let den: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        self.shadowing_sigma * num / den
    }

    /// Mean RSSI a device produces at `phone` (no per-frame noise).
    pub fn expected_rssi(&self, dev: &DeviceProfile, ap_id: ApId, ap: &Location, phone: &Location) -> f64 {
        self.mean_path_rssi(ap, phone) + self.shadow(ap_id, phone) + dev.tx_offset_mean
    }

    /// Std of the per-frame RSSI noise for a device.
    pub fn frame_sigma(&self, dev: &DeviceProfile) -> f64 {
        dev.tx_offset_sigma.hypot(self.fast_fading_sigma)
    }

    /// One RSSI reading, clamped to the device's reporting range.
    pub fn rssi_at<R: Rng + ?Sized>(
        &self,
        dev: &DeviceProfile,
        ap_id: ApId,
        ap: &Location,
        phone: &Location,
        rng: &mut R,
    ) -> f64 {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let v = self.expected_rssi(dev, ap_id, ap, phone)
            + dev.tx_offset_sigma * z1
            + self.fast_fading_sigma * z2;
        v.clamp(dev.rssi_range.0, dev.rssi_range.1)
    }

    /// Path list (amplitude, length) for the CSI model: direct path plus
    /// first-order reflections off the four walls and one bounce per
    /// scatterer.
    fn paths(&self, ap: &Location, phone: &Location) -> Vec<(f64, f64)> {
        let d0 = ap.distance(phone).max(MIN_DISTANCE);
        let mut out = vec![(1.0 / d0, d0)];
        let rho = self.csi.wall_reflection;
        if rho != 0.0 {
            let (w, h) = self.bounds;
            let images = [
                Location::new(-ap.x, ap.y),
                Location::new(2.0 * w - ap.x, ap.y),
                Location::new(ap.x, -ap.y),
                Location::new(ap.x, 2.0 * h - ap.y),
            ];
            for img in images {
                let d = img.distance(phone).max(MIN_DISTANCE);
                out.push((rho / d, d));
            }
        }
        for s in self.scatterer_positions() {
            let d = (ap.distance(&s) + s.distance(phone)).max(MIN_DISTANCE);
            out.push((self.csi.scatterer_gain / d, d));
        }
        out
    }

    /// Scatterer positions, frozen by `seed`.
    pub fn scatterer_positions(&self) -> Vec<Location> {
        let (w, h) = self.bounds;
        (0..self.csi.scatterers)
            .map(|i| {
                let hx = splitmix64(self.seed ^ splitmix64(0x5ca7 + 2 * i as u64));
                let hy = splitmix64(self.seed ^ splitmix64(0x5ca7 + 2 * i as u64 + 1));
                let u = |v: u64| (v >> 11) as f64 / (1u64 << 53) as f64;
                Location::new(u(hx) * w, u(hy) * h)
            })
            .collect()
    }

    /// Noise-free complex response per subcarrier.
    pub fn channel_response(&self, ap: &Location, phone: &Location) -> [Complex64; SUBCARRIERS] {
        let paths = self.paths(ap, phone);
        let f_eff = SPEED_OF_LIGHT / self.csi.coherence_wavelength;
        let centre = (SUBCARRIERS / 2) as f64;
        std::array::from_fn(|k| {
            let f = f_eff + self.csi.subcarrier_spacing_hz * (k as f64 - centre);
            paths
                .iter()
                .map(|&(a, d)| Complex64::from_polar(a, -2.0 * std::f64::consts::PI * f * d / SPEED_OF_LIGHT))
                .sum()
        })
    }

    /// One CSI scan. Noise and interference grow with AP distance, so scans
    /// close to an AP are stable and far ones fluctuate.
    #[allow(clippy::too_many_arguments)]
    pub fn csi_at<R: Rng + ?Sized>(
        &self,
        dev: &DeviceProfile,
        ap_id: ApId,
        ap: &Location,
        phone: &Location,
        timestamp: f64,
        rng: &mut R,
    ) -> CsiScan {
        let csi = &self.csi;
        let d = ap.distance(phone).max(MIN_DISTANCE);
        let direct = 1.0 / d;
        let gain = 10f64.powf(dev.tx_offset_mean / 20.0);
        let mut h = self.channel_response(ap, phone);

        let centre = (SUBCARRIERS / 2) as f64;
        let interf = csi.interference_per_meter * d * direct;
        if interf > 0.0 {
            let delay = rng.random_range(0.0..100e-9);
            let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            for (k, hk) in h.iter_mut().enumerate() {
                let f = csi.subcarrier_spacing_hz * (k as f64 - centre);
                *hk += Complex64::from_polar(interf, phi - 2.0 * std::f64::consts::PI * f * delay);
            }
        }
        let sigma = (csi.noise_floor + csi.noise_per_meter * d) * direct;
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma / std::f64::consts::SQRT_2).expect("sigma is finite");
            for hk in h.iter_mut() {
                *hk += Complex64::new(n.sample(rng), n.sample(rng));
            }
        }
        let common = if csi.random_common_phase {
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
        } else {
            0.0
        };
        let jitter = if csi.timing_jitter_ns > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            z * csi.timing_jitter_ns * 1e-9
        } else {
            0.0
        };
        let mut amplitudes = [0.0; SUBCARRIERS];
        let mut phases = [0.0; SUBCARRIERS];
        for (k, hk) in h.iter().enumerate() {
            let f = csi.subcarrier_spacing_hz * (k as f64 - centre);
            amplitudes[k] = gain * hk.norm();
            phases[k] = wrap_phase(hk.arg() + common - 2.0 * std::f64::consts::PI * f * jitter);
        }
        CsiScan::new(ap_id, timestamp, amplitudes, phases).expect("generated scan is valid")
    }
}

//! Kernel density estimates of per-(RP, AP) RSSI distributions.
//!
//! A fitted [`RssiPdf`] keeps its samples and evaluates
//! `(1 / (n h)) Σ K((v - s_x) / h)` directly; nothing is binned.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{ApId, FingerprintDatabase, FingerprintRecord, RpId};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
    Tophat,
}

impl KernelKind {
    /// Unit-bandwidth kernel value.
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelKind::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelKind::Tophat => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support in units of the bandwidth, `None` when
    /// the kernel has unbounded support.
    pub fn support(self) -> Option<f64> {
        match self {
            KernelKind::Gaussian => None,
            KernelKind::Epanechnikov | KernelKind::Tophat => Some(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Bandwidth in dB.
    pub bandwidth: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Gaussian,
            bandwidth: 2.0,
        }
    }
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Self {
        Self {
            kind: KernelKind::Gaussian,
            bandwidth,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RssiPdf {
    kernel: KernelSpec,
    samples: Vec<f64>,
    norm: f64,
}

impl RssiPdf {
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Density at `v` dBm (units 1/dB).
    pub fn evaluate(&self, v: f64) -> f64 {
        let h = self.kernel.bandwidth;
        let kind = self.kernel.kind;
        let sum: f64 = self.samples.iter().map(|&s| kind.value((v - s) / h)).sum();
        self.norm * sum
    }
}

pub fn fit(samples: &[f64], kernel: KernelSpec) -> Result<RssiPdf> {
    if !(kernel.bandwidth > 0.0 && kernel.bandwidth.is_finite()) {
        return Err(Error::InvalidBandwidth(kernel.bandwidth));
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    Ok(RssiPdf {
        kernel,
        samples: samples.to_vec(),
        norm: 1.0 / (samples.len() as f64 * kernel.bandwidth),
    })
}

/// Density of every device's samples for `ap` at this RP taken together.
pub fn pooled_fit(record: &FingerprintRecord, ap: ApId, kernel: KernelSpec) -> Result<RssiPdf> {
    let pooled = record.pooled_rssi(ap);
    if pooled.is_empty() {
        return Err(Error::NoSamplesForAp {
            rp: record.rp_id,
            ap,
        });
    }
    fit(&pooled, kernel)
}

/// Pooled densities for every (RP, AP) pair in a database.
///
/// Pairs without samples are `None`; the localizer treats them with the
/// density floor.
#[derive(Clone, Debug)]
pub struct DensityMap {
    rps: Vec<RpId>,
    pdfs: BTreeMap<RpId, Vec<Option<RssiPdf>>>,
    ap_count: usize,
}

impl DensityMap {
    pub fn fit(db: &FingerprintDatabase, kernel: KernelSpec) -> Result<Self> {
        let ap_count = db.env().ap_count();
        let mut pdfs = BTreeMap::new();
        for rec in db.records() {
            let row = (0..ap_count)
                .map(|ap| match pooled_fit(rec, ap, kernel) {
                    Ok(p) => Ok(Some(p)),
                    Err(Error::NoSamplesForAp { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            pdfs.insert(rec.rp_id, row);
        }
        Ok(Self {
            rps: pdfs.keys().copied().collect(),
            pdfs,
            ap_count,
        })
    }

    /// Build from explicit per-RP rows (row length = AP count).
    pub fn from_rows(rows: BTreeMap<RpId, Vec<Option<RssiPdf>>>) -> Result<Self> {
        let ap_count = rows.values().next().map(Vec::len).unwrap_or(0);
        if let Some((_, r)) = rows.iter().find(|(_, r)| r.len() != ap_count) {
            return Err(Error::DimensionMismatch {
                expected: ap_count,
                got: r.len(),
            });
        }
        Ok(Self {
            rps: rows.keys().copied().collect(),
            pdfs: rows,
            ap_count,
        })
    }

    pub fn rps(&self) -> &[RpId] {
        &self.rps
    }

    pub fn ap_count(&self) -> usize {
        self.ap_count
    }

    pub fn get(&self, rp: RpId, ap: ApId) -> Option<&RssiPdf> {
        self.pdfs.get(&rp).and_then(|row| row.get(ap)).and_then(Option::as_ref)
    }
}

/// Exact one-sample peak `K(0)/h` for a Gaussian kernel; handy for
/// sanity checks.
pub fn gaussian_peak(bandwidth: f64) -> f64 {
    1.0 / (bandwidth * (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{Location, RssiSample};

    #[test]
    fn single_sample_peak() {
        let pdf = fit(&[-50.0], KernelSpec::gaussian(2.0)).unwrap();
        let expected = 1.0 / (2.0 * (2.0 * PI).sqrt());
        assert!((pdf.evaluate(-50.0) - expected).abs() < 1e-15);
        assert!((pdf.evaluate(-50.0) - 0.19947).abs() < 1e-5);
    }

    #[test]
    fn duplicates_cancel() {
        for kind in [KernelKind::Gaussian, KernelKind::Epanechnikov, KernelKind::Tophat] {
            let k = KernelSpec { kind, bandwidth: 2.0 };
            let a = fit(&[-50.0], k).unwrap();
            let b = fit(&[-50.0, -50.0], k).unwrap();
            for v in [-55.0, -51.3, -50.0, -49.0, -40.0] {
                assert_eq!(a.evaluate(v), b.evaluate(v));
            }
        }
    }

    #[test]
    fn symmetric_about_midpoint() {
        let pdf = fit(&[-60.0, -40.0], KernelSpec::gaussian(2.0)).unwrap();
        for d in [0.5, 1.0, 3.0, 7.25] {
            assert!((pdf.evaluate(-50.0 + d) - pdf.evaluate(-50.0 - d)).abs() < 1e-18);
        }
    }

    #[test]
    fn tophat_outside_support() {
        let pdf = fit(&[-50.0], KernelSpec { kind: KernelKind::Tophat, bandwidth: 2.0 }).unwrap();
        assert_eq!(pdf.evaluate(-53.0), 0.0);
        assert_eq!(pdf.evaluate(-51.0), 0.25);
    }

    #[test]
    fn two_term_closed_form() {
        let pdf = fit(&[-45.0, -30.0], KernelSpec::gaussian(2.0)).unwrap();
        // u = 2.5 and -5.0
        let expected = (1.0 / 4.0) * INV_SQRT_2PI * ((-3.125f64).exp() + (-12.5f64).exp());
        assert!((pdf.evaluate(-40.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit(&[], KernelSpec::default()), Err(Error::EmptySamples)));
        assert!(matches!(
            fit(&[-50.0, f64::NAN], KernelSpec::default()),
            Err(Error::NonFiniteSample(1))
        ));
        assert!(fit(&[-50.0], KernelSpec::gaussian(0.0)).is_err());
    }

    fn record_with(devs: &[(&str, Vec<f64>)]) -> FingerprintRecord {
        let mut rec = FingerprintRecord::new(0, Location::new(0.0, 0.0));
        for (name, vals) in devs {
            rec.rssi.entry(0).or_default().insert(
                name.to_string(),
                vals.iter().map(|&rssi| RssiSample { t: 0.0, rssi }).collect(),
            );
        }
        rec
    }

    #[test]
    fn pooled_single_device_equals_fit() {
        let vals = vec![-40.0, -42.5, -39.0];
        let rec = record_with(&[("nexus", vals.clone())]);
        let k = KernelSpec::default();
        assert_eq!(pooled_fit(&rec, 0, k).unwrap(), fit(&vals, k).unwrap());
    }

    #[test]
    fn pooled_covers_union_of_ranges() {
        let iphone: Vec<f64> = (0..28).map(|i| -45.0 + i as f64).collect();
        let htc: Vec<f64> = (0..13).map(|i| -30.0 + i as f64).collect();
        let rec = record_with(&[("htc", htc), ("iphone", iphone)]);
        let pdf = pooled_fit(&rec, 0, KernelSpec::default()).unwrap();
        for v in [-45.0, -40.0, -30.0, -18.0] {
            assert!(pdf.evaluate(v) > 0.01, "no mass at {v}");
        }
    }

    #[test]
    fn pooled_missing_ap() {
        let rec = record_with(&[("a", vec![-50.0])]);
        assert!(matches!(
            pooled_fit(&rec, 3, KernelSpec::default()),
            Err(Error::NoSamplesForAp { rp: 0, ap: 3 })
        ));
    }

    #[test]
    fn narrower_bandwidth_taller_peak() {
        let mut last = f64::INFINITY;
        for h in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = fit(&[-50.0], KernelSpec::gaussian(h)).unwrap().evaluate(-50.0);
            assert!(v < last);
            last = v;
        }
    }
}

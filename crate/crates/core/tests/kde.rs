mod common;

use std::collections::BTreeMap;

use common::{kde_direct, simpson};
use proptest::prelude::*;
use wifiloc::fingerprint::{FingerprintRecord, Location, RssiSample};
use wifiloc::kde::{fit, gaussian_peak, pooled_fit, KernelKind, KernelSpec};

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-95.0f64..-20.0, 1..40)
}

#[test]
fn single_sample_peak() {
    let pdf = fit(&[-60.0], KernelSpec::gaussian(2.0)).unwrap();
    assert!((pdf.evaluate(-60.0) - 0.199_471_140_200_716_35).abs() < 1e-15);
    assert!((pdf.evaluate(-60.0) - gaussian_peak(2.0)).abs() < 1e-15);
}

#[test]
fn two_symmetric_samples() {
    let pdf = fit(&[-62.0, -58.0], KernelSpec::gaussian(2.0)).unwrap();
    // each kernel is 2 bandwidths away at the midpoint: φ(1)/h
    let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    assert!((pdf.evaluate(-60.0) - phi1 / 2.0).abs() < 1e-15);
}

#[test]
fn compact_kernels_integrate_to_one() {
    for kind in [KernelKind::Epanechnikov, KernelKind::Tophat] {
        let pdf = fit(&[-70.0, -65.5, -40.0], KernelSpec { kind, bandwidth: 3.0 }).unwrap();
        // split at every support edge and stay off the jumps
        let mut edges: Vec<f64> = vec![-150.0, 50.0];
        for s in pdf.samples() {
            edges.extend([s - 3.0, s + 3.0]);
        }
        edges.sort_by(f64::total_cmp);
        let total: f64 = edges.windows(2).map(|w| simpson(|v| pdf.evaluate(v), w[0] + 1e-12, w[1] - 1e-12, 200)).sum();
        assert!((total - 1.0).abs() < 1e-9, "{kind:?}: {total}");
    }
}

#[test]
fn rejects_bad_input() {
    assert!(fit(&[], KernelSpec::default()).is_err());
    assert!(fit(&[-50.0], KernelSpec::gaussian(0.0)).is_err());
    assert!(fit(&[-50.0, f64::NAN], KernelSpec::default()).is_err());
    let rec = FingerprintRecord::new(0, Location::new(0.5, 0.5));
    assert!(pooled_fit(&rec, 0, KernelSpec::default()).is_err());
}

#[test]
fn pooling_concatenates_devices() {
    let mut rec = FingerprintRecord::new(0, Location::new(0.5, 0.5));
    let mk = |v: &[f64]| v.iter().map(|&rssi| RssiSample { t: 0.0, rssi }).collect::<Vec<_>>();
    let mut devs = BTreeMap::new();
    devs.insert("a".to_string(), mk(&[-50.0, -52.0]));
    devs.insert("b".to_string(), mk(&[-60.0]));
    rec.rssi.insert(0, devs);
    let pooled = pooled_fit(&rec, 0, KernelSpec::default()).unwrap();
    let direct = fit(&[-50.0, -52.0, -60.0], KernelSpec::default()).unwrap();
    for v in [-70.0, -55.0, -51.0] {
        assert_eq!(pooled.evaluate(v), direct.evaluate(v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_direct_sum(s in samples(), h in 0.5f64..6.0, v in -120.0f64..0.0) {
        let pdf = fit(&s, KernelSpec::gaussian(h)).unwrap();
        prop_assert!((pdf.evaluate(v) - kde_direct(&s, h, v)).abs() <= 1e-12);
    }

    #[test]
    fn integrates_to_one(s in samples()) {
        let pdf = fit(&s, KernelSpec::default()).unwrap();
        let total = simpson(|v| pdf.evaluate(v), -150.0, 50.0, 4000);
        prop_assert!((total - 1.0).abs() <= 1e-6, "{}", total);
    }

    #[test]
    fn translation_equivariant(s in samples(), shift in -10.0f64..10.0, v in -100.0f64..-10.0) {
        let a = fit(&s, KernelSpec::default()).unwrap();
        let moved: Vec<f64> = s.iter().map(|x| x + shift).collect();
        let b = fit(&moved, KernelSpec::default()).unwrap();
        prop_assert!((a.evaluate(v) - b.evaluate(v + shift)).abs() <= 1e-12);
    }

    #[test]
    fn wider_bandwidth_lowers_single_peak(x in -90.0f64..-30.0, h in 0.5f64..5.0, dh in 0.1f64..3.0) {
        let narrow = fit(&[x], KernelSpec::gaussian(h)).unwrap();
        let wide = fit(&[x], KernelSpec::gaussian(h + dh)).unwrap();
        prop_assert!(wide.evaluate(x) < narrow.evaluate(x));
    }

    #[test]
    fn non_negative(s in samples(), v in -200.0f64..100.0) {
        let pdf = fit(&s, KernelSpec::default()).unwrap();
        prop_assert!(pdf.evaluate(v) >= 0.0);
    }
}

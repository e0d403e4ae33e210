//! Fit RSSI densities at one RP from four phone models, separately and
//! pooled, and print them side by side.
//!
//! ```text
//! cargo run --release --example kde_device_pooling
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wifiloc::airsim::{DeviceProfile, PropagationModel};
use wifiloc::fingerprint::{Environment, FingerprintRecord, Location, RssiSample};
use wifiloc::kde::{fit, pooled_fit, KernelSpec};

fn main() -> wifiloc::Result<()> {
    let env = Environment::desk();
    let prop = PropagationModel::default();
    let ap = &env.aps[0];
    let spot = Location::new(6.5, 4.5);
    let kernel = KernelSpec::gaussian(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut rec = FingerprintRecord::new(0, spot);
    let mut per_device = Vec::new();
    for dev in DeviceProfile::all() {
        let samples: Vec<f64> = (0..400).map(|_| prop.rssi_at(&dev, ap.id, &ap.location, &spot, &mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        println!("{:<11} n={} mean {mean:.1} dBm", dev.model_name, samples.len());
        rec.rssi.entry(ap.id).or_default().insert(
            dev.model_name.clone(),
            samples.iter().map(|&rssi| RssiSample { t: 0.0, rssi }).collect(),
        );
        per_device.push((dev.model_name.clone(), fit(&samples, kernel)?));
    }
    let pooled = pooled_fit(&rec, ap.id, kernel)?;

    print!("\n{:>6}", "dBm");
    for (name, _) in &per_device {
        print!(" {name:>11}");
    }
    println!(" {:>11}", "pooled");
    let centre = prop.expected_rssi(&DeviceProfile::samsung_s6(), ap.id, &ap.location, &spot).round();
    for v in (-14..=14).step_by(2).map(|d| centre + d as f64) {
        print!("{v:>6.0}");
        for (_, pdf) in &per_device {
            print!(" {:>11.4}", pdf.evaluate(v));
        }
        println!(" {:>11.4}", pooled.evaluate(v));
    }
    Ok(())
}

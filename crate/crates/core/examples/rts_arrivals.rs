//! How RTS elicitation changes what an AP hears from an idle phone: gap
//! quantiles with and without RTS, and CTS yield per phone model.
//!
//! ```text
//! cargo run --release --example rts_arrivals
//! ```

use wifiloc::airsim::{DeviceProfile, PhoneState, DEFAULT_RTS_INTERVAL};
use wifiloc::eval::{frames_per_minute, gap_calibration};

fn main() -> wifiloc::Result<()> {
    let thresholds = [1.0, 4.0, 30.0];
    println!("{:<11} {:>8} {:>9} {:>9} {:>9} {:>10}", "device", "rts", "P(<=1s)", "P(<=4s)", "P(<=30s)", "frames/min");
    for (i, dev) in DeviceProfile::all().iter().enumerate() {
        let fpm = frames_per_minute(dev, DEFAULT_RTS_INTERVAL, 10, i as u64)?;
        for rts in [None, Some(DEFAULT_RTS_INTERVAL)] {
            let c = gap_calibration(dev, PhoneState::InactiveScreenOn, rts, &thresholds, 10_000, i as u64)?;
            let q = |t| c.fraction_within(t).unwrap_or(f64::NAN);
            let label = rts.map_or("off".to_string(), |r| format!("{:.0}ms", r * 1e3));
            let rate = if rts.is_some() { format!("{fpm:.0}") } else { "-".into() };
            println!("{:<11} {label:>8} {:>9.3} {:>9.3} {:>9.3} {rate:>10}", dev.model_name, q(1.0), q(4.0), q(30.0));
        }
    }
    let on = DeviceProfile::samsung_s6().screen_on;
    println!("\nclosed form without RTS: P(gap <= 30 s) = {:.3}", on.cdf(30.0));
    Ok(())
}

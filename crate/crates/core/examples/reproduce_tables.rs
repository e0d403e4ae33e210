//! Per-device inactive SSP errors, then SSP against two-step for active
//! phones on paired streams. CDF columns go to `cdf_inactive.csv` and
//! `cdf_active.csv` in the output directory.
//!
//! ```text
//! cargo run --release --example reproduce_tables [seeds] [out_dir]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use wifiloc::airsim::{DeviceProfile, PhoneState};
use wifiloc::eval::{compare, run_test, Engine, RunSpec, ScenarioConfig};
use wifiloc::protocol::Algorithm;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wifiloc_tables"));
    std::fs::create_dir_all(&out)?;

    let engine = Engine::survey(ScenarioConfig::desk())?;
    let spec = |device: &str, state, algorithm, rts| RunSpec {
        device: device.into(),
        state,
        algorithm,
        rts,
        seeds: (0..seeds).collect(),
        delta_t: 1.0,
    };

    let mut inactive = BTreeMap::new();
    for dev in DeviceProfile::all() {
        let s = spec(&dev.model_name, PhoneState::InactiveScreenOn, Algorithm::Ssp, true);
        inactive.insert(dev.model_name.clone(), run_test(&s, &engine)?);
    }
    let table = compare(&inactive)?;
    println!("Inactive phones, SSP with RTS\n{}", table.table_text());
    std::fs::write(out.join("cdf_inactive.csv"), table.cdf_csv())?;

    let mut active = BTreeMap::new();
    for dev in DeviceProfile::all() {
        for algo in [Algorithm::Ssp, Algorithm::TwoStep] {
            let s = spec(&dev.model_name, PhoneState::Active, algo, false);
            active.insert(format!("{} {}", dev.model_name, algo.as_str()), run_test(&s, &engine)?);
        }
    }
    let table = compare(&active)?;
    println!("Active phones\n{}", table.table_text());
    std::fs::write(out.join("cdf_active.csv"), table.cdf_csv())?;
    println!("CDFs written to {}", out.display());
    Ok(())
}

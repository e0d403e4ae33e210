//! Track an inactive phone along a random route with RTS elicitation and
//! print every window's SSP estimate next to the true position.
//!
//! ```text
//! cargo run --release --example ssp_tracking [device] [seed]
//! ```

use wifiloc::airsim::{DeviceProfile, PhoneState};
use wifiloc::eval::{localize_run, Engine, ScenarioConfig};
use wifiloc::protocol::Algorithm;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let device = args.next().unwrap_or_else(|| "samsung_s6".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let engine = Engine::survey(ScenarioConfig::desk())?;
    let dev = DeviceProfile::by_name(&device)?;
    let run = engine.simulate(&dev, PhoneState::InactiveScreenOn, true, seed)?;
    let res = localize_run(&engine, &run, Algorithm::Ssp, 1.0, true)?;

    println!("{device}, seed {seed}: {} frames over {:.1} s", run.events.len(), run.trajectory.end_time());
    println!("{:>6} {:>14} {:>14} {:>7}", "t", "estimate", "truth", "error");
    for f in &res.fixes {
        println!(
            "{:>6.1} ({:>5.2},{:>5.2}) ({:>5.2},{:>5.2}) {:>7.2}",
            f.t, f.estimate.x, f.estimate.y, f.truth.x, f.truth.y, f.error
        );
    }
    let rep = res.report();
    println!("\nmean ± std {} m, fix rate {:.2}", rep.summary(), rep.fix_rate);
    Ok(())
}

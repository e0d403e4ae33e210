//! Describe a site in TOML, survey it and compare grid spacings. The same
//! file works with `wifiloc simulate-db --scenario` and `wifiloc run`.
//!
//! ```text
//! cargo run --release --example custom_scenario
//! ```

use wifiloc::airsim::PhoneState;
use wifiloc::eval::{run_test, Engine, RunSpec, ScenarioConfig};
use wifiloc::protocol::Algorithm;

const SITE: &str = r#"
name = "corridor"
delta_t = 1.0

[environment]
preset = ""
width = 24.0
height = 6.0
grid_spacing = 1.0
aps = [
    { id = 0, location = { x = 1.0, y = 1.0 }, rts_capable = true },
    { id = 1, location = { x = 12.0, y = 5.0 }, rts_capable = false },
    { id = 2, location = { x = 23.0, y = 1.0 }, rts_capable = true },
]

[propagation]
pathloss_exponent = 3.0
shadowing_sigma = 4.0

[training]
devices = ["samsung_s6", "htc_one_x"]

[route]
kind = "random_waypoint"
waypoints = 5
"#;

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig::from_toml(SITE)?;
    for spacing in [0.5, 1.0, 2.0] {
        let mut sc = base.clone();
        sc.environment.grid_spacing = spacing;
        let engine = Engine::survey(sc)?;
        let spec = RunSpec {
            device: "samsung_s6".into(),
            state: PhoneState::InactiveScreenOn,
            algorithm: Algorithm::Ssp,
            rts: true,
            seeds: (0..8).collect(),
            delta_t: 1.0,
        };
        let rep = run_test(&spec, &engine)?;
        println!("grid {spacing:.1} m, {:>3} RPs: {} m", engine.db.len(), rep.summary());
    }
    println!("\nfull scenario with defaults filled in:\n{}", base.to_toml()?);
    Ok(())
}

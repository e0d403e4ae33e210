//! Survey the desk scenario, write the database as text files, read it
//! back and check that localization is unchanged.
//!
//! ```text
//! cargo run --release --example database_roundtrip [dir]
//! ```

use std::path::PathBuf;

use wifiloc::airsim::{DeviceProfile, PhoneState};
use wifiloc::dbfile::{load_database, save_database};
use wifiloc::eval::{localize_run, Engine, ScenarioConfig};
use wifiloc::protocol::Algorithm;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wifiloc_desk_db"));
    let scenario = ScenarioConfig::desk();
    let surveyed = Engine::survey(scenario.clone())?;
    save_database(&surveyed.db, &dir)?;
    let files = std::fs::read_dir(&dir)?.count();
    println!("wrote {} RPs ({files} files) to {}", surveyed.db.len(), dir.display());

    let loaded = Engine::new(scenario, load_database(&dir)?)?;
    let run = surveyed.simulate(&DeviceProfile::iphone_x(), PhoneState::Active, false, 5)?;
    for algo in [Algorithm::Ssp, Algorithm::TwoStep] {
        let a = localize_run(&surveyed, &run, algo, 1.0, false)?.report();
        let b = localize_run(&loaded, &run, algo, 1.0, false)?.report();
        println!("{:<9} in memory {:.6} m, from disk {:.6} m", algo.as_str(), a.mean, b.mean);
    }
    Ok(())
}

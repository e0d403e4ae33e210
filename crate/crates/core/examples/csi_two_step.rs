//! Refine SSP candidates with CSI for an active phone. For each window the
//! top-5 RPs are listed with their distance to the truth and CSI
//! similarity; `*` marks the one refinement picks.
//!
//! ```text
//! cargo run --release --example csi_two_step [seed]
//! ```

use wifiloc::airsim::{DeviceProfile, PhoneState};
use wifiloc::csi::{candidate_similarity, refine, select_aps, CsiObservation};
use wifiloc::eval::{replay_windows, Engine, ScenarioConfig};
use wifiloc::protocol::{window_csi, window_fingerprint};
use wifiloc::ssp::{estimate, top_k};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let engine = Engine::survey(ScenarioConfig::desk())?;
    let dev = DeviceProfile::nexus5();
    let run = engine.simulate(&dev, PhoneState::Active, false, seed)?;
    let (triggers, _, _) = replay_windows(engine.env(), &run, 1.0, false)?;
    let cfg = engine.scenario.refine;

    let (mut ssp_sum, mut two_sum, mut n) = (0.0, 0.0, 0usize);
    let mut prev = None;
    for trig in &triggers {
        let truth = run.ground_truth(trig.window_end);
        let fp = window_fingerprint(&trig.frames, engine.env().ap_count())?;
        let post = engine.ssp.posterior(&engine.db, &fp, prev.as_ref())?;
        let ssp = estimate(&post, &engine.db, 5);
        let cands = top_k(&post, 5);
        let obs = CsiObservation::from_scans(&window_csi(&trig.frames));
        let Ok((pick, loc)) = refine(&cands, &fp, &obs, &engine.db, &engine.templates, &cfg) else {
            continue;
        };
        let aps = select_aps(&fp, &obs, cfg.strongest_aps);
        println!("t={:.0}  ssp error {:.2} m, refined {:.2} m, APs {aps:?}", trig.window_end, ssp.distance(&truth), loc.distance(&truth));
        for rp in &cands {
            let at = engine.db.location(*rp).expect("candidate RP");
            let s = candidate_similarity(*rp, &aps, &obs, &engine.templates, &cfg);
            let mark = if *rp == pick { '*' } else { ' ' };
            println!("   {mark} rp {rp:>3}  p={:.3}  dist {:>5.2}  sim {s:+.3}", post.weight(*rp), at.distance(&truth));
        }
        ssp_sum += ssp.distance(&truth);
        two_sum += loc.distance(&truth);
        n += 1;
        prev = Some(loc);
    }
    println!("\n{n} windows: SSP mean {:.2} m, two-step mean {:.2} m", ssp_sum / n as f64, two_sum / n as f64);
    Ok(())
}

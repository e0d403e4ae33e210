//! Drive the AP-side monitor with a hand-written frame schedule: a probe
//! request opens a track, CTS frames keep an idle phone localizable, data
//! frames switch it to active and silence the RTS scheduler, and a stranger
//! that never probed is ignored.
//!
//! ```text
//! cargo run --release --example protocol_monitor
//! ```

use std::collections::BTreeMap;

use wifiloc::airsim::{ApObservation, FrameEvent, FrameKind, Mac};
use wifiloc::fingerprint::Environment;
use wifiloc::protocol::{Monitor, MonitorOutput, RtsSchedule};

fn frame(t: f64, kind: FrameKind, mac: Mac) -> FrameEvent {
    let obs = ApObservation { rssi: -60.0, csi: None };
    FrameEvent {
        t,
        kind,
        mac,
        ap_observations: BTreeMap::from([(0, obs.clone()), (2, obs)]),
    }
}

fn main() -> wifiloc::Result<()> {
    let env = Environment::desk();
    let phone = Mac::from_seed(1);
    let stranger = Mac::from_seed(2);
    let mut schedule = vec![frame(0.0, FrameKind::ProbeRequest, phone)];
    schedule.extend((1..8).map(|k| frame(0.3 * k as f64, FrameKind::Cts, phone)));
    schedule.push(frame(1.5, FrameKind::Data, stranger));
    schedule.extend((0..20).map(|k| frame(3.0 + 0.05 * k as f64, FrameKind::Data, phone)));
    schedule.push(frame(6.2, FrameKind::Cts, phone));

    let mut monitor = Monitor::new(&env, 1.0, RtsSchedule::default(), true)?;
    let mut outputs = Vec::new();
    for ev in &schedule {
        outputs.extend(monitor.process(ev)?);
    }
    outputs.extend(monitor.finish(8.0));
    let mut rts = 0;
    for out in outputs {
        match out {
            MonitorOutput::Rts(_) => rts += 1,
            MonitorOutput::Trigger(t) => println!(
                "window [{:.0}, {:.0}) -> {} frames, {}",
                t.window_start,
                t.window_end,
                t.frames.len(),
                t.classification.as_str()
            ),
        }
    }
    println!("{rts} RTS commands; tracked MACs: {:?}", monitor.tracks().map(|t| t.mac.to_string()).collect::<Vec<_>>());
    println!("\nlog without RTS lines:");
    for line in monitor.log().to_csv().lines().filter(|l| !l.contains(",rts,")) {
        println!("{line}");
    }
    Ok(())
}

mod common;

use common::{env_with_rts, event, observe, random_schedule, replay_oracle, ExpectedTrack};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wifiloc::airsim::{generate_route, run_trajectory, DeviceProfile, FrameKind, Mac, PhoneState, RouteConfig};
use wifiloc::fingerprint::Environment;
use wifiloc::protocol::{
    classify, on_frame, Classification, LogAction, Monitor, RtsSchedule, TrackState,
};

fn mac(n: u8) -> Mac {
    Mac([0x02, 0, 0, 0, 0, n])
}

#[test]
fn random_schedules_match_replay_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut active_triggers, mut commands) = (0, 0);
    for case in 0..100 {
        let delta_t = [1.0, 1.5, 2.0][rng.random_range(0..3)];
        let rts = rng.random_bool(0.75);
        let env = env_with_rts(rng.random_range(0..4));
        let rts_aps: Vec<usize> = env.rts_capable_aps().map(|a| a.id).collect();
        let macs = [mac(1), mac(2), mac(3)];
        let events = random_schedule(&mut rng, &macs, 25.0);
        let finish = events.last().map_or(0.0, |e| e.t) + rng.random_range(0.0..3.0);

        let mut monitor = Monitor::new(&env, delta_t, RtsSchedule::default(), rts).unwrap();
        let got = observe(&mut monitor, &events, finish);
        let want = replay_oracle(&events, delta_t, rts, &rts_aps, 0.2, finish);

        for (m, w) in &want {
            let empty = ExpectedTrack::default();
            let g = got.get(m).unwrap_or(&empty);
            assert_eq!(g.triggers, w.triggers, "case {case}, mac {m}: triggers");
            assert_eq!(g.rts, w.rts, "case {case}, mac {m}: rts");
        }
        for m in got.keys() {
            assert!(want.contains_key(m), "case {case}: output for untracked mac {m}");
        }
        for w in want.values() {
            active_triggers += w.triggers.iter().filter(|t| t.active).count();
            commands += w.rts.len();
        }
    }
    assert!(active_triggers > 50 && commands > 1000, "{active_triggers} {commands}");
}

#[test]
fn frames_before_the_first_probe_are_ignored() {
    let env = env_with_rts(2);
    let m = mac(7);
    let events = vec![
        event(0.1, FrameKind::Data, m),
        event(0.4, FrameKind::Cts, m),
        event(0.9, FrameKind::ProbeRequest, m),
        event(1.2, FrameKind::Ack, m),
    ];
    let mut monitor = Monitor::new(&env, 1.0, RtsSchedule::default(), false).unwrap();
    let got = observe(&mut monitor, &events, 5.0);
    let trig = &got[&m].triggers;
    assert_eq!(trig.len(), 1);
    assert_eq!(trig[0].frame_times, vec![0.9, 1.2]);
    assert!(!trig[0].active);
    assert_eq!(monitor.track(&m).unwrap().origin, 0.9);
}

#[test]
fn other_tracks_are_untouched_by_a_mac() {
    let env = env_with_rts(2);
    let (a, b) = (mac(1), mac(2));
    let alone = vec![event(0.0, FrameKind::ProbeRequest, a), event(2.5, FrameKind::Cts, a)];
    let mut mixed = alone.clone();
    mixed.extend([
        event(0.3, FrameKind::ProbeRequest, b),
        event(0.6, FrameKind::Data, b),
        event(1.7, FrameKind::Data, b),
    ]);
    mixed.sort_by(|x, y| x.t.total_cmp(&y.t));

    let mut m1 = Monitor::new(&env, 1.0, RtsSchedule::default(), true).unwrap();
    let mut m2 = Monitor::new(&env, 1.0, RtsSchedule::default(), true).unwrap();
    let g1 = observe(&mut m1, &alone, 4.0);
    let g2 = observe(&mut m2, &mixed, 4.0);
    assert_eq!(g1[&a], g2[&a]);
}

#[test]
fn data_frame_suppresses_rts_until_horizon_passes() {
    let env = env_with_rts(1);
    let m = mac(3);
    let events = vec![event(0.0, FrameKind::ProbeRequest, m), event(1.05, FrameKind::Data, m)];
    let mut monitor = Monitor::new(&env, 1.0, RtsSchedule::default(), true).unwrap();
    let got = observe(&mut monitor, &events, 5.0);
    let times: Vec<f64> = got[&m].rts.iter().map(|r| r.0).collect();
    // active from 1.05 up to the boundary at 4 (horizon [2, 4) no longer holds it)
    assert!(times.iter().all(|&t| !(t >= 1.05 && t < 4.0)), "{times:?}");
    assert!(times.iter().any(|&t| t < 1.05));
    assert!(times.iter().any(|&t| t >= 4.0));
}

#[test]
fn state_machine_examples() {
    assert_eq!(classify(&[0.5], 1.0, 2.0), Classification::Active);
    assert_eq!(classify(&[0.5], 2.5, 2.0), Classification::Active);
    assert_eq!(classify(&[0.5], 2.6, 2.0), Classification::Inactive);
    assert_eq!(classify(&[], 1.0, 2.0), Classification::Inactive);

    let m = mac(4);
    let mut st = TrackState::new(m, 0.0, 1.0, false).unwrap();
    assert_eq!(st.classification, Classification::Unknown);
    assert!(on_frame(&mut st, &event(0.2, FrameKind::ProbeRequest, m)).unwrap().is_none());
    assert!(on_frame(&mut st, &event(0.7, FrameKind::Data, m)).unwrap().is_none());
    assert_eq!(st.classification, Classification::Active);
    let trig = on_frame(&mut st, &event(1.3, FrameKind::Ack, m)).unwrap().unwrap();
    assert_eq!((trig.window_start, trig.window_end), (0.0, 1.0));
    assert_eq!(trig.frames.len(), 2);
    assert_eq!(trig.classification, Classification::Active);

    assert!(on_frame(&mut st, &event(1.0, FrameKind::Ack, m)).is_err());
    assert!(on_frame(&mut st, &event(2.0, FrameKind::Ack, mac(5))).is_err());
}

#[test]
fn log_replays_the_outputs() {
    let env = env_with_rts(2);
    let m = mac(9);
    let events = vec![
        event(0.0, FrameKind::ProbeRequest, m),
        event(0.5, FrameKind::Data, m),
        event(3.2, FrameKind::Cts, m),
    ];
    let mut monitor = Monitor::new(&env, 1.0, RtsSchedule::default(), true).unwrap();
    let got = observe(&mut monitor, &events, 5.0);
    let log = monitor.log();
    let count = |a: LogAction| log.entries.iter().filter(|e| e.action == a).count();
    assert_eq!(count(LogAction::TrackCreated), 1);
    assert_eq!(count(LogAction::Rts), got[&m].rts.len());
    assert_eq!(count(LogAction::Trigger), got[&m].triggers.len());
    let csv = log.to_csv();
    assert!(csv.starts_with("t,mac,action,detail\n"));
    assert_eq!(csv.lines().count(), log.entries.len() + 1);
}

/// With RTS on, an inactive phone is heard in nearly every window.
#[test]
fn rts_keeps_inactive_phone_visible() {
    let env = Environment::desk();
    let prop = wifiloc::airsim::PropagationModel::default();
    let dev = DeviceProfile::samsung_s6();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let route = generate_route(&env, &RouteConfig::default(), &mut rng).unwrap();
    let mut windows = 0usize;
    let mut heard = 0usize;
    let mut seed = 0;
    while windows < 1000 {
        let run = run_trajectory(&env, &prop, &dev, &route, PhoneState::InactiveScreenOn, true, seed).unwrap();
        let (trigs, n, _) = wifiloc::eval::replay_windows(&env, &run, 1.0, true).unwrap();
        windows += n;
        heard += trigs.len();
        seed += 1;
    }
    let rate = heard as f64 / windows as f64;
    assert!(rate >= 0.95, "liveness {rate}");
}

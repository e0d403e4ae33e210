mod common;

use common::custom_env;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wifiloc::csi::{CsiScan, SUBCARRIERS};
use wifiloc::dbfile::{load_database, save_database};
use wifiloc::fingerprint::{
    build_database, nearest_rp, AccessPoint, Environment, Location, ObservationBatch, RssiSample, Trajectory,
};
use wifiloc::textio::quantize9;
use wifiloc::Error;

fn grid_env(width: f64, height: f64, spacing: f64, aps: usize) -> Environment {
    let aps = (0..aps)
        .map(|id| AccessPoint {
            id,
            location: Location::new(width * (id as f64 + 0.5) / aps as f64, height / 2.0),
            rts_capable: id % 2 == 0,
        })
        .collect();
    Environment::with_grid(width, height, spacing, aps).unwrap()
}

fn batch(rp: usize, device: &str, rssi: &[(usize, f64, f64)]) -> ObservationBatch {
    ObservationBatch {
        rp_id: rp,
        device: device.into(),
        rssi: rssi.iter().map(|&(ap, t, v)| (ap, RssiSample { t, rssi: v })).collect(),
        csi: vec![],
    }
}

#[test]
fn minimal_database() {
    let env = grid_env(1.0, 1.0, 1.0, 1);
    let db = build_database(&env, [batch(0, "a", &[(0, 0.0, -50.0), (0, 1.0, -51.0), (0, 2.0, -49.0)])]).unwrap();
    assert_eq!(db.len(), 1);
    assert_eq!(db.record(0).unwrap().sample_count(0), 3);
}

#[test]
fn batches_merge_per_device() {
    let env = grid_env(4.0, 4.0, 1.0, 2);
    let db = build_database(
        &env,
        [
            batch(5, "nexus5", &[(1, 2.0, -60.0), (1, 0.5, -61.0)]),
            batch(5, "iphone_x", &[(1, 1.0, -70.0)]),
            batch(5, "nexus5", &[(1, 1.5, -62.0)]),
        ],
    )
    .unwrap();
    assert_eq!(db.len(), 1);
    let devs = &db.record(5).unwrap().rssi[&1];
    assert_eq!(devs.keys().collect::<Vec<_>>(), ["iphone_x", "nexus5"]);
    let times: Vec<f64> = devs["nexus5"].iter().map(|s| s.t).collect();
    assert_eq!(times, vec![0.5, 1.5, 2.0]);
}

#[test]
fn large_synthetic_survey() {
    let env = grid_env(40.0, 40.0, 1.0, 5);
    assert_eq!(env.rp_count(), 1600);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batches: Vec<ObservationBatch> = (0..1600)
        .map(|rp| {
            let mut heard = Vec::new();
            for ap in 0..5 {
                if rng.random_bool(0.8) {
                    heard.push((ap, 0.0, rng.random_range(-90.0..-30.0)));
                }
            }
            batch(rp, "d", &heard)
        })
        .collect();
    let db = build_database(&env, batches).unwrap();
    assert_eq!(db.len(), 1600);
    assert!(db.records().all(|r| r.rssi.len() <= 5));
}

#[test]
fn build_errors() {
    let env = grid_env(2.0, 2.0, 1.0, 2);
    assert!(matches!(build_database(&env, Vec::new()), Err(Error::EmptyInput)));
    assert!(matches!(build_database(&env, [batch(4, "a", &[])]), Err(Error::UnknownRp(4))));
    assert!(matches!(build_database(&env, [batch(0, "a", &[(2, 0.0, -50.0)])]), Err(Error::UnknownAp(2))));
}

#[test]
fn nearest_rp_examples() {
    let env = grid_env(4.0, 4.0, 1.0, 1);
    let all: Vec<ObservationBatch> = (0..16).map(|rp| batch(rp, "a", &[(0, 0.0, -50.0)])).collect();
    let db = build_database(&env, all).unwrap();
    assert_eq!(nearest_rp(&db, &env.rps[7].location).unwrap(), 7);

    let locs = [
        Location::new(1.0, 1.0),
        Location::new(9.0, 9.0),
        Location::new(3.0, 1.0),
    ];
    let env = custom_env(10.0, 10.0, &locs, &[(0.0, 0.0, false)]);
    let db = build_database(&env, (0..3).map(|rp| batch(rp, "a", &[(0, 0.0, -50.0)]))).unwrap();
    // equidistant from RP 0 and RP 2
    assert_eq!(nearest_rp(&db, &Location::new(2.0, 5.0)).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nearest_rp_matches_scan(x in 0.0f64..4.0, y in 0.0f64..4.0) {
        let env = grid_env(4.0, 4.0, 1.0, 1);
        let db = build_database(&env, (0..16).map(|rp| batch(rp, "a", &[(0, 0.0, -50.0)]))).unwrap();
        let loc = Location::new(x, y);
        let mut best = 0;
        for rp in &env.rps {
            if rp.location.distance(&loc) < env.rps[best].location.distance(&loc) {
                best = rp.id;
            }
        }
        prop_assert_eq!(nearest_rp(&db, &loc).unwrap(), best);
        for rp in &env.rps {
            prop_assert_eq!(nearest_rp(&db, &rp.location).unwrap(), rp.id);
        }
    }

    #[test]
    fn stored_samples_are_time_ordered(ts in prop::collection::vec(0.0f64..100.0, 1..30)) {
        let env = grid_env(2.0, 2.0, 1.0, 1);
        let rows: Vec<(usize, f64, f64)> = ts.iter().map(|&t| (0, t, -50.0)).collect();
        let db = build_database(&env, [batch(1, "a", &rows)]).unwrap();
        let stored = &db.record(1).unwrap().rssi[&0]["a"];
        prop_assert!(stored.windows(2).all(|w| w[0].t <= w[1].t));
    }
}

#[test]
fn database_files_round_trip() {
    let env = grid_env(6.0, 3.0, 1.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batches: Vec<ObservationBatch> = (0..18)
        .filter(|rp| rp % 4 != 3)
        .flat_map(|rp| {
            let mut out = Vec::new();
            for dev in ["samsung_s6", "htc_one_x"] {
                let rssi: Vec<(usize, RssiSample)> = (0..6)
                    .map(|i| {
                        let ap = i % 3;
                        let s = RssiSample {
                            t: quantize9(rng.random_range(0.0..120.0)),
                            rssi: quantize9(rng.random_range(-95.0..-20.0)),
                        };
                        (ap, s)
                    })
                    .collect();
                let csi = (0..2)
                    .map(|i| {
                        let amps: [f64; SUBCARRIERS] = std::array::from_fn(|_| quantize9(rng.random_range(0.0..2.0)));
                        let phases: [f64; SUBCARRIERS] = std::array::from_fn(|_| quantize9(rng.random_range(-3.1..3.1)));
                        CsiScan::new(i % 2, quantize9(i as f64 * 0.37 + rp as f64), amps, phases).unwrap()
                    })
                    .collect();
                out.push(ObservationBatch { rp_id: rp, device: dev.into(), rssi, csi });
            }
            out
        })
        .collect();
    let db = build_database(&env, batches).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_database(&db, dir.path()).unwrap();
    let back = load_database(dir.path()).unwrap();
    assert_eq!(back, db);
}

#[test]
fn empty_directory_is_an_error() {
    let env = grid_env(2.0, 2.0, 1.0, 1);
    let db = build_database(&env, [batch(0, "a", &[(0, 0.0, -50.0)])]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_database(&db, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join(wifiloc::dbfile::record_file_name(0))).unwrap();
    assert!(matches!(load_database(dir.path()), Err(Error::EmptyDatabase)));
}

#[test]
fn trajectory_rules() {
    let a = Location::new(0.0, 0.0);
    let b = Location::new(3.0, 4.0);
    assert!(Trajectory::new(vec![(0.0, a), (1.0, b)], (0.6, 4.0)).is_err());
    assert!(Trajectory::new(vec![(0.0, a), (0.0, a)], (0.6, 4.0)).is_err());
    assert!(Trajectory::new(vec![], (0.6, 4.0)).is_err());
    let t = Trajectory::new(vec![(0.0, a), (2.0, b), (4.0, a)], (0.6, 4.0)).unwrap();
    assert_eq!(t.position_at(-1.0), a);
    assert_eq!(t.position_at(1.0), Location::new(1.5, 2.0));
    assert_eq!(t.position_at(2.0), b);
    assert_eq!(t.position_at(3.0), Location::new(1.5, 2.0));
    assert_eq!(t.position_at(9.0), a);
    let s = Trajectory::stationary(b, 5.0).unwrap();
    assert_eq!(s.position_at(2.5), b);
}

#[test]
fn environment_rules() {
    let desk = Environment::desk();
    assert_eq!((desk.rp_count(), desk.ap_count()), (300, 4));
    assert_eq!(desk.rts_capable_aps().count(), 2);
    let office = Environment::office(1.0).unwrap();
    assert_eq!((office.ap_count(), office.rts_capable_aps().count()), (5, 3));
    let home = Environment::home(1.0).unwrap();
    assert_eq!((home.ap_count(), home.rts_capable_aps().count()), (4, 2));
    let dup = [Location::new(1.0, 1.0), Location::new(1.0, 1.0)];
    assert!(Environment::new(
        5.0,
        5.0,
        1.0,
        vec![AccessPoint { id: 0, location: Location::new(0.0, 0.0), rts_capable: false }],
        dup.iter().enumerate().map(|(id, &location)| wifiloc::fingerprint::ReferencePoint { id, location }).collect(),
    )
    .is_err());
    assert!(Environment::with_grid(5.0, 5.0, 1.0, vec![]).is_err());
}

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::ErrorReport;
use super::scenario::ScenarioConfig;
use crate::airsim::{generate_route, run_trajectory, DeviceProfile, PhoneState, SimRun};
use crate::csi::CsiTemplates;
use crate::error::{Error, Result};
use crate::fingerprint::{
    build_database, Environment, FingerprintDatabase, FingerprintVector, Location, ObservationBatch, RssiSample,
    Trajectory,
};
use crate::kde::DensityMap;
use crate::protocol::{
    dispatch, window_fingerprint, Algorithm, DispatchOutcome, FixSource, Localizers, LogAction, Monitor, MonitorOutput,
    RtsSchedule, Trigger,
};
use crate::rnn::{train, LstmConfig, LstmLocalizer, PmimoLstm, TrainConfig, TrainReport, TrainingSet};
use crate::ssp::SspLocalizer;
use crate::textio::{parse_f64, sig9};

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909u64, |h, &p| {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Survey every RP with every device: inactive dwells under RTS give the
/// RSSI samples, short active dwells give the CSI scans.
pub fn collect_training(
    scenario: &ScenarioConfig,
    devices: &[DeviceProfile],
    dwell: f64,
) -> Result<FingerprintDatabase> {
    let (env, prop) = scenario.build()?;
    let tc = &scenario.training;
    let mut batches = Vec::new();
    for rp in &env.rps {
        let mut csi_left: BTreeMap<usize, usize> = env.aps.iter().map(|a| (a.id, tc.csi_cap)).collect();
        for (di, dev) in devices.iter().enumerate() {
            for session in 0..tc.sessions {
                let seed = mix(&[tc.seed, rp.id as u64, di as u64, session as u64, 0]);
                let stay = Trajectory::stationary(rp.location, dwell)?;
                let run = run_trajectory(&env, &prop, dev, &stay, PhoneState::InactiveScreenOn, true, seed)?;
                let mut batch = ObservationBatch {
                    rp_id: rp.id,
                    device: dev.model_name.clone(),
                    ..Default::default()
                };
                for ev in &run.events {
                    for (&ap, obs) in &ev.ap_observations {
                        batch.rssi.push((ap, RssiSample { t: ev.t, rssi: obs.rssi }));
                    }
                }
                if tc.dwell_active > 0.0 && csi_left.values().any(|&n| n > 0) {
                    let seed = mix(&[tc.seed, rp.id as u64, di as u64, session as u64, 1]);
                    let stay = Trajectory::stationary(rp.location, tc.dwell_active)?;
                    let run = run_trajectory(&env, &prop, dev, &stay, PhoneState::Active, false, seed)?;
                    for ev in &run.events {
                        for (&ap, obs) in &ev.ap_observations {
                            let left = csi_left.get_mut(&ap).expect("AP of this site");
                            if let (Some(scan), true) = (&obs.csi, *left > 0) {
                                batch.csi.push(scan.clone());
                                *left -= 1;
                            }
                        }
                    }
                }
                batches.push(batch);
            }
        }
    }
    build_database(&env, batches)
}

/// Fitted localizers for one database.
#[derive(Clone, Debug)]
pub struct Engine {
    pub scenario: ScenarioConfig,
    pub prop: crate::airsim::PropagationModel,
    pub db: FingerprintDatabase,
    pub ssp: SspLocalizer,
    pub templates: CsiTemplates,
    pub lstm: Option<LstmLocalizer>,
}

impl Engine {
    pub fn new(scenario: ScenarioConfig, db: FingerprintDatabase) -> Result<Self> {
        let (env, prop) = scenario.build()?;
        if env.aps != db.env().aps || env.width != db.env().width || env.height != db.env().height {
            return Err(Error::Config("database geometry differs from the scenario".into()));
        }
        let ssp = SspLocalizer::new(DensityMap::fit(&db, scenario.kernel)?, scenario.window, scenario.top_k)?;
        let templates = CsiTemplates::from_database(&db);
        Ok(Self {
            scenario,
            prop,
            db,
            ssp,
            templates,
            lstm: None,
        })
    }

    /// Survey the scenario with its configured devices and dwell.
    pub fn survey(scenario: ScenarioConfig) -> Result<Self> {
        let db = collect_training(&scenario, &scenario.devices()?, scenario.training.dwell_inactive)?;
        Self::new(scenario, db)
    }

    pub fn env(&self) -> &Environment {
        self.db.env()
    }

    pub fn localizers(&self, algorithm: Algorithm) -> Localizers<'_> {
        Localizers {
            db: &self.db,
            ssp: &self.ssp,
            templates: Some(&self.templates),
            refine: self.scenario.refine,
            lstm: self.lstm.as_ref(),
            algorithm,
        }
    }

    /// Random test route for `seed` and the simulated stream along it.
    pub fn simulate(&self, dev: &DeviceProfile, state: PhoneState, rts: bool, seed: u64) -> Result<SimRun> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x726f_7574_65]));
        let route = generate_route(self.env(), &self.scenario.route, &mut rng)?;
        run_trajectory(self.env(), &self.prop, dev, &route, state, rts, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixRecord {
    pub t: f64,
    pub estimate: Location,
    pub truth: Location,
    pub error: f64,
    pub source: FixSource,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub fixes: Vec<FixRecord>,
    pub windows: usize,
    pub log: crate::protocol::CommandLog,
}

impl RunResult {
    pub fn report(&self) -> ErrorReport {
        ErrorReport::from_errors(self.fixes.iter().map(|f| f.error).collect(), self.windows)
    }
}

/// Closed windows of a run, replayed through a [`Monitor`]. The second
/// value is the number of Δt windows spanning the trajectory.
pub fn replay_windows(
    env: &Environment,
    run: &SimRun,
    delta_t: f64,
    rts: bool,
) -> Result<(Vec<Trigger>, usize, Monitor)> {
    let mut monitor = Monitor::new(env, delta_t, RtsSchedule::default(), rts)?;
    let mut triggers = Vec::new();
    let take = |outs: Vec<MonitorOutput>, triggers: &mut Vec<Trigger>| {
        for o in outs {
            if let MonitorOutput::Trigger(t) = o {
                triggers.push(t);
            }
        }
    };
    for ev in &run.events {
        let outs = monitor.process(ev)?;
        take(outs, &mut triggers);
    }
    let t0 = run.trajectory.start_time();
    let duration = run.trajectory.end_time() - t0;
    let windows = ((duration / delta_t).ceil() as usize).max(1);
    let outs = monitor.finish(t0 + windows as f64 * delta_t);
    take(outs, &mut triggers);
    Ok((triggers, windows, monitor))
}

/// Localize every window of `run` and score against ground truth at the
/// window ends.
pub fn localize_run(engine: &Engine, run: &SimRun, algorithm: Algorithm, delta_t: f64, rts: bool) -> Result<RunResult> {
    let (triggers, windows, mut monitor) = replay_windows(engine.env(), run, delta_t, rts)?;
    let loc = engine.localizers(algorithm);
    let mut fixes = Vec::new();
    for trig in &triggers {
        let track = monitor.track_mut(&trig.mac).expect("triggers come from tracks");
        match dispatch(track, trig, &loc)? {
            DispatchOutcome::Fix(fix) => {
                let truth = run.ground_truth(fix.t);
                let error = fix.location.distance(&truth);
                monitor.log_mut().record(
                    fix.t,
                    trig.mac,
                    LogAction::Fix,
                    format!("x={:.3} y={:.3} via={}", fix.location.x, fix.location.y, fix.source.as_str()),
                );
                fixes.push(FixRecord {
                    t: fix.t,
                    estimate: fix.location,
                    truth,
                    error,
                    source: fix.source,
                });
            }
            DispatchOutcome::NoFix { t, reason } => {
                monitor.log_mut().record(t, trig.mac, LogAction::NoFix, reason);
            }
        }
    }
    Ok(RunResult {
        fixes,
        windows,
        log: monitor.log().clone(),
    })
}

pub const FIXES_HEADER: &str = "seed,t,x,y,true_x,true_y,error,source";

/// Per-fix CSV of several seeded runs. The first line, `# windows=N`,
/// carries the total window count so fix rates survive a round trip.
pub fn write_fixes(runs: &[(u64, RunResult)]) -> String {
    let windows: usize = runs.iter().map(|(_, r)| r.windows).sum();
    let mut out = format!("# windows={windows}\n{FIXES_HEADER}\n");
    for (seed, run) in runs {
        for f in &run.fixes {
            out.push_str(&format!(
                "{seed},{},{},{},{},{},{},{}\n",
                sig9(f.t),
                sig9(f.estimate.x),
                sig9(f.estimate.y),
                sig9(f.truth.x),
                sig9(f.truth.y),
                sig9(f.error),
                f.source.as_str()
            ));
        }
    }
    out
}

/// Rebuild the pooled report from a [`write_fixes`] file.
pub fn read_fixes_report(text: &str, origin: &Path) -> Result<ErrorReport> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let windows = match lines.next() {
        Some((_, l)) => l
            .strip_prefix("# windows=")
            .and_then(|w| w.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(origin, 1, "expected `# windows=N`"))?,
        None => return Err(Error::parse(origin, 1, "empty fixes file")),
    };
    match lines.next() {
        Some((_, h)) if h == FIXES_HEADER => {}
        _ => return Err(Error::parse(origin, 2, format!("expected header `{FIXES_HEADER}`"))),
    }
    let mut errors = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(origin, n, format!("expected 8 fields, found {}", f.len())));
        }
        errors.push(parse_f64(f[6]).ok_or_else(|| Error::parse(origin, n, format!("bad error `{}`", f[6])))?);
    }
    Ok(ErrorReport::from_errors(errors, windows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub device: String,
    pub state: PhoneState,
    pub algorithm: Algorithm,
    pub rts: bool,
    pub seeds: Vec<u64>,
    pub delta_t: f64,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::TwoStep && !self.state.is_active() {
            return Err(Error::Config("two_step applies to active phones only".into()));
        }
        if self.seeds.is_empty() || !(self.delta_t > 0.0) {
            return Err(Error::Config("a run needs seeds and a positive delta_t".into()));
        }
        DeviceProfile::by_name(&self.device).map(|_| ())
    }
}

/// One report per seed, in seed order.
pub fn run_test_per_seed(spec: &RunSpec, engine: &Engine) -> Result<Vec<ErrorReport>> {
    spec.validate()?;
    let dev = DeviceProfile::by_name(&spec.device)?;
    spec.seeds
        .iter()
        .map(|&seed| {
            let run = engine.simulate(&dev, spec.state, spec.rts, seed)?;
            Ok(localize_run(engine, &run, spec.algorithm, spec.delta_t, spec.rts)?.report())
        })
        .collect()
}

/// Pooled report over all seeds of `spec`.
pub fn run_test(spec: &RunSpec, engine: &Engine) -> Result<ErrorReport> {
    Ok(ErrorReport::merge(&run_test_per_seed(spec, engine)?))
}

/// Window fingerprints of `run` with the true position at each window end.
pub fn window_series(env: &Environment, run: &SimRun, delta_t: f64) -> Result<Vec<(FingerprintVector, Location)>> {
    let (triggers, _, _) = replay_windows(env, run, delta_t, false)?;
    triggers
        .iter()
        .map(|t| Ok((window_fingerprint(&t.frames, env.ap_count())?, run.ground_truth(t.window_end))))
        .collect()
}

/// Train an LSTM on simulated inactive-phone routes (all scenario devices
/// in turn) and attach it to the engine.
pub fn train_lstm(
    engine: &mut Engine,
    config: LstmConfig,
    routes: usize,
    train_cfg: &TrainConfig,
) -> Result<TrainReport> {
    let devices = engine.scenario.devices()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[train_cfg.seed, 0x6c73_746d]));
    let model = PmimoLstm::new(config, &mut rng)?;
    let mut wrapper = LstmLocalizer::new(model, engine.env());
    let t = wrapper.model.config.memory_length;
    let mut set = TrainingSet::default();
    for r in 0..routes {
        let dev = &devices[r % devices.len()];
        let seed = mix(&[train_cfg.seed, r as u64, 0x7472_6169_6e]);
        let run = engine.simulate(dev, PhoneState::InactiveScreenOn, true, seed)?;
        let series = window_series(engine.env(), &run, engine.scenario.delta_t)?;
        let (fps, truth): (Vec<_>, Vec<_>) = series.into_iter().unzip();
        for start in 0..fps.len().saturating_sub(t - 1) {
            set.sequences
                .push(wrapper.sequence(&fps[start..start + t], &truth[start..start + t])?);
        }
    }
    let report = train(&mut wrapper.model, &set, train_cfg)?;
    engine.lstm = Some(wrapper);
    Ok(report)
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::device::DeviceProfile;
use super::frames::{frame_stream, ApObservation, FrameEvent, FrameKind, FrameTiming, Mac, PhoneState, RtsDrive};
use super::propagation::PropagationModel;
use crate::error::{Error, Result};
use crate::fingerprint::{Environment, Location, Trajectory};

/// RTS rate used when elicitation is switched on, seconds per frame.
pub const DEFAULT_RTS_INTERVAL: f64 = 0.2;

/// Simulated frame stream of one phone along one trajectory.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub mac: Mac,
    pub device: String,
    pub state: PhoneState,
    pub trajectory: Trajectory,
    /// Time-ordered frames; every event has at least one AP observation.
    pub events: Vec<FrameEvent>,
    /// Ground-truth phone position at each event.
    pub truth: Vec<Location>,
}

impl SimRun {
    pub fn ground_truth(&self, t: f64) -> Location {
        self.trajectory.position_at(t)
    }
}

fn check_inside(env: &Environment, traj: &Trajectory) -> Result<()> {
    traj.validate()?;
    // The site is convex, so in-bounds waypoints keep every segment inside.
    for &(t, loc) in &traj.waypoints {
        if !env.contains(&loc) {
            return Err(Error::OutOfBounds { t, x: loc.x, y: loc.y });
        }
    }
    Ok(())
}

/// Simulate a phone following `traj`; every AP observes each frame above
/// its sensitivity, and data frames also carry CSI.
///
/// The stream opens with a probe request at the start time, which is how
/// the APs learn the phone's MAC.
///
/// With `rts` set and the phone inactive, every RTS-capable AP sends one
/// RTS per [`DEFAULT_RTS_INTERVAL`] from the start of the run.
pub fn run_trajectory(
    env: &Environment,
    prop: &PropagationModel,
    dev: &DeviceProfile,
    traj: &Trajectory,
    state: PhoneState,
    rts: bool,
    seed: u64,
) -> Result<SimRun> {
    check_inside(env, traj)?;
    prop.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mac = Mac::from_seed(seed);
    let sources = env.rts_capable_aps().count();
    let drive = (rts && !state.is_active() && sources > 0).then_some(RtsDrive {
        interval: DEFAULT_RTS_INTERVAL,
        sources,
    });
    let t0 = traj.start_time();
    let duration = traj.end_time() - t0;
    let mut timings = vec![FrameTiming {
        t: 0.0,
        kind: FrameKind::ProbeRequest,
    }];
    if duration > 0.0 {
        timings.extend(frame_stream(dev, state, drive, duration, &mut rng)?);
    }

    let mut events = Vec::with_capacity(timings.len());
    let mut truth = Vec::with_capacity(timings.len());
    for ft in timings {
        let t = t0 + ft.t;
        let pos = traj.position_at(t);
        let mut obs = BTreeMap::new();
        for ap in &env.aps {
            let rssi = prop.rssi_at(dev, ap.id, &ap.location, &pos, &mut rng);
            if rssi < prop.sensitivity {
                continue;
            }
            let csi = (ft.kind == FrameKind::Data).then(|| prop.csi_at(dev, ap.id, &ap.location, &pos, t, &mut rng));
            obs.insert(ap.id, ApObservation { rssi, csi });
        }
        if obs.is_empty() {
            continue;
        }
        events.push(FrameEvent {
            t,
            kind: ft.kind,
            mac,
            ap_observations: obs,
        });
        truth.push(pos);
    }
    Ok(SimRun {
        mac,
        device: dev.model_name.clone(),
        state,
        trajectory: traj.clone(),
        events,
        truth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    Lawnmower,
    RandomWaypoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouteConfig {
    pub kind: RouteKind,
    /// Lawnmower lanes, or random waypoints after the start point.
    pub waypoints: usize,
    pub speed_range: (f64, f64),
    /// Distance kept from the walls, metres.
    pub margin: f64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self {
            kind: RouteKind::Lawnmower,
            waypoints: 4,
            speed_range: (0.6, 4.0),
            margin: 1.0,
        }
    }
}

/// Random route through the site; every segment gets its own speed drawn
/// uniformly from `cfg.speed_range`.
pub fn generate_route(env: &Environment, cfg: &RouteConfig, rng: &mut impl Rng) -> Result<Trajectory> {
    let (vmin, vmax) = cfg.speed_range;
    if !(vmin > 0.0 && vmax >= vmin) {
        return Err(Error::InvalidTrajectory(format!("bad speed range ({vmin}, {vmax})")));
    }
    let m = cfg.margin;
    if !(2.0 * m < env.width && 2.0 * m < env.height) {
        return Err(Error::InvalidTrajectory(format!("margin {m} leaves no room")));
    }
    let n = cfg.waypoints.max(2);
    let pts: Vec<Location> = match cfg.kind {
        RouteKind::Lawnmower => {
            let pitch = (env.height - 2.0 * m) / n as f64;
            let mut lanes: Vec<Location> = Vec::with_capacity(2 * n);
            for i in 0..n {
                let y = m + pitch * (i as f64 + rng.random_range(0.2..0.8));
                let (a, b) = (m + rng.random_range(0.0..0.5), env.width - m - rng.random_range(0.0..0.5));
                let (x0, x1) = if i % 2 == 0 { (a, b) } else { (b, a) };
                lanes.push(Location::new(x0, y));
                lanes.push(Location::new(x1, y));
            }
            if rng.random_bool(0.5) {
                lanes.reverse();
            }
            lanes
        }
        RouteKind::RandomWaypoint => (0..=n)
            .map(|_| {
                Location::new(
                    rng.random_range(m..env.width - m),
                    rng.random_range(m..env.height - m),
                )
            })
            .collect(),
    };
    let mut t = 0.0;
    let mut wps = vec![(0.0, pts[0])];
    for w in pts.windows(2) {
        let d = w[0].distance(&w[1]);
        let v = if vmax > vmin { rng.random_range(vmin..=vmax) } else { vmin };
        t += (d / v).max(1e-3);
        wps.push((t, w[1]));
    }
    Trajectory::new(wps, cfg.speed_range)
}

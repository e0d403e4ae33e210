//! Frame-level radio simulator: log-distance RSSI with frozen shadowing,
//! multipath CSI, per-model device behaviour and RTS/CTS elicitation.

mod device;
pub mod dump;
mod frames;
mod propagation;
mod sim;

pub use device::{DeviceProfile, InactiveArrival};
pub use frames::{
    frame_stream, inter_frame_gaps, ApObservation, FrameEvent, FrameKind, FrameTiming, Mac, PhoneState, RtsDrive,
    CTS_BURST_SPACING, SIFS,
};
pub use propagation::{CsiChannelModel, PropagationModel};
pub use sim::{generate_route, run_trajectory, RouteConfig, RouteKind, SimRun, DEFAULT_RTS_INTERVAL};

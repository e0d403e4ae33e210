use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::airsim::{DeviceProfile, PropagationModel, RouteConfig};
use crate::csi::RefineConfig;
use crate::error::{Error, Result};
use crate::fingerprint::{AccessPoint, Environment};
use crate::kde::KernelSpec;
use crate::protocol::DEFAULT_DELTA_T;
use crate::ssp::{SspWindow, DEFAULT_TOP_K};

/// Site geometry: a named preset or an explicit grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentSpec {
    /// `desk`, `office` or `home`; empty for an explicit site.
    pub preset: String,
    pub width: f64,
    pub height: f64,
    pub grid_spacing: f64,
    pub aps: Vec<AccessPoint>,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self {
            preset: "desk".into(),
            width: 0.0,
            height: 0.0,
            grid_spacing: 1.0,
            aps: Vec::new(),
        }
    }
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        match self.preset.as_str() {
            "desk" if self.grid_spacing == 1.0 => Ok(Environment::desk()),
            "desk" => Environment::with_grid(20.0, 15.0, self.grid_spacing, Environment::desk().aps),
            "office" => Environment::office(self.grid_spacing),
            "home" => Environment::home(self.grid_spacing),
            "" => Environment::with_grid(self.width, self.height, self.grid_spacing, self.aps.clone()),
            other => Err(Error::Config(format!("unknown environment preset `{other}`"))),
        }
    }
}

/// How the training database is surveyed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub devices: Vec<String>,
    /// Seconds per RP, device and session with the phone inactive under RTS.
    pub dwell_inactive: f64,
    /// Seconds per RP, device and session with the phone active (CSI source).
    pub dwell_active: f64,
    /// Independent collection sessions per RP and device.
    pub sessions: usize,
    /// CSI scans kept per (RP, AP).
    pub csi_cap: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            devices: DeviceProfile::all().into_iter().map(|d| d.model_name).collect(),
            dwell_inactive: 1.0,
            dwell_active: 1.0,
            sessions: 2,
            csi_cap: 40,
            seed: 1_000_003,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub delta_t: f64,
    pub top_k: usize,
    pub environment: EnvironmentSpec,
    pub propagation: PropagationModel,
    pub training: TrainingConfig,
    pub route: RouteConfig,
    pub kernel: KernelSpec,
    pub window: SspWindow,
    pub refine: RefineConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "desk".into(),
            delta_t: DEFAULT_DELTA_T,
            top_k: DEFAULT_TOP_K,
            environment: EnvironmentSpec::default(),
            propagation: PropagationModel::default(),
            training: TrainingConfig::default(),
            route: RouteConfig::default(),
            kernel: KernelSpec::default(),
            window: SspWindow::default(),
            refine: RefineConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// 20 m × 15 m, 300 RPs, 4 APs.
    pub fn desk() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t > 0.0) || self.top_k == 0 {
            return Err(Error::Config("delta_t must be positive and top_k >= 1".into()));
        }
        self.environment.build()?;
        self.propagation.validate()?;
        self.window.validate()?;
        for d in &self.training.devices {
            DeviceProfile::by_name(d)?;
        }
        if self.training.sessions == 0 || !(self.training.dwell_inactive > 0.0) {
            return Err(Error::Config("training needs >= 1 session and a positive dwell".into()));
        }
        Ok(())
    }

    pub fn devices(&self) -> Result<Vec<DeviceProfile>> {
        self.training.devices.iter().map(|d| DeviceProfile::by_name(d)).collect()
    }

    /// Site plus a propagation model whose wall reflections use its bounds.
    pub fn build(&self) -> Result<(Environment, PropagationModel)> {
        let env = self.environment.build()?;
        let prop = PropagationModel {
            bounds: (env.width, env.height),
            ..self.propagation.clone()
        };
        Ok((env, prop))
    }
}

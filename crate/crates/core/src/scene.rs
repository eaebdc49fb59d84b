//! JSON scene descriptions for the simulator.
//!
//! ```json
//! {
//!   "scatterers": [{"pos": [0.0, 0.0, 1.0], "albedo": 1.0}],
//!   "relay": {"kind": "Uniform", "nx": 32, "ny": 32, "dx": 0.03125, "dy": 0.03125,
//!             "x0": -0.5, "y0": -0.5, "z": 0.0},
//!   "illuminations": [[0.0, 0.0]],
//!   "Δt": 2e-11,
//!   "n_bins": 1024,
//!   "confocal": false
//! }
//! ```
//!
//! `dt` is accepted for `Δt`; `t0`, `ambient` and `falloff` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{PointList, RelaySampling, TransientMeasurement};
use crate::sim::{simulate, Scatterer, Scene, SimConfig};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub ambient: f64,
    pub relay: RelaySampling,
    pub illuminations: PointList,
    #[serde(rename = "Δt", alias = "dt")]
    pub dt: f64,
    pub n_bins: usize,
    #[serde(default)]
    pub confocal: bool,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "yes")]
    pub falloff: bool,
}

impl SceneFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn scene(&self) -> Scene {
        Scene {
            scatterers: self.scatterers.clone(),
            ambient: self.ambient,
        }
    }

    pub fn config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            n_bins: self.n_bins,
            t0: self.t0,
            confocal: self.confocal,
            falloff: self.falloff,
        }
    }

    pub fn simulate(&self) -> Result<TransientMeasurement> {
        self.relay.validate()?;
        simulate(&self.scene(), &self.relay, &self.illuminations, &self.config())
    }
}

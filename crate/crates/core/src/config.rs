//! Walk configuration files (JSON).
//!
//! ```json
//! {
//!   "L": 1024, "d": 1, "W": 16,
//!   "profile": {"kind": "power_law", "alpha": 1.0},
//!   "thresholds": {"t_lo": 0.25, "t_hi": 4, "c_log": 5},
//!   "delta": 0.1, "k_min": 4, "size_cap": 16777216, "seed": 1,
//!   "stable_constant": "auto"
//! }
//! ```
//!
//! Everything but `L`, `d`, `W` and `profile` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{CompareOptions, StableConstantSource, Thresholds};
use crate::kernel::{FitWindow, WalkSpec};
use crate::profile::{Profile, ProfileSpec};
use crate::torus::{TorusGeometry, DEFAULT_SIZE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(rename = "L")]
    pub side: usize,
    pub d: usize,
    #[serde(rename = "W")]
    pub bandwidth: f64,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_cap")]
    pub size_cap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stable_constant: StableConstantSource,
}

fn default_delta() -> f64 {
    FitWindow::default().delta
}
fn default_k_min() -> f64 {
    FitWindow::default().k_min
}
fn default_delta0() -> f64 {
    0.1
}
fn default_cap() -> usize {
    DEFAULT_SIZE_CAP
}

impl WalkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse walk config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn walk_spec(&self) -> Result<WalkSpec> {
        let geom = TorusGeometry::new(self.side, self.d)?;
        let profile = Profile::from_spec(&self.profile, self.d)?;
        Ok(WalkSpec::new(geom, profile, self.bandwidth)?.with_size_cap(self.size_cap))
    }

    pub fn fit_window(&self) -> FitWindow {
        FitWindow { delta: self.delta, k_min: self.k_min }
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            thresholds: self.thresholds,
            fit_window: self.fit_window(),
            stable_constant: self.stable_constant,
            regime: None,
            window: None,
        }
    }
}

//! TOML run configuration. Every section is optional; missing keys fall back
//! to the library defaults.
//!
//! ```toml
//! [thresholds]
//! push_angle_deg = 115.0
//!
//! [sim]
//! dt_ms = 5
//!
//! [channel]
//! loss_rate = 0.05
//! reorder_window = 4
//!
//! [run]
//! timeout_ms = 90000
//! ```

use std::path::Path;

use anyhow::{ensure, Context, Result};
use boardsim::gesture::ThresholdConfig;
use boardsim::sim::SimParams;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub thresholds: ThresholdConfig,
    pub sim: SimParams,
    pub channel: ChannelParams,
    pub run: RunParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub loss_rate: f64,
    pub reorder_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    /// Episodes that have not finished by this time are reported as DNF.
    pub timeout_ms: u64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams { timeout_ms: 60_000 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.thresholds.validate().context("config [thresholds]")?;
        cfg.sim.validate().context("config [sim]")?;
        ensure!(
            (0.0..=1.0).contains(&cfg.channel.loss_rate),
            "config [channel]: loss_rate must lie in [0, 1]"
        );
        ensure!(
            cfg.run.timeout_ms > 0,
            "config [run]: timeout_ms must be positive"
        );
        Ok(cfg)
    }
}

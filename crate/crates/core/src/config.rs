//! TOML run configuration. Every section is optional and falls back to the
//! built-in defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::config;
use crate::model::{default_profile, ScenarioConfig, Technology, TechnologyProfile};
use crate::offload::OffloadParams;
use crate::phy::MacParams;
use crate::sim::{RadioSetup, SimParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub channel: ChannelParams,
    pub mac: MacParams,
    pub sim: SimParams,
    pub offload: OffloadParams,
    /// Replacements for the built-in technology profiles.
    pub profiles: Vec<TechnologyProfile>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config(format!("cannot serialise config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.mac.validate()?;
        self.sim.payload.validate()?;
        for (i, p) in self.profiles.iter().enumerate() {
            p.validate()?;
            if self.profiles[..i].iter().any(|q| q.tech == p.tech) {
                return Err(config(format!("profile for {} given twice", p.tech.name())));
            }
        }
        Ok(())
    }

    pub fn profile(&self, tech: Technology) -> TechnologyProfile {
        self.profiles.iter().find(|p| p.tech == tech).cloned().unwrap_or_else(|| default_profile(tech))
    }

    pub fn radio(&self, tech: Technology) -> RadioSetup {
        RadioSetup { profile: self.profile(tech), channel: self.channel.clone(), mac: self.mac, payload: self.sim.payload }
    }
}

//! Radio parameters of the LPWAN technologies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technology {
    #[serde(rename = "lora")]
    LoRa,
    #[serde(rename = "lora+")]
    LoRaPlus,
    #[serde(rename = "nb-iot")]
    NbIot,
    #[serde(rename = "sigfox")]
    SigFox,
}

impl Technology {
    pub const ALL: [Technology; 4] = [
        Technology::LoRa,
        Technology::LoRaPlus,
        Technology::NbIot,
        Technology::SigFox,
    ];

    pub fn is_lora(self) -> bool {
        matches!(self, Technology::LoRa | Technology::LoRaPlus)
    }

    pub fn name(self) -> &'static str {
        match self {
            Technology::LoRa => "lora",
            Technology::LoRaPlus => "lora+",
            Technology::NbIot => "nb-iot",
            Technology::SigFox => "sigfox",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lora" => Ok(Technology::LoRa),
            "lora+" | "lora-plus" | "loraplus" => Ok(Technology::LoRaPlus),
            "nb-iot" | "nbiot" | "nb" => Ok(Technology::NbIot),
            "sigfox" => Ok(Technology::SigFox),
            other => Err(config(format!("unknown technology '{other}'"))),
        }
    }
}

/// How the receiver sensitivity depends on the transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SensitivityRule {
    /// `base - step * (sf - 7)`
    PerSpreadingFactor { base_dbm: f64, step_db: f64 },
    /// `base - step * log2(repetitions)`
    PerRepetition { base_dbm: f64, step_db: f64, max_repetitions: u32 },
    Constant { dbm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyProfile {
    pub tech: Technology,
    pub tx_power_dbm: f64,
    pub carrier_hz: f64,
    /// Operating channel width.
    pub bandwidth_hz: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub noise_figure_db: f64,
    pub max_payload: u32,
    pub sensitivity: SensitivityRule,
    /// Ultra-narrowband sub-channel width (SigFox only).
    pub micro_channel_hz: Option<f64>,
}

impl TechnologyProfile {
    pub fn new_default(tech: Technology) -> Self {
        match tech {
            Technology::LoRa | Technology::LoRaPlus => TechnologyProfile {
                tech,
                tx_power_dbm: 14.0,
                carrier_hz: 868e6,
                bandwidth_hz: 125e3,
                tx_gain_db: 2.15,
                rx_gain_db: 8.0,
                noise_figure_db: 3.0,
                max_payload: 12,
                sensitivity: SensitivityRule::PerSpreadingFactor { base_dbm: -127.0, step_db: 2.5 },
                micro_channel_hz: None,
            },
            Technology::NbIot => TechnologyProfile {
                tech,
                tx_power_dbm: 23.0,
                carrier_hz: 900e6,
                bandwidth_hz: 180e3,
                tx_gain_db: 0.0,
                rx_gain_db: 8.0,
                noise_figure_db: 3.0,
                max_payload: 12,
                sensitivity: SensitivityRule::PerRepetition {
                    base_dbm: -102.2,
                    step_db: 2.8,
                    max_repetitions: 128,
                },
                micro_channel_hz: None,
            },
            Technology::SigFox => TechnologyProfile {
                tech,
                tx_power_dbm: 14.0,
                carrier_hz: 868e6,
                bandwidth_hz: 200e3,
                tx_gain_db: 2.15,
                rx_gain_db: 8.0,
                noise_figure_db: 3.0,
                max_payload: 12,
                sensitivity: SensitivityRule::Constant { dbm: -140.0 },
                micro_channel_hz: Some(100.0),
            },
        }
    }

    /// Transmit power plus both antenna gains.
    pub fn budget_dbm(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_db + self.rx_gain_db
    }

    /// Number of ultra-narrowband sub-channels inside the operating channel.
    pub fn micro_channels(&self) -> Option<u32> {
        self.micro_channel_hz.map(|w| (self.bandwidth_hz / w).round() as u32)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(config("bandwidth must be positive"));
        }
        if self.max_payload < 1 {
            return Err(config("max_payload must be at least 1 byte"));
        }
        if let Some(w) = self.micro_channel_hz {
            if !(w > 0.0) || w > self.bandwidth_hz {
                return Err(config("micro-channel width must lie in (0, bandwidth]"));
            }
        }
        Ok(())
    }
}

pub fn default_profile(tech: Technology) -> TechnologyProfile {
    TechnologyProfile::new_default(tech)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nbiot_column() {
        let p = default_profile(Technology::NbIot);
        assert_eq!(p.tx_power_dbm, 23.0);
        assert_eq!(p.carrier_hz, 0.900e9);
        assert_eq!(p.bandwidth_hz, 0.18e6);
    }

    #[test]
    fn sigfox_column() {
        let p = default_profile(Technology::SigFox);
        assert_eq!(p.tx_power_dbm, 14.0);
        assert_eq!(p.carrier_hz, 0.868e9);
        assert_eq!(p.micro_channels(), Some(2000));
    }

    #[test]
    fn lora_column_and_plus_share_it() {
        let p = default_profile(Technology::LoRa);
        assert_eq!(p.tx_gain_db, 2.15);
        assert_eq!(p.rx_gain_db, 8.0);
        assert_eq!(p.noise_figure_db, 3.0);
        let plus = default_profile(Technology::LoRaPlus);
        assert_eq!(TechnologyProfile { tech: Technology::LoRa, ..plus }, p);
    }

    #[test]
    fn every_default_validates() {
        for t in Technology::ALL {
            default_profile(t).validate().unwrap();
        }
    }

    #[test]
    fn zero_bandwidth_rejected() {
        let mut p = default_profile(Technology::LoRa);
        p.bandwidth_hz = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for t in Technology::ALL {
            assert_eq!(t.name().parse::<Technology>().unwrap(), t);
        }
        assert!("zigbee".parse::<Technology>().is_err());
    }
}

//! Gateways: terrestrial, aerial and orbital.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlatformKind {
    Tg,
    Uav,
    Hap,
    Leo,
    HapRelayLeo,
}

impl PlatformKind {
    pub const BASE: [PlatformKind; 4] =
        [PlatformKind::Tg, PlatformKind::Uav, PlatformKind::Hap, PlatformKind::Leo];

    pub fn altitude_km(self) -> f64 {
        match self {
            PlatformKind::Tg => 0.0,
            PlatformKind::Uav => 0.6,
            PlatformKind::Hap | PlatformKind::HapRelayLeo => 20.0,
            PlatformKind::Leo => 600.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlatformKind::Tg => "tg",
            PlatformKind::Uav => "uav",
            PlatformKind::Hap => "hap",
            PlatformKind::Leo => "leo",
            PlatformKind::HapRelayLeo => "hap-relay-leo",
        }
    }
}

impl fmt::Display for PlatformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlatformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tg" | "gs" => Ok(PlatformKind::Tg),
            "uav" => Ok(PlatformKind::Uav),
            "hap" => Ok(PlatformKind::Hap),
            "leo" => Ok(PlatformKind::Leo),
            "hap-relay-leo" | "hap-leo" => Ok(PlatformKind::HapRelayLeo),
            other => Err(config(format!("unknown platform '{other}'"))),
        }
    }
}

/// Second hop of a decode-and-forward relay (HAP to LEO feeder link).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayParams {
    pub tx_power_dbm: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub noise_figure_db: f64,
    /// Altitude of the far end of the relay leg.
    pub target_altitude_km: f64,
}

impl Default for RelayParams {
    fn default() -> Self {
        RelayParams {
            tx_power_dbm: 52.0,
            carrier_hz: 38e9,
            bandwidth_hz: 400e6,
            tx_gain_db: 37.9,
            rx_gain_db: 0.0,
            noise_figure_db: 0.0,
            target_altitude_km: PlatformKind::Leo.altitude_km(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub kind: PlatformKind,
    pub altitude_km: f64,
    pub position: Point,
    /// Overrides the technology's receive gain when set.
    pub rx_gain_db: Option<f64>,
    pub relay: Option<RelayParams>,
}

impl Platform {
    /// Platform of the given kind anchored above the AoI centre.
    pub fn new(kind: PlatformKind) -> Self {
        Platform::at(kind, Point::default())
    }

    pub fn at(kind: PlatformKind, position: Point) -> Self {
        Platform {
            kind,
            altitude_km: kind.altitude_km(),
            position,
            rx_gain_db: None,
            relay: (kind == PlatformKind::HapRelayLeo).then(RelayParams::default),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.relay.is_some() != (self.kind == PlatformKind::HapRelayLeo) {
            return Err(config("relay parameters belong to hap-relay-leo platforms only"));
        }
        if !(self.altitude_km >= 0.0) {
            return Err(config("altitude must be non-negative"));
        }
        Ok(())
    }
}

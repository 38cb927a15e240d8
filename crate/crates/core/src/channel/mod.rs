//! Link budget: geometry, path loss, fading, received power and SNR.

mod fading;
mod geometry;
mod pathloss;

pub use fading::{sample_fading, Fading, FadingParams};
pub use geometry::{slant_geometry, Curvature, Geometry, EARTH_RADIUS_KM};
pub use pathloss::{free_space_path_loss, ClutterModel, ElevationLoss, GroundModel, LosModel};

use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::model::{Platform, PlatformKind, RelayParams, TechnologyProfile};
use crate::Result;

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    GroundToGround,
    GroundToUav,
    GroundToHap,
    GroundToLeo,
    HapToLeo,
}

impl LinkKind {
    /// Link from a ground device to a platform of the given kind (first hop for relays).
    pub fn uplink_to(kind: PlatformKind) -> LinkKind {
        match kind {
            PlatformKind::Tg => LinkKind::GroundToGround,
            PlatformKind::Uav => LinkKind::GroundToUav,
            PlatformKind::Hap | PlatformKind::HapRelayLeo => LinkKind::GroundToHap,
            PlatformKind::Leo => LinkKind::GroundToLeo,
        }
    }

    pub fn is_ground_to_sky(self) -> bool {
        matches!(self, LinkKind::GroundToUav | LinkKind::GroundToHap | LinkKind::GroundToLeo)
    }
}

/// Constant atmospheric attenuation per link family, dB.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtmosphericLoss {
    pub ground_to_air_db: f64,
    pub ground_to_space_db: f64,
    pub feeder_db: f64,
}

impl AtmosphericLoss {
    fn for_link(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::GroundToGround => 0.0,
            LinkKind::GroundToUav | LinkKind::GroundToHap => self.ground_to_air_db,
            LinkKind::GroundToLeo => self.ground_to_space_db,
            LinkKind::HapToLeo => self.feeder_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub fading: FadingParams,
    pub ground: GroundModel,
    pub elevation_loss: ElevationLoss,
    pub clutter: ClutterModel,
    pub los: LosModel,
    pub atmospheric: AtmosphericLoss,
    /// Platforms below this altitude use flat-earth geometry.
    pub flat_below_km: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            fading: FadingParams::default(),
            ground: GroundModel::default(),
            elevation_loss: ElevationLoss::default(),
            clutter: ClutterModel::default(),
            los: LosModel::default(),
            atmospheric: AtmosphericLoss::default(),
            flat_below_km: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub distance_km: f64,
    pub elevation_deg: f64,
    pub path_loss_db: f64,
    pub fading_power: f64,
    pub received_power_dbm: f64,
    pub snr_db: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        self.elevation_loss.validate()?;
        if !(self.clutter.sigma_db >= 0.0) {
            return Err(crate::error::config("clutter sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn curvature(&self, altitude_km: f64) -> Curvature {
        if altitude_km < self.flat_below_km {
            Curvature::Flat
        } else {
            Curvature::Spherical
        }
    }

    pub fn geometry(&self, ground_km: f64, altitude_km: f64) -> Geometry {
        if altitude_km <= 0.0 {
            return Geometry { slant_km: ground_km, elevation_deg: 0.0 };
        }
        slant_geometry(ground_km, altitude_km, self.curvature(altitude_km))
    }

    pub fn fading(&self, kind: LinkKind) -> Fading {
        Fading::for_link(kind, &self.fading)
    }

    /// Deterministic path loss of a link; `los` selects the extra-loss row.
    pub fn path_loss(
        &self,
        kind: LinkKind,
        ground_km: f64,
        altitude_km: f64,
        carrier_hz: f64,
        los: bool,
    ) -> Result<(Geometry, f64)> {
        if kind == LinkKind::GroundToGround {
            let g = Geometry { slant_km: ground_km, elevation_deg: 0.0 };
            return Ok((g, self.ground.path_loss(ground_km)?));
        }
        let g = self.geometry(ground_km, altitude_km);
        let extra = if los { self.fading.extra_loss_los_db } else { self.fading.extra_loss_nlos_db };
        let mut pl = free_space_path_loss(g.slant_km, carrier_hz)? + self.atmospheric.for_link(kind) + extra;
        if kind.is_ground_to_sky() {
            pl += self.elevation_loss.loss_db(g.elevation_deg);
        }
        Ok((g, pl))
    }

    /// Full link evaluation for a given fading draw.
    pub fn link_sample(
        &self,
        profile: &TechnologyProfile,
        platform: &Platform,
        ground_km: f64,
        fading_power: f64,
    ) -> Result<LinkSample> {
        let kind = LinkKind::uplink_to(platform.kind);
        let (g, pl) = self.path_loss(kind, ground_km, platform.altitude_km, profile.carrier_hz, true)?;
        let p = received_power(profile, platform, pl, fading_power);
        Ok(LinkSample {
            distance_km: g.slant_km,
            elevation_deg: g.elevation_deg,
            path_loss_db: pl,
            fading_power,
            received_power_dbm: p,
            snr_db: snr(p, profile.bandwidth_hz, profile.noise_figure_db),
        })
    }

    /// SNR of the HAP-to-LEO feeder hop.
    pub fn relay_leg_snr(&self, relay: &RelayParams, hap_altitude_km: f64) -> Result<f64> {
        let sep = (relay.target_altitude_km - hap_altitude_km).abs();
        let (_, pl) = self.path_loss(LinkKind::HapToLeo, 0.0, sep, relay.carrier_hz, true)?;
        let p = relay.tx_power_dbm + relay.tx_gain_db + relay.rx_gain_db - pl;
        Ok(snr(p, relay.bandwidth_hz, relay.noise_figure_db))
    }
}

/// `P_t + G_tx + G_rx - PL + 10 log10 |h|^2`, in dBm.
pub fn received_power(profile: &TechnologyProfile, platform: &Platform, path_loss_db: f64, fading: f64) -> f64 {
    let rx_gain = platform.rx_gain_db.unwrap_or(profile.rx_gain_db);
    received_power_dbm(profile.tx_power_dbm + profile.tx_gain_db + rx_gain, path_loss_db, fading)
}

pub fn received_power_dbm(eirp_plus_rx_gain_dbm: f64, path_loss_db: f64, fading: f64) -> f64 {
    if fading <= 0.0 {
        return f64::NEG_INFINITY;
    }
    eirp_plus_rx_gain_dbm - path_loss_db + 10.0 * fading.log10()
}

pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn snr(received_power_dbm: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    received_power_dbm - noise_floor_dbm(bandwidth_hz, noise_figure_db)
}

/// Decode-and-forward end-to-end SNR: the weakest hop.
pub fn relay_snr(leg_snrs_db: &[f64]) -> Result<f64> {
    leg_snrs_db
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| domain("relay needs at least one leg"))
}

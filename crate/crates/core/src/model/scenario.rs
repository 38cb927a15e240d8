//! Seeded placement of devices, gateways and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::platform::{Platform, PlatformKind, Point};
use crate::error::config;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radius_km: f64,
    /// Devices per km².
    pub device_density: f64,
    /// Terrestrial gateways per km².
    pub gateway_density: f64,
    /// Fixed device count; replaces the Poisson draw when set.
    pub device_count: Option<usize>,
    pub gateway_count: Option<usize>,
    /// Transmissions per second per device.
    pub arrival_rate: f64,
    pub horizon_s: f64,
    pub platforms: Vec<PlatformKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            radius_km: 5.0,
            device_density: 10.0,
            gateway_density: 1.0,
            device_count: None,
            gateway_count: None,
            arrival_rate: 1.0 / 1800.0,
            horizon_s: 3600.0,
            platforms: vec![
                PlatformKind::Uav,
                PlatformKind::Hap,
                PlatformKind::Leo,
                PlatformKind::HapRelayLeo,
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_km > 0.0) || !self.radius_km.is_finite() {
            return Err(config("AoI radius must be positive"));
        }
        if !(self.device_density >= 0.0) || !(self.gateway_density >= 0.0) {
            return Err(config("densities must be non-negative"));
        }
        if !(self.arrival_rate >= 0.0) {
            return Err(config("arrival rate must be non-negative"));
        }
        if !(self.horizon_s > 0.0) {
            return Err(config("horizon must be positive"));
        }
        if self.platforms.contains(&PlatformKind::Tg) {
            return Err(config("terrestrial gateways come from gateway_density, not platforms"));
        }
        Ok(())
    }

    pub fn area_km2(&self) -> f64 {
        std::f64::consts::PI * self.radius_km * self.radius_km
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub radius_km: f64,
    pub device_density: f64,
    pub gateway_density: f64,
    pub devices: Vec<Point>,
    pub gateways: Vec<Point>,
    pub platforms: Vec<Platform>,
    pub arrival_rate: f64,
    pub horizon_s: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn platform(&self, kind: PlatformKind) -> Option<&Platform> {
        self.platforms.iter().find(|p| p.kind == kind)
    }

    /// Index of the closest terrestrial gateway to each device.
    pub fn nearest_gateways(&self) -> Vec<Option<(usize, f64)>> {
        self.devices
            .iter()
            .map(|d| {
                self.gateways
                    .iter()
                    .enumerate()
                    .map(|(j, g)| (j, d.distance(*g)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
            })
            .collect()
    }
}

fn draw_count<R: Rng>(density: f64, area: f64, fixed: Option<usize>, rng: &mut R) -> usize {
    if let Some(n) = fixed {
        return n;
    }
    let mean = density * area;
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Uniform point on a disk centred at the origin.
pub fn uniform_in_disk<R: Rng>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Point::new(r * theta.cos(), r * theta.sin())
}

pub fn build_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = cfg.area_km2();
    let n_dev = draw_count(cfg.device_density, area, cfg.device_count, &mut rng);
    let n_gw = draw_count(cfg.gateway_density, area, cfg.gateway_count, &mut rng);
    let devices = (0..n_dev).map(|_| uniform_in_disk(cfg.radius_km, &mut rng)).collect();
    let gateways = (0..n_gw).map(|_| uniform_in_disk(cfg.radius_km, &mut rng)).collect();
    Ok(Scenario {
        radius_km: cfg.radius_km,
        device_density: cfg.device_density,
        gateway_density: cfg.gateway_density,
        devices,
        gateways,
        platforms: cfg.platforms.iter().map(|k| Platform::new(*k)).collect(),
        arrival_rate: cfg.arrival_rate,
        horizon_s: cfg.horizon_s,
        seed,
    })
}

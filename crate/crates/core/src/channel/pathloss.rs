//! Path-loss models for ground and air/space links.

use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::Result;

/// Free-space loss in dB for a slant range in km and a carrier in Hz.
pub fn free_space_path_loss(slant_km: f64, freq_hz: f64) -> Result<f64> {
    if !(slant_km > 0.0) {
        return Err(domain(format!("free-space loss needs a positive distance, got {slant_km} km")));
    }
    if !(freq_hz > 0.0) {
        return Err(domain("free-space loss needs a positive carrier"));
    }
    Ok(20.0 * (slant_km * 1e3).log10() + 20.0 * freq_hz.log10() - 147.55)
}

/// Log-distance model with an optional second, steeper slope past a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundModel {
    pub ref_loss_db: f64,
    pub ref_distance_m: f64,
    pub exponent: f64,
    pub breakpoint_km: Option<f64>,
    pub far_exponent: f64,
}

impl Default for GroundModel {
    fn default() -> Self {
        GroundModel {
            ref_loss_db: 7.7,
            ref_distance_m: 1.0,
            exponent: 3.67,
            breakpoint_km: Some(8.0),
            far_exponent: 5.03,
        }
    }
}

impl GroundModel {
    /// Plain single-slope model.
    pub fn single_slope(ref_loss_db: f64, exponent: f64) -> Self {
        GroundModel {
            ref_loss_db,
            ref_distance_m: 1.0,
            exponent,
            breakpoint_km: None,
            far_exponent: exponent,
        }
    }

    pub fn path_loss(&self, distance_km: f64) -> Result<f64> {
        if !(distance_km > 0.0) {
            return Err(domain(format!("ground loss needs a positive distance, got {distance_km} km")));
        }
        let d_m = distance_km * 1e3;
        let near = |d: f64| self.ref_loss_db + 10.0 * self.exponent * (d / self.ref_distance_m).log10();
        match self.breakpoint_km {
            Some(b) if distance_km > b => {
                let b_m = b * 1e3;
                Ok(near(b_m) + 10.0 * self.far_exponent * (d_m / b_m).log10())
            }
            _ => Ok(near(d_m)),
        }
    }

    /// Largest distance with loss not above `budget_db` (inverse of `path_loss`).
    pub fn range_for_loss(&self, budget_db: f64) -> f64 {
        let near = |loss: f64| {
            self.ref_distance_m * 10f64.powf((loss - self.ref_loss_db) / (10.0 * self.exponent)) / 1e3
        };
        match self.breakpoint_km {
            Some(b) => {
                let at_b = self.path_loss(b).unwrap_or(f64::INFINITY);
                if budget_db <= at_b {
                    near(budget_db)
                } else {
                    b * 10f64.powf((budget_db - at_b) / (10.0 * self.far_exponent))
                }
            }
            None => near(budget_db),
        }
    }
}

/// Additional loss on ground-to-air/space links that grows as the elevation
/// angle drops. Linear interpolation between nodes, flat beyond both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElevationLoss {
    /// `(elevation_deg, loss_db)` sorted by elevation.
    pub nodes: Vec<(f64, f64)>,
}

impl Default for ElevationLoss {
    fn default() -> Self {
        ElevationLoss {
            nodes: vec![
                (4.09, 53.9),
                (5.04, 44.6),
                (10.34, 31.85),
                (12.05, 21.9),
                (14.71, 10.17),
                (18.31, 0.0),
            ],
        }
    }
}

impl ElevationLoss {
    pub fn none() -> Self {
        ElevationLoss { nodes: Vec::new() }
    }

    pub fn loss_db(&self, elevation_deg: f64) -> f64 {
        let n = &self.nodes;
        match n.len() {
            0 => 0.0,
            _ if elevation_deg <= n[0].0 => n[0].1,
            _ if elevation_deg >= n[n.len() - 1].0 => n[n.len() - 1].1,
            _ => {
                let i = n.partition_point(|p| p.0 <= elevation_deg);
                let (e0, l0) = n[i - 1];
                let (e1, l1) = n[i];
                l0 + (l1 - l0) * (elevation_deg - e0) / (e1 - e0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(crate::error::config("elevation loss nodes must be strictly increasing"));
        }
        if self.nodes.iter().any(|p| p.1 < 0.0) {
            return Err(crate::error::config("elevation loss must be non-negative"));
        }
        Ok(())
    }
}

/// Static per-device loss on the ground link (building penetration and
/// shadowing), drawn once per device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterModel {
    pub mean_db: f64,
    pub sigma_db: f64,
}

impl Default for ClutterModel {
    fn default() -> Self {
        ClutterModel { mean_db: 36.0, sigma_db: 0.0 }
    }
}

impl ClutterModel {
    pub fn none() -> Self {
        ClutterModel { mean_db: 0.0, sigma_db: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum LosModel {
    #[default]
    AlwaysLos,
    /// `P_los = 1 / (1 + a exp(-b (elev - a)))` with elevation in degrees.
    Sigmoid { a: f64, b: f64 },
}

impl LosModel {
    pub fn los_probability(&self, elevation_deg: f64) -> f64 {
        match *self {
            LosModel::AlwaysLos => 1.0,
            LosModel::Sigmoid { a, b } => 1.0 / (1.0 + a * (-b * (elevation_deg - a)).exp()),
        }
    }
}

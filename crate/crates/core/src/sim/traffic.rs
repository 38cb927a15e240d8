//! MAR-style traffic: Poisson arrivals and Pareto payloads.

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::config;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PayloadModel {
    /// Pareto(shape, scale) clamped to `[1, max]` and rounded to whole bytes.
    Pareto { shape: f64, scale: f64 },
    Fixed { bytes: u32 },
}

impl Default for PayloadModel {
    fn default() -> Self {
        PayloadModel::Pareto { shape: 2.5, scale: 1.0 }
    }
}

impl PayloadModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PayloadModel::Pareto { shape, scale } if !(shape > 0.0 && scale > 0.0) => {
                Err(config("Pareto shape and scale must be positive"))
            }
            PayloadModel::Fixed { bytes: 0 } => Err(config("fixed payload must be at least 1 byte")),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max: u32) -> u32 {
        match *self {
            PayloadModel::Fixed { bytes } => bytes,
            PayloadModel::Pareto { shape, scale } => sample_payload(rng, max, shape, scale),
        }
    }
}

pub fn sample_payload<R: Rng + ?Sized>(rng: &mut R, max: u32, shape: f64, scale: f64) -> u32 {
    let max = max.max(1);
    let x: f64 = Pareto::new(scale, shape).expect("positive Pareto parameters").sample(rng);
    (x.round().clamp(1.0, max as f64)) as u32
}

/// Homogeneous Poisson arrival times in `[0, horizon)`.
pub fn sample_arrivals<R: Rng + ?Sized>(rate: f64, horizon_s: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if !(rate > 0.0) || !(horizon_s > 0.0) {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < horizon_s {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

//! Small-scale fading of the squared channel envelope.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LinkKind;
use crate::error::config;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingParams {
    pub nakagami_m0: f64,
    pub sr_omega: f64,
    pub sr_b0: f64,
    pub sr_m: f64,
    pub extra_loss_los_db: f64,
    pub extra_loss_nlos_db: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams {
            nakagami_m0: 15.0,
            sr_omega: 1.29,
            sr_b0: 0.158,
            sr_m: 19.4,
            extra_loss_los_db: 0.0154,
            extra_loss_nlos_db: 18.4615,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.nakagami_m0, self.sr_omega, self.sr_b0, self.sr_m];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(config("fading parameters must be strictly positive"));
        }
        if !(self.extra_loss_los_db >= 0.0) || !(self.extra_loss_nlos_db >= 0.0) {
            return Err(config("extra losses must be non-negative"));
        }
        Ok(())
    }
}

/// Distribution of `|h|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    Unit,
    /// Gamma(m, 1/m): unit mean.
    Nakagami { m: f64 },
    /// Rayleigh scatter of power `2 b0` around a Nakagami-m LOS term of power `omega`.
    ShadowedRician { omega: f64, b0: f64, m: f64 },
}

impl Fading {
    pub fn for_link(kind: LinkKind, params: &FadingParams) -> Fading {
        match kind {
            LinkKind::GroundToUav | LinkKind::GroundToHap => Fading::Nakagami { m: params.nakagami_m0 },
            LinkKind::GroundToLeo => Fading::ShadowedRician {
                omega: params.sr_omega,
                b0: params.sr_b0,
                m: params.sr_m,
            },
            LinkKind::GroundToGround | LinkKind::HapToLeo => Fading::Unit,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Fading::Unit | Fading::Nakagami { .. } => 1.0,
            Fading::ShadowedRician { omega, b0, .. } => 2.0 * b0 + omega,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Fading::Unit => 0.0,
            Fading::Nakagami { m } => {
                if m.is_finite() {
                    1.0 / m
                } else {
                    0.0
                }
            }
            Fading::ShadowedRician { omega, b0, m } => {
                // |h|^2 = |A + Z|^2 with A^2 ~ Gamma(m, omega/m), Z ~ CN(0, 2 b0)
                let s = 2.0 * b0;
                omega * omega / m + 2.0 * s * omega + s * s
            }
        }
    }

    pub fn is_random(&self) -> bool {
        match *self {
            Fading::Unit => false,
            Fading::Nakagami { m } => m.is_finite(),
            Fading::ShadowedRician { .. } => true,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Fading::Unit => 1.0,
            Fading::Nakagami { m } => {
                if !m.is_finite() {
                    return 1.0;
                }
                Gamma::new(m, 1.0 / m).expect("m > 0").sample(rng)
            }
            Fading::ShadowedRician { omega, b0, m } => {
                let los_power: f64 = Gamma::new(m, omega / m).expect("m, omega > 0").sample(rng);
                let sd = b0.sqrt();
                let x: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
                let y: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
                let re = los_power.sqrt() + x;
                re * re + y * y
            }
        }
    }
}

pub fn sample_fading<R: Rng + ?Sized>(kind: LinkKind, params: &FadingParams, rng: &mut R) -> f64 {
    Fading::for_link(kind, params).sample(rng)
}

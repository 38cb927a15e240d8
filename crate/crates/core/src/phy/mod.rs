//! PHY parameters (rate, airtime, sensitivity), mode assignment and
//! collision resolution.

mod collision;

pub use collision::{
    resolve_collisions, CaptureWeighting, ChannelTag, DetectionOutcome, MacParams, TransmissionEvent,
};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error};
use crate::model::{SensitivityRule, TechnologyProfile};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SpreadingFactor(u8);

impl SpreadingFactor {
    pub const MIN: u8 = 7;
    pub const MAX: u8 = 12;

    pub fn new(sf: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&sf) {
            Ok(SpreadingFactor(sf))
        } else {
            Err(Error::SpreadingFactor(sf))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Position in 7..=12, starting at 0.
    pub fn index(self) -> usize {
        (self.0 - Self::MIN) as usize
    }

    pub fn all() -> impl Iterator<Item = SpreadingFactor> {
        (Self::MIN..=Self::MAX).map(SpreadingFactor)
    }

    pub fn from_min(min: SpreadingFactor) -> impl Iterator<Item = SpreadingFactor> {
        (min.0..=Self::MAX).map(SpreadingFactor)
    }
}

impl TryFrom<u8> for SpreadingFactor {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        SpreadingFactor::new(v)
    }
}

impl From<SpreadingFactor> for u8 {
    fn from(sf: SpreadingFactor) -> u8 {
        sf.0
    }
}

impl fmt::Display for SpreadingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

/// NB-IoT repetition count: a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Repetitions(u32);

impl Repetitions {
    pub const MAX: u32 = 128;

    pub fn new(r: u32) -> Result<Self> {
        if r.is_power_of_two() && r <= Self::MAX {
            Ok(Repetitions(r))
        } else {
            Err(Error::Repetitions(r))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn log2(self) -> u32 {
        self.0.trailing_zeros()
    }

    pub fn up_to(max: u32) -> impl Iterator<Item = Repetitions> {
        (0..=max.clamp(1, Self::MAX).ilog2()).map(|e| Repetitions(1 << e))
    }
}

/// Mode a sensitivity is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxMode {
    LoRa(SpreadingFactor),
    NbIot(Repetitions),
    SigFox,
}

/// `SF * B / 2^SF`, bits per second.
pub fn lora_data_rate(sf: u8, bandwidth_hz: f64) -> Result<f64> {
    let sf = SpreadingFactor::new(sf)?;
    if !(bandwidth_hz > 0.0) {
        return Err(domain("bandwidth must be positive"));
    }
    Ok(sf.0 as f64 * bandwidth_hz / (1u32 << sf.0) as f64)
}

/// Number of payload symbol blocks: `max(5 * ceil((8L - 4SF + 24) / (4SF)), 0)`.
fn payload_symbols(sf: u8, payload: u32) -> i64 {
    let num = 8 * payload as i64 - 4 * sf as i64 + 24;
    let den = 4 * sf as i64;
    let ceil = num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0);
    (5 * ceil).max(0)
}

/// LoRa time on air in seconds.
pub fn lora_toa(sf: u8, bandwidth_hz: f64, payload: u32) -> Result<f64> {
    let sf = SpreadingFactor::new(sf)?;
    if !(bandwidth_hz > 0.0) {
        return Err(domain("bandwidth must be positive"));
    }
    if payload < 1 {
        return Err(domain("payload must be at least one byte"));
    }
    let symbol = (1u32 << sf.0) as f64 / bandwidth_hz;
    Ok(symbol * (8 + payload_symbols(sf.0, payload)) as f64)
}

/// Airtime of every SF for one payload, indexed by `SpreadingFactor::index`.
pub fn lora_airtimes(bandwidth_hz: f64, payload: u32) -> Result<[f64; 6]> {
    let mut t = [0.0; 6];
    for sf in SpreadingFactor::all() {
        t[sf.index()] = lora_toa(sf.get(), bandwidth_hz, payload)?;
    }
    Ok(t)
}

pub fn sensitivity(profile: &TechnologyProfile, mode: TxMode) -> Result<f64> {
    match (profile.sensitivity, mode) {
        (SensitivityRule::PerSpreadingFactor { base_dbm, step_db }, TxMode::LoRa(sf)) => {
            Ok(base_dbm - step_db * (sf.0 - SpreadingFactor::MIN) as f64)
        }
        (SensitivityRule::PerRepetition { base_dbm, step_db, max_repetitions }, TxMode::NbIot(r)) => {
            if r.0 > max_repetitions {
                return Err(Error::Repetitions(r.0));
            }
            Ok(base_dbm - step_db * r.log2() as f64)
        }
        (SensitivityRule::Constant { dbm }, TxMode::SigFox) => Ok(dbm),
        (rule, mode) => Err(domain(format!("mode {mode:?} does not fit sensitivity rule {rule:?}"))),
    }
}

/// Lowest sensitivity the technology can reach (longest-range mode).
pub fn lowest_sensitivity(profile: &TechnologyProfile) -> f64 {
    match profile.sensitivity {
        SensitivityRule::PerSpreadingFactor { base_dbm, step_db } => {
            base_dbm - step_db * (SpreadingFactor::MAX - SpreadingFactor::MIN) as f64
        }
        SensitivityRule::PerRepetition { base_dbm, step_db, max_repetitions } => {
            base_dbm - step_db * max_repetitions.clamp(1, Repetitions::MAX).ilog2() as f64
        }
        SensitivityRule::Constant { dbm } => dbm,
    }
}

/// Detection threshold, inclusive at the boundary.
pub fn detect(rx_power_dbm: f64, sensitivity_dbm: f64) -> bool {
    rx_power_dbm >= sensitivity_dbm
}

/// Smallest repetition count whose sensitivity the received power meets.
pub fn nbiot_min_repetitions(profile: &TechnologyProfile, rx_power_dbm: f64) -> Option<Repetitions> {
    let max = match profile.sensitivity {
        SensitivityRule::PerRepetition { max_repetitions, .. } => max_repetitions,
        _ => return None,
    };
    Repetitions::up_to(max)
        .find(|r| sensitivity(profile, TxMode::NbIot(*r)).is_ok_and(|s| detect(rx_power_dbm, s)))
}

/// Lowest SF whose sensitivity the received power meets.
pub fn lowest_feasible_sf(profile: &TechnologyProfile, rx_power_dbm: f64) -> Option<SpreadingFactor> {
    SpreadingFactor::all()
        .find(|sf| sensitivity(profile, TxMode::LoRa(*sf)).is_ok_and(|s| detect(rx_power_dbm, s)))
}

/// How LoRa+ devices pick among the feasible SFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scramble {
    Uniform,
    /// Probability proportional to `1 / airtime`, equalising the load per SF.
    AirtimeBalanced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SfPolicy {
    LowestFeasible,
    ScrambledPlus { scramble: Scramble, airtimes: [f64; 6] },
}

pub fn assign_sf<R: Rng + ?Sized>(
    profile: &TechnologyProfile,
    rx_power_mean_dbm: f64,
    policy: &SfPolicy,
    rng: &mut R,
) -> Option<SpreadingFactor> {
    let min = lowest_feasible_sf(profile, rx_power_mean_dbm)?;
    match policy {
        SfPolicy::LowestFeasible => Some(min),
        SfPolicy::ScrambledPlus { scramble, airtimes } => {
            let feasible: Vec<SpreadingFactor> = SpreadingFactor::from_min(min).collect();
            let weights: Vec<f64> = match scramble {
                Scramble::Uniform => vec![1.0; feasible.len()],
                Scramble::AirtimeBalanced => feasible.iter().map(|sf| 1.0 / airtimes[sf.index()]).collect(),
            };
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (sf, w) in feasible.iter().zip(&weights) {
                if u < *w {
                    return Some(*sf);
                }
                u -= w;
            }
            feasible.last().copied()
        }
    }
}

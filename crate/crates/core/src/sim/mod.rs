//! Traffic generation, per-drop simulation and metric aggregation.

mod drop;
mod traffic;

pub use drop::{run_drop, DropResult, RadioSetup, Topology};
pub use traffic::{sample_arrivals, sample_payload, PayloadModel};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain};
use crate::model::{build_scenario, ScenarioConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub drops: usize,
    pub payload: PayloadModel,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams { drops: 25, payload: PayloadModel::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    /// Bytes per hour.
    pub goodput: f64,
    /// Offered bytes per hour.
    pub offered: f64,
    pub success_probability: f64,
    /// 95% normal-approximation halfwidth of `success_probability`.
    pub confidence_halfwidth: f64,
    pub drops: usize,
}

/// Child RNG of drop `index`: its own ChaCha stream under the master seed.
pub fn drop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn aggregate(drops: &[DropResult]) -> Result<SimulationResult> {
    if drops.is_empty() {
        return Err(domain("cannot aggregate zero drops"));
    }
    let attempted: u64 = drops.iter().map(|d| d.attempted).sum();
    let delivered: u64 = drops.iter().map(|d| d.delivered).sum();
    let horizon: f64 = drops.iter().map(|d| d.horizon_s).sum();
    let bytes: u64 = drops.iter().map(|d| d.delivered_bytes).sum();
    let offered: u64 = drops.iter().map(|d| d.attempted_bytes).sum();
    let p = if attempted == 0 { 0.0 } else { delivered as f64 / attempted as f64 };
    let n = drops.len() as f64;
    let halfwidth = if attempted == 0 {
        0.0
    } else if drops.len() > 1 {
        // ratio estimator across drops
        let mean_att = attempted as f64 / n;
        let ss: f64 = drops.iter().map(|d| (d.delivered as f64 - p * d.attempted as f64).powi(2)).sum();
        1.96 * (ss / (n * (n - 1.0))).sqrt() / mean_att
    } else {
        1.96 * (p * (1.0 - p) / attempted as f64).sqrt()
    };
    let per_hour = |b: u64| if horizon > 0.0 { b as f64 / horizon * 3600.0 } else { 0.0 };
    Ok(SimulationResult {
        goodput: per_hour(bytes),
        offered: per_hour(offered),
        success_probability: p,
        confidence_halfwidth: halfwidth,
        drops: drops.len(),
    })
}

/// Runs `drops` independent drops in parallel and pools them.
pub fn simulate(
    scenario: &ScenarioConfig,
    setup: &RadioSetup,
    topology: Topology,
    drops: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if drops == 0 {
        return Err(config("at least one drop is required"));
    }
    if topology == Topology::IdTg && scenario.gateway_count.is_none() && scenario.gateway_density <= 0.0 {
        return Err(config("id-tg needs a positive gateway density"));
    }
    let results = (0..drops as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(seed, i);
            let sc = build_scenario(scenario, rng.random())?;
            run_drop(&sc, setup, topology, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&results)
}

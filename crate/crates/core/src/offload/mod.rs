//! LEO offloading: how much of each SF population should bypass its
//! terrestrial gateway, and how offloaded devices mix SFs on the satellite.

mod inner;

pub use inner::{inner_objective, lambert_w0, solve_inner_alpha, InnerSolution};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{received_power, LinkKind};
use crate::error::{config, Error};
use crate::model::{build_scenario, Platform, PlatformKind, Scenario, ScenarioConfig};
use crate::phy::{detect, lora_airtimes, lowest_feasible_sf, sensitivity, SpreadingFactor, TxMode};
use crate::sim::{drop_rng, RadioSetup};
use crate::Result;

pub const SWEEP_TOLERANCE: f64 = 1e-6;
pub const MAX_SWEEPS: usize = 200;
const GOLDEN_TOLERANCE: f64 = 1e-9;

/// `exp(-(1 - eta) T lambda N)`
pub fn p_success_tg(eta: f64, toa_s: f64, rate: f64, count: f64) -> f64 {
    (-(1.0 - eta) * toa_s * rate * count).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffloadProblem {
    /// Devices per SF (index 0 is SF7) served by one gateway.
    pub device_counts: [f64; 6],
    pub arrival_rate: f64,
    pub toa: [f64; 6],
    pub sf_min: SpreadingFactor,
    /// Per-SF share of devices the gateway can decode at all.
    pub tg_gate: [f64; 6],
    /// Per-SF factor on the satellite success probability (radio eligibility).
    pub leo_gate: [f64; 6],
    /// Devices already offloaded from elsewhere.
    pub background_offload: f64,
}

impl OffloadProblem {
    pub fn new(device_counts: [f64; 6], arrival_rate: f64, toa: [f64; 6], sf_min: SpreadingFactor) -> Self {
        OffloadProblem { device_counts, arrival_rate, toa, sf_min, tg_gate: [1.0; 6], leo_gate: [1.0; 6], background_offload: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.device_counts.iter().any(|n| !(*n >= 0.0)) {
            return Err(config("device counts must be non-negative"));
        }
        if self.toa.iter().any(|t| !(*t > 0.0)) {
            return Err(config("airtimes must be positive"));
        }
        if self.tg_gate.iter().chain(&self.leo_gate).any(|g| !(0.0..=1.0).contains(g)) {
            return Err(config("link gates must lie in [0, 1]"));
        }
        if !(self.arrival_rate >= 0.0) || !(self.background_offload >= 0.0) {
            return Err(config("rate and background load must be non-negative"));
        }
        Ok(())
    }

    fn leo_toa(&self) -> &[f64] {
        &self.toa[self.sf_min.index()..]
    }

    fn p_leo(&self, offloaded: f64) -> f64 {
        solve_inner_alpha(offloaded, self.arrival_rate, self.leo_toa()).p_success
    }

    fn offloaded(&self, eta: &[f64; 6]) -> f64 {
        self.background_offload + eta.iter().zip(&self.device_counts).map(|(e, n)| e * n).sum::<f64>()
    }

    /// Success probability of SF `k` devices when they offload a fraction `eta`
    /// and the rest of the satellite load is `others`.
    pub fn p_success_sf(&self, k: usize, eta: f64, others: f64) -> f64 {
        let n = self.device_counts[k];
        let tg = p_success_tg(eta, self.toa[k], self.arrival_rate, n);
        (1.0 - eta) * self.tg_gate[k] * tg + eta * self.leo_gate[k] * self.p_leo(others + eta * n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffloadSolution {
    pub eta: [f64; 6],
    /// Mixing over `sf_min..=12`.
    pub alpha: Vec<f64>,
    pub p_s_per_sf: [f64; 6],
    pub p_s_leo: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn golden_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the endpoints are always candidates
    [(0.0, f(0.0)), (1.0, f(1.0)), (mid, f(mid))]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
}

/// One Gauss-Seidel pass over the SFs of a problem; returns the largest change.
fn sweep(problem: &OffloadProblem, eta: &mut [f64; 6]) -> f64 {
    let mut change: f64 = 0.0;
    for k in 0..6 {
        let others = problem.offloaded(eta) - eta[k] * problem.device_counts[k];
        if problem.device_counts[k] == 0.0 {
            // linear in eta: an endpoint wins
            let best = if problem.p_success_sf(k, 1.0, others) > problem.p_success_sf(k, 0.0, others) { 1.0 } else { 0.0 };
            change = change.max((best - eta[k]).abs());
            eta[k] = best;
            continue;
        }
        let (best, _) = golden_max(|e| problem.p_success_sf(k, e, others));
        change = change.max((best - eta[k]).abs());
        eta[k] = best;
    }
    change
}

fn finish(problem: &OffloadProblem, eta: [f64; 6], iterations: usize, converged: bool) -> OffloadSolution {
    let total = problem.offloaded(&eta);
    let inner = solve_inner_alpha(total, problem.arrival_rate, problem.leo_toa());
    let mut p = [0.0; 6];
    for k in 0..6 {
        p[k] = problem.p_success_sf(k, eta[k], total - eta[k] * problem.device_counts[k]);
    }
    OffloadSolution { eta, alpha: inner.alpha, p_s_per_sf: p, p_s_leo: inner.p_success, iterations, converged }
}

pub fn solve_offload(problem: &OffloadProblem) -> Result<OffloadSolution> {
    problem.validate()?;
    let mut eta = [0.5; 6];
    for it in 1..=MAX_SWEEPS {
        if sweep(problem, &mut eta) < SWEEP_TOLERANCE {
            return Ok(finish(problem, eta, it, true));
        }
    }
    Ok(finish(problem, eta, MAX_SWEEPS, false))
}

/// Gateway cells sharing one satellite: each cell's background is the load
/// offloaded by every other cell plus `extra_offload`.
pub fn solve_offload_cells(cells: &[OffloadProblem], extra_offload: f64) -> Result<Vec<OffloadSolution>> {
    for c in cells {
        c.validate()?;
    }
    let mut etas = vec![[0.5; 6]; cells.len()];
    let contribution = |c: &OffloadProblem, e: &[f64; 6]| e.iter().zip(&c.device_counts).map(|(a, n)| a * n).sum::<f64>();
    let mut total: f64 = cells.iter().zip(&etas).map(|(c, e)| contribution(c, e)).sum();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for (c, eta) in cells.iter().zip(etas.iter_mut()) {
            let own = contribution(c, eta);
            let local = OffloadProblem { background_offload: extra_offload + total - own, ..c.clone() };
            change = change.max(sweep(&local, eta));
            total += contribution(c, eta) - own;
        }
        if change < SWEEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(cells
        .iter()
        .zip(etas)
        .map(|(c, eta)| {
            let own = contribution(c, &eta);
            let local = OffloadProblem { background_offload: extra_offload + total - own, ..c.clone() };
            finish(&local, eta, sweeps, converged)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffloadMode {
    StandaloneTg,
    LeoOffload,
}

impl OffloadMode {
    pub fn name(self) -> &'static str {
        match self {
            OffloadMode::StandaloneTg => "standalone",
            OffloadMode::LeoOffload => "leo-offload",
        }
    }
}

impl fmt::Display for OffloadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OffloadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standalone" | "standalone-tg" => Ok(OffloadMode::StandaloneTg),
            "leo-offload" | "offload" | "leo" => Ok(OffloadMode::LeoOffload),
            other => Err(config(format!("unknown offload mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffloadParams {
    pub payload_bytes: u32,
    /// Gate offloading on the device-to-satellite budget at mean fading.
    pub radio_gate: bool,
}

impl Default for OffloadParams {
    fn default() -> Self {
        OffloadParams { payload_bytes: 50, radio_gate: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadEvaluation {
    pub devices: usize,
    /// Device-weighted mean success probability.
    pub p_success: f64,
    /// Devices with no feasible SF towards any gateway.
    pub uncovered: usize,
    /// Fraction of devices' traffic sent to the satellite.
    pub offloaded_share: f64,
    pub converged: bool,
}

/// Stream of the per-device clutter draws within a scenario's seed.
const CLUTTER_STREAM: u64 = 0x00ff_10ad;

pub fn evaluate_offload_scenario(
    scenario: &Scenario,
    setup: &RadioSetup,
    sf_min: SpreadingFactor,
    mode: OffloadMode,
    params: &OffloadParams,
) -> Result<OffloadEvaluation> {
    if !setup.profile.tech.is_lora() {
        return Err(config("offloading is modelled for LoRa only"));
    }
    if scenario.gateways.is_empty() {
        return Err(config("offload evaluation needs at least one terrestrial gateway"));
    }
    let profile = &setup.profile;
    let ch = &setup.channel;
    let toa = lora_airtimes(profile.bandwidth_hz, params.payload_bytes)?;
    let rate = scenario.arrival_rate;
    let leo = scenario.platform(PlatformKind::Leo).cloned().unwrap_or_else(|| Platform::new(PlatformKind::Leo));
    let tg = Platform::new(PlatformKind::Tg);
    let leo_sens = sensitivity(profile, TxMode::LoRa(sf_min))?;
    let leo_mean = ch.fading(LinkKind::GroundToLeo).mean();

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(CLUTTER_STREAM);
    let n_cells = scenario.gateways.len();
    let mut counts = vec![[0.0f64; 6]; n_cells];
    let mut decodable = vec![[0.0f64; 6]; n_cells];
    let mut eligible = vec![[0.0f64; 6]; n_cells];
    let mut uncovered = 0usize;
    for (d, near) in scenario.devices.iter().zip(scenario.nearest_gateways()) {
        let clutter = ch.clutter.mean_db + ch.clutter.sigma_db * rng.sample::<f64, _>(StandardNormal);
        let (g, dist) = near.expect("gateways present");
        let pl = ch.ground.path_loss(dist.max(1e-3))? + clutter;
        let rx = received_power(profile, &tg, pl, 1.0);
        // out of range devices still transmit, at the highest SF
        let (k, covered) = match lowest_feasible_sf(profile, rx) {
            Some(sf) => (sf.index(), true),
            None => (5, false),
        };
        counts[g][k] += 1.0;
        if covered {
            decodable[g][k] += 1.0;
        } else {
            uncovered += 1;
        }
        let can_offload = !params.radio_gate || {
            let s = ch.link_sample(profile, &leo, d.distance(leo.position), leo_mean)?;
            detect(s.received_power_dbm, leo_sens)
        };
        if can_offload {
            eligible[g][k] += 1.0;
        }
    }
    let devices = scenario.devices.len();
    let denom = devices.max(1) as f64;
    let share = |part: f64, whole: f64| if whole > 0.0 { part / whole } else { 1.0 };
    let cells: Vec<OffloadProblem> = (0..n_cells)
        .map(|g| {
            let mut p = OffloadProblem::new(counts[g], rate, toa, sf_min);
            for k in 0..6 {
                p.tg_gate[k] = share(decodable[g][k], counts[g][k]);
                p.leo_gate[k] = share(eligible[g][k], counts[g][k]);
            }
            p
        })
        .collect();

    let (sols, converged) = match mode {
        OffloadMode::StandaloneTg => {
            let eta = [0.0; 6];
            let sols: Vec<OffloadSolution> = cells.iter().map(|c| finish(c, eta, 0, true)).collect();
            (sols, true)
        }
        OffloadMode::LeoOffload => {
            let sols = solve_offload_cells(&cells, 0.0)?;
            let ok = sols.iter().all(|s| s.converged);
            (sols, ok)
        }
    };
    let (mut delivered, mut offloaded) = (0.0, 0.0);
    for (c, s) in cells.iter().zip(&sols) {
        for k in 0..6 {
            delivered += c.device_counts[k] * s.p_s_per_sf[k];
            offloaded += c.device_counts[k] * s.eta[k];
        }
    }
    Ok(OffloadEvaluation { devices, p_success: delivered / denom, uncovered, offloaded_share: offloaded / denom, converged })
}

/// Pooled success probability over `drops` independent scenarios.
pub fn offload_point(
    scenario: &ScenarioConfig,
    setup: &RadioSetup,
    sf_min: SpreadingFactor,
    mode: OffloadMode,
    params: &OffloadParams,
    drops: usize,
    seed: u64,
) -> Result<OffloadEvaluation> {
    if drops == 0 {
        return Err(config("at least one drop is required"));
    }
    let evals = (0..drops as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(seed, i);
            let sc = build_scenario(scenario, rng.random())?;
            if sc.gateways.is_empty() {
                return Ok(None);
            }
            evaluate_offload_scenario(&sc, setup, sf_min, mode, params).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let evals: Vec<OffloadEvaluation> = evals.into_iter().flatten().collect();
    if evals.is_empty() {
        return Err(config("no drop produced a terrestrial gateway"));
    }
    let devices: usize = evals.iter().map(|e| e.devices).sum();
    let w = |f: fn(&OffloadEvaluation) -> f64| evals.iter().map(|e| f(e) * e.devices as f64).sum::<f64>() / devices.max(1) as f64;
    Ok(OffloadEvaluation {
        devices,
        p_success: w(|e| e.p_success),
        uncovered: evals.iter().map(|e| e.uncovered).sum(),
        offloaded_share: w(|e| e.offloaded_share),
        converged: evals.iter().all(|e| e.converged),
    })
}

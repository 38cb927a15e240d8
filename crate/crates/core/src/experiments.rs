//! Canned sweeps behind the command line: each returns a flat table.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::coverage::{max_range, min_platforms, CoverMethod};
use crate::error::{config, Error};
use crate::model::{Platform, PlatformKind, ScenarioConfig, Technology};
use crate::offload::{offload_point, OffloadMode};
use crate::phy::SpreadingFactor;
use crate::sim::{simulate, SimulationResult, Topology};
use crate::Result;

/// Comma-separated output with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
    Table3,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5a, Preset::Fig5b, Preset::Table3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5a => "fig5a",
            Preset::Fig5b => "fig5b",
            Preset::Table3 => "table3",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| config(format!("unknown preset '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the preset's drop count.
    pub drops: Option<usize>,
    /// Largest device population of the goodput sweep.
    pub max_devices: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 1, drops: None, max_devices: 100_000 }
    }
}

pub fn run_preset(preset: Preset, cfg: &Config, opts: &RunOptions) -> Result<Table> {
    match preset {
        Preset::Table3 => table3(cfg),
        Preset::Fig4 => fig4(cfg, CoverMethod::default()),
        Preset::Fig3 => fig3(cfg, opts),
        Preset::Fig2 => fig2(cfg, opts),
        Preset::Fig5a => offload_sweep(cfg, OffloadSweep::GatewayDensity, &FIG5A_DENSITIES, opts),
        Preset::Fig5b => offload_sweep(cfg, OffloadSweep::DeviceDensity, &FIG5B_DENSITIES, opts),
    }
}

const RANGE_TECHS: [Technology; 2] = [Technology::LoRa, Technology::NbIot];

pub fn table3(cfg: &Config) -> Result<Table> {
    let mut t = Table::new(vec!["platform", "tech", "range_km", "elev_deg"]);
    for kind in PlatformKind::BASE {
        for tech in RANGE_TECHS {
            let r = max_range(&cfg.profile(tech), kind, &cfg.channel)?;
            let elev = r.min_elevation_deg.map(num).unwrap_or_default();
            t.push(vec![kind.name().into(), tech.name().into(), num(r.max_range_km), elev]);
        }
    }
    Ok(t)
}

/// Log-spaced AoI radii from 1 km to about 1259 km.
pub fn fig4_radii() -> Vec<f64> {
    (0..=31).map(|i| 10f64.powf(i as f64 / 10.0)).collect()
}

pub fn fig4(cfg: &Config, method: CoverMethod) -> Result<Table> {
    let mut t = Table::new(vec!["platform", "tech", "aoi_radius_km", "coverage_km", "platforms"]);
    for kind in PlatformKind::BASE {
        for tech in RANGE_TECHS {
            let cov = max_range(&cfg.profile(tech), kind, &cfg.channel)?.max_range_km;
            for aoi in fig4_radii() {
                let n = min_platforms(aoi, cov, method)?;
                t.push(vec![kind.name().into(), tech.name().into(), num(aoi), num(cov), n.to_string()]);
            }
        }
    }
    Ok(t)
}

pub const FIG3_RADII: [f64; 5] = [1.0, 5.0, 10.0, 15.0, 20.0];
pub const FIG3_TOPOLOGIES: [Topology; 3] = [Topology::IdTg, Topology::IdL, Topology::IdHL];

pub fn fig3_scenario(cfg: &Config, radius_km: f64) -> ScenarioConfig {
    ScenarioConfig {
        radius_km,
        gateway_density: 1.0,
        device_density: 10.0,
        device_count: None,
        gateway_count: None,
        ..cfg.scenario.clone()
    }
}

pub fn fig3_point(cfg: &Config, radius_km: f64, topology: Topology, drops: usize, seed: u64) -> Result<SimulationResult> {
    simulate(&fig3_scenario(cfg, radius_km), &cfg.radio(Technology::LoRa), topology, drops, seed)
}

fn sim_row(res: &SimulationResult) -> [String; 5] {
    [num(res.goodput), num(res.offered), num(res.success_probability), num(res.confidence_halfwidth), res.drops.to_string()]
}

const SIM_COLUMNS: [&str; 5] = ["goodput_bph", "offered_bph", "success_probability", "ci_halfwidth", "drops"];

pub fn fig3(cfg: &Config, opts: &RunOptions) -> Result<Table> {
    let mut cols = vec!["radius_km", "topology", "tech"];
    cols.extend(SIM_COLUMNS);
    let mut t = Table::new(cols);
    let drops = opts.drops.unwrap_or(cfg.sim.drops);
    for r in FIG3_RADII {
        for topo in FIG3_TOPOLOGIES {
            let res = fig3_point(cfg, r, topo, drops, opts.seed)?;
            let mut row = vec![num(r), topo.name().into(), Technology::LoRa.name().into()];
            row.extend(sim_row(&res));
            t.push(row);
        }
    }
    Ok(t)
}

pub const FIG2_RADIUS_KM: f64 = 0.35;
pub const FIG2_TOPOLOGIES: [Topology; 3] = [Topology::IdU, Topology::IdH, Topology::IdL];
pub const FIG2_DROPS: usize = 3;

/// Device populations of the goodput sweep, up to `max_devices`.
pub fn fig2_populations(max_devices: usize) -> Vec<usize> {
    [1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000]
        .into_iter()
        .filter(|n| *n <= max_devices)
        .collect()
}

pub fn fig2_point(cfg: &Config, tech: Technology, topology: Topology, devices: usize, drops: usize, seed: u64) -> Result<SimulationResult> {
    let scenario = ScenarioConfig {
        radius_km: FIG2_RADIUS_KM,
        device_count: Some(devices),
        gateway_density: 0.0,
        gateway_count: None,
        ..cfg.scenario.clone()
    };
    simulate(&scenario, &cfg.radio(tech), topology, drops, seed)
}

pub fn fig2(cfg: &Config, opts: &RunOptions) -> Result<Table> {
    let mut cols = vec!["devices", "topology", "tech"];
    cols.extend(SIM_COLUMNS);
    let mut t = Table::new(cols);
    let drops = opts.drops.unwrap_or(FIG2_DROPS);
    for n in fig2_populations(opts.max_devices) {
        for topo in FIG2_TOPOLOGIES {
            for tech in Technology::ALL {
                let res = fig2_point(cfg, tech, topo, n, drops, opts.seed)?;
                let mut row = vec![n.to_string(), topo.name().into(), tech.name().into()];
                row.extend(sim_row(&res));
                t.push(row);
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffloadSweep {
    GatewayDensity,
    DeviceDensity,
}

pub const FIG5A_DENSITIES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
pub const FIG5B_DENSITIES: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 100.0];
pub const FIG5_DROPS: usize = 16;
/// Minimum SFs on the satellite link for the offloading curves.
pub const FIG5_SF_MIN: [u8; 3] = [7, 9, 11];

/// Offloading study setup: 5 km disk, fixed payload, one report every 6 minutes.
pub fn fig5_scenario(cfg: &Config, gateway_density: f64, device_density: f64) -> ScenarioConfig {
    ScenarioConfig {
        radius_km: 5.0,
        gateway_density,
        device_density,
        device_count: None,
        gateway_count: None,
        arrival_rate: 1.0 / 360.0,
        ..cfg.scenario.clone()
    }
}

pub fn fig5_point(
    cfg: &Config,
    gateway_density: f64,
    device_density: f64,
    mode: OffloadMode,
    sf_min: SpreadingFactor,
    drops: usize,
    seed: u64,
) -> Result<f64> {
    let scenario = fig5_scenario(cfg, gateway_density, device_density);
    let eval = offload_point(&scenario, &cfg.radio(Technology::LoRa), sf_min, mode, &cfg.offload, drops, seed)?;
    Ok(eval.p_success)
}

/// One standalone curve plus one offloading curve per minimum SF.
pub fn offload_sweep(cfg: &Config, sweep: OffloadSweep, values: &[f64], opts: &RunOptions) -> Result<Table> {
    let curves: Vec<(OffloadMode, Option<u8>)> = std::iter::once((OffloadMode::StandaloneTg, None))
        .chain(FIG5_SF_MIN.iter().map(|k| (OffloadMode::LeoOffload, Some(*k))))
        .collect();
    offload_table(cfg, sweep, values, &curves, opts)
}

pub fn offload_table(
    cfg: &Config,
    sweep: OffloadSweep,
    values: &[f64],
    curves: &[(OffloadMode, Option<u8>)],
    opts: &RunOptions,
) -> Result<Table> {
    let mut t = Table::new(vec!["sweep_value", "mode", "sf_min", "p_success"]);
    let drops = opts.drops.unwrap_or(FIG5_DROPS);
    for &v in values {
        let (tg, id) = match sweep {
            OffloadSweep::GatewayDensity => (v, 50.0),
            OffloadSweep::DeviceDensity => (0.1, v),
        };
        for &(mode, sf_min) in curves {
            let sf = SpreadingFactor::new(sf_min.unwrap_or(SpreadingFactor::MIN))?;
            let p = fig5_point(cfg, tg, id, mode, sf, drops, opts.seed)?;
            let sf_col = match mode {
                OffloadMode::StandaloneTg => String::new(),
                OffloadMode::LeoOffload => sf.get().to_string(),
            };
            t.push(vec![num(v), mode.name().into(), sf_col, num(p)]);
        }
    }
    Ok(t)
}

/// Mean link budget of one technology towards each platform over a set of
/// ground distances.
pub fn channel_table(cfg: &Config, techs: &[Technology], kinds: &[PlatformKind], distances_km: &[f64]) -> Result<Table> {
    let mut t = Table::new(vec![
        "platform", "tech", "ground_km", "slant_km", "elev_deg", "path_loss_db", "rx_power_dbm", "snr_db",
    ]);
    for &tech in techs {
        let profile = cfg.profile(tech);
        for &kind in kinds {
            if kind == PlatformKind::HapRelayLeo {
                return Err(Error::Unsupported("budget table of relayed links".into()));
            }
            let platform = Platform::new(kind);
            let mean = cfg.channel.fading(crate::channel::LinkKind::uplink_to(kind)).mean();
            for &d in distances_km {
                let d = if kind == PlatformKind::Tg { d.max(cfg.channel.ground.ref_distance_m * 1e-3) } else { d };
                let s = cfg.channel.link_sample(&profile, &platform, d, mean)?;
                let elev = if kind == PlatformKind::Tg { String::new() } else { num(s.elevation_deg) };
                t.push(vec![
                    kind.name().into(),
                    tech.name().into(),
                    num(d),
                    num(s.distance_km),
                    elev,
                    num(s.path_loss_db),
                    num(s.received_power_dbm),
                    num(s.snr_db),
                ]);
            }
        }
    }
    Ok(t)
}

//! Command-line front end. Every subcommand prints one CSV table.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::coverage::{max_range, min_platforms, CoverMethod};
use crate::error::{config, Error};
use crate::experiments::{
    channel_table, offload_table, run_preset, OffloadSweep, Preset, RunOptions, Table, FIG5A_DENSITIES, FIG5B_DENSITIES,
    FIG5_SF_MIN,
};
use crate::model::{PlatformKind, Technology};
use crate::offload::OffloadMode;
use crate::sim::{simulate, Topology};
use crate::Result;

/// Directory that receives `<name>.csv` when no output path is given.
pub const OUTPUT_DIR_ENV: &str = "NTN_IOT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ntn-iot", version, about = "LPWAN uplinks over terrestrial and non-terrestrial networks")]
struct Cli {
    /// TOML configuration; missing sections use built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file, `-` for standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo goodput and success probability of one configuration.
    Simulate(SimulateArgs),
    /// Maximum range, edge elevation and platforms needed over an area.
    Coverage(CoverageArgs),
    /// Success probability with and without LEO offloading.
    Offload(OffloadArgs),
    /// Reproduce one of the canned studies.
    Preset(PresetArgs),
    /// Mean link budget against ground distance.
    ChannelTable(ChannelArgs),
}

fn parse_method(s: &str) -> std::result::Result<CoverMethod, String> {
    match s {
        "hexagonal" | "hex" => Ok(CoverMethod::Hexagonal),
        "linear" => Ok(CoverMethod::Linear),
        other => Err(format!("unknown cover method '{other}'")),
    }
}

fn parse_sweep(s: &str) -> std::result::Result<OffloadSweep, String> {
    match s {
        "tg-density" => Ok(OffloadSweep::GatewayDensity),
        "id-density" => Ok(OffloadSweep::DeviceDensity),
        other => Err(format!("unknown sweep '{other}'")),
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = "lora")]
    tech: Technology,
    #[arg(long, default_value = "id-u")]
    topology: Topology,
    /// Fixed device count; otherwise drawn from the density.
    #[arg(long)]
    devices: Option<usize>,
    #[arg(long)]
    device_density: Option<f64>,
    #[arg(long)]
    gateway_density: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    /// Reports per device per second.
    #[arg(long)]
    arrival_rate: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    drops: Option<usize>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[arg(long, value_delimiter = ',', default_value = "lora,nb-iot")]
    tech: Vec<Technology>,
    #[arg(long, value_delimiter = ',', default_value = "tg,uav,hap,leo")]
    platform: Vec<PlatformKind>,
    /// Area radius for the platform count, km.
    #[arg(long)]
    aoi_radius: Option<f64>,
    #[arg(long, value_parser = parse_method, default_value = "hexagonal")]
    method: CoverMethod,
}

#[derive(Debug, Args)]
struct OffloadArgs {
    /// fig5a or fig5b: the study's densities and all four curves.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, value_parser = parse_sweep, default_value = "tg-density")]
    sweep: OffloadSweep,
    /// Sweep values (gateways or devices per km²).
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "standalone,leo-offload")]
    mode: Vec<OffloadMode>,
    #[arg(long, value_delimiter = ',', default_value = "7,9,11")]
    sf_min: Vec<u8>,
    #[arg(long)]
    drops: Option<usize>,
}

#[derive(Debug, Args)]
struct PresetArgs {
    name: Preset,
    #[arg(long)]
    drops: Option<usize>,
    /// Largest population of the goodput sweep.
    #[arg(long, default_value_t = 100_000)]
    max_devices: usize,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    #[arg(long, value_delimiter = ',', default_value = "lora,nb-iot,sigfox")]
    tech: Vec<Technology>,
    #[arg(long, value_delimiter = ',', default_value = "tg,uav,hap,leo")]
    platform: Vec<PlatformKind>,
    /// Ground distances, km.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,5,10,50,100,500,1000")]
    distances: Vec<f64>,
}

fn simulate_cmd(cfg: &Config, a: &SimulateArgs, seed: u64) -> Result<Table> {
    let mut sc = cfg.scenario.clone();
    if let Some(n) = a.devices {
        sc.device_count = Some(n);
    }
    if let Some(d) = a.device_density {
        sc.device_density = d;
        sc.device_count = None;
    }
    if let Some(d) = a.gateway_density {
        sc.gateway_density = d;
    }
    if let Some(r) = a.radius {
        sc.radius_km = r;
    }
    if let Some(l) = a.arrival_rate {
        sc.arrival_rate = l;
    }
    if let Some(h) = a.horizon {
        sc.horizon_s = h;
    }
    sc.validate()?;
    let res = simulate(&sc, &cfg.radio(a.tech), a.topology, a.drops.unwrap_or(cfg.sim.drops), seed)?;
    let mut t = Table::new(vec![
        "topology", "tech", "radius_km", "goodput_bph", "offered_bph", "success_probability", "ci_halfwidth", "drops",
    ]);
    t.push(vec![
        a.topology.name().into(),
        a.tech.name().into(),
        format!("{:.6}", sc.radius_km),
        format!("{:.6}", res.goodput),
        format!("{:.6}", res.offered),
        format!("{:.6}", res.success_probability),
        format!("{:.6}", res.confidence_halfwidth),
        res.drops.to_string(),
    ]);
    Ok(t)
}

fn coverage_cmd(cfg: &Config, a: &CoverageArgs) -> Result<Table> {
    let mut t = Table::new(vec!["platform", "tech", "range_km", "elev_deg", "edge_margin_db", "aoi_radius_km", "platforms"]);
    for &kind in &a.platform {
        for &tech in &a.tech {
            let r = max_range(&cfg.profile(tech), kind, &cfg.channel)?;
            let (aoi, count) = match a.aoi_radius {
                Some(aoi) => (format!("{aoi:.6}"), min_platforms(aoi, r.max_range_km, a.method)?.to_string()),
                None => (String::new(), String::new()),
            };
            t.push(vec![
                kind.name().into(),
                tech.name().into(),
                format!("{:.6}", r.max_range_km),
                r.min_elevation_deg.map(|e| format!("{e:.6}")).unwrap_or_default(),
                format!("{:.6}", r.budget_margin_at_edge_db),
                aoi,
                count,
            ]);
        }
    }
    Ok(t)
}

fn offload_cmd(cfg: &Config, a: &OffloadArgs, seed: u64) -> Result<Table> {
    let opts = RunOptions { seed, drops: a.drops, ..RunOptions::default() };
    let (sweep, values, curves) = match a.preset {
        Some(Preset::Fig5a) => (OffloadSweep::GatewayDensity, FIG5A_DENSITIES.to_vec(), all_curves(&FIG5_SF_MIN)),
        Some(Preset::Fig5b) => (OffloadSweep::DeviceDensity, FIG5B_DENSITIES.to_vec(), all_curves(&FIG5_SF_MIN)),
        Some(other) => return Err(config(format!("preset {other} is not an offloading study"))),
        None => {
            let values = a.values.clone().unwrap_or_else(|| match a.sweep {
                OffloadSweep::GatewayDensity => FIG5A_DENSITIES.to_vec(),
                OffloadSweep::DeviceDensity => FIG5B_DENSITIES.to_vec(),
            });
            let mut curves = Vec::new();
            for m in &a.mode {
                match m {
                    OffloadMode::StandaloneTg => curves.push((*m, None)),
                    OffloadMode::LeoOffload => curves.extend(a.sf_min.iter().map(|k| (*m, Some(*k)))),
                }
            }
            (a.sweep, values, curves)
        }
    };
    offload_table(cfg, sweep, &values, &curves, &opts)
}

fn all_curves(sf_min: &[u8]) -> Vec<(OffloadMode, Option<u8>)> {
    std::iter::once((OffloadMode::StandaloneTg, None))
        .chain(sf_min.iter().map(|k| (OffloadMode::LeoOffload, Some(*k))))
        .collect()
}

fn default_name(cmd: &Command) -> String {
    match cmd {
        Command::Simulate(_) => "simulate".into(),
        Command::Coverage(_) => "coverage".into(),
        Command::Offload(a) => a.preset.map_or("offload".into(), |p| p.name().into()),
        Command::Preset(a) => a.name.name().into(),
        Command::ChannelTable(_) => "channel-table".into(),
    }
}

fn output_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.output {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.csv", default_name(&cli.command)))),
    }
}

fn execute(cli: &Cli) -> Result<Table> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(&cfg, a, cli.seed),
        Command::Coverage(a) => coverage_cmd(&cfg, a),
        Command::Offload(a) => offload_cmd(&cfg, a, cli.seed),
        Command::Preset(a) => {
            let opts = RunOptions { seed: cli.seed, drops: a.drops, max_devices: a.max_devices };
            run_preset(a.name, &cfg, &opts)
        }
        Command::ChannelTable(a) => channel_table(&cfg, &a.tech, &a.platform, &a.distances),
    }
}

fn write_table(table: &Table, path: Option<PathBuf>) -> io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            table.write_csv(&mut w)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write_csv(&mut w)?;
            w.flush()
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 on usage or configuration errors, 1 on anything else.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let table = match execute(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Config(_) | Error::SpreadingFactor(_) | Error::Repetitions(_) => 2,
                _ => 1,
            };
        }
    };
    match write_table(&table, output_path(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            1
        }
    }
}

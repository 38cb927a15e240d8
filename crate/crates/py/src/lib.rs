//! Python bindings for the ntn-iot simulator.

use std::str::FromStr;

use ntn_iot::config::Config as CoreConfig;
use ntn_iot::coverage::{self, CoverMethod};
use ntn_iot::experiments::{self, Preset, RunOptions};
use ntn_iot::model::{PlatformKind, Technology};
use ntn_iot::offload::{self, OffloadMode};
use ntn_iot::phy::{self, Repetitions, SpreadingFactor, TxMode};
use ntn_iot::sim::{self, Topology};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ntn_iot::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: FromStr<Err = ntn_iot::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Run configuration, built from TOML text.
#[pyclass(module = "ntn_iot", frozen, skip_from_py_object)]
#[derive(Clone, Default)]
struct Config {
    inner: CoreConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (toml = ""))]
    fn new(toml: &str) -> PyResult<Self> {
        Ok(Config { inner: CoreConfig::from_toml(toml).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Config { inner: CoreConfig::load(path.as_ref()).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Config(radius_km={}, drops={})", self.inner.scenario.radius_km, self.inner.sim.drops)
    }
}

fn config_or_default(config: Option<&Config>) -> CoreConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

#[pyclass(module = "ntn_iot", frozen, get_all)]
struct SimulationResult {
    goodput: f64,
    offered: f64,
    success_probability: f64,
    confidence_halfwidth: f64,
    drops: usize,
}

#[pymethods]
impl SimulationResult {
    fn __repr__(&self) -> String {
        format!(
            "SimulationResult(goodput={:.3}, offered={:.3}, success_probability={:.6}, drops={})",
            self.goodput, self.offered, self.success_probability, self.drops
        )
    }
}

#[pyfunction]
#[pyo3(signature = (sf, payload, bandwidth_hz = 125e3))]
fn lora_toa(sf: u8, payload: u32, bandwidth_hz: f64) -> PyResult<f64> {
    phy::lora_toa(sf, bandwidth_hz, payload).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sf, bandwidth_hz = 125e3))]
fn lora_data_rate(sf: u8, bandwidth_hz: f64) -> PyResult<f64> {
    phy::lora_data_rate(sf, bandwidth_hz).map_err(err)
}

/// Sensitivity in dBm. LoRa needs `sf`, NB-IoT needs `repetitions`.
#[pyfunction]
#[pyo3(signature = (tech, sf = None, repetitions = None, config = None))]
fn sensitivity(tech: &str, sf: Option<u8>, repetitions: Option<u32>, config: Option<&Config>) -> PyResult<f64> {
    let tech: Technology = parse(tech)?;
    let mode = match (tech, sf, repetitions) {
        (Technology::LoRa | Technology::LoRaPlus, Some(k), None) => TxMode::LoRa(SpreadingFactor::new(k).map_err(err)?),
        (Technology::NbIot, None, Some(r)) => TxMode::NbIot(Repetitions::new(r).map_err(err)?),
        (Technology::SigFox, None, None) => TxMode::SigFox,
        _ => return Err(PyValueError::new_err("give sf for LoRa, repetitions for NB-IoT and neither for SigFox")),
    };
    phy::sensitivity(&config_or_default(config).profile(tech), mode).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (tech, platform, config = None))]
fn max_range<'py>(py: Python<'py>, tech: &str, platform: &str, config: Option<&Config>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_or_default(config);
    let tech: Technology = parse(tech)?;
    let kind: PlatformKind = parse(platform)?;
    let r = coverage::max_range(&cfg.profile(tech), kind, &cfg.channel).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("max_range_km", r.max_range_km)?;
    d.set_item("min_elevation_deg", r.min_elevation_deg)?;
    d.set_item("edge_margin_db", r.budget_margin_at_edge_db)?;
    d.set_item("diagnostic", r.diagnostic)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (aoi_radius_km, coverage_radius_km, method = "hexagonal"))]
fn min_platforms(aoi_radius_km: f64, coverage_radius_km: f64, method: &str) -> PyResult<usize> {
    let method = match method {
        "hexagonal" => CoverMethod::Hexagonal,
        "linear" => CoverMethod::Linear,
        other => return Err(PyValueError::new_err(format!("unknown cover method '{other}'"))),
    };
    coverage::min_platforms(aoi_radius_km, coverage_radius_km, method).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (tech = "lora", topology = "id-u", devices = None, radius_km = None, drops = 4, seed = 1, config = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    tech: &str,
    topology: &str,
    devices: Option<usize>,
    radius_km: Option<f64>,
    drops: usize,
    seed: u64,
    config: Option<&Config>,
) -> PyResult<SimulationResult> {
    let cfg = config_or_default(config);
    let tech: Technology = parse(tech)?;
    let topology: Topology = parse(topology)?;
    let mut sc = cfg.scenario.clone();
    if devices.is_some() {
        sc.device_count = devices;
    }
    if let Some(r) = radius_km {
        sc.radius_km = r;
    }
    sc.validate().map_err(err)?;
    let setup = cfg.radio(tech);
    let r = py.detach(|| sim::simulate(&sc, &setup, topology, drops, seed)).map_err(err)?;
    Ok(SimulationResult {
        goodput: r.goodput,
        offered: r.offered,
        success_probability: r.success_probability,
        confidence_halfwidth: r.confidence_halfwidth,
        drops: r.drops,
    })
}

/// SF mixing for offloaded traffic; returns `(alpha, success_probability)`.
#[pyfunction]
fn solve_inner_alpha(offloaded: f64, rate: f64, toa_by_sf: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    if toa_by_sf.is_empty() {
        return Err(PyValueError::new_err("at least one airtime is required"));
    }
    let s = offload::solve_inner_alpha(offloaded, rate, &toa_by_sf);
    Ok((s.alpha, s.p_success))
}

/// Network-wide LoRa success probability for one offloading scenario.
#[pyfunction]
#[pyo3(signature = (gateway_density, device_density, mode = "leo-offload", sf_min = 7, drops = 16, seed = 1, config = None))]
#[allow(clippy::too_many_arguments)]
fn offload_point(
    py: Python<'_>,
    gateway_density: f64,
    device_density: f64,
    mode: &str,
    sf_min: u8,
    drops: usize,
    seed: u64,
    config: Option<&Config>,
) -> PyResult<f64> {
    let cfg = config_or_default(config);
    let mode: OffloadMode = parse(mode)?;
    let sf_min = SpreadingFactor::new(sf_min).map_err(err)?;
    py.detach(|| experiments::fig5_point(&cfg, gateway_density, device_density, mode, sf_min, drops, seed)).map_err(err)
}

/// Runs a named preset; returns `(columns, rows)` with rows as strings.
#[pyfunction]
#[pyo3(signature = (name, drops = None, seed = 1, max_devices = 100_000, config = None))]
fn run_preset(
    py: Python<'_>,
    name: &str,
    drops: Option<usize>,
    seed: u64,
    max_devices: usize,
    config: Option<&Config>,
) -> PyResult<(Vec<String>, Vec<Vec<String>>)> {
    let cfg = config_or_default(config);
    let preset: Preset = parse(name)?;
    let opts = RunOptions { seed, drops, max_devices };
    let table = py.detach(|| experiments::run_preset(preset, &cfg, &opts)).map_err(err)?;
    Ok((table.columns.iter().map(|c| c.to_string()).collect(), table.rows))
}

#[pymodule]
#[pyo3(name = "ntn_iot")]
fn ntn_iot_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<SimulationResult>()?;
    m.add_function(wrap_pyfunction!(lora_toa, m)?)?;
    m.add_function(wrap_pyfunction!(lora_data_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(max_range, m)?)?;
    m.add_function(wrap_pyfunction!(min_platforms, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_inner_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(offload_point, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    Ok(())
}

//! One Monte Carlo drop: traffic over a horizon, resolved per receiver.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::traffic::{sample_arrivals, PayloadModel};
use crate::channel::{noise_floor_dbm, received_power, ChannelParams, Fading, LinkKind};
use crate::error::{config, Error};
use crate::model::{PlatformKind, Scenario, Technology, TechnologyProfile};
use crate::phy::{
    assign_sf, lora_airtimes, lora_toa, lowest_feasible_sf, nbiot_min_repetitions, resolve_collisions, ChannelTag,
    DetectionOutcome, MacParams, Repetitions, SfPolicy, SpreadingFactor, TransmissionEvent,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    IdTg,
    IdU,
    IdH,
    IdL,
    IdHL,
}

impl Topology {
    pub fn platform(self) -> Option<PlatformKind> {
        match self {
            Topology::IdTg => None,
            Topology::IdU => Some(PlatformKind::Uav),
            Topology::IdH => Some(PlatformKind::Hap),
            Topology::IdL => Some(PlatformKind::Leo),
            Topology::IdHL => Some(PlatformKind::HapRelayLeo),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::IdTg => "id-tg",
            Topology::IdU => "id-u",
            Topology::IdH => "id-h",
            Topology::IdL => "id-l",
            Topology::IdHL => "id-h-l",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "id-tg" | "tg" => Ok(Topology::IdTg),
            "id-u" | "uav" => Ok(Topology::IdU),
            "id-h" | "hap" => Ok(Topology::IdH),
            "id-l" | "leo" => Ok(Topology::IdL),
            "id-h-l" | "hap-leo" => Ok(Topology::IdHL),
            other => Err(config(format!("unknown topology '{other}'"))),
        }
    }
}

/// Everything a drop needs besides the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioSetup {
    pub profile: TechnologyProfile,
    pub channel: ChannelParams,
    pub mac: MacParams,
    pub payload: PayloadModel,
}

impl RadioSetup {
    pub fn new(tech: Technology) -> Self {
        RadioSetup {
            profile: crate::model::default_profile(tech),
            channel: ChannelParams::default(),
            mac: MacParams::default(),
            payload: PayloadModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DropResult {
    pub attempted: u64,
    pub delivered: u64,
    pub attempted_bytes: u64,
    pub delivered_bytes: u64,
    pub horizon_s: f64,
}

/// Static view of one device's uplink.
struct DeviceLink {
    receiver: Option<usize>,
    /// Power with unit fading.
    mean_rx_dbm: f64,
    fading: Fading,
    /// Upper bound from a relay hop, expressed at the first receiver.
    relay_cap_dbm: Option<f64>,
}

fn device_links<R: Rng + ?Sized>(
    scenario: &Scenario,
    setup: &RadioSetup,
    topology: Topology,
    rng: &mut R,
) -> Result<Vec<DeviceLink>> {
    let profile = &setup.profile;
    let ch = &setup.channel;
    let Some(kind) = topology.platform() else {
        let nearest = scenario.nearest_gateways();
        let tg = crate::model::Platform::new(PlatformKind::Tg);
        return nearest
            .into_iter()
            .map(|n| {
                let clutter = ch.clutter.mean_db + ch.clutter.sigma_db * rng.sample::<f64, _>(StandardNormal);
                match n {
                    None => Ok(DeviceLink {
                        receiver: None,
                        mean_rx_dbm: f64::NEG_INFINITY,
                        fading: Fading::Unit,
                        relay_cap_dbm: None,
                    }),
                    Some((g, d)) => {
                        let pl = ch.ground.path_loss(d.max(1e-3))? + clutter;
                        Ok(DeviceLink {
                            receiver: Some(g),
                            mean_rx_dbm: received_power(profile, &tg, pl, 1.0),
                            fading: Fading::Unit,
                            relay_cap_dbm: None,
                        })
                    }
                }
            })
            .collect();
    };
    let platform = scenario
        .platform(kind)
        .ok_or_else(|| config(format!("topology {topology} needs a {kind} platform in the scenario")))?;
    let link = LinkKind::uplink_to(kind);
    let relay_cap = match &platform.relay {
        Some(relay) => {
            let hl = ch.relay_leg_snr(relay, platform.altitude_km)?;
            Some(hl + noise_floor_dbm(profile.bandwidth_hz, profile.noise_figure_db))
        }
        None => None,
    };
    scenario
        .devices
        .iter()
        .map(|d| {
            let ground = d.distance(platform.position);
            let elev = ch.geometry(ground, platform.altitude_km).elevation_deg;
            let los = rng.random::<f64>() < ch.los.los_probability(elev);
            let (_, pl) = ch.path_loss(link, ground, platform.altitude_km, profile.carrier_hz, los)?;
            Ok(DeviceLink {
                receiver: Some(0),
                mean_rx_dbm: received_power(profile, platform, pl, 1.0),
                fading: ch.fading(link),
                relay_cap_dbm: relay_cap,
            })
        })
        .collect()
}

enum DeviceMode {
    LoRa(SpreadingFactor),
    LoRaPlus(SfPolicy),
    NbIot(Repetitions),
    SigFox,
}

fn planning_power(link: &DeviceLink, mac: &MacParams) -> f64 {
    let margin = if link.fading.is_random() { mac.assignment_margin_db } else { 0.0 };
    let p = link.mean_rx_dbm - margin;
    link.relay_cap_dbm.map_or(p, |cap| p.min(cap - margin))
}

fn device_mode(link: &DeviceLink, setup: &RadioSetup, airtimes: &[f64; 6]) -> DeviceMode {
    let p = planning_power(link, &setup.mac);
    let sf12 = SpreadingFactor::new(SpreadingFactor::MAX).expect("valid");
    match setup.profile.tech {
        Technology::LoRa => DeviceMode::LoRa(lowest_feasible_sf(&setup.profile, p).unwrap_or(sf12)),
        Technology::LoRaPlus => {
            DeviceMode::LoRaPlus(SfPolicy::ScrambledPlus { scramble: setup.mac.lora_plus_scramble, airtimes: *airtimes })
        }
        Technology::NbIot => DeviceMode::NbIot(
            nbiot_min_repetitions(&setup.profile, p)
                .unwrap_or_else(|| Repetitions::new(Repetitions::MAX).expect("valid")),
        ),
        Technology::SigFox => DeviceMode::SigFox,
    }
}

pub fn run_drop<R: Rng + ?Sized>(
    scenario: &Scenario,
    setup: &RadioSetup,
    topology: Topology,
    rng: &mut R,
) -> Result<DropResult> {
    setup.profile.validate()?;
    setup.mac.validate()?;
    let profile = &setup.profile;
    let mac = &setup.mac;
    let links = device_links(scenario, setup, topology, rng)?;
    let airtimes = lora_airtimes(profile.bandwidth_hz, profile.max_payload)?;
    let n_receivers = match topology {
        Topology::IdTg => scenario.gateways.len(),
        _ => 1,
    };
    let sigfox_channels = mac.sigfox_channel_count(profile);
    let nb_resources = mac.nbiot_resources(profile);
    let nb_slot = mac.nbiot_slot_s(profile);
    let sf12 = SpreadingFactor::new(SpreadingFactor::MAX).expect("valid");

    let mut per_receiver: Vec<Vec<TransmissionEvent>> = vec![Vec::new(); n_receivers];
    let mut result = DropResult { horizon_s: scenario.horizon_s, ..Default::default() };

    for (device, link) in links.iter().enumerate() {
        let mode = device_mode(link, setup, &airtimes);
        for start in sample_arrivals(scenario.arrival_rate, scenario.horizon_s, rng) {
            let payload = setup.payload.sample(rng, profile.max_payload);
            result.attempted += 1;
            result.attempted_bytes += payload as u64;
            let Some(rx) = link.receiver else { continue };
            let (tag, duration) = match &mode {
                DeviceMode::LoRa(sf) => {
                    let channel = rng.random_range(0..mac.lora_channels);
                    (ChannelTag::LoRa { sf: *sf, channel }, lora_toa(sf.get(), profile.bandwidth_hz, payload)?)
                }
                DeviceMode::LoRaPlus(policy) => {
                    let p = planning_power(link, mac);
                    let sf = assign_sf(profile, p, policy, rng).unwrap_or(sf12);
                    let channel = rng.random_range(0..mac.lora_channels);
                    (ChannelTag::LoRa { sf, channel }, lora_toa(sf.get(), profile.bandwidth_hz, payload)?)
                }
                DeviceMode::NbIot(r) => {
                    let resource = rng.random_range(0..nb_resources);
                    let first_slot = (start / nb_slot).ceil() as u64;
                    let tag = ChannelTag::NbIot { resource, first_slot, repetitions: *r };
                    (tag, r.get() as f64 * nb_slot)
                }
                DeviceMode::SigFox => {
                    let tau = mac.sigfox_replica_s(payload);
                    let channels = [
                        rng.random_range(0..sigfox_channels),
                        rng.random_range(0..sigfox_channels),
                        rng.random_range(0..sigfox_channels),
                    ];
                    let tag = ChannelTag::SigFox { channels, offsets_s: [0.0, tau, 2.0 * tau], replica_s: tau };
                    (tag, 3.0 * tau)
                }
            };
            let fade = link.fading.sample(rng);
            let mut p = link.mean_rx_dbm + if fade > 0.0 { 10.0 * fade.log10() } else { f64::NEG_INFINITY };
            if let Some(cap) = link.relay_cap_dbm {
                p = p.min(cap);
            }
            per_receiver[rx].push(TransmissionEvent {
                device,
                start_s: start,
                duration_s: duration,
                payload,
                tag,
                rx_power_dbm: p,
            });
        }
    }

    for events in &per_receiver {
        let outcomes = resolve_collisions(events, profile, mac);
        for (e, o) in events.iter().zip(outcomes) {
            if o == DetectionOutcome::Success {
                result.delivered += 1;
                result.delivered_bytes += e.payload as u64;
            }
        }
    }
    Ok(result)
}

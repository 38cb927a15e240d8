//! Interference resolution at one receiver.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{detect, sensitivity, Repetitions, Scramble, SpreadingFactor, TxMode};
use crate::error::config;
use crate::model::{Technology, TechnologyProfile};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaptureWeighting {
    /// Interferers count in proportion to their time overlap.
    Energy,
    /// Any overlap counts with full power.
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub capture_margin_db: f64,
    pub capture_weighting: CaptureWeighting,
    /// Parallel LoRa uplink channels at a gateway.
    pub lora_channels: u16,
    pub lora_plus_scramble: Scramble,
    /// Micro-channels seen by the SigFox receiver; `None` uses the profile's
    /// operating channel divided by the micro-channel width.
    pub sigfox_channels: Option<u32>,
    pub sigfox_overhead_bytes: u32,
    pub sigfox_bit_rate_bps: f64,
    pub nbiot_uplink_share: f64,
    pub nbiot_resource_hz: f64,
    pub nbiot_rate_bps: f64,
    /// Fade margin applied when choosing SF or repetitions on faded links.
    pub assignment_margin_db: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            capture_margin_db: 6.0,
            capture_weighting: CaptureWeighting::Energy,
            lora_channels: 8,
            lora_plus_scramble: Scramble::AirtimeBalanced,
            sigfox_channels: Some(10),
            sigfox_overhead_bytes: 14,
            sigfox_bit_rate_bps: 100.0,
            nbiot_uplink_share: 0.3,
            nbiot_resource_hz: 15e3,
            nbiot_rate_bps: 90e3,
            assignment_margin_db: 3.0,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        if self.lora_channels == 0 {
            return Err(config("lora_channels must be at least 1"));
        }
        if self.sigfox_channels == Some(0) {
            return Err(config("sigfox_channels must be at least 1"));
        }
        if !(self.sigfox_bit_rate_bps > 0.0) || !(self.nbiot_rate_bps > 0.0) {
            return Err(config("bit rates must be positive"));
        }
        if !(self.nbiot_uplink_share > 0.0 && self.nbiot_uplink_share <= 1.0) || !(self.nbiot_resource_hz > 0.0) {
            return Err(config("NB-IoT share must lie in (0, 1] and resource width must be positive"));
        }
        if !(self.assignment_margin_db >= 0.0) {
            return Err(config("assignment margin must be non-negative"));
        }
        Ok(())
    }

    pub fn sigfox_channel_count(&self, profile: &TechnologyProfile) -> u32 {
        self.sigfox_channels.or_else(|| profile.micro_channels()).unwrap_or(1).max(1)
    }

    /// Duration of one SigFox replica.
    pub fn sigfox_replica_s(&self, payload: u32) -> f64 {
        (payload + self.sigfox_overhead_bytes) as f64 * 8.0 / self.sigfox_bit_rate_bps
    }

    /// Uplink resources available to NB-IoT devices.
    pub fn nbiot_resources(&self, profile: &TechnologyProfile) -> u32 {
        ((self.nbiot_uplink_share * profile.bandwidth_hz / self.nbiot_resource_hz) + 1e-9).floor().max(1.0) as u32
    }

    /// One NB-IoT slot carries a maximum-size payload at the peak rate.
    pub fn nbiot_slot_s(&self, profile: &TechnologyProfile) -> f64 {
        8.0 * profile.max_payload as f64 / self.nbiot_rate_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelTag {
    LoRa { sf: SpreadingFactor, channel: u16 },
    /// Three replicas; replica `i` starts `offsets_s[i]` after the event start.
    SigFox { channels: [u32; 3], offsets_s: [f64; 3], replica_s: f64 },
    /// Occupies slots `first_slot .. first_slot + repetitions` on `resource`.
    NbIot { resource: u32, first_slot: u64, repetitions: Repetitions },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionEvent {
    pub device: usize,
    pub start_s: f64,
    pub duration_s: f64,
    pub payload: u32,
    pub tag: ChannelTag,
    /// Power at the receiver being resolved.
    pub rx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionOutcome {
    Success,
    BelowSensitivity,
    Collision,
}

fn mode_of(tag: &ChannelTag) -> TxMode {
    match *tag {
        ChannelTag::LoRa { sf, .. } => TxMode::LoRa(sf),
        ChannelTag::SigFox { .. } => TxMode::SigFox,
        ChannelTag::NbIot { repetitions, .. } => TxMode::NbIot(repetitions),
    }
}

/// Interval on a shared medium, tagged with its owning event.
#[derive(Clone, Copy)]
struct Span {
    start: f64,
    end: f64,
    owner: usize,
}

fn sort_spans(spans: &mut [Span], events: &[TransmissionEvent]) {
    spans.sort_by(|a, b| {
        a.start
            .total_cmp(&b.start)
            .then(a.end.total_cmp(&b.end))
            .then(events[a.owner].rx_power_dbm.total_cmp(&events[b.owner].rx_power_dbm))
            .then(events[a.owner].device.cmp(&events[b.owner].device))
    });
}

/// Calls `f(i, j, overlap)` once for every overlapping pair in a sorted group.
fn for_each_overlap(spans: &[Span], mut f: impl FnMut(&Span, &Span, f64)) {
    for (i, a) in spans.iter().enumerate() {
        for b in &spans[i + 1..] {
            if b.start >= a.end {
                break;
            }
            f(a, b, a.end.min(b.end) - b.start);
        }
    }
}

fn group_by<K: std::hash::Hash + Eq + Ord + Copy>(items: Vec<(K, Span)>) -> Vec<Vec<Span>> {
    let mut map: HashMap<K, Vec<Span>> = HashMap::new();
    for (k, s) in items {
        map.entry(k).or_default().push(s);
    }
    let mut keys: Vec<K> = map.keys().copied().collect();
    keys.sort();
    keys.into_iter().map(|k| map.remove(&k).unwrap_or_default()).collect()
}

/// Outcome of every event at one receiver, in input order.
pub fn resolve_collisions(
    events: &[TransmissionEvent],
    profile: &TechnologyProfile,
    mac: &MacParams,
) -> Vec<DetectionOutcome> {
    let collided = match profile.tech {
        Technology::LoRa | Technology::LoRaPlus => lora_collisions(events, mac),
        Technology::SigFox => sigfox_collisions(events),
        Technology::NbIot => slot_collisions(events),
    };
    events
        .iter()
        .zip(collided)
        .map(|(e, hit)| {
            let sens = sensitivity(profile, mode_of(&e.tag)).unwrap_or(f64::INFINITY);
            if !detect(e.rx_power_dbm, sens) {
                DetectionOutcome::BelowSensitivity
            } else if hit {
                DetectionOutcome::Collision
            } else {
                DetectionOutcome::Success
            }
        })
        .collect()
}

fn lin(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn lora_collisions(events: &[TransmissionEvent], mac: &MacParams) -> Vec<bool> {
    let keyed = events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e.tag {
            ChannelTag::LoRa { sf, channel } => {
                Some(((sf, channel), Span { start: e.start_s, end: e.start_s + e.duration_s, owner: i }))
            }
            _ => None,
        })
        .collect();
    let mut interference = vec![0.0f64; events.len()];
    let mut overlapped = vec![false; events.len()];
    for mut group in group_by(keyed) {
        sort_spans(&mut group, events);
        for_each_overlap(&group, |a, b, ov| {
            overlapped[a.owner] = true;
            overlapped[b.owner] = true;
            let (pa, pb) = (lin(events[a.owner].rx_power_dbm), lin(events[b.owner].rx_power_dbm));
            match mac.capture_weighting {
                CaptureWeighting::Energy => {
                    interference[a.owner] += pb * ov / (a.end - a.start);
                    interference[b.owner] += pa * ov / (b.end - b.start);
                }
                CaptureWeighting::Peak => {
                    interference[a.owner] += pb;
                    interference[b.owner] += pa;
                }
            }
        });
    }
    let margin = mac.capture_margin_db;
    events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            overlapped[i] && {
                let sir = e.rx_power_dbm - 10.0 * interference[i].log10();
                !(sir >= margin)
            }
        })
        .collect()
}

fn sigfox_collisions(events: &[TransmissionEvent]) -> Vec<bool> {
    let mut keyed = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if let ChannelTag::SigFox { channels, offsets_s, replica_s } = e.tag {
            for r in 0..3 {
                let start = e.start_s + offsets_s[r];
                // owner encodes (event, replica)
                keyed.push((channels[r], Span { start, end: start + replica_s, owner: i * 3 + r }));
            }
        }
    }
    let mut replica_hit = vec![false; events.len() * 3];
    for mut group in group_by(keyed) {
        group.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.owner.cmp(&b.owner)));
        for_each_overlap(&group, |a, b, _| {
            if a.owner / 3 != b.owner / 3 {
                replica_hit[a.owner] = true;
                replica_hit[b.owner] = true;
            }
        });
    }
    events
        .iter()
        .enumerate()
        .map(|(i, e)| match e.tag {
            ChannelTag::SigFox { .. } => (0..3).all(|r| replica_hit[i * 3 + r]),
            _ => false,
        })
        .collect()
}

fn slot_collisions(events: &[TransmissionEvent]) -> Vec<bool> {
    let keyed = events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e.tag {
            ChannelTag::NbIot { resource, first_slot, repetitions } => Some((
                resource,
                Span {
                    start: first_slot as f64,
                    end: (first_slot + repetitions.get() as u64) as f64,
                    owner: i,
                },
            )),
            _ => None,
        })
        .collect();
    let mut hit = vec![false; events.len()];
    for mut group in group_by(keyed) {
        sort_spans(&mut group, events);
        for_each_overlap(&group, |a, b, _| {
            hit[a.owner] = true;
            hit[b.owner] = true;
        });
    }
    hit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_profile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lora_event(device: usize, start: f64, dur: f64, sf: u8, ch: u16, p: f64) -> TransmissionEvent {
        TransmissionEvent {
            device,
            start_s: start,
            duration_s: dur,
            payload: 10,
            tag: ChannelTag::LoRa { sf: SpreadingFactor::new(sf).unwrap(), channel: ch },
            rx_power_dbm: p,
        }
    }

    fn lora_profile() -> TechnologyProfile {
        default_profile(Technology::LoRa)
    }

    #[test]
    fn single_event_succeeds() {
        let out = resolve_collisions(&[lora_event(0, 0.0, 0.1, 7, 0, -100.0)], &lora_profile(), &MacParams::default());
        assert_eq!(out, vec![DetectionOutcome::Success]);
    }

    #[test]
    fn equal_power_full_overlap_both_collide() {
        let ev = [lora_event(0, 0.0, 0.1, 7, 0, -100.0), lora_event(1, 0.0, 0.1, 7, 0, -100.0)];
        for w in [CaptureWeighting::Energy, CaptureWeighting::Peak] {
            let mac = MacParams { capture_weighting: w, ..Default::default() };
            assert_eq!(resolve_collisions(&ev, &lora_profile(), &mac), vec![DetectionOutcome::Collision; 2]);
        }
    }

    #[test]
    fn capture_of_strong_packet() {
        let ev = [lora_event(0, 0.0, 0.1, 7, 0, -90.0), lora_event(1, 0.05, 0.1, 7, 0, -100.0)];
        let out = resolve_collisions(&ev, &lora_profile(), &MacParams::default());
        assert_eq!(out, vec![DetectionOutcome::Success, DetectionOutcome::Collision]);
    }

    #[test]
    fn energy_weighting_scales_by_overlap() {
        // 10% overlap of an equal-power packet: SIR = 10 dB under energy weighting
        let ev = [lora_event(0, 0.0, 0.1, 7, 0, -100.0), lora_event(1, 0.09, 0.1, 7, 0, -100.0)];
        let energy = resolve_collisions(&ev, &lora_profile(), &MacParams::default());
        assert_eq!(energy, vec![DetectionOutcome::Success; 2]);
        let peak = MacParams { capture_weighting: CaptureWeighting::Peak, ..Default::default() };
        assert_eq!(resolve_collisions(&ev, &lora_profile(), &peak), vec![DetectionOutcome::Collision; 2]);
    }

    #[test]
    fn different_sf_or_channel_never_interfere() {
        let ev = [
            lora_event(0, 0.0, 0.1, 7, 0, -100.0),
            lora_event(1, 0.0, 0.1, 8, 0, -100.0),
            lora_event(2, 0.0, 0.1, 7, 1, -100.0),
        ];
        let out = resolve_collisions(&ev, &lora_profile(), &MacParams::default());
        assert_eq!(out, vec![DetectionOutcome::Success; 3]);
    }

    #[test]
    fn below_sensitivity_reported() {
        let out = resolve_collisions(&[lora_event(0, 0.0, 0.1, 7, 0, -128.0)], &lora_profile(), &MacParams::default());
        assert_eq!(out, vec![DetectionOutcome::BelowSensitivity]);
    }

    #[test]
    fn touching_packets_do_not_overlap() {
        let ev = [lora_event(0, 0.0, 0.1, 7, 0, -100.0), lora_event(1, 0.1, 0.1, 7, 0, -100.0)];
        let out = resolve_collisions(&ev, &lora_profile(), &MacParams::default());
        assert_eq!(out, vec![DetectionOutcome::Success; 2]);
    }

    fn nb_event(device: usize, res: u32, slot: u64, r: u32) -> TransmissionEvent {
        TransmissionEvent {
            device,
            start_s: slot as f64 * 1e-3,
            duration_s: r as f64 * 1e-3,
            payload: 5,
            tag: ChannelTag::NbIot { resource: res, first_slot: slot, repetitions: Repetitions::new(r).unwrap() },
            rx_power_dbm: -100.0,
        }
    }

    #[test]
    fn nbiot_slots() {
        let p = default_profile(Technology::NbIot);
        let mac = MacParams::default();
        let ev = [nb_event(0, 0, 10, 4), nb_event(1, 0, 13, 1), nb_event(2, 0, 14, 2), nb_event(3, 1, 10, 4)];
        let out = resolve_collisions(&ev, &p, &mac);
        use DetectionOutcome::*;
        assert_eq!(out, vec![Collision, Collision, Success, Success]);
        assert_eq!(mac.nbiot_resources(&p), 3);
        assert!((mac.nbiot_slot_s(&p) - 96.0 / 90e3).abs() < 1e-15);
    }

    fn sigfox_event(device: usize, start: f64, channels: [u32; 3], replica: f64) -> TransmissionEvent {
        TransmissionEvent {
            device,
            start_s: start,
            duration_s: 3.0 * replica,
            payload: 4,
            tag: ChannelTag::SigFox { channels, offsets_s: [0.0, replica, 2.0 * replica], replica_s: replica },
            rx_power_dbm: -120.0,
        }
    }

    #[test]
    fn sigfox_needs_all_replicas_hit() {
        let p = default_profile(Technology::SigFox);
        let mac = MacParams::default();
        use DetectionOutcome::*;
        // same start, two replicas share channels, third differs
        let ev = [sigfox_event(0, 0.0, [1, 2, 3], 1.0), sigfox_event(1, 0.0, [1, 2, 4], 1.0)];
        assert_eq!(resolve_collisions(&ev, &p, &mac), vec![Success, Success]);
        let ev = [sigfox_event(0, 0.0, [1, 2, 3], 1.0), sigfox_event(1, 0.0, [1, 2, 3], 1.0)];
        assert_eq!(resolve_collisions(&ev, &p, &mac), vec![Collision, Collision]);
        // replicas of one message never hit each other
        let ev = [sigfox_event(0, 0.0, [5, 5, 5], 1.0)];
        assert_eq!(resolve_collisions(&ev, &p, &mac), vec![Success]);
    }

    #[test]
    fn sigfox_two_message_probability_matches_combinatorics() {
        // Two messages with start offset u ~ U(0, 3 tau): replica i of A overlaps
        // replica j of B in time iff |u + (j - i) tau| < tau. Collision of A needs every
        // replica of A to share a channel with some time-overlapping replica of B.
        let p = default_profile(Technology::SigFox);
        let c = 2000u32;
        let mac = MacParams { sigfox_channels: Some(c), ..Default::default() };
        let tau = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 400_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let u = rng.random::<f64>() * 3.0 * tau;
            let ca = [rng.random_range(0..c), rng.random_range(0..c), rng.random_range(0..c)];
            let cb = [rng.random_range(0..c), rng.random_range(0..c), rng.random_range(0..c)];
            let ev = [sigfox_event(0, 0.0, ca, tau), sigfox_event(1, u, cb, tau)];
            if resolve_collisions(&ev, &p, &mac)[0] == DetectionOutcome::Collision {
                hits += 1;
            }
        }
        // Oracle: integrate over u; with distinct channels per replica the
        // per-replica hit probabilities are independent given u, each equal to
        // 1 - (1 - 1/C)^(number of B replicas overlapping it).
        let q = 1.0 / c as f64;
        let steps = 30_000;
        let mut p_coll = 0.0;
        for s in 0..steps {
            let u = (s as f64 + 0.5) / steps as f64 * 3.0 * tau;
            let mut prod = 1.0;
            for i in 0..3 {
                let n = (0..3).filter(|j| ((u + (*j as f64 - i as f64) * tau).abs()) < tau).count();
                prod *= 1.0 - (1.0 - q).powi(n as i32);
            }
            p_coll += prod / steps as f64;
        }
        let mc = hits as f64 / trials as f64;
        let sd = (p_coll * (1.0 - p_coll) / trials as f64).sqrt().max(1e-12);
        assert!((mc - p_coll).abs() <= 3.0 * sd + 1e-7, "mc {mc} oracle {p_coll}");
    }

    #[test]
    fn sigfox_probability_small_channel_count() {
        let p = default_profile(Technology::SigFox);
        let c = 4u32;
        let mac = MacParams { sigfox_channels: Some(c), ..Default::default() };
        let tau = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 200_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let u = rng.random::<f64>() * 3.0 * tau;
            let ca = [rng.random_range(0..c), rng.random_range(0..c), rng.random_range(0..c)];
            let cb = [rng.random_range(0..c), rng.random_range(0..c), rng.random_range(0..c)];
            let ev = [sigfox_event(0, 0.0, ca, tau), sigfox_event(1, u, cb, tau)];
            if resolve_collisions(&ev, &p, &mac)[0] == DetectionOutcome::Collision {
                hits += 1;
            }
        }
        // exact oracle by enumerating B's channel triple for each u-cell
        let q = c as usize;
        let steps = 600;
        let mut p_coll = 0.0;
        for s in 0..steps {
            let u = (s as f64 + 0.5) / steps as f64 * 3.0 * tau;
            let mut coll = 0usize;
            for a in 0..q.pow(3) {
                let ca = [a % q, a / q % q, a / q / q];
                for b in 0..q.pow(3) {
                    let cb = [b % q, b / q % q, b / q / q];
                    let all_hit = (0..3).all(|i| {
                        (0..3).any(|j| cb[j] == ca[i] && (u + (j as f64 - i as f64) * tau).abs() < tau)
                    });
                    coll += all_hit as usize;
                }
            }
            p_coll += coll as f64 / (q.pow(6) as f64) / steps as f64;
        }
        let mc = hits as f64 / trials as f64;
        let sd = (p_coll * (1.0 - p_coll) / trials as f64).sqrt();
        assert!((mc - p_coll).abs() <= 3.0 * sd + 2e-4, "mc {mc} oracle {p_coll}");
    }
}

//! Property checks shared by the property test target and the acceptance
//! runner. Each check returns a description of the first failure.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use ntn_iot::channel::{free_space_path_loss, ChannelParams, Fading, FadingParams, GroundModel, LinkKind};
use ntn_iot::coverage::{max_range, min_platforms, CoverMethod};
use ntn_iot::model::{build_scenario, default_profile, PlatformKind, ScenarioConfig, Technology, TechnologyProfile};
use ntn_iot::offload::{inner_objective, p_success_tg, solve_inner_alpha, solve_offload, OffloadProblem};
use ntn_iot::phy::{
    lora_airtimes, lora_data_rate, lora_toa, resolve_collisions, sensitivity, ChannelTag, DetectionOutcome, MacParams,
    Repetitions, SpreadingFactor, TransmissionEvent, TxMode,
};
use ntn_iot::sim::{aggregate, simulate, DropResult, RadioSetup, Topology};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

pub type Check = fn(u32) -> Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("tg success monotonicity", tg_success_monotone),
        ("airtime and rate monotonicity", airtime_monotone),
        ("sensitivity monotonicity", sensitivity_monotone),
        ("path loss monotonicity", path_loss_monotone),
        ("collision permutation invariance", collision_permutation_invariance),
        ("cross-sf independence", cross_sf_independence),
        ("interferer removal monotonicity", interferer_removal),
        ("fading moments", fading_moments),
        ("fading distributions", fading_distributions),
        ("aggregation order independence", aggregation_order_independence),
        ("seed determinism", seed_determinism),
        ("scenario containment", scenario_containment),
        ("coverage monotonicity and bounds", coverage_bounds),
        ("inner optimizer baseline", inner_beats_uniform),
        ("offload beats pure strategies", offload_beats_pure),
        ("profile serde round trip", profile_round_trip),
    ]
}

pub fn tg_success_monotone(cases: u32) -> Result<(), String> {
    let s = (0.0..0.99f64, 0.01..3.0f64, 1e-4..0.1f64, 1.0..2000.0f64, 1e-3..0.5f64);
    run(cases, s, |(eta, t, rate, n, bump)| {
        let p = p_success_tg(eta, t, rate, n);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(p_success_tg((eta + bump * (1.0 - eta)).min(1.0), t, rate, n) > p);
        prop_assert!(p_success_tg(eta, t * (1.0 + bump), rate, n) < p);
        prop_assert!(p_success_tg(eta, t, rate * (1.0 + bump), n) < p);
        prop_assert!(p_success_tg(eta, t, rate, n * (1.0 + bump)) < p);
        Ok(())
    })
}

pub fn airtime_monotone(cases: u32) -> Result<(), String> {
    run(cases, (7u8..12, 1u32..250), |(sf, l)| {
        prop_assert!(lora_toa(sf + 1, 125e3, l).unwrap() > lora_toa(sf, 125e3, l).unwrap());
        prop_assert!(lora_toa(sf, 125e3, l + 1).unwrap() >= lora_toa(sf, 125e3, l).unwrap());
        prop_assert!(lora_data_rate(sf + 1, 125e3).unwrap() < lora_data_rate(sf, 125e3).unwrap());
        Ok(())
    })
}

pub fn sensitivity_monotone(_cases: u32) -> Result<(), String> {
    let lora = default_profile(Technology::LoRa);
    let nb = default_profile(Technology::NbIot);
    let s: Vec<f64> = SpreadingFactor::all().map(|sf| sensitivity(&lora, TxMode::LoRa(sf)).unwrap()).collect();
    if !s.windows(2).all(|w| w[1] < w[0]) {
        return Err(format!("lora sensitivities not decreasing: {s:?}"));
    }
    let r: Vec<f64> = Repetitions::up_to(128).map(|r| sensitivity(&nb, TxMode::NbIot(r)).unwrap()).collect();
    if !r.windows(2).all(|w| w[1] < w[0]) {
        return Err(format!("nb-iot sensitivities not decreasing: {r:?}"));
    }
    Ok(())
}

pub fn path_loss_monotone(cases: u32) -> Result<(), String> {
    let ground = GroundModel::default();
    run(cases, (0.002..3000.0f64, 1e8..4e10f64, 1e-3..0.5f64), |(d, f, bump)| {
        let far = d * (1.0 + bump);
        prop_assert!(free_space_path_loss(far, f).unwrap() > free_space_path_loss(d, f).unwrap());
        prop_assert!(free_space_path_loss(d, f * (1.0 + bump)).unwrap() > free_space_path_loss(d, f).unwrap());
        prop_assert!(ground.path_loss(far).unwrap() > ground.path_loss(d).unwrap());
        Ok(())
    })
}

fn lora_event(device: usize, start: f64, sf: u8, channel: u16, power: f64) -> TransmissionEvent {
    TransmissionEvent {
        device,
        start_s: start,
        duration_s: lora_toa(sf, 125e3, 12).unwrap(),
        payload: 12,
        tag: ChannelTag::LoRa { sf: SpreadingFactor::new(sf).unwrap(), channel },
        rx_power_dbm: power,
    }
}

fn lora_events() -> impl Strategy<Value = Vec<TransmissionEvent>> {
    prop::collection::vec((0.0..5.0f64, 7u8..=12, 0u16..2, -145.0..-100.0f64), 1..40).prop_map(|v| {
        v.into_iter().enumerate().map(|(i, (t, sf, ch, p))| lora_event(i, t, sf, ch, p)).collect()
    })
}

fn sigfox_events() -> impl Strategy<Value = Vec<TransmissionEvent>> {
    prop::collection::vec((0.0..20.0f64, [0u32..4, 0u32..4, 0u32..4], -150.0..-120.0f64), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (t, channels, p))| TransmissionEvent {
                device: i,
                start_s: t,
                duration_s: 7.2,
                payload: 12,
                tag: ChannelTag::SigFox { channels, offsets_s: [0.0, 2.4, 4.8], replica_s: 2.4 },
                rx_power_dbm: p,
            })
            .collect()
    })
}

fn nbiot_events() -> impl Strategy<Value = Vec<TransmissionEvent>> {
    prop::collection::vec((0u64..30, 0u32..3, 0u32..4, -130.0..-100.0f64), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (slot, resource, log_r, p))| {
                let repetitions = Repetitions::new(1 << log_r).unwrap();
                TransmissionEvent {
                    device: i,
                    start_s: slot as f64 * 0.01,
                    duration_s: 0.01 * repetitions.get() as f64,
                    payload: 12,
                    tag: ChannelTag::NbIot { resource, first_slot: slot, repetitions },
                    rx_power_dbm: p,
                }
            })
            .collect()
    })
}

fn outcomes_by_device(events: &[TransmissionEvent], profile: &TechnologyProfile) -> Vec<(usize, DetectionOutcome)> {
    let mut v: Vec<(usize, DetectionOutcome)> = events
        .iter()
        .zip(resolve_collisions(events, profile, &MacParams::default()))
        .map(|(e, o)| (e.device, o))
        .collect();
    v.sort_by_key(|x| x.0);
    v
}

fn check_permutation(events: Vec<TransmissionEvent>, seed: u64, tech: Technology) -> Result<(), TestCaseError> {
    let profile = default_profile(tech);
    let before = outcomes_by_device(&events, &profile);
    let mut shuffled = events;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    prop_assert_eq!(before, outcomes_by_device(&shuffled, &profile));
    Ok(())
}

pub fn collision_permutation_invariance(cases: u32) -> Result<(), String> {
    run(cases, (lora_events(), any::<u64>()), |(e, s)| check_permutation(e, s, Technology::LoRa))?;
    run(cases, (sigfox_events(), any::<u64>()), |(e, s)| check_permutation(e, s, Technology::SigFox))?;
    run(cases, (nbiot_events(), any::<u64>()), |(e, s)| check_permutation(e, s, Technology::NbIot))
}

pub fn cross_sf_independence(cases: u32) -> Result<(), String> {
    let profile = default_profile(Technology::LoRa);
    run(cases, (lora_events(), prop::collection::vec((0.0..5.0f64, -140.0..-90.0f64), 1..20)), |(events, extra)| {
        // keep SF7..11 in the base set and add SF12 traffic on top
        let base: Vec<TransmissionEvent> = events
            .into_iter()
            .filter(|e| !matches!(e.tag, ChannelTag::LoRa { sf, .. } if sf.get() == 12))
            .collect();
        let n = base.len();
        let mut more = base.clone();
        more.extend(extra.iter().enumerate().map(|(i, (t, p))| lora_event(1000 + i, *t, 12, 0, *p)));
        let a = resolve_collisions(&base, &profile, &MacParams::default());
        let b = resolve_collisions(&more, &profile, &MacParams::default());
        prop_assert_eq!(&a[..], &b[..n]);
        Ok(())
    })
}

fn check_removal(events: Vec<TransmissionEvent>, drop: usize, tech: Technology) -> Result<(), TestCaseError> {
    let profile = default_profile(tech);
    let mac = MacParams::default();
    let full = resolve_collisions(&events, &profile, &mac);
    let k = drop % events.len();
    let mut fewer = events.clone();
    fewer.remove(k);
    let reduced = resolve_collisions(&fewer, &profile, &mac);
    for (i, o) in full.iter().enumerate().filter(|(i, _)| *i != k) {
        let j = if i > k { i - 1 } else { i };
        if *o == DetectionOutcome::Success {
            prop_assert_eq!(reduced[j], DetectionOutcome::Success);
        }
    }
    Ok(())
}

pub fn interferer_removal(cases: u32) -> Result<(), String> {
    run(cases, (lora_events(), any::<usize>()), |(e, k)| check_removal(e, k, Technology::LoRa))?;
    run(cases, (sigfox_events(), any::<usize>()), |(e, k)| check_removal(e, k, Technology::SigFox))?;
    run(cases, (nbiot_events(), any::<usize>()), |(e, k)| check_removal(e, k, Technology::NbIot))
}

pub fn fading_moments(_cases: u32) -> Result<(), String> {
    let params = FadingParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 200_000;
    for fading in [
        Fading::for_link(LinkKind::GroundToUav, &params),
        Fading::for_link(LinkKind::GroundToLeo, &params),
        Fading::Nakagami { m: 1.0 },
        Fading::Nakagami { m: 4.5 },
    ] {
        let xs: Vec<f64> = (0..n).map(|_| fading.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // five standard errors on the mean, 5% on the variance
        let se = (fading.variance() / n as f64).sqrt();
        if (mean - fading.mean()).abs() > 5.0 * se || (var / fading.variance() - 1.0).abs() > 0.05 {
            return Err(format!("{fading:?}: mean {mean} (want {}), var {var} (want {})", fading.mean(), fading.variance()));
        }
        if xs.iter().any(|x| !(*x >= 0.0)) {
            return Err(format!("{fading:?}: negative power"));
        }
    }
    Ok(())
}

pub fn aggregation_order_independence(cases: u32) -> Result<(), String> {
    let drops = prop::collection::vec((0u64..5000, 0.0..1.0f64, 1u64..30), 1..12).prop_map(|v| {
        v.into_iter()
            .map(|(att, frac, bytes)| {
                let delivered = (att as f64 * frac) as u64;
                DropResult {
                    attempted: att,
                    delivered,
                    attempted_bytes: att * bytes,
                    delivered_bytes: delivered * bytes,
                    horizon_s: 3600.0,
                }
            })
            .collect::<Vec<_>>()
    });
    run(cases, drops, |mut d| {
        let a = aggregate(&d).unwrap();
        d.reverse();
        let b = aggregate(&d).unwrap();
        prop_assert_eq!(a.success_probability, b.success_probability);
        prop_assert_eq!(a.goodput, b.goodput);
        prop_assert!((a.confidence_halfwidth - b.confidence_halfwidth).abs() <= 1e-12 * (1.0 + a.confidence_halfwidth));
        Ok(())
    })
}

pub fn seed_determinism(_cases: u32) -> Result<(), String> {
    let cfg = ScenarioConfig { radius_km: 0.35, device_count: Some(300), ..ScenarioConfig::default() };
    for tech in Technology::ALL {
        let setup = RadioSetup::new(tech);
        let a = simulate(&cfg, &setup, Topology::IdU, 4, 9).map_err(|e| e.to_string())?;
        let b = simulate(&cfg, &setup, Topology::IdU, 4, 9).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{tech}: same seed gave {a:?} and {b:?}"));
        }
    }
    let s1 = build_scenario(&ScenarioConfig::default(), 5).map_err(|e| e.to_string())?;
    let s2 = build_scenario(&ScenarioConfig::default(), 5).map_err(|e| e.to_string())?;
    let s3 = build_scenario(&ScenarioConfig::default(), 6).map_err(|e| e.to_string())?;
    if s1.devices != s2.devices || s1.devices == s3.devices {
        return Err("scenario placement does not follow the seed".into());
    }
    Ok(())
}

pub fn scenario_containment(cases: u32) -> Result<(), String> {
    run(cases, (0.1..20.0f64, 0.0..30.0f64, 0.0..2.0f64, any::<u64>()), |(r, rho_id, rho_tg, seed)| {
        let cfg = ScenarioConfig { radius_km: r, device_density: rho_id, gateway_density: rho_tg, ..ScenarioConfig::default() };
        let s = build_scenario(&cfg, seed).unwrap();
        prop_assert!(s.devices.iter().chain(&s.gateways).all(|p| p.norm() <= r));
        Ok(())
    })
}

pub fn coverage_bounds(cases: u32) -> Result<(), String> {
    let ch = ChannelParams::default();
    for kind in PlatformKind::BASE {
        for tech in [Technology::LoRa, Technology::NbIot] {
            let mut p = default_profile(tech);
            let base = max_range(&p, kind, &ch).map_err(|e| e.to_string())?.max_range_km;
            p.tx_power_dbm += 3.0;
            let louder = max_range(&p, kind, &ch).map_err(|e| e.to_string())?.max_range_km;
            if !(louder >= base) {
                return Err(format!("{kind}/{tech}: +3 dB shrank range {base} -> {louder}"));
            }
        }
    }
    run(cases, (0.5..2000.0f64, 0.5..500.0f64, 1.0..1.5f64), |(aoi, cov, grow)| {
        for method in [CoverMethod::Hexagonal, CoverMethod::Linear] {
            let n = min_platforms(aoi, cov, method).unwrap();
            prop_assert!(n >= 1);
            prop_assert!(min_platforms(aoi * grow, cov, method).unwrap() >= n);
            prop_assert!(min_platforms(aoi, cov * grow, method).unwrap() <= n);
            if aoi <= cov {
                prop_assert_eq!(n, 1);
            }
        }
        let hex = min_platforms(aoi, cov, CoverMethod::Hexagonal).unwrap();
        prop_assert!(hex as f64 >= ((aoi / cov).powi(2)).floor());
        Ok(())
    })
}

pub fn inner_beats_uniform(cases: u32) -> Result<(), String> {
    let toa = lora_airtimes(125e3, 50).unwrap();
    run(cases, (0.0..5000.0f64, prop::sample::select(vec![7usize, 9, 11, 12])), |(load, sf_min)| {
        let t = &toa[sf_min - 7..];
        let s = solve_inner_alpha(load, 1.0 / 360.0, t);
        let loads: Vec<f64> = t.iter().map(|x| x * load / 360.0).collect();
        let uniform = vec![1.0 / t.len() as f64; t.len()];
        prop_assert!((s.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
        prop_assert!((0.0..=1.0).contains(&s.p_success));
        prop_assert!(s.p_success >= inner_objective(&uniform, &loads) - 1e-12);
        Ok(())
    })
}

pub fn offload_beats_pure(cases: u32) -> Result<(), String> {
    let toa = lora_airtimes(125e3, 50).unwrap();
    let counts = prop::array::uniform6(0.0..800.0f64);
    run(cases.min(32), (counts, prop::sample::select(vec![7u8, 9, 11]), 0.0..1000.0f64), |(c, k, bg)| {
        let p = OffloadProblem {
            background_offload: bg,
            ..OffloadProblem::new(c, 1.0 / 360.0, toa, SpreadingFactor::new(k).unwrap())
        };
        let s = solve_offload(&p).unwrap();
        let total: f64 = bg + s.eta.iter().zip(&c).map(|(e, n)| e * n).sum::<f64>();
        for j in 0..6 {
            let others = total - s.eta[j] * c[j];
            prop_assert!((0.0..=1.0).contains(&s.eta[j]));
            prop_assert!((0.0..=1.0).contains(&s.p_s_per_sf[j]));
            prop_assert!(s.p_s_per_sf[j] >= p.p_success_sf(j, 0.0, others) - 1e-9);
            prop_assert!(s.p_s_per_sf[j] >= p.p_success_sf(j, 1.0, others) - 1e-9);
        }
        prop_assert!((s.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Ok(())
    })
}

pub fn profile_round_trip(cases: u32) -> Result<(), String> {
    let techs = prop::sample::select(Technology::ALL.to_vec());
    run(cases, (techs, -10.0..40.0f64, 1e8..3e9f64, 1u32..500), |(tech, tx, f, payload)| {
        let mut p = default_profile(tech);
        p.tx_power_dbm = tx;
        p.carrier_hz = f;
        p.max_payload = payload;
        let text = serde_json::to_string(&p).unwrap();
        let back: TechnologyProfile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
        Ok(())
    })
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Kummer's function by its power series; fine for the moderate arguments here.
fn hyp1f1(a: f64, b: f64, z: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 0..2000 {
        let k = k as f64;
        term *= (a + k) / (b + k) * z / (k + 1.0);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Shadowed-Rician power CDF by trapezoidal integration of the density.
fn shadowed_rician_cdf(omega: f64, b0: f64, m: f64) -> impl Fn(f64) -> f64 {
    let scale = (2.0 * b0 * m / (2.0 * b0 * m + omega)).powf(m) / (2.0 * b0);
    let pdf = move |x: f64| {
        scale * (-x / (2.0 * b0)).exp() * hyp1f1(m, 1.0, omega * x / (2.0 * b0 * (2.0 * b0 * m + omega)))
    };
    let (top, steps) = (12.0, 60_000usize);
    let h = top / steps as f64;
    let mut acc = vec![0.0; steps + 1];
    for i in 1..=steps {
        acc[i] = acc[i - 1] + 0.5 * h * (pdf((i - 1) as f64 * h) + pdf(i as f64 * h));
    }
    move |x: f64| {
        if x >= top {
            return acc[steps];
        }
        let t = x.max(0.0) / h;
        let i = t.floor() as usize;
        acc[i] + (t - i as f64) * (acc[i + 1] - acc[i])
    }
}

pub fn fading_distributions(_cases: u32) -> Result<(), String> {
    let n = 20_000;
    // 1% critical value of the one-sample KS statistic
    let critical = 1.63 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for m in [1.0, 2.5, 15.0] {
        let fading = Fading::Nakagami { m };
        let reference = Gamma::new(m, m).map_err(|e| e.to_string())?;
        let d = ks_distance((0..n).map(|_| fading.sample(&mut rng)).collect(), |x| reference.cdf(x));
        if d > critical {
            return Err(format!("nakagami m={m}: KS distance {d:.4} > {critical:.4}"));
        }
    }
    let leo = Fading::for_link(LinkKind::GroundToLeo, &FadingParams::default());
    let Fading::ShadowedRician { omega, b0, m } = leo else {
        return Err(format!("satellite link fading is {leo:?}"));
    };
    let cdf = shadowed_rician_cdf(omega, b0, m);
    if (cdf(1e9) - 1.0).abs() > 1e-6 {
        return Err(format!("shadowed-rician density integrates to {}", cdf(1e9)));
    }
    let d = ks_distance((0..n).map(|_| leo.sample(&mut rng)).collect(), cdf);
    if d > critical {
        return Err(format!("shadowed-rician: KS distance {d:.4} > {critical:.4}"));
    }
    Ok(())
}

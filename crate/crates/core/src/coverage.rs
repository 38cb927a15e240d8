//! Link-budget inversion: serving range, edge elevation and platform counts.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LinkKind, EARTH_RADIUS_KM};
use crate::error::Error;
use crate::model::{Platform, PlatformKind, TechnologyProfile};
use crate::phy::lowest_sensitivity;
use crate::Result;

/// Distance resolution of the range search, km.
pub const RANGE_TOLERANCE_KM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub max_range_km: f64,
    /// Elevation at the edge of coverage; `None` for terrestrial gateways.
    pub min_elevation_deg: Option<f64>,
    pub budget_margin_at_edge_db: f64,
    pub diagnostic: Option<String>,
}

/// Mean received power at `ground_km` from the platform.
fn mean_rx(profile: &TechnologyProfile, platform: &Platform, ch: &ChannelParams, ground_km: f64) -> Result<f64> {
    let kind = LinkKind::uplink_to(platform.kind);
    let fading = ch.fading(kind).mean();
    let s = ch.link_sample(profile, platform, ground_km, fading)?;
    Ok(s.received_power_dbm)
}

fn search_limit_km(platform: &Platform, ch: &ChannelParams) -> f64 {
    match platform.kind {
        PlatformKind::Tg => 2_000.0,
        _ if ch.curvature(platform.altitude_km) == crate::channel::Curvature::Spherical => {
            // ground arc to the geometric horizon
            let rs = EARTH_RADIUS_KM + platform.altitude_km;
            EARTH_RADIUS_KM * (EARTH_RADIUS_KM / rs).acos()
        }
        _ => 5_000.0,
    }
}

pub fn max_range(profile: &TechnologyProfile, kind: PlatformKind, ch: &ChannelParams) -> Result<CoverageResult> {
    if kind == PlatformKind::HapRelayLeo {
        return Err(Error::Unsupported("range of relayed links".into()));
    }
    let platform = Platform::new(kind);
    let sens = lowest_sensitivity(profile);
    // terrestrial "nadir" is the reference distance of the ground model
    let near = if kind == PlatformKind::Tg { ch.ground.ref_distance_m * 1e-3 } else { 0.0 };
    let closes = |d: f64| -> Result<bool> { Ok(mean_rx(profile, &platform, ch, d)? >= sens) };
    if !closes(near)? {
        let p = mean_rx(profile, &platform, ch, near)?;
        return Ok(CoverageResult {
            max_range_km: 0.0,
            min_elevation_deg: None,
            budget_margin_at_edge_db: p - sens,
            diagnostic: Some(format!("link does not close at nadir: {p:.2} dBm < {sens:.2} dBm")),
        });
    }
    let (mut lo, mut hi) = (near, search_limit_km(&platform, ch));
    if closes(hi)? {
        lo = hi;
    }
    while hi - lo > RANGE_TOLERANCE_KM {
        let mid = 0.5 * (lo + hi);
        if closes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let margin = mean_rx(profile, &platform, ch, lo)? - sens;
    let elevation = (kind != PlatformKind::Tg).then(|| ch.geometry(lo, platform.altitude_km).elevation_deg);
    Ok(CoverageResult { max_range_km: lo, min_elevation_deg: elevation, budget_margin_at_edge_db: margin, diagnostic: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMethod {
    /// Hexagonal lattice of coverage disks laid over the AoI.
    #[default]
    Hexagonal,
    /// `ceil(aoi / coverage)`: platforms strung along one radius.
    Linear,
}

/// Distance from the origin to a pointy-top regular hexagon of circumradius
/// `r` centred at `(cx, cy)`.
fn origin_to_hexagon(cx: f64, cy: f64, r: f64) -> f64 {
    let verts: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let a = (30.0 + 60.0 * k as f64).to_radians();
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    // inside test: origin within inradius-scaled support in every edge normal
    let inradius = r * 3f64.sqrt() / 2.0;
    let inside = (0..6).all(|k| {
        let a = (60.0 * k as f64).to_radians();
        (-cx) * a.cos() + (-cy) * a.sin() <= inradius
    });
    if inside {
        return 0.0;
    }
    (0..6)
        .map(|k| {
            let (x1, y1) = verts[k];
            let (x2, y2) = verts[(k + 1) % 6];
            let (dx, dy) = (x2 - x1, y2 - y1);
            let t = ((-x1) * dx + (-y1) * dy) / (dx * dx + dy * dy);
            let t = t.clamp(0.0, 1.0);
            (x1 + t * dx).hypot(y1 + t * dy)
        })
        .fold(f64::INFINITY, f64::min)
}

fn hexagonal_count(ratio: f64) -> usize {
    // unit circumradius; lattice pitch sqrt(3)
    let pitch = 3f64.sqrt();
    let reach = ratio + 1.0;
    let jmax = (reach / (pitch * 3f64.sqrt() / 2.0)).ceil() as i64 + 1;
    let mut count = 0;
    for j in -jmax..=jmax {
        let cy = j as f64 * pitch * 3f64.sqrt() / 2.0;
        let shift = j as f64 * pitch / 2.0;
        let imax = ((reach + shift.abs()) / pitch).ceil() as i64 + 1;
        for i in -imax..=imax {
            let cx = i as f64 * pitch + shift;
            if cx.hypot(cy) - 1.0 >= ratio {
                continue;
            }
            if origin_to_hexagon(cx, cy, 1.0) < ratio {
                count += 1;
            }
        }
    }
    count
}

pub fn min_platforms(aoi_radius_km: f64, coverage_radius_km: f64, method: CoverMethod) -> Result<usize> {
    if !(aoi_radius_km > 0.0) || !(coverage_radius_km > 0.0) {
        return Err(crate::error::domain("radii must be positive"));
    }
    if aoi_radius_km <= coverage_radius_km {
        return Ok(1);
    }
    let ratio = aoi_radius_km / coverage_radius_km;
    Ok(match method {
        CoverMethod::Hexagonal => hexagonal_count(ratio),
        CoverMethod::Linear => ratio.ceil() as usize,
    })
}

//! Ground-to-platform geometry.

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    Flat,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub slant_km: f64,
    pub elevation_deg: f64,
}

/// Slant range and elevation towards a platform at `altitude_km`, seen from a
/// ground point `ground_km` away from the sub-platform point. In spherical mode
/// `ground_km` is the arc length along the Earth surface.
pub fn slant_geometry(ground_km: f64, altitude_km: f64, curvature: Curvature) -> Geometry {
    let d = ground_km.max(0.0);
    let h = altitude_km.max(0.0);
    match curvature {
        Curvature::Flat => Geometry {
            slant_km: d.hypot(h),
            elevation_deg: h.atan2(d).to_degrees(),
        },
        Curvature::Spherical => {
            let re = EARTH_RADIUS_KM;
            let rs = re + h;
            let psi = d / re;
            let slant = (re * re + rs * rs - 2.0 * re * rs * psi.cos()).max(0.0).sqrt();
            let elev = (rs * psi.cos() - re).atan2(rs * psi.sin());
            Geometry { slant_km: slant, elevation_deg: elev.to_degrees() }
        }
    }
}

//! Domain types, parameter catalogues and scenario generation.

mod platform;
mod profile;
mod scenario;

pub use platform::{Platform, PlatformKind, Point, RelayParams};
pub use profile::{default_profile, SensitivityRule, Technology, TechnologyProfile};
pub use scenario::{build_scenario, uniform_in_disk, Scenario, ScenarioConfig};
